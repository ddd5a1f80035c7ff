// Copyright 2026 The CPFair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpfair/corpus.hpp"
#include "cpfair/metrics.hpp"
#include "cpfair/runner.hpp"

namespace {

std::vector<double> parseValueList(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

std::vector<int> parseIntList(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

void applyOverrides(cpfair::ExperimentConfig& c, const std::string& out,
                    std::uint64_t seed, bool seedSet) {
  if (!out.empty()) c.outputDir = out;
  if (seedSet) c.splitSeed = seed;
}

void printReport(const cpfair::FairnessReport& r, const std::string& format) {
  if (format == "json") {
    std::cout << cpfair::toJson(r).dump(2) << "\n";
  } else if (format == "csv") {
    std::cout << cpfair::csvHeader() << "\n" << cpfair::toCsvRow(r) << "\n";
  } else {
    std::cout << "mode " << r.mode << "  nDCG@" << r.K << " all=" << r.ndcgAll;
    if (r.ndcgActive) std::cout << " active=" << *r.ndcgActive;
    if (r.ndcgInactive) std::cout << " inactive=" << *r.ndcgInactive;
    if (r.dcfReported) std::cout << "  DCF=" << *r.dcfReported;
    std::cout << "  DPF=" << r.dpf << "  mCPF=" << r.mcpf << "  nov=" << r.novelty
              << "  cov=" << r.coverage << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sided fairness re-ranking and evaluation for top-K recommendation"};
  app.require_subcommand(1);

  std::string outOverride;
  std::uint64_t seedOverride = 0;
  bool seedSet = false;
  std::string format = "text";
  app.add_option("--out", outOverride, "Override the output directory");
  app.add_option("--seed", seedOverride, "Override the split seed")
      ->each([&](const std::string&) { seedSet = true; });
  app.add_option("--format", format, "Output format: text|csv|json|md")
      ->check(CLI::IsMember({"text", "csv", "json", "md"}));

  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  std::string runConfig;
  run->add_option("--config", runConfig, "Experiment config (JSON)")->required();

  auto* sweep = app.add_subcommand("sweep", "Sweep a lambda grid on a shared pipeline");
  std::string sweepConfig, sweepAxis = "lambda2", sweepValues;
  double fixedOther = 0.05;
  sweep->add_option("--config", sweepConfig, "Experiment config (JSON)")->required();
  sweep->add_option("--axis", sweepAxis, "lambda1|lambda2|both-grid");
  sweep->add_option("--values", sweepValues, "Comma-separated values in [0,1]")->required();
  sweep->add_option("--fixed-other", fixedOther, "Value of the non-swept lambda");

  auto* compare = app.add_subcommand("compare", "Compare modes sharing data and baseline");
  std::string compareConfigs;
  compare->add_option("--configs", compareConfigs, "Comma-separated config paths")->required();

  auto* stats = app.add_subcommand("stats", "Interaction-threshold statistics of a dataset");
  std::string statsDataset, statsThresholds = "10,20,50,100";
  int statsK = 0;
  stats->add_option("--dataset", statsDataset, "Interaction file")->required();
  stats->add_option("--thresholds", statsThresholds, "Comma-separated thresholds");
  stats->add_option("--kcore", statsK, "Apply k-core filtering first (0 = off)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto c = cpfair::loadConfig(runConfig);
      applyOverrides(c, outOverride, seedOverride, seedSet);
      auto report = cpfair::runExperiment(c);
      printReport(report, format);
    } else if (*sweep) {
      auto c = cpfair::loadConfig(sweepConfig);
      applyOverrides(c, outOverride, seedOverride, seedSet);
      cpfair::SweepSpec spec;
      spec.axis = cpfair::sweepAxisFromString(sweepAxis);
      spec.values = parseValueList(sweepValues);
      spec.fixedOther = fixedOther;
      auto reports = cpfair::runSweep(c, spec);
      for (const auto& r : reports) printReport(r, format);
      std::cout << "sweep results written to " << c.outputDir << "/sweep.csv\n";
    } else if (*compare) {
      std::vector<cpfair::ExperimentConfig> cs;
      std::stringstream ss(compareConfigs);
      std::string path;
      while (std::getline(ss, path, ','))
        if (!path.empty()) {
          cs.push_back(cpfair::loadConfig(path));
          applyOverrides(cs.back(), outOverride, seedOverride, seedSet);
        }
      auto reports = cpfair::compareModes(cs);
      if (format == "md") {
        std::cout << "| Mode | All | Active | Inactive | DCF | Nov. | Cov. | Short. | Long. "
                     "| DPF | mCPF | mCPF/All | Delta% |\n";
        std::cout << "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
        for (const auto& r : reports) {
          std::ostringstream row;
          row << "| " << r.mode << " | ";
          std::string csv = cpfair::toCsvRow(r);
          for (char ch : csv) row << (ch == ',' ? std::string(" | ") : std::string(1, ch));
          std::cout << row.str() << " |\n";
        }
      } else {
        std::cout << "mode," << cpfair::csvHeader() << "\n";
        for (const auto& r : reports) std::cout << r.mode << "," << cpfair::toCsvRow(r) << "\n";
      }
    } else if (*stats) {
      auto log = cpfair::loadInteractions(statsDataset);
      if (statsK > 0) log = cpfair::kcoreFilter(log, statsK);
      auto rows = cpfair::datasetStats(log, parseIntList(statsThresholds));
      std::printf("%10s %12s %12s\n", "threshold", "users >= t", "items >= t");
      for (const auto& s : rows)
        std::printf("%10d %11.2f%% %11.2f%%\n", s.threshold, s.userPercent, s.itemPercent);
      std::printf("users: %zu  items: %zu  interactions: %zu\n", log.numUsers(), log.numItems(),
                  log.size());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
