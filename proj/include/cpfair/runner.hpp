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
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cpfair/baselines.hpp"
#include "cpfair/candidates.hpp"
#include "cpfair/core.hpp"
#include "cpfair/corpus.hpp"
#include "cpfair/metrics.hpp"
#include "cpfair/rerank.hpp"

namespace cpfair {

enum class BaselineKind { MostPop, Random, Mf, External };

inline std::string toString(BaselineKind b) {
  switch (b) {
    case BaselineKind::MostPop: return "mostpop";
    case BaselineKind::Random: return "random";
    case BaselineKind::Mf: return "mf";
    case BaselineKind::External: return "external";
  }
  return "?";
}

inline BaselineKind baselineFromString(const std::string& s) {
  if (s == "mostpop") return BaselineKind::MostPop;
  if (s == "random") return BaselineKind::Random;
  if (s == "mf") return BaselineKind::Mf;
  if (s == "external") return BaselineKind::External;
  throw Error("unknown baseline: " + s);
}

struct ExperimentConfig {
  std::string dataset;
  InputFormat format = InputFormat::Auto;
  int k = 5;
  std::uint64_t splitSeed = 42;
  BaselineKind baseline = BaselineKind::MostPop;
  std::string externalScores;
  std::uint64_t baselineSeed = 7;
  MfConfig mf;
  int N = 50;
  int K = 10;
  Mode mode = Mode::N;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  McStrategy mcStrategy = McStrategy::ValidationDcg;
  double w = 0.5;
  double userTopFraction = 0.05;
  double itemTopFraction = 0.20;
  bool excludeSeen = true;        // exclude train items from candidates
  bool excludeValidation = false; // additionally exclude validation items
  bool absoluteMcpf = false;
  bool useCache = true;
  std::string outputDir = "out";

  FairnessParams fairnessParams() const {
    FairnessParams p;
    p.lambda1 = lambda1;
    p.lambda2 = lambda2;
    p.K = K;
    p.N = N;
    p.mcStrategy = mcStrategy;
    p.mode = mode;
    p.validate();
    return p;
  }

  void validate() const {
    if (dataset.empty()) throw Error("config: dataset path is required");
    if (!std::filesystem::exists(dataset))
      throw Error("config: dataset file does not exist: " + dataset);
    if (baseline == BaselineKind::External) {
      if (externalScores.empty())
        throw Error("config: external baseline needs 'externalScores'");
      if (!std::filesystem::exists(externalScores))
        throw Error("config: score file does not exist: " + externalScores);
    }
    if (k < 1) throw Error("config: k must be >= 1");
    if (w < 0 || w > 1) throw Error("config: w must lie in [0, 1]");
    fairnessParams();
  }
};

namespace detail {

inline void requireKeys(const nlohmann::json& j, const std::set<std::string>& allowed,
                        const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw Error("unknown config key '" + it.key() + "' in " + where);
}

}  // namespace detail

inline ExperimentConfig configFromJson(const nlohmann::json& j) {
  detail::requireKeys(j, {"dataset", "format", "k", "splitSeed", "baseline", "externalScores",
                          "baselineSeed", "mf", "N", "K", "mode", "lambda1", "lambda2",
                          "mcStrategy", "w", "userTopFraction", "itemTopFraction",
                          "excludeSeen", "excludeValidation", "absoluteMcpf", "useCache",
                          "outputDir"},
                      "config");
  ExperimentConfig c;
  if (j.contains("dataset")) c.dataset = j["dataset"].get<std::string>();
  if (j.contains("format")) c.format = inputFormatFromString(j["format"].get<std::string>());
  if (j.contains("k")) c.k = j["k"].get<int>();
  if (j.contains("splitSeed")) c.splitSeed = j["splitSeed"].get<std::uint64_t>();
  if (j.contains("baseline")) c.baseline = baselineFromString(j["baseline"].get<std::string>());
  if (j.contains("externalScores")) c.externalScores = j["externalScores"].get<std::string>();
  if (j.contains("baselineSeed")) c.baselineSeed = j["baselineSeed"].get<std::uint64_t>();
  if (j.contains("mf")) {
    const auto& m = j["mf"];
    detail::requireKeys(m, {"factors", "epochs", "learningRate", "negativesPerPositive",
                            "regularization"},
                        "config.mf");
    if (m.contains("factors")) c.mf.factors = m["factors"].get<int>();
    if (m.contains("epochs")) c.mf.epochs = m["epochs"].get<int>();
    if (m.contains("learningRate")) c.mf.learningRate = m["learningRate"].get<double>();
    if (m.contains("negativesPerPositive"))
      c.mf.negativesPerPositive = m["negativesPerPositive"].get<int>();
    if (m.contains("regularization")) c.mf.regularization = m["regularization"].get<double>();
  }
  if (j.contains("N")) c.N = j["N"].get<int>();
  if (j.contains("K")) c.K = j["K"].get<int>();
  if (j.contains("mode")) c.mode = modeFromString(j["mode"].get<std::string>());
  if (j.contains("lambda1")) c.lambda1 = j["lambda1"].get<double>();
  if (j.contains("lambda2")) c.lambda2 = j["lambda2"].get<double>();
  if (j.contains("mcStrategy"))
    c.mcStrategy = mcStrategyFromString(j["mcStrategy"].get<std::string>());
  if (j.contains("w")) c.w = j["w"].get<double>();
  if (j.contains("userTopFraction")) c.userTopFraction = j["userTopFraction"].get<double>();
  if (j.contains("itemTopFraction")) c.itemTopFraction = j["itemTopFraction"].get<double>();
  if (j.contains("excludeSeen")) c.excludeSeen = j["excludeSeen"].get<bool>();
  if (j.contains("excludeValidation")) c.excludeValidation = j["excludeValidation"].get<bool>();
  if (j.contains("absoluteMcpf")) c.absoluteMcpf = j["absoluteMcpf"].get<bool>();
  if (j.contains("useCache")) c.useCache = j["useCache"].get<bool>();
  if (j.contains("outputDir")) c.outputDir = j["outputDir"].get<std::string>();
  return c;
}

inline ExperimentConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("bad JSON in " + path + ": " + e.what());
  }
  auto c = configFromJson(j);
  c.validate();
  return c;
}

// Everything upstream of the re-ranking step. Shared across the points of a
// sweep so the baseline is trained exactly once.
struct PreparedPipeline {
  SplitBundle split;
  GroupAssignment groups;
  CandidateLists candidates;
  std::uint64_t baselineCacheKey = 0;
  bool baselineFromCache = false;
};

// Content hash over every input that shapes the candidate lists.
inline std::uint64_t baselineCacheKey(const ExperimentConfig& c) {
  std::ostringstream os;
  os << c.dataset << "|" << c.k << "|" << c.splitSeed << "|" << toString(c.baseline) << "|"
     << c.externalScores << "|" << c.baselineSeed << "|" << c.N << "|" << c.excludeSeen << "|"
     << c.excludeValidation << "|"
     << c.mf.factors << "|" << c.mf.epochs << "|" << c.mf.learningRate << "|"
     << c.mf.negativesPerPositive << "|" << c.mf.regularization;
  return fnv1a64(os.str());
}

inline PreparedPipeline preparePipeline(const ExperimentConfig& c) {
  c.validate();
  PreparedPipeline p;
  InteractionLog filtered;
  try {
    auto raw = loadInteractions(c.dataset, c.format);
    filtered = kcoreFilter(raw, c.k);
    p.split = splitLog(filtered, c.splitSeed);
    p.groups = segmentGroups(p.split.train, c.userTopFraction, c.itemTopFraction);
  } catch (const Error& e) {
    throw Error(std::string("[corpus] ") + e.what());
  }

  p.baselineCacheKey = baselineCacheKey(c);
  std::ostringstream hex;
  hex << std::hex << p.baselineCacheKey;
  auto cacheDir = std::filesystem::path(c.outputDir) / "cache" / hex.str();
  auto cacheFile = cacheDir / "candidates.jsonl";

  try {
    if (c.useCache && std::filesystem::exists(cacheFile)) {
      p.candidates = loadExternalScores(cacheFile.string(), c.N);
      p.baselineFromCache = true;
      return p;
    }
    const InteractionLog* alsoExclude = c.excludeValidation ? &p.split.validation : nullptr;
    switch (c.baseline) {
      case BaselineKind::MostPop:
        p.candidates = recommendMostPop(p.split.train, c.N, alsoExclude, c.excludeSeen);
        break;
      case BaselineKind::Random:
        p.candidates =
            recommendRandom(p.split.train, c.N, c.baselineSeed, alsoExclude, c.excludeSeen);
        break;
      case BaselineKind::Mf: {
        MfConfig mf = c.mf;
        mf.seed = c.baselineSeed;
        auto model = trainMf(p.split.train, mf);
        p.candidates = recommendMf(model, p.split.train, c.N, alsoExclude, c.excludeSeen);
        break;
      }
      case BaselineKind::External: {
        std::set<UserId> users;
        std::set<ItemId> items;
        for (const auto& [u, _] : p.split.train.userCounts()) users.insert(u);
        for (const auto& [i, _] : p.split.train.itemCounts()) items.insert(i);
        p.candidates = loadExternalScores(c.externalScores, c.N, &users, &items);
        break;
      }
    }
    validateCandidates(p.candidates);
    if (c.useCache) {
      std::filesystem::create_directories(cacheDir);
      auto tmp = cacheFile.string() + ".tmp";
      writeScoreFile(tmp, p.candidates);
      std::filesystem::rename(tmp, cacheFile);
    }
  } catch (const Error& e) {
    throw Error(std::string("[baselines] ") + e.what());
  }
  return p;
}

struct ExperimentResult {
  FairnessReport report;
  SelectionResult selection;
};

// Re-rank + evaluate one parameter point on an already prepared pipeline.
inline ExperimentResult runPoint(const PreparedPipeline& p, const ExperimentConfig& c,
                                 const FairnessParams& params) {
  ExperimentResult r;
  try {
    auto benefits = buildBenefitTables(
        p.candidates,
        params.mcStrategy == McStrategy::TrainDcg ? &p.split.train : &p.split.validation,
        params.mcStrategy, c.excludeSeen);
    r.selection = greedyRerank(p.candidates, p.groups, benefits, params);
  } catch (const Error& e) {
    throw Error(std::string("[rerank] ") + e.what());
  }
  try {
    r.report = assembleReport(r.selection.fairLists, p.split.train, p.split.test, p.groups,
                              params.K, c.w, c.absoluteMcpf);
  } catch (const Error& e) {
    throw Error(std::string("[metrics] ") + e.what());
  }
  r.report.mode = toString(params.mode);
  r.report.mcStrategy = toString(params.mcStrategy);
  r.report.lambda1 = params.lambda1;
  r.report.lambda2 = params.lambda2;
  r.report.N = params.N;
  r.report.seed = c.splitSeed;
  r.report.objectiveValue = r.selection.objectiveValue;
  r.report.baseline = toString(c.baseline);
  return r;
}

namespace detail {

inline void writeTextAtomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline void writeExperimentFiles(const ExperimentConfig& c, const PreparedPipeline& p,
                                 const ExperimentResult& r,
                                 const std::string& subdir = "") {
  namespace fs = std::filesystem;
  fs::path dir = fs::path(c.outputDir);
  if (!subdir.empty()) dir /= subdir;
  fs::create_directories(dir);

  detail::writeTextAtomic(dir / "report.json", toJson(r.report).dump(2) + "\n");
  detail::writeTextAtomic(dir / "report.csv", csvHeader() + "\n" + toCsvRow(r.report) + "\n");

  CandidateLists fair;
  fair.listSize = c.K;
  fair.perUser = r.selection.fairLists;
  std::ostringstream lists;
  for (const auto& [user, list] : fair.perUser) {
    nlohmann::json j;
    j["user"] = user;
    auto& items = j["items"] = nlohmann::json::array();
    auto& scores = j["scores"] = nlohmann::json::array();
    for (const auto& s : list) {
      items.push_back(s.item);
      scores.push_back(s.score);
    }
    lists << j.dump() << "\n";
  }
  detail::writeTextAtomic(dir / "fairlists.jsonl", lists.str());

  nlohmann::json sidecar;
  sidecar["mode"] = toString(c.mode);
  sidecar["lambda1"] = r.report.lambda1;
  sidecar["lambda2"] = r.report.lambda2;
  sidecar["K"] = c.K;
  sidecar["N"] = c.N;
  sidecar["mcStrategy"] = r.report.mcStrategy;
  sidecar["objectiveValue"] = r.selection.objectiveValue;
  detail::writeTextAtomic(dir / "rerank_params.json", sidecar.dump(2) + "\n");

  nlohmann::json manifest = splitManifest(p.split, c.k);
  manifest["dataset"] = c.dataset;
  manifest["baseline"] = toString(c.baseline);
  manifest["baselineSeed"] = c.baselineSeed;
  manifest["baselineCacheKey"] = p.baselineCacheKey;
  detail::writeTextAtomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline FairnessReport runExperiment(const ExperimentConfig& c, bool writeFiles = true) {
  auto p = preparePipeline(c);
  auto r = runPoint(p, c, c.fairnessParams());
  if (writeFiles) writeExperimentFiles(c, p, r);
  return r.report;
}

enum class SweepAxis { Lambda1, Lambda2, BothGrid };

inline SweepAxis sweepAxisFromString(const std::string& s) {
  if (s == "lambda1") return SweepAxis::Lambda1;
  if (s == "lambda2") return SweepAxis::Lambda2;
  if (s == "both-grid") return SweepAxis::BothGrid;
  throw Error("unknown sweep axis: " + s);
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::Lambda2;
  std::vector<double> values;
  double fixedOther = 0.05;
};

inline void validateSweep(const SweepSpec& s) {
  if (s.values.empty()) throw Error("sweep values must be non-empty");
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.values[i] < 0 || s.values[i] > 1) throw Error("sweep values must lie in [0, 1]");
    if (i > 0 && s.values[i] <= s.values[i - 1])
      throw Error("sweep values must be strictly increasing");
  }
  if (s.fixedOther < 0 || s.fixedOther > 1) throw Error("fixedOther must lie in [0, 1]");
}

// One run per grid point on a shared pipeline; emits a long-form CSV
// (lambda1, lambda2, metric, value).
inline std::vector<FairnessReport> runSweep(const ExperimentConfig& config, const SweepSpec& spec,
                                            bool writeFiles = true) {
  validateSweep(spec);
  auto p = preparePipeline(config);

  std::vector<std::pair<double, double>> points;
  switch (spec.axis) {
    case SweepAxis::Lambda1:
      for (double v : spec.values) points.emplace_back(v, spec.fixedOther);
      break;
    case SweepAxis::Lambda2:
      for (double v : spec.values) points.emplace_back(spec.fixedOther, v);
      break;
    case SweepAxis::BothGrid:
      for (double a : spec.values)
        for (double b : spec.values) points.emplace_back(a, b);
      break;
  }

  std::vector<FairnessReport> reports;
  std::ostringstream csv;
  csv << "lambda1,lambda2,metric,value\n";
  csv << std::setprecision(10);
  for (auto [l1, l2] : points) {
    FairnessParams params = config.fairnessParams();
    params.mode = Mode::CP;
    params.lambda1 = l1;
    params.lambda2 = l2;
    auto r = runPoint(p, config, params);
    reports.push_back(r.report);
    auto emit = [&](const char* name, std::optional<double> v) {
      if (v) csv << l1 << "," << l2 << "," << name << "," << *v << "\n";
    };
    emit("ndcgAll", r.report.ndcgAll);
    emit("ndcgActive", r.report.ndcgActive);
    emit("ndcgInactive", r.report.ndcgInactive);
    emit("dcf", r.report.dcfReported);
    emit("exposureShort", r.report.exposureShort);
    emit("exposureLong", r.report.exposureLong);
    emit("dpf", r.report.dpf);
    emit("novelty", r.report.novelty);
    emit("coverage", r.report.coverage);
    emit("mcpf", r.report.mcpf);
  }
  if (writeFiles) {
    std::filesystem::create_directories(config.outputDir);
    detail::writeTextAtomic(std::filesystem::path(config.outputDir) / "sweep.csv", csv.str());
  }
  return reports;
}

// Four-mode comparison on a shared pipeline; Delta% is computed against the
// mode-N row.
inline std::vector<FairnessReport> compareModes(const std::vector<ExperimentConfig>& configs,
                                                bool writeFiles = true) {
  if (configs.empty()) throw Error("compare needs at least one config");
  for (const auto& c : configs)
    if (c.dataset != configs[0].dataset || baselineCacheKey(c) != baselineCacheKey(configs[0]))
      throw Error("compare configs must share dataset and baseline settings");
  auto p = preparePipeline(configs[0]);

  std::vector<FairnessReport> reports;
  std::optional<double> mcpfN;
  for (const auto& c : configs) {
    auto r = runPoint(p, c, c.fairnessParams());
    if (c.mode == Mode::N) mcpfN = r.report.mcpf;
    reports.push_back(r.report);
  }
  if (mcpfN)
    for (auto& r : reports) r.deltaPercent = deltaPercent(*mcpfN, r.mcpf);

  if (writeFiles) {
    std::filesystem::create_directories(configs[0].outputDir);
    std::ostringstream csv;
    csv << "mode," << csvHeader() << "\n";
    for (const auto& r : reports) csv << r.mode << "," << toCsvRow(r) << "\n";
    detail::writeTextAtomic(std::filesystem::path(configs[0].outputDir) / "compare.csv",
                            csv.str());
  }
  return reports;
}

// Grid-search hyperparameter policy: among the points that keep at least
// (1 - relevanceBudget) of the lambda = 0 overall nDCG, pick the one with
// the smallest absolute two-sided deviation w*|DPF| + (1-w)*|DCF|. The
// absolute combination keeps overshooting past parity from being rewarded.
// Ties resolve toward smaller lambdas. The (0, 0) point always qualifies,
// so the feasible set is never empty.
inline std::pair<double, double> selectLambda(
    const PreparedPipeline& p, const ExperimentConfig& config,
    const std::vector<double>& grid = {0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0},
    double relevanceBudget = 0.05) {
  FairnessParams zero = config.fairnessParams();
  zero.mode = Mode::CP;
  zero.lambda1 = 0;
  zero.lambda2 = 0;
  const double ndcgFloor = (1.0 - relevanceBudget) * runPoint(p, config, zero).report.ndcgAll;

  double bestDev = std::numeric_limits<double>::infinity();
  std::pair<double, double> best{0.0, 0.0};
  for (double l1 : grid) {
    for (double l2 : grid) {
      FairnessParams params = zero;
      params.lambda1 = l1;
      params.lambda2 = l2;
      auto r = runPoint(p, config, params);
      if (r.report.ndcgAll < ndcgFloor) continue;
      double dev = cpfair::mcpf(r.report.dcfReported.value_or(0.0), r.report.dpf, config.w,
                                /*absolute=*/true);
      bool better = dev < bestDev;
      if (dev == bestDev) {
        auto key = std::make_pair(l1 + l2, l2);
        auto bestKey = std::make_pair(best.first + best.second, best.second);
        better = key < bestKey;
      }
      if (better) {
        bestDev = dev;
        best = {l1, l2};
      }
    }
  }
  return best;
}

}  // namespace cpfair
