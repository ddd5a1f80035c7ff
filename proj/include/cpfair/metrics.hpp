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

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cpfair/candidates.hpp"
#include "cpfair/core.hpp"
#include "cpfair/corpus.hpp"
#include "cpfair/rerank.hpp"

namespace cpfair {

// Binary-relevance nDCG with a log2(pos + 1) discount.
inline double ndcgAtK(const std::vector<ItemId>& rankedList, const std::set<ItemId>& testItems,
                      int k) {
  if (k < 1) throw Error("K must be >= 1");
  if (testItems.empty()) throw Error("nDCG undefined for an empty test set");
  double dcg = 0;
  const int limit = std::min<int>(k, static_cast<int>(rankedList.size()));
  for (int pos = 0; pos < limit; ++pos)
    if (testItems.count(rankedList[pos]))
      dcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  double idcg = 0;
  const int ideal = std::min<int>(k, static_cast<int>(testItems.size()));
  for (int pos = 0; pos < ideal; ++pos)
    idcg += 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  return dcg / idcg;
}

struct GroupRelevance {
  double all = 0.0;
  std::optional<double> active;
  std::optional<double> inactive;
  std::size_t evaluatedUsers = 0;
};

// Plain means over the evaluable (non-empty test set) users of each group.
inline GroupRelevance groupRelevance(const std::map<UserId, double>& perUserNdcg,
                                     const GroupAssignment& groups) {
  GroupRelevance r;
  double sumAll = 0, sumAct = 0, sumInact = 0;
  std::size_t nAct = 0, nInact = 0;
  for (const auto& [user, v] : perUserNdcg) {
    sumAll += v;
    if (groups.activeUsers.count(user)) {
      sumAct += v;
      ++nAct;
    } else if (groups.inactiveUsers.count(user)) {
      sumInact += v;
      ++nInact;
    }
  }
  r.evaluatedUsers = perUserNdcg.size();
  r.all = perUserNdcg.empty() ? 0.0 : sumAll / static_cast<double>(perUserNdcg.size());
  if (nAct > 0) r.active = sumAct / static_cast<double>(nAct);
  if (nInact > 0) r.inactive = sumInact / static_cast<double>(nInact);
  return r;
}

// Reported consumer deviation: (M1 - M2) / (M1 + M2), zero when both are 0.
inline double dcfReported(double mActive, double mInactive) {
  double denom = mActive + mInactive;
  if (denom == 0) return 0.0;
  return (mActive - mInactive) / denom;
}

struct ExposureShares {
  double shortHead = 0.0;
  double longTail = 0.0;
  double dpf = 0.0;
};

// Share of recommendation slots per item group over all users with lists;
// dpf is their difference.
inline ExposureShares exposureAndDpf(const std::map<UserId, std::vector<ScoredItem>>& fairLists,
                                     const GroupAssignment& groups) {
  std::size_t slots = 0, shortSlots = 0;
  for (const auto& [user, list] : fairLists) {
    for (const auto& s : list) {
      ++slots;
      if (groups.itemSign(s.item) < 0) ++shortSlots;
    }
  }
  ExposureShares e;
  if (slots == 0) return e;
  e.shortHead = static_cast<double>(shortSlots) / static_cast<double>(slots);
  e.longTail = 1.0 - e.shortHead;
  e.dpf = e.shortHead - e.longTail;
  return e;
}

// Mean self-information of the recommended items' train popularity, in bits.
inline double novelty(const std::map<UserId, std::vector<ScoredItem>>& fairLists,
                      const InteractionLog& trainLog) {
  std::map<ItemId, std::set<UserId>> itemUsers;
  for (const auto& x : trainLog.interactions) itemUsers[x.item].insert(x.user);
  const double n = static_cast<double>(trainLog.numUsers());
  double sum = 0;
  std::size_t slots = 0;
  for (const auto& [user, list] : fairLists) {
    for (const auto& s : list) {
      auto it = itemUsers.find(s.item);
      double pop = it == itemUsers.end() ? 1.0 : static_cast<double>(it->second.size());
      sum += -std::log2(pop / n);
      ++slots;
    }
  }
  return slots == 0 ? 0.0 : sum / static_cast<double>(slots);
}

inline double coverage(const std::map<UserId, std::vector<ScoredItem>>& fairLists,
                       std::size_t catalogSize) {
  if (catalogSize == 0) throw Error("catalog size must be positive");
  std::set<ItemId> distinct;
  for (const auto& [user, list] : fairLists)
    for (const auto& s : list) distinct.insert(s.item);
  return static_cast<double>(distinct.size()) / static_cast<double>(catalogSize);
}

// Two-sided summary: w * DPF + (1 - w) * DCF, signed by default.
inline double mcpf(double dcf, double dpf, double w = 0.5, bool absolute = false) {
  if (w < 0 || w > 1) throw Error("w must lie in [0, 1]");
  if (absolute) return w * std::abs(dpf) + (1 - w) * std::abs(dcf);
  return w * dpf + (1 - w) * dcf;
}

inline double deltaPercent(double mcpfReference, double mcpfNew) {
  if (mcpfReference == 0) return 0.0;
  return 100.0 * (mcpfReference - mcpfNew) / mcpfReference;
}

struct FairnessReport {
  double ndcgAll = 0.0;
  std::optional<double> ndcgActive;
  std::optional<double> ndcgInactive;
  std::optional<double> dcfRaw;       // Eq.-style raw group difference
  std::optional<double> dcfReported;  // (M1-M2)/(M1+M2)
  double exposureShort = 0.0;
  double exposureLong = 0.0;
  double dpf = 0.0;
  double novelty = 0.0;
  double coverage = 0.0;
  double mcpf = 0.0;
  double mcpfOverAll = 0.0;
  std::optional<double> deltaPercent;
  double w = 0.5;

  // provenance
  std::string mode = "N";
  std::string mcStrategy = "validation-dcg";
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int K = 0;
  int N = 0;
  std::uint64_t seed = 0;
  double objectiveValue = 0.0;
  std::string baseline;
};

// Computes every report field from the fair lists and the splits.
inline FairnessReport assembleReport(const std::map<UserId, std::vector<ScoredItem>>& fairLists,
                                     const InteractionLog& trainLog,
                                     const InteractionLog& testLog,
                                     const GroupAssignment& groups, int k, double w = 0.5,
                                     bool absoluteMcpf = false) {
  FairnessReport r;
  r.w = w;
  r.K = k;

  auto testSets = testLog.userItemSets();
  std::map<UserId, double> perUser;
  for (const auto& [user, list] : fairLists) {
    auto it = testSets.find(user);
    if (it == testSets.end() || it->second.empty()) continue;  // not evaluable
    std::vector<ItemId> items;
    for (const auto& s : list) items.push_back(s.item);
    perUser[user] = ndcgAtK(items, it->second, k);
  }
  auto rel = groupRelevance(perUser, groups);
  r.ndcgAll = rel.all;
  r.ndcgActive = rel.active;
  r.ndcgInactive = rel.inactive;
  if (rel.active && rel.inactive) {
    r.dcfRaw = *rel.active - *rel.inactive;
    r.dcfReported = cpfair::dcfReported(*rel.active, *rel.inactive);
  } else {
    warn("one user group has no evaluable users; DCF terms dropped from the report");
  }

  auto exp = exposureAndDpf(fairLists, groups);
  r.exposureShort = exp.shortHead;
  r.exposureLong = exp.longTail;
  r.dpf = exp.dpf;
  r.novelty = cpfair::novelty(fairLists, trainLog);
  r.coverage = cpfair::coverage(fairLists, trainLog.numItems());
  r.mcpf = cpfair::mcpf(r.dcfReported.value_or(0.0), r.dpf, w, absoluteMcpf);
  r.mcpfOverAll = r.ndcgAll > 0 ? r.mcpf / r.ndcgAll : 0.0;
  return r;
}

inline nlohmann::json toJson(const FairnessReport& r) {
  nlohmann::json j;
  j["ndcgAll"] = r.ndcgAll;
  if (r.ndcgActive) j["ndcgActive"] = *r.ndcgActive;
  if (r.ndcgInactive) j["ndcgInactive"] = *r.ndcgInactive;
  if (r.dcfRaw) j["dcfRaw"] = *r.dcfRaw;
  if (r.dcfReported) j["dcfReported"] = *r.dcfReported;
  j["exposureShort"] = r.exposureShort;
  j["exposureLong"] = r.exposureLong;
  j["dpf"] = r.dpf;
  j["novelty"] = r.novelty;
  j["coverage"] = r.coverage;
  j["mcpf"] = r.mcpf;
  j["mcpfOverAll"] = r.mcpfOverAll;
  if (r.deltaPercent) j["deltaPercent"] = *r.deltaPercent;
  j["w"] = r.w;
  auto& p = j["provenance"];
  p["mode"] = r.mode;
  p["mcStrategy"] = r.mcStrategy;
  p["lambda1"] = r.lambda1;
  p["lambda2"] = r.lambda2;
  p["K"] = r.K;
  p["N"] = r.N;
  p["seed"] = r.seed;
  p["objectiveValue"] = r.objectiveValue;
  p["baseline"] = r.baseline;
  return j;
}

inline FairnessReport reportFromJson(const nlohmann::json& j) {
  FairnessReport r;
  r.ndcgAll = j.at("ndcgAll").get<double>();
  if (j.contains("ndcgActive")) r.ndcgActive = j["ndcgActive"].get<double>();
  if (j.contains("ndcgInactive")) r.ndcgInactive = j["ndcgInactive"].get<double>();
  if (j.contains("dcfRaw")) r.dcfRaw = j["dcfRaw"].get<double>();
  if (j.contains("dcfReported")) r.dcfReported = j["dcfReported"].get<double>();
  r.exposureShort = j.at("exposureShort").get<double>();
  r.exposureLong = j.at("exposureLong").get<double>();
  r.dpf = j.at("dpf").get<double>();
  r.novelty = j.at("novelty").get<double>();
  r.coverage = j.at("coverage").get<double>();
  r.mcpf = j.at("mcpf").get<double>();
  r.mcpfOverAll = j.at("mcpfOverAll").get<double>();
  if (j.contains("deltaPercent")) r.deltaPercent = j["deltaPercent"].get<double>();
  r.w = j.at("w").get<double>();
  const auto& p = j.at("provenance");
  r.mode = p.at("mode").get<std::string>();
  r.mcStrategy = p.at("mcStrategy").get<std::string>();
  r.lambda1 = p.at("lambda1").get<double>();
  r.lambda2 = p.at("lambda2").get<double>();
  r.K = p.at("K").get<int>();
  r.N = p.at("N").get<int>();
  r.seed = p.at("seed").get<std::uint64_t>();
  r.objectiveValue = p.at("objectiveValue").get<double>();
  r.baseline = p.at("baseline").get<std::string>();
  return r;
}

// Results-table column order: All, Active, Inactive, DCF, Nov., Cov.,
// Short., Long., DPF, mCPF, mCPF/All, Delta%.
inline std::string csvHeader() {
  return "all,active,inactive,dcf,novelty,coverage,short,long,dpf,mcpf,mcpf_over_all,delta_percent";
}

inline std::string toCsvRow(const FairnessReport& r) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  auto opt = [&](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::ostringstream t;
    t << std::setprecision(6) << std::fixed << *v;
    return t.str();
  };
  os << r.ndcgAll << "," << opt(r.ndcgActive) << "," << opt(r.ndcgInactive) << ","
     << opt(r.dcfReported) << "," << r.novelty << "," << r.coverage << "," << r.exposureShort
     << "," << r.exposureLong << "," << r.dpf << "," << r.mcpf << "," << r.mcpfOverAll << ","
     << opt(r.deltaPercent);
  return os.str();
}

}  // namespace cpfair
