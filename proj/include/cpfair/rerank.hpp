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
#include <numeric>

#include "cpfair/candidates.hpp"
#include "cpfair/core.hpp"
#include "cpfair/corpus.hpp"

namespace cpfair {

enum class McStrategy { ScoreProxy, ValidationDcg, TrainDcg };
enum class Mode { N, C, P, CP };

inline std::string toString(McStrategy s) {
  switch (s) {
    case McStrategy::ScoreProxy: return "score-proxy";
    case McStrategy::ValidationDcg: return "validation-dcg";
    case McStrategy::TrainDcg: return "train-dcg";
  }
  return "?";
}

inline McStrategy mcStrategyFromString(const std::string& s) {
  if (s == "score-proxy") return McStrategy::ScoreProxy;
  if (s == "validation-dcg") return McStrategy::ValidationDcg;
  if (s == "train-dcg") return McStrategy::TrainDcg;
  throw Error("unknown mc strategy: " + s);
}

inline std::string toString(Mode m) {
  switch (m) {
    case Mode::N: return "N";
    case Mode::C: return "C";
    case Mode::P: return "P";
    case Mode::CP: return "CP";
  }
  return "?";
}

inline Mode modeFromString(const std::string& s) {
  if (s == "N") return Mode::N;
  if (s == "C") return Mode::C;
  if (s == "P") return Mode::P;
  if (s == "CP") return Mode::CP;
  throw Error("unknown mode: " + s);
}

struct FairnessParams {
  double lambda1 = 0.0;  // consumer weight
  double lambda2 = 0.0;  // producer weight
  int K = 10;
  int N = 50;
  McStrategy mcStrategy = McStrategy::ValidationDcg;
  Mode mode = Mode::CP;

  void validate() const {
    if (lambda1 < 0 || lambda1 > 1 || lambda2 < 0 || lambda2 > 1)
      throw Error("lambda1 and lambda2 must lie in [0, 1]");
    if (K < 1 || N < 1 || K > N) throw Error("need 1 <= K <= N");
    if (mode == Mode::N && (lambda1 != 0 || lambda2 != 0))
      throw Error("mode N requires lambda1 = lambda2 = 0");
    if (mode == Mode::C && lambda2 != 0) throw Error("mode C requires lambda2 = 0");
    if (mode == Mode::P && lambda1 != 0) throw Error("mode P requires lambda1 = 0");
    // A per-user monotone transform of S cannot change any top-K, so the
    // consumer-only mode needs a ground-truth based estimator.
    if (mode == Mode::C && mcStrategy == McStrategy::ScoreProxy)
      throw Error("score-proxy mc strategy is not usable in mode C");
  }
};

// Per-slot benefit estimates. An empty mc map means "no consumer benefit
// computed" (only valid while the consumer term is inactive); an empty mp
// map means unit exposure per slot.
struct BenefitTables {
  std::map<UserId, std::vector<double>> mc;
  std::map<UserId, std::vector<double>> mp;
};

// Consumer benefit of each candidate slot. DCG strategies score
// rel/log2(pos+1) with binary relevance against the ground-truth item set;
// score-proxy min-max normalizes the predicted scores.
inline std::vector<double> mcEstimate(const std::vector<ScoredItem>& list,
                                      const std::set<ItemId>& groundTruthItems,
                                      McStrategy strategy) {
  std::vector<double> out(list.size(), 0.0);
  if (strategy == McStrategy::ScoreProxy) {
    if (list.empty()) return out;
    double smax = list.front().score, smin = list.front().score;
    for (const auto& s : list) {
      smax = std::max(smax, s.score);
      smin = std::min(smin, s.score);
    }
    for (std::size_t i = 0; i < list.size(); ++i)
      out[i] = smax > smin ? (list[i].score - smin) / (smax - smin) : 1.0;
    return out;
  }
  for (std::size_t i = 0; i < list.size(); ++i)
    if (groundTruthItems.count(list[i].item))
      out[i] = 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return out;
}

// Producer benefit: one unit of exposure per recommendation slot.
inline std::vector<double> mpEstimate(const std::vector<ScoredItem>& list) {
  return std::vector<double>(list.size(), 1.0);
}

inline BenefitTables buildBenefitTables(const CandidateLists& candidates,
                                        const InteractionLog* groundTruth,
                                        McStrategy strategy,
                                        bool candidatesExcludeTrain = true) {
  if (strategy == McStrategy::TrainDcg && candidatesExcludeTrain)
    throw Error("train-dcg mc strategy requires candidate lists that include train items "
                "(the estimator would be identically zero)");
  std::map<UserId, std::set<ItemId>> gt;
  if (strategy != McStrategy::ScoreProxy) {
    if (!groundTruth) throw Error("DCG mc strategies need a ground-truth log");
    gt = groundTruth->userItemSets();
  }
  static const std::set<ItemId> kEmpty;
  BenefitTables b;
  for (const auto& [user, list] : candidates.perUser) {
    const std::set<ItemId>* items = &kEmpty;
    if (strategy != McStrategy::ScoreProxy) {
      auto it = gt.find(user);
      if (it != gt.end()) items = &it->second;
    }
    b.mc.emplace(user, mcEstimate(list, *items, strategy));
    b.mp.emplace(user, mpEstimate(list));
  }
  return b;
}

struct SelectionResult {
  std::map<UserId, std::vector<char>> selection;          // A row, length N
  std::map<UserId, std::vector<ScoredItem>> fairLists;    // K items, adjusted scores
  double objectiveValue = 0.0;
};

namespace detail {

struct TermSwitches {
  bool consumer = false;
  bool producer = false;
};

inline TermSwitches activeTerms(const GroupAssignment& groups, const FairnessParams& p) {
  TermSwitches t;
  t.consumer = p.lambda1 > 0;
  t.producer = p.lambda2 > 0;
  if (t.consumer && (groups.activeUsers.empty() || groups.inactiveUsers.empty())) {
    warn("degenerate user groups; dropping the lambda1 term");
    t.consumer = false;
  }
  if (t.producer && (groups.shortHeadItems.empty() || groups.longTailItems.empty())) {
    warn("degenerate item groups; dropping the lambda2 term");
    t.producer = false;
  }
  return t;
}

inline const std::vector<double>* mcRow(const BenefitTables& b, const UserId& u) {
  auto it = b.mc.find(u);
  if (it == b.mc.end()) throw Error("missing consumer benefits for user '" + u + "'");
  return &it->second;
}

}  // namespace detail

// Adjusted score per slot: S + lambda1 * UG_u * MC + lambda2 * PG_i * MP.
inline std::map<UserId, std::vector<double>> adjustedScores(const CandidateLists& candidates,
                                                            const GroupAssignment& groups,
                                                            const BenefitTables& benefits,
                                                            const FairnessParams& params) {
  params.validate();
  auto terms = detail::activeTerms(groups, params);
  std::map<UserId, std::vector<double>> out;
  for (const auto& [user, list] : candidates.perUser) {
    const std::vector<double>* mc = terms.consumer ? detail::mcRow(benefits, user) : nullptr;
    auto mpIt = benefits.mp.find(user);
    const std::vector<double>* mp =
        (terms.producer && mpIt != benefits.mp.end()) ? &mpIt->second : nullptr;
    const double ug = terms.consumer ? static_cast<double>(groups.userSign(user)) : 0.0;
    std::vector<double> shat(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      double s = list[i].score;
      if (terms.consumer) s += params.lambda1 * ug * (*mc)[i];
      if (terms.producer) {
        double mpv = mp ? (*mp)[i] : 1.0;
        s += params.lambda2 * static_cast<double>(groups.itemSign(list[i].item)) * mpv;
      }
      shat[i] = s;
    }
    out.emplace(user, std::move(shat));
  }
  return out;
}

// Per user, keep the K slots with the highest adjusted score; ties by
// original rank, then item id. Exact for the joint objective because the
// constraint is a per-user cardinality and all slots weigh the same.
inline SelectionResult greedyRerank(const CandidateLists& candidates,
                                    const GroupAssignment& groups,
                                    const BenefitTables& benefits,
                                    const FairnessParams& params) {
  params.validate();
  auto terms = detail::activeTerms(groups, params);
  SelectionResult res;
  std::vector<double> shat;
  std::vector<int> order;
  // users arrive in sorted order everywhere, so benefit rows and group
  // membership advance in lockstep instead of per-user lookups
  auto mcIt = benefits.mc.begin();
  auto mpIt = benefits.mp.begin();
  auto actIt = groups.activeUsers.begin();
  auto inactIt = groups.inactiveUsers.begin();
  for (const auto& [user, list] : candidates.perUser) {
    const int n = static_cast<int>(list.size());
    if (params.K > n) throw Error("K exceeds candidate list length for user '" + user + "'");
    const std::vector<double>* mc = nullptr;
    double ug = 0.0;
    if (terms.consumer) {
      while (mcIt != benefits.mc.end() && mcIt->first < user) ++mcIt;
      if (mcIt == benefits.mc.end() || mcIt->first != user)
        throw Error("missing consumer benefits for user '" + user + "'");
      mc = &mcIt->second;
      while (actIt != groups.activeUsers.end() && *actIt < user) ++actIt;
      if (actIt != groups.activeUsers.end() && *actIt == user) {
        ug = -1.0;
      } else {
        while (inactIt != groups.inactiveUsers.end() && *inactIt < user) ++inactIt;
        if (inactIt == groups.inactiveUsers.end() || *inactIt != user)
          throw Error("user '" + user + "' not covered by group assignment");
        ug = +1.0;
      }
    }
    const std::vector<double>* mp = nullptr;
    if (terms.producer) {
      while (mpIt != benefits.mp.end() && mpIt->first < user) ++mpIt;
      if (mpIt != benefits.mp.end() && mpIt->first == user) mp = &mpIt->second;
    }
    shat.resize(n);
    for (int i = 0; i < n; ++i) {
      double s = list[i].score;
      if (terms.consumer) s += params.lambda1 * ug * (*mc)[i];
      if (terms.producer)
        s += params.lambda2 * static_cast<double>(groups.itemSign(list[i].item)) *
             (mp ? (*mp)[i] : 1.0);
      shat[i] = s;
    }
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (shat[a] != shat[b]) return shat[a] > shat[b];
      if (a != b) return a < b;  // original rank
      return list[a].item < list[b].item;
    });
    std::vector<char> row(n, 0);
    std::vector<ScoredItem> fair;
    fair.reserve(params.K);
    for (int r = 0; r < params.K; ++r) {
      int pos = order[r];
      row[pos] = 1;
      fair.push_back({list[pos].item, shat[pos]});
      res.objectiveValue += shat[pos];
    }
    res.selection.emplace_hint(res.selection.end(), user, std::move(row));
    res.fairLists.emplace_hint(res.fairLists.end(), user, std::move(fair));
  }
  return res;
}

// Exact optimum by per-user enumeration of all K-subsets, scoring each
// subset straight from the joint objective (relevance sum minus the
// lambda-weighted consumer and producer deviation terms). The objective is
// separable per user, so per-user enumeration is globally exact.
inline SelectionResult exhaustiveOracle(const CandidateLists& candidates,
                                        const GroupAssignment& groups,
                                        const BenefitTables& benefits,
                                        const FairnessParams& params,
                                        double enumerationGuard = 1e6) {
  params.validate();
  auto terms = detail::activeTerms(groups, params);

  // C(N, K) guard
  double comb = 1.0;
  for (int i = 0; i < params.K; ++i)
    comb *= static_cast<double>(params.N - i) / static_cast<double>(i + 1);
  if (comb > enumerationGuard)
    throw Error("C(N, K) exceeds the enumeration guard");

  SelectionResult res;
  for (const auto& [user, list] : candidates.perUser) {
    const int n = static_cast<int>(list.size());
    const int k = params.K;
    if (k > n) throw Error("K exceeds candidate list length for user '" + user + "'");
    const std::vector<double>* mc = terms.consumer ? detail::mcRow(benefits, user) : nullptr;
    auto mpIt = benefits.mp.find(user);
    const std::vector<double>* mp =
        (terms.producer && mpIt != benefits.mp.end()) ? &mpIt->second : nullptr;
    const int ug = terms.consumer ? groups.userSign(user) : 0;

    // Deviation-term bookkeeping for one subset: the consumer deviation
    // gains sum(MC) when the user is advantaged and loses it when
    // protected; the producer deviation gains MP on short-head slots and
    // loses it on long-tail slots. Both enter the objective negatively
    // weighted by their lambda.
    auto subsetObjective = [&](const std::vector<int>& idx) {
      double relevance = 0, consumerDev = 0, producerDev = 0;
      for (int pos : idx) {
        relevance += list[pos].score;
        if (terms.consumer) consumerDev += (ug < 0 ? +1.0 : -1.0) * (*mc)[pos];
        if (terms.producer) {
          double mpv = mp ? (*mp)[pos] : 1.0;
          producerDev += (groups.itemSign(list[pos].item) < 0 ? +1.0 : -1.0) * mpv;
        }
      }
      return relevance - params.lambda1 * consumerDev - params.lambda2 * producerDev;
    };

    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> best = idx;
    double bestVal = subsetObjective(idx);
    while (true) {
      // next K-combination of {0..n-1} in lexicographic order
      int i = k - 1;
      while (i >= 0 && idx[i] == n - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      double v = subsetObjective(idx);
      if (v > bestVal) {
        bestVal = v;
        best = idx;
      }
    }

    auto shatOf = [&](int pos) {
      double s = list[pos].score;
      if (terms.consumer) s += params.lambda1 * ug * (*mc)[pos];
      if (terms.producer)
        s += params.lambda2 * groups.itemSign(list[pos].item) * (mp ? (*mp)[pos] : 1.0);
      return s;
    };
    std::vector<char> row(n, 0);
    for (int pos : best) row[pos] = 1;
    std::stable_sort(best.begin(), best.end(), [&](int a, int b) {
      double sa = shatOf(a), sb = shatOf(b);
      if (sa != sb) return sa > sb;
      return a < b;
    });
    std::vector<ScoredItem> fair;
    for (int pos : best) fair.push_back({list[pos].item, shatOf(pos)});
    res.objectiveValue += bestVal;
    res.selection.emplace(user, std::move(row));
    res.fairLists.emplace(user, std::move(fair));
  }
  return res;
}

}  // namespace cpfair
