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
#include <unordered_map>

#include "cpfair/candidates.hpp"
#include "cpfair/core.hpp"

namespace cpfair {

namespace detail {

// Items a user must not be recommended again: their train items, plus
// validation items when a validation part is supplied.
inline std::map<UserId, std::set<ItemId>> seenSets(const InteractionLog& trainLog,
                                                   const InteractionLog* alsoExclude) {
  auto seen = trainLog.userItemSets();
  if (alsoExclude)
    for (const auto& x : alsoExclude->interactions) seen[x.user].insert(x.item);
  return seen;
}

}  // namespace detail

// Same popularity ordering for everyone, minus each user's seen items.
// Scores are the train interaction counts, min-max normalized over the
// user's eligible catalog; ties in count are ordered by item id.
inline CandidateLists recommendMostPop(const InteractionLog& trainLog, int n,
                                       const InteractionLog* alsoExclude = nullptr,
                                       bool excludeSeen = true) {
  if (n < 1) throw Error("N must be positive");
  auto counts = trainLog.itemCounts();
  std::vector<std::pair<ItemId, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  auto seen = detail::seenSets(trainLog, alsoExclude);

  CandidateLists lists;
  lists.listSize = n;
  for (const auto& [user, _] : trainLog.userCounts()) {
    const std::set<ItemId>* skip = excludeSeen ? &seen[user] : nullptr;
    double cmin = 0, cmax = 0;
    bool first = true;
    for (const auto& [item, c] : ranked) {
      if (skip && skip->count(item)) continue;
      double cd = static_cast<double>(c);
      if (first) {
        cmin = cmax = cd;
        first = false;
      } else {
        cmin = std::min(cmin, cd);
        cmax = std::max(cmax, cd);
      }
    }
    std::vector<ScoredItem> list;
    for (const auto& [item, c] : ranked) {
      if (static_cast<int>(list.size()) == n) break;
      if (skip && skip->count(item)) continue;
      double s = cmax > cmin ? (static_cast<double>(c) - cmin) / (cmax - cmin) : 1.0;
      list.push_back({item, s});
    }
    if (static_cast<int>(list.size()) < n)
      throw Error("user '" + user + "' has only " + std::to_string(list.size()) +
                  " eligible items, cannot build top-" + std::to_string(n));
    sortByScore(list);
    lists.perUser.emplace(user, std::move(list));
  }
  return lists;
}

// Uniform sample without replacement from each user's unseen items; the
// sampled order maps to equally spaced scores in [0, 1].
inline CandidateLists recommendRandom(const InteractionLog& trainLog, int n,
                                      std::uint64_t seed,
                                      const InteractionLog* alsoExclude = nullptr,
                                      bool excludeSeen = true) {
  if (n < 1) throw Error("N must be positive");
  std::vector<ItemId> catalog;
  for (const auto& [item, _] : trainLog.itemCounts()) catalog.push_back(item);
  auto seen = detail::seenSets(trainLog, alsoExclude);

  CandidateLists lists;
  lists.listSize = n;
  for (const auto& [user, _] : trainLog.userCounts()) {
    std::vector<ItemId> eligible;
    const std::set<ItemId>* skip = excludeSeen ? &seen[user] : nullptr;
    for (const auto& item : catalog)
      if (!skip || !skip->count(item)) eligible.push_back(item);
    if (static_cast<int>(eligible.size()) < n)
      throw Error("user '" + user + "' has only " + std::to_string(eligible.size()) +
                  " eligible items, cannot build top-" + std::to_string(n));
    auto rng = seededRng(seed, user);
    // partial Fisher-Yates: the first n positions are a uniform sample
    for (int i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, eligible.size() - 1);
      std::swap(eligible[i], eligible[d(rng)]);
    }
    std::vector<ScoredItem> list;
    for (int i = 0; i < n; ++i) {
      double s = n == 1 ? 1.0 : static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
      list.push_back({eligible[i], s});
    }
    lists.perUser.emplace(user, std::move(list));
  }
  return lists;
}

struct MfConfig {
  int factors = 16;
  int epochs = 20;
  double learningRate = 0.05;
  int negativesPerPositive = 4;
  double regularization = 0.01;
  std::uint64_t seed = 0;
};

// Minimal pointwise matrix factorization with sampled negatives and a
// logistic loss. A stand-in baseline, not a tuned recommender.
class MfModel {
public:
  MfModel(const InteractionLog& trainLog, const MfConfig& cfg) : cfg_(cfg) {
    if (cfg.factors < 1) throw Error("factors must be >= 1");
    if (trainLog.empty()) throw Error("cannot train on an empty log");
    for (const auto& [u, _] : trainLog.userCounts()) {
      userIndex_[u] = users_.size();
      users_.push_back(u);
    }
    for (const auto& [i, _] : trainLog.itemCounts()) {
      itemIndex_[i] = items_.size();
      items_.push_back(i);
    }
    const int f = cfg.factors;
    userFactors_.assign(users_.size() * f, 0.0);
    itemFactors_.assign(items_.size() * f, 0.0);
    auto init = seededRng(cfg.seed, "mf-init");
    std::normal_distribution<double> g(0.0, 0.1 / std::sqrt(static_cast<double>(f)));
    for (auto& v : userFactors_) v = g(init);
    for (auto& v : itemFactors_) v = g(init);

    std::vector<std::pair<std::size_t, std::size_t>> positives;
    std::vector<std::vector<char>> liked(users_.size(), std::vector<char>(items_.size(), 0));
    for (const auto& x : trainLog.interactions) {
      std::size_t u = userIndex_.at(x.user), i = itemIndex_.at(x.item);
      positives.emplace_back(u, i);
      liked[u][i] = 1;
    }

    auto rng = seededRng(cfg.seed, "mf-train");
    std::uniform_int_distribution<std::size_t> pickItem(0, items_.size() - 1);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(positives.begin(), positives.end(), rng);
      double loss = 0.0;
      for (auto [u, i] : positives) {
        loss += sgdStep(u, i, 1.0);
        for (int nneg = 0; nneg < cfg.negativesPerPositive; ++nneg) {
          std::size_t j = pickItem(rng);
          for (int tries = 0; tries < 8 && liked[u][j]; ++tries) j = pickItem(rng);
          if (liked[u][j]) continue;
          loss += sgdStep(u, j, 0.0);
        }
      }
      if (!std::isfinite(loss))
        throw Error("MF training diverged at epoch " + std::to_string(epoch + 1));
    }
  }

  double score(const UserId& user, const ItemId& item) const {
    auto u = userIndex_.find(user);
    auto i = itemIndex_.find(item);
    if (u == userIndex_.end() || i == itemIndex_.end())
      throw Error("MF model has no embedding for the requested user/item");
    return dot(u->second, i->second);
  }

  const std::vector<UserId>& users() const { return users_; }
  const std::vector<ItemId>& items() const { return items_; }
  const std::vector<double>& userFactors() const { return userFactors_; }
  const std::vector<double>& itemFactors() const { return itemFactors_; }

private:
  double dot(std::size_t u, std::size_t i) const {
    const int f = cfg_.factors;
    double s = 0;
    for (int k = 0; k < f; ++k) s += userFactors_[u * f + k] * itemFactors_[i * f + k];
    return s;
  }

  // One logistic-loss update; returns the sample loss.
  double sgdStep(std::size_t u, std::size_t i, double target) {
    const int f = cfg_.factors;
    double pred = 1.0 / (1.0 + std::exp(-dot(u, i)));
    double grad = pred - target;
    for (int k = 0; k < f; ++k) {
      double uf = userFactors_[u * f + k];
      double vf = itemFactors_[i * f + k];
      userFactors_[u * f + k] -= cfg_.learningRate * (grad * vf + cfg_.regularization * uf);
      itemFactors_[i * f + k] -= cfg_.learningRate * (grad * uf + cfg_.regularization * vf);
    }
    double p = target > 0.5 ? pred : 1.0 - pred;
    return -std::log(std::max(p, 1e-12));
  }

  MfConfig cfg_;
  std::vector<UserId> users_;
  std::vector<ItemId> items_;
  std::unordered_map<std::string, std::size_t> userIndex_;
  std::unordered_map<std::string, std::size_t> itemIndex_;
  std::vector<double> userFactors_;
  std::vector<double> itemFactors_;
};

inline MfModel trainMf(const InteractionLog& trainLog, const MfConfig& cfg) {
  return MfModel(trainLog, cfg);
}

// Inner-product scoring over eligible items; scores are min-max normalized
// per user over the top-N window.
inline CandidateLists recommendMf(const MfModel& model, const InteractionLog& trainLog,
                                  int n, const InteractionLog* alsoExclude = nullptr,
                                  bool excludeSeen = true) {
  if (n < 1) throw Error("N must be positive");
  auto seen = detail::seenSets(trainLog, alsoExclude);
  CandidateLists lists;
  lists.listSize = n;
  for (const auto& user : model.users()) {
    const std::set<ItemId>* skip = excludeSeen ? &seen[user] : nullptr;
    std::vector<ScoredItem> all;
    all.reserve(model.items().size());
    for (const auto& item : model.items()) {
      if (skip && skip->count(item)) continue;
      all.push_back({item, model.score(user, item)});
    }
    if (static_cast<int>(all.size()) < n)
      throw Error("user '" + user + "' has only " + std::to_string(all.size()) +
                  " eligible items, cannot build top-" + std::to_string(n));
    std::partial_sort(all.begin(), all.begin() + n, all.end(),
                      [](const ScoredItem& a, const ScoredItem& b) {
                        if (a.score != b.score) return a.score > b.score;
                        return a.item < b.item;
                      });
    all.resize(n);
    double smax = all.front().score, smin = all.back().score;
    for (auto& s : all)
      s.score = smax > smin ? (s.score - smin) / (smax - smin) : 1.0;
    sortByScore(all);
    lists.perUser.emplace(user, std::move(all));
  }
  return lists;
}

}  // namespace cpfair
