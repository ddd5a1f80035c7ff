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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cpfair/candidates.hpp"
#include "cpfair/core.hpp"
#include "cpfair/corpus.hpp"
#include "cpfair/rerank.hpp"

namespace cpfair::test {

inline std::string uid(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%05zu", i);
  return buf;
}

inline std::string iid(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "i%05zu", i);
  return buf;
}

inline InteractionLog makeLog(
    const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  InteractionLog log;
  for (const auto& [u, i, w] : rows) log.interactions.push_back({u, i, w, std::nullopt});
  return log;
}

// Random bipartite log: every user gets between minPerUser and maxPerUser
// distinct items, uniformly.
inline InteractionLog randomLog(std::mt19937_64& rng, std::size_t nUsers, std::size_t nItems,
                                std::size_t minPerUser, std::size_t maxPerUser) {
  InteractionLog log;
  std::uniform_int_distribution<std::size_t> countDist(minPerUser, maxPerUser);
  std::vector<std::size_t> items(nItems);
  std::iota(items.begin(), items.end(), 0);
  for (std::size_t u = 0; u < nUsers; ++u) {
    std::size_t c = std::min(countDist(rng), nItems);
    std::shuffle(items.begin(), items.end(), rng);
    for (std::size_t j = 0; j < c; ++j)
      log.interactions.push_back({uid(u), iid(items[j]), 1.0, std::nullopt});
  }
  std::sort(log.interactions.begin(), log.interactions.end(),
            [](const Interaction& a, const Interaction& b) {
              return std::tie(a.user, a.item) < std::tie(b.user, b.item);
            });
  return log;
}

struct SynthConfig {
  std::size_t nUsers = 500;
  std::size_t nItems = 400;
  std::size_t minPerUser = 15;
  std::size_t maxPerUser = 120;
  double popularityAlpha = 1.0;  // item popularity ~ rank^-alpha
  int clusters = 4;
  double affinity = 1.5;  // log-odds boost for same-cluster items
  std::uint64_t seed = 1;
};

// Power-law popularity with planted cluster preferences. Users draw items
// without replacement with probability proportional to
// popularity * exp(affinity * same_cluster).
inline InteractionLog synthCorpus(const SynthConfig& cfg) {
  std::mt19937_64 rng(mix64(cfg.seed));
  std::vector<double> pop(cfg.nItems);
  for (std::size_t i = 0; i < cfg.nItems; ++i)
    pop[i] = std::pow(static_cast<double>(i + 1), -cfg.popularityAlpha);
  std::vector<int> itemCluster(cfg.nItems);
  std::uniform_int_distribution<int> cd(0, cfg.clusters - 1);
  for (auto& c : itemCluster) c = cd(rng);

  std::uniform_int_distribution<std::size_t> countDist(cfg.minPerUser, cfg.maxPerUser);
  InteractionLog log;
  std::vector<double> cum(cfg.nItems);
  for (std::size_t u = 0; u < cfg.nUsers; ++u) {
    int uc = cd(rng);
    double total = 0;
    for (std::size_t i = 0; i < cfg.nItems; ++i) {
      double wgt = pop[i] * std::exp(itemCluster[i] == uc ? cfg.affinity : 0.0);
      total += wgt;
      cum[i] = total;
    }
    std::size_t c = std::min(countDist(rng), cfg.nItems);
    std::set<std::size_t> chosen;
    std::uniform_real_distribution<double> ud(0.0, total);
    while (chosen.size() < c) {
      double x = ud(rng);
      auto it = std::lower_bound(cum.begin(), cum.end(), x);
      std::size_t idx = static_cast<std::size_t>(it - cum.begin());
      if (idx >= cfg.nItems) idx = cfg.nItems - 1;
      chosen.insert(idx);
    }
    for (std::size_t i : chosen) log.interactions.push_back({uid(u), iid(i), 1.0, std::nullopt});
  }
  std::sort(log.interactions.begin(), log.interactions.end(),
            [](const Interaction& a, const Interaction& b) {
              return std::tie(a.user, a.item) < std::tie(b.user, b.item);
            });
  return log;
}

// A random re-ranking instance: candidate lists, groups over its users and
// items, benefit tables and parameters.
struct RerankInstance {
  CandidateLists candidates;
  GroupAssignment groups;
  BenefitTables benefits;
  FairnessParams params;
};

inline RerankInstance randomInstance(std::mt19937_64& rng, int maxUsers = 20, int maxN = 8,
                                     int maxK = 4) {
  std::uniform_int_distribution<int> ud(1, maxUsers);
  const int nUsers = ud(rng);
  std::uniform_int_distribution<int> nd(2, maxN);
  const int n = nd(rng);
  std::uniform_int_distribution<int> kd(1, std::min(maxK, n));
  const int k = kd(rng);
  const int nItems = n + static_cast<int>(rng() % (2 * n));

  RerankInstance inst;
  inst.candidates.listSize = n;
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  std::vector<int> itemIdx(nItems);
  std::iota(itemIdx.begin(), itemIdx.end(), 0);
  for (int i = 0; i < nItems; ++i)
    (coin(rng) ? inst.groups.shortHeadItems : inst.groups.longTailItems).insert(iid(i));
  if (inst.groups.shortHeadItems.empty()) {
    inst.groups.shortHeadItems.insert(iid(0));
    inst.groups.longTailItems.erase(iid(0));
  }
  if (inst.groups.longTailItems.empty()) {
    inst.groups.longTailItems.insert(iid(nItems - 1));
    inst.groups.shortHeadItems.erase(iid(nItems - 1));
  }

  for (int u = 0; u < nUsers; ++u) {
    (coin(rng) ? inst.groups.activeUsers : inst.groups.inactiveUsers).insert(uid(u));
    std::shuffle(itemIdx.begin(), itemIdx.end(), rng);
    std::vector<ScoredItem> list;
    std::vector<double> mc, mp;
    for (int i = 0; i < n; ++i) {
      list.push_back({iid(itemIdx[i]), score(rng)});
      mc.push_back(score(rng));
      mp.push_back(1.0);
    }
    sortByScore(list);
    inst.candidates.perUser.emplace(uid(u), std::move(list));
    inst.benefits.mc.emplace(uid(u), std::move(mc));
    inst.benefits.mp.emplace(uid(u), std::move(mp));
  }
  if (inst.groups.activeUsers.empty()) {
    inst.groups.activeUsers.insert(uid(0));
    inst.groups.inactiveUsers.erase(uid(0));
  }
  if (inst.groups.inactiveUsers.empty() && nUsers > 1) {
    inst.groups.inactiveUsers.insert(uid(nUsers - 1));
    inst.groups.activeUsers.erase(uid(nUsers - 1));
  }

  std::uniform_real_distribution<double> lam(0.0, 1.0);
  inst.params.lambda1 = lam(rng);
  inst.params.lambda2 = lam(rng);
  inst.params.K = k;
  inst.params.N = n;
  inst.params.mode = Mode::CP;
  return inst;
}

class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("cpfair_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

}  // namespace cpfair::test
