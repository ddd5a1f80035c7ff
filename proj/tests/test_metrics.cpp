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

#include <doctest.h>

#include "cpfair/metrics.hpp"
#include "oracle_metrics.hpp"
#include "support.hpp"

using namespace cpfair;
using namespace cpfair::test;

TEST_CASE("ndcg basics") {
  CHECK(ndcgAtK({"a", "b"}, {"a"}, 10) == doctest::Approx(1.0));
  CHECK(ndcgAtK({"b", "a"}, {"a"}, 10) == doctest::Approx(1.0 / std::log2(3.0)));
  CHECK(ndcgAtK({"b", "c"}, {"a"}, 10) == 0.0);
  CHECK_THROWS_AS(ndcgAtK({"a"}, {}, 10), Error);
}

TEST_CASE("group relevance means") {
  GroupAssignment g;
  g.activeUsers = {"a1"};
  g.inactiveUsers = {"i1", "i2"};
  std::map<UserId, double> per{{"a1", 0.8}, {"i1", 0.2}, {"i2", 0.4}};
  auto r = groupRelevance(per, g);
  CHECK(r.all == doctest::Approx(0.4667).epsilon(1e-3));
  CHECK(*r.active == doctest::Approx(0.8));
  CHECK(*r.inactive == doctest::Approx(0.3));

  SUBCASE("identical values collapse to the same mean") {
    per = {{"a1", 0.6}, {"i1", 0.6}, {"i2", 0.6}};
    auto r2 = groupRelevance(per, g);
    CHECK(r2.all == doctest::Approx(0.6));
    CHECK(*r2.active == doctest::Approx(0.6));
    CHECK(*r2.inactive == doctest::Approx(0.6));
  }
  SUBCASE("empty active set reports absent") {
    per = {{"i1", 0.2}};
    auto r3 = groupRelevance(per, g);
    CHECK(!r3.active.has_value());
    CHECK(r3.inactive.has_value());
  }
}

TEST_CASE("dcf reported matches the reference spot values") {
  CHECK(dcfReported(0.0751, 0.0298) == doctest::Approx(0.4321).epsilon(0.0025));
  CHECK(dcfReported(0.0732, 0.0316) == doctest::Approx(0.3964).epsilon(0.0025));
  CHECK(dcfReported(0.3, 0.3) == 0.0);
  CHECK(dcfReported(0.0, 0.0) == 0.0);
}

TEST_CASE("exposure shares and dpf") {
  GroupAssignment g;
  g.shortHeadItems = {"h1", "h2"};
  g.longTailItems = {"t1", "t2"};
  std::map<UserId, std::vector<ScoredItem>> lists;
  lists["u1"] = {{"h1", 1}, {"t1", 0.5}};
  lists["u2"] = {{"h2", 1}, {"h1", 0.5}};
  auto e = exposureAndDpf(lists, g);
  CHECK(e.shortHead == doctest::Approx(0.75));
  CHECK(e.longTail == doctest::Approx(0.25));
  CHECK(e.dpf == doctest::Approx(0.5));

  SUBCASE("all long-tail gives dpf = -1") {
    lists["u1"] = {{"t1", 1}, {"t2", 0.5}};
    lists["u2"] = {{"t2", 1}, {"t1", 0.5}};
    auto e2 = exposureAndDpf(lists, g);
    CHECK(e2.dpf == doctest::Approx(-1.0));
  }
}

TEST_CASE("dpf arithmetic on reference exposure shares") {
  CHECK(0.8281 - 0.1719 == doctest::Approx(0.6562));
  CHECK(0.4954 - 0.5046 == doctest::Approx(-0.0092));
}

TEST_CASE("novelty is mean self-information in bits") {
  // n = 4 train users; item 'all' seen by everyone, 'half' by 2, 'quarter' by 1
  InteractionLog train;
  for (int u = 0; u < 4; ++u) train.interactions.push_back({uid(u), "all", 1.0, std::nullopt});
  for (int u = 0; u < 2; ++u) train.interactions.push_back({uid(u), "half", 1.0, std::nullopt});
  train.interactions.push_back({uid(0), "quarter", 1.0, std::nullopt});

  std::map<UserId, std::vector<ScoredItem>> lists;
  lists["u"] = {{"all", 1.0}};
  CHECK(novelty(lists, train) == doctest::Approx(0.0));

  lists["u"] = {{"half", 1.0}, {"quarter", 0.5}};
  CHECK(novelty(lists, train) == doctest::Approx(1.5));  // mean of (1, 2) bits

  // 1 user out of 1024 -> 10 bits
  InteractionLog big;
  for (int u = 0; u < 1024; ++u) big.interactions.push_back({uid(u), "x", 1.0, std::nullopt});
  big.interactions.push_back({uid(0), "rare", 1.0, std::nullopt});
  lists["u"] = {{"rare", 1.0}};
  CHECK(novelty(lists, big) == doctest::Approx(10.0));
}

TEST_CASE("coverage counts distinct recommended items over the catalog") {
  std::map<UserId, std::vector<ScoredItem>> lists;
  lists["u1"] = {{"a", 1}, {"b", 0.5}};
  lists["u2"] = {{"a", 1}, {"b", 0.5}};
  CHECK(coverage(lists, 10) == doctest::Approx(0.2));  // same K items for all -> K/m
  lists["u2"] = {{"c", 1}, {"d", 0.5}};
  CHECK(coverage(lists, 10) == doctest::Approx(0.4));  // disjoint lists -> nK/m
  CHECK(coverage(lists, 4) == doctest::Approx(1.0));
}

TEST_CASE("mcpf endpoints and delta") {
  CHECK(mcpf(0.3, 0.7, 1.0) == doctest::Approx(0.7));
  CHECK(mcpf(0.3, 0.7, 0.0) == doctest::Approx(0.3));
  CHECK(mcpf(0.4321, 0.6562, 0.5) == doctest::Approx(0.54415));
  CHECK(mcpf(-0.4, 0.2, 0.5, true) == doctest::Approx(0.3));  // absolute variant
  CHECK(deltaPercent(0.621, 0.4074) == doctest::Approx(34.39).epsilon(1e-3));
}

TEST_CASE("report serialization round-trips") {
  FairnessReport r;
  r.ndcgAll = 0.12;
  r.ndcgActive = 0.3;
  r.ndcgInactive = 0.1;
  r.dcfRaw = 0.2;
  r.dcfReported = 0.5;
  r.exposureShort = 0.8;
  r.exposureLong = 0.2;
  r.dpf = 0.6;
  r.novelty = 4.2;
  r.coverage = 0.33;
  r.mcpf = 0.55;
  r.mcpfOverAll = 4.58;
  r.deltaPercent = 12.5;
  r.mode = "CP";
  r.lambda1 = 0.05;
  r.lambda2 = 0.1;
  r.K = 10;
  r.N = 50;
  r.seed = 42;
  r.objectiveValue = 123.4;
  r.baseline = "mf";
  auto r2 = reportFromJson(toJson(r));
  CHECK(toJson(r2) == toJson(r));
}

TEST_CASE("dpf + 2 * exposureLong = 1 for all inputs") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = randomInstance(rng, 10, 6, 3);
    auto res = greedyRerank(inst.candidates, inst.groups, inst.benefits, inst.params);
    auto e = exposureAndDpf(res.fairLists, inst.groups);
    CHECK(e.dpf + 2.0 * e.longTail == doctest::Approx(1.0));
    CHECK(e.shortHead + e.longTail == doctest::Approx(1.0));
  }
}

TEST_CASE("assembled reports match the straight-from-definition oracle on small instances") {
  std::mt19937_64 rng(57);
  for (int trial = 0; trial < 60; ++trial) {
    // <= 5 users, <= 8 items
    const int nUsers = 2 + int(rng() % 4);
    const int nItems = 4 + int(rng() % 5);
    InteractionLog train, test;
    for (int u = 0; u < nUsers; ++u) {
      for (int i = 0; i < nItems; ++i) {
        if (rng() % 3 == 0) train.interactions.push_back({uid(u), iid(i), 1.0, std::nullopt});
        if (rng() % 4 == 0) test.interactions.push_back({uid(u), iid(i), 1.0, std::nullopt});
      }
      // keep the item catalog covered
      train.interactions.push_back({uid(u), iid(u % nItems), 1.0, std::nullopt});
    }
    GroupAssignment g;
    for (int u = 0; u < nUsers; ++u)
      (u == 0 ? g.activeUsers : g.inactiveUsers).insert(uid(u));
    for (int i = 0; i < nItems; ++i)
      (i < 2 ? g.shortHeadItems : g.longTailItems).insert(iid(i));

    const int K = 2;
    std::map<UserId, std::vector<ScoredItem>> fair;
    for (int u = 0; u < nUsers; ++u) {
      std::vector<int> perm(nItems);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<ScoredItem> l;
      for (int j = 0; j < K; ++j) l.push_back({iid(perm[j]), 1.0 - 0.1 * j});
      fair[uid(u)] = l;
    }

    auto report = assembleReport(fair, train, test, g, K, 0.5);

    oracle::OracleInput in;
    for (const auto& [u, l] : fair) {
      std::vector<std::string> items;
      for (const auto& s : l) items.push_back(s.item);
      in.lists[u] = items;
    }
    in.testSets = test.userItemSets();
    in.trainSetsByUser = train.userItemSets();
    in.activeUsers = g.activeUsers;
    in.shortHeadItems = g.shortHeadItems;
    for (const auto& [i, _] : train.itemCounts()) in.catalog.insert(i);
    in.K = K;
    in.w = 0.5;
    auto expect = oracle::compute(in);

    CHECK(report.ndcgAll == doctest::Approx(expect.ndcgAll).epsilon(1e-12));
    if (expect.hasActive)
      CHECK(*report.ndcgActive == doctest::Approx(expect.ndcgActive).epsilon(1e-12));
    if (expect.hasInactive)
      CHECK(*report.ndcgInactive == doctest::Approx(expect.ndcgInactive).epsilon(1e-12));
    if (expect.hasActive && expect.hasInactive) {
      CHECK(*report.dcfRaw == doctest::Approx(expect.dcfRaw).epsilon(1e-12));
      CHECK(*report.dcfReported == doctest::Approx(expect.dcfReported).epsilon(1e-12));
    }
    CHECK(report.exposureShort == doctest::Approx(expect.exposureShort).epsilon(1e-12));
    CHECK(report.exposureLong == doctest::Approx(expect.exposureLong).epsilon(1e-12));
    CHECK(report.dpf == doctest::Approx(expect.dpf).epsilon(1e-12));
    CHECK(report.novelty == doctest::Approx(expect.novelty).epsilon(1e-12));
    CHECK(report.coverage == doctest::Approx(expect.coverage).epsilon(1e-12));
    if (expect.hasActive && expect.hasInactive)
      CHECK(report.mcpf == doctest::Approx(expect.mcpf).epsilon(1e-12));
  }
}

TEST_CASE("per-user ndcg values stay in [0,1] and group means stay bounded") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    std::map<UserId, double> per;
    double lo = 1.0, hi = 0.0;
    GroupAssignment g;
    int n = 3 + int(rng() % 8);
    for (int u = 0; u < n; ++u) {
      std::vector<ItemId> list;
      std::set<ItemId> testSet;
      for (int i = 0; i < 5; ++i) list.push_back(iid(i));
      for (int i = 0; i < 5; ++i)
        if (rng() % 2) testSet.insert(iid(rng() % 8));
      if (testSet.empty()) testSet.insert(iid(0));
      double v = ndcgAtK(list, testSet, 5);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      per[uid(u)] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      (u % 2 ? g.activeUsers : g.inactiveUsers).insert(uid(u));
    }
    auto r = groupRelevance(per, g);
    CHECK(r.all >= lo - 1e-12);
    CHECK(r.all <= hi + 1e-12);
  }
}
