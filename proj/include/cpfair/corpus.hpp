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
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "cpfair/core.hpp"

namespace cpfair {

enum class InputFormat { Auto, Csv, Tsv };

inline InputFormat inputFormatFromString(const std::string& s) {
  if (s == "auto") return InputFormat::Auto;
  if (s == "csv") return InputFormat::Csv;
  if (s == "tsv") return InputFormat::Tsv;
  throw Error("unknown input format: " + s);
}

namespace detail {

inline std::vector<std::string> splitFields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    std::size_t b = f.find_first_not_of(' ');
    if (b != std::string::npos && b > 0) f = f.substr(b);
  }
  return out;
}

inline bool parseDouble(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

inline bool parseInt64(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

}  // namespace detail

// Reads a tab- or comma-separated feedback file with columns
// `user, item, weight[, timestamp]`. An optional header row is detected by a
// non-numeric weight field. Repeated (user, item) pairs keep the max weight,
// then the latest timestamp.
inline InteractionLog loadInteractions(const std::string& path,
                                       InputFormat format = InputFormat::Auto) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open interaction file: " + path);

  InteractionLog log;
  std::map<std::pair<UserId, ItemId>, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  char delim = 0;
  if (format == InputFormat::Csv) delim = ',';
  if (format == InputFormat::Tsv) delim = '\t';

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (delim == 0) delim = line.find('\t') != std::string::npos ? '\t' : ',';
    auto fields = detail::splitFields(line, delim);
    if (fields.size() < 3 || fields.size() > 4)
      throw Error("malformed row at line " + std::to_string(lineno) + " in " + path +
                  ": expected 3 or 4 columns, got " + std::to_string(fields.size()));
    double weight = 0;
    if (!detail::parseDouble(fields[2], weight)) {
      if (lineno == 1) continue;  // header row
      throw Error("malformed row at line " + std::to_string(lineno) + " in " + path +
                  ": non-numeric weight '" + fields[2] + "'");
    }
    if (weight < 0)
      throw Error("negative weight at line " + std::to_string(lineno) + " in " + path);
    Interaction x{fields[0], fields[1], weight, std::nullopt};
    if (fields.size() == 4 && !fields[3].empty()) {
      std::int64_t ts = 0;
      if (!detail::parseInt64(fields[3], ts))
        throw Error("malformed timestamp at line " + std::to_string(lineno) + " in " + path);
      x.timestamp = ts;
    }
    auto key = std::make_pair(x.user, x.item);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, log.interactions.size());
      log.interactions.push_back(std::move(x));
    } else {
      Interaction& old = log.interactions[it->second];
      const bool replace =
          x.weight > old.weight ||
          (x.weight == old.weight &&
           x.timestamp.value_or(INT64_MIN) > old.timestamp.value_or(INT64_MIN));
      if (replace) old = std::move(x);
    }
  }
  if (log.empty()) throw Error("no interactions parsed from " + path);
  std::sort(log.interactions.begin(), log.interactions.end(),
            [](const Interaction& a, const Interaction& b) {
              return std::tie(a.user, a.item) < std::tie(b.user, b.item);
            });
  return log;
}

inline void saveInteractions(const std::string& path, const InteractionLog& log,
                             char delim = '\t') {
  std::ofstream out(path);
  if (!out) throw Error("cannot write interaction file: " + path);
  out.precision(17);
  for (const auto& x : log.interactions) {
    out << x.user << delim << x.item << delim << x.weight;
    if (x.timestamp) out << delim << *x.timestamp;
    out << "\n";
  }
}

// Iterative peeling: alternately drop users and items with fewer than k
// interactions until stable.
inline InteractionLog kcoreFilter(const InteractionLog& log, int k) {
  if (k < 1) throw Error("k-core parameter must be >= 1");
  std::vector<Interaction> cur = log.interactions;
  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, std::size_t> uc, ic;
    for (const auto& x : cur) {
      ++uc[x.user];
      ++ic[x.item];
    }
    std::vector<Interaction> next;
    next.reserve(cur.size());
    for (auto& x : cur) {
      if (uc[x.user] >= static_cast<std::size_t>(k) &&
          ic[x.item] >= static_cast<std::size_t>(k))
        next.push_back(std::move(x));
      else
        changed = true;
    }
    cur = std::move(next);
  }
  if (cur.empty())
    throw Error("k-core filtering with k=" + std::to_string(k) + " removed every interaction");
  InteractionLog out;
  out.interactions = std::move(cur);
  return out;
}

struct SplitBundle {
  InteractionLog train;
  InteractionLog validation;
  InteractionLog test;
  std::uint64_t seed = 0;
  std::array<double, 3> proportions{0.7, 0.1, 0.2};
};

// Per-user random partition. Part sizes follow the largest-remainder rule on
// (p_train*c, p_val*c, p_test*c); leftovers go to the largest fractional
// remainder, ties in order test, validation, train. Deterministic per seed.
inline SplitBundle splitLog(const InteractionLog& log, std::uint64_t seed,
                            std::array<double, 3> proportions = {0.7, 0.1, 0.2}) {
  double psum = proportions[0] + proportions[1] + proportions[2];
  if (std::abs(psum - 1.0) > 1e-9) throw Error("split proportions must sum to 1");
  SplitBundle out;
  out.seed = seed;
  out.proportions = proportions;
  for (auto& [user, rows] : log.groupByUser()) {
    const std::size_t c = rows.size();
    if (c < 3)
      throw Error("user '" + user + "' has only " + std::to_string(c) +
                  " interactions; need >= 3 to split (apply k-core with k >= 3)");
    std::array<std::size_t, 3> counts;
    std::array<double, 3> frac;
    std::size_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
      double target = proportions[p] * static_cast<double>(c);
      counts[p] = static_cast<std::size_t>(std::floor(target + 1e-9));
      frac[p] = target - static_cast<double>(counts[p]);
      assigned += counts[p];
    }
    std::array<int, 3> order{2, 1, 0};  // test, validation, train
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    for (std::size_t r = 0; r < c - assigned; ++r) ++counts[order[r % 3]];
    if (counts[0] == 0) {  // never strand a user without train history
      int donor = counts[2] > 0 ? 2 : 1;
      --counts[donor];
      ++counts[0];
    }
    // rows arrive sorted by item id; shuffle with a per-user stream
    auto rng = seededRng(seed, user);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) out.train.interactions.push_back(rows[pos++]);
    for (std::size_t i = 0; i < counts[1]; ++i) out.validation.interactions.push_back(rows[pos++]);
    for (std::size_t i = 0; i < counts[2]; ++i) out.test.interactions.push_back(rows[pos++]);
  }
  auto canon = [](InteractionLog& l) {
    std::sort(l.interactions.begin(), l.interactions.end(),
              [](const Interaction& a, const Interaction& b) {
                return std::tie(a.user, a.item) < std::tie(b.user, b.item);
              });
  };
  canon(out.train);
  canon(out.validation);
  canon(out.test);
  return out;
}

inline nlohmann::json splitManifest(const SplitBundle& b, int kcoreK) {
  nlohmann::json j;
  j["seed"] = b.seed;
  j["proportions"] = {b.proportions[0], b.proportions[1], b.proportions[2]};
  j["k"] = kcoreK;
  for (auto [name, part] : {std::pair<const char*, const InteractionLog*>{"train", &b.train},
                            {"validation", &b.validation},
                            {"test", &b.test}}) {
    j["parts"][name]["users"] = part->numUsers();
    j["parts"][name]["items"] = part->numItems();
    j["parts"][name]["interactions"] = part->size();
  }
  return j;
}

struct ThresholdStat {
  int threshold;
  double userPercent;
  double itemPercent;
};

// Percentage of users/items whose interaction count meets each threshold.
inline std::vector<ThresholdStat> datasetStats(const InteractionLog& log,
                                               const std::vector<int>& thresholds) {
  if (thresholds.empty()) throw Error("thresholds must be non-empty");
  for (int t : thresholds)
    if (t <= 0) throw Error("thresholds must be positive");
  if (log.empty()) throw Error("empty interaction log");
  auto uc = log.userCounts();
  auto ic = log.itemCounts();
  std::vector<ThresholdStat> out;
  for (int t : thresholds) {
    std::size_t u = 0, i = 0;
    for (const auto& [_, c] : uc)
      if (c >= static_cast<std::size_t>(t)) ++u;
    for (const auto& [_, c] : ic)
      if (c >= static_cast<std::size_t>(t)) ++i;
    out.push_back({t, 100.0 * static_cast<double>(u) / static_cast<double>(uc.size()),
                   100.0 * static_cast<double>(i) / static_cast<double>(ic.size())});
  }
  return out;
}

// Disjoint two-way user and item segmentation by training interaction count.
// Signs follow the protected-group convention: +1 for inactive users and
// long-tail items, -1 for the advantaged groups.
struct GroupAssignment {
  std::set<UserId> activeUsers;
  std::set<UserId> inactiveUsers;
  std::set<ItemId> shortHeadItems;
  std::set<ItemId> longTailItems;

  int userSign(const UserId& u) const {
    if (activeUsers.count(u)) return -1;
    if (inactiveUsers.count(u)) return +1;
    throw Error("user '" + u + "' not covered by group assignment");
  }
  int itemSign(const ItemId& i) const {
    if (shortHeadItems.count(i)) return -1;
    if (longTailItems.count(i)) return +1;
    throw Error("item '" + i + "' not covered by group assignment");
  }
};

inline GroupAssignment segmentGroups(const InteractionLog& trainLog,
                                     double userTopFraction = 0.05,
                                     double itemTopFraction = 0.20) {
  if (userTopFraction <= 0 || userTopFraction >= 1 || itemTopFraction <= 0 ||
      itemTopFraction >= 1)
    throw Error("segmentation fractions must lie in (0, 1)");
  GroupAssignment g;

  auto pick = [](const std::map<std::string, std::size_t>& counts, double fraction,
                 const char* what) {
    const std::size_t n = counts.size();
    const auto top = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n) - 1e-9));
    if (top == 0 || top >= n)
      throw Error(std::string("degenerate ") + what + " segmentation: top group size " +
                  std::to_string(top) + " of " + std::to_string(n));
    std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
    // count desc, boundary ties by ascending identifier
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::pair<std::set<std::string>, std::set<std::string>> out;
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < top ? out.first : out.second).insert(order[i].first);
    return out;
  };

  auto [act, inact] = pick(trainLog.userCounts(), userTopFraction, "user");
  g.activeUsers = std::move(act);
  g.inactiveUsers = std::move(inact);
  auto [head, tail] = pick(trainLog.itemCounts(), itemTopFraction, "item");
  g.shortHeadItems = std::move(head);
  g.longTailItems = std::move(tail);
  return g;
}

}  // namespace cpfair
