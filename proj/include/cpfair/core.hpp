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

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cpfair {

using UserId = std::string;
using ItemId = std::string;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// One (user, item) feedback record. Weight is the explicit rating, or 1.0
// for implicit feedback. Logs are deduplicated on (user, item).
struct Interaction {
  UserId user;
  ItemId item;
  double weight = 1.0;
  std::optional<std::int64_t> timestamp;
};

struct InteractionLog {
  std::vector<Interaction> interactions;

  bool empty() const { return interactions.empty(); }
  std::size_t size() const { return interactions.size(); }

  std::map<UserId, std::size_t> userCounts() const {
    std::map<UserId, std::size_t> c;
    for (const auto& x : interactions) ++c[x.user];
    return c;
  }

  std::map<ItemId, std::size_t> itemCounts() const {
    std::map<ItemId, std::size_t> c;
    for (const auto& x : interactions) ++c[x.item];
    return c;
  }

  std::size_t numUsers() const { return userCounts().size(); }
  std::size_t numItems() const { return itemCounts().size(); }

  // Per-user item sets, binary presence.
  std::map<UserId, std::set<ItemId>> userItemSets() const {
    std::map<UserId, std::set<ItemId>> s;
    for (const auto& x : interactions) s[x.user].insert(x.item);
    return s;
  }

  std::map<UserId, std::vector<Interaction>> groupByUser() const {
    std::map<UserId, std::vector<Interaction>> g;
    for (const auto& x : interactions) g[x.user].push_back(x);
    return g;
  }
};

inline void warn(const std::string& msg) {
  std::fprintf(stderr, "[cpfair] warning: %s\n", msg.c_str());
}

// Deterministic hashing, independent of std::hash.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream keyed by (seed, name) so per-user draws do not depend on
// processing order.
inline std::mt19937_64 seededRng(std::uint64_t seed, std::string_view key) {
  return std::mt19937_64(mix64(seed ^ fnv1a64(key)));
}

}  // namespace cpfair
