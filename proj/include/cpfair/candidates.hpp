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
#include <fstream>
#include <set>

#include <json.hpp>

#include "cpfair/core.hpp"

namespace cpfair {

struct ScoredItem {
  ItemId item;
  double score = 0.0;
};

// Per-user ranked top-N items with relevance scores. Within each list scores
// are non-increasing; equal scores are ordered by ascending item id.
struct CandidateLists {
  int listSize = 0;  // N
  std::map<UserId, std::vector<ScoredItem>> perUser;
};

inline void sortByScore(std::vector<ScoredItem>& list) {
  std::sort(list.begin(), list.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  });
}

inline void validateCandidates(const CandidateLists& lists) {
  if (lists.listSize <= 0) throw Error("candidate list size N must be positive");
  for (const auto& [user, list] : lists.perUser) {
    if (static_cast<int>(list.size()) != lists.listSize)
      throw Error("user '" + user + "' has " + std::to_string(list.size()) +
                  " candidates, expected N=" + std::to_string(lists.listSize));
    std::set<ItemId> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!std::isfinite(list[i].score))
        throw Error("non-finite score for user '" + user + "'");
      if (!seen.insert(list[i].item).second)
        throw Error("duplicate item '" + list[i].item + "' in list of user '" + user + "'");
      if (i > 0) {
        if (list[i - 1].score < list[i].score)
          throw Error("scores not non-increasing for user '" + user + "'");
        if (list[i - 1].score == list[i].score && list[i - 1].item > list[i].item)
          throw Error("tied scores not in ascending item order for user '" + user + "'");
      }
    }
  }
}

inline void writeScoreFile(const std::string& path, const CandidateLists& lists) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write score file: " + path);
  for (const auto& [user, list] : lists.perUser) {
    nlohmann::json j;
    j["user"] = user;
    auto& items = j["items"] = nlohmann::json::array();
    auto& scores = j["scores"] = nlohmann::json::array();
    for (const auto& s : list) {
      items.push_back(s.item);
      scores.push_back(s.score);
    }
    out << j.dump() << "\n";
  }
}

// Loads baseline scores exported by an external model. Accepts one JSON
// object per line (`{"user":..,"items":[..],"scores":[..]}`) or long-form
// CSV `user,item,score,rank`. Unsorted rows are re-sorted with a warning.
// When id universes are given, unknown ids are errors.
inline CandidateLists loadExternalScores(const std::string& path, int expectedN,
                                         const std::set<UserId>* validUsers = nullptr,
                                         const std::set<ItemId>* validItems = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open score file: " + path);
  CandidateLists lists;
  lists.listSize = expectedN;

  std::string line;
  std::size_t lineno = 0;
  bool jsonl = false;
  bool known = false;
  bool resorted = false;

  auto addUser = [&](const UserId& user, std::vector<ScoredItem> list) {
    if (validUsers && !validUsers->count(user))
      throw Error("score file references unknown user '" + user + "'");
    if (static_cast<int>(list.size()) != expectedN)
      throw Error("user '" + user + "' has list length " + std::to_string(list.size()) +
                  ", expected " + std::to_string(expectedN));
    std::set<ItemId> seen;
    for (const auto& s : list) {
      if (validItems && !validItems->count(s.item))
        throw Error("score file references unknown item '" + s.item + "' (user '" + user + "')");
      if (std::isnan(s.score)) throw Error("NaN score for user '" + user + "'");
      if (!seen.insert(s.item).second)
        throw Error("duplicate item '" + s.item + "' in list of user '" + user + "'");
    }
    bool sorted = std::is_sorted(list.begin(), list.end(),
                                 [](const ScoredItem& a, const ScoredItem& b) {
                                   if (a.score != b.score) return a.score > b.score;
                                   return a.item < b.item;
                                 });
    if (!sorted) {
      sortByScore(list);
      resorted = true;
    }
    if (!lists.perUser.emplace(user, std::move(list)).second)
      throw Error("user '" + user + "' appears more than once in " + path);
  };

  std::map<UserId, std::vector<ScoredItem>> csvRows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (!known) {
      jsonl = line.find_first_not_of(" \t") != std::string::npos &&
              line[line.find_first_not_of(" \t")] == '{';
      known = true;
    }
    if (jsonl) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const std::exception& e) {
        throw Error("bad JSON at line " + std::to_string(lineno) + " in " + path + ": " + e.what());
      }
      if (!j.contains("user") || !j.contains("items") || !j.contains("scores"))
        throw Error("missing field at line " + std::to_string(lineno) + " in " + path);
      if (j["items"].size() != j["scores"].size())
        throw Error("items/scores length mismatch at line " + std::to_string(lineno));
      std::vector<ScoredItem> list;
      try {
        for (std::size_t i = 0; i < j["items"].size(); ++i)
          list.push_back({j["items"][i].get<std::string>(), j["scores"][i].get<double>()});
        addUser(j["user"].get<std::string>(), std::move(list));
      } catch (const nlohmann::json::exception& e) {
        throw Error("bad field type at line " + std::to_string(lineno) + " in " + path + ": " +
                    e.what());
      }
    } else {
      std::vector<std::string> f;
      std::string cur;
      for (char c : line) {
        if (c == ',') {
          f.push_back(cur);
          cur.clear();
        } else if (c != '\r') {
          cur += c;
        }
      }
      f.push_back(cur);
      if (f.size() != 4)
        throw Error("expected 4 CSV columns at line " + std::to_string(lineno) + " in " + path);
      if (lineno == 1 && f[0] == "user") continue;  // header
      double score = 0;
      try {
        score = std::stod(f[2]);
      } catch (...) {
        throw Error("bad score at line " + std::to_string(lineno) + " in " + path);
      }
      csvRows[f[0]].push_back({f[1], score});
    }
  }
  for (auto& [user, list] : csvRows) addUser(user, std::move(list));
  if (lists.perUser.empty()) throw Error("no candidate lists parsed from " + path);
  if (resorted) warn("score file " + path + " was not sorted by score; rows re-sorted");
  return lists;
}

}  // namespace cpfair
