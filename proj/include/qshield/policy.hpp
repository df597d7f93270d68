// Copyright 2026 The QShield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "qshield/bytes.hpp"

namespace qshield {

// Access-control list: user id -> authorized collection ids.
class Policy {
 public:
  using CidSet = std::set<Digest>;

  // Throws kArgument if uid is already present.
  void add(const Digest& uid, CidSet cids);
  // Throws kNotFound if uid is absent.
  void remove(const Digest& uid);
  void modify(const Digest& uid, CidSet cids);
  // Adds one cid to an existing entry.
  void grant(const Digest& uid, const Digest& cid);

  const CidSet* find(const Digest& uid) const;
  bool contains(const Digest& uid) const { return find(uid) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  const std::map<Digest, CidSet>& entries() const { return entries_; }

  // {"entries":[{"cids":[...],"uid":"..."}]} sorted by uid, cids sorted.
  nlohmann::json to_json() const;
  static Policy from_json(const nlohmann::json& j);
  Digest digest() const;

  bool operator==(const Policy&) const = default;

 private:
  std::map<Digest, CidSet> entries_;
};

}  // namespace qshield
