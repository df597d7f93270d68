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

#include "qshield/policy.hpp"

#include "qshield/error.hpp"

namespace qshield {

void Policy::add(const Digest& uid, CidSet cids) {
  if (!entries_.emplace(uid, std::move(cids)).second) {
    fail(ErrorCode::kArgument, "policy already has an entry for uid " + uid.short_hex());
  }
}

void Policy::remove(const Digest& uid) {
  if (entries_.erase(uid) == 0) fail(ErrorCode::kNotFound, "no policy entry for uid " + uid.short_hex());
}

void Policy::modify(const Digest& uid, CidSet cids) {
  auto it = entries_.find(uid);
  if (it == entries_.end()) fail(ErrorCode::kNotFound, "no policy entry for uid " + uid.short_hex());
  it->second = std::move(cids);
}

void Policy::grant(const Digest& uid, const Digest& cid) {
  auto it = entries_.find(uid);
  if (it == entries_.end()) fail(ErrorCode::kNotFound, "no policy entry for uid " + uid.short_hex());
  it->second.insert(cid);
}

const Policy::CidSet* Policy::find(const Digest& uid) const {
  auto it = entries_.find(uid);
  return it == entries_.end() ? nullptr : &it->second;
}

nlohmann::json Policy::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [uid, cids] : entries_) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& cid : cids) list.push_back(cid.hex());
    entries.push_back({{"uid", uid.hex()}, {"cids", std::move(list)}});
  }
  return {{"entries", std::move(entries)}};
}

Policy Policy::from_json(const nlohmann::json& j) {
  Policy pol;
  try {
    for (const auto& e : j.at("entries")) {
      CidSet cids;
      for (const auto& c : e.at("cids")) cids.insert(Digest::from_hex(c.get<std::string>()));
      pol.add(Digest::from_hex(e.at("uid").get<std::string>()), std::move(cids));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::kFormat, std::string("malformed policy: ") + ex.what());
  }
  return pol;
}

Digest Policy::digest() const { return hash_tagged("qshield/policy/v1", as_bytes(to_json().dump())); }

}  // namespace qshield
