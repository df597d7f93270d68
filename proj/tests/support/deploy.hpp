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

// A complete in-process deployment for end-to-end tests: one trusted core,
// a host service with its store, and an owner holding the shares.

#include <filesystem>
#include <optional>
#include <vector>

#include "qshield/client.hpp"
#include "qshield/core.hpp"
#include "qshield/host.hpp"

namespace qshield::testing {

struct Deployment {
  core::TrustedCore core;
  host::EncryptedStore store;
  host::HostService host;
  client::CoreKeys keys;
  client::OwnerContext owner;

  explicit Deployment(std::size_t users = 2, std::optional<std::filesystem::path> root = std::nullopt,
                      std::size_t chunk_size = 128)
      : store(std::move(root), chunk_size), host(core.transport(), store) {
    keys = host.start();
    owner = client::OwnerContext::setup(128, users);
    owner.provision(core.transport(), keys);
  }

  // Registers c under the owner (granting `users`) and uploads every document.
  client::CollectionMeta add(const data::Collection& c, const std::vector<std::uint32_t>& users) {
    proto::Transport t = core.transport();
    client::CollectionMeta meta = owner.create_collection(&t, c.name, c.schema, users);
    store.create({meta.name, meta.cid, meta.schema});
    std::vector<host::StoredDoc> docs;
    for (const auto& d : c.docs) {
      client::EncryptedDocument e = owner.encrypt_document(meta.cid, d);
      docs.push_back({e.did, std::move(e.ct)});
    }
    store.store_batch(meta.cid, std::move(docs));
    return meta;
  }

  client::UserContext user(std::uint32_t index) const {
    return client::UserContext(owner.shares().user(index), keys, store.catalog());
  }

  proto::Transport owner_core() { return core.transport(); }
};

inline constexpr const char* kJoinSumQuery = "SELECT SUM(A4) FROM C1 JOIN C2 ON C1.A3 = C2.A3 WHERE C1.A1 <= 10";

}  // namespace qshield::testing
