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

// The untrusted host: stores encrypted collections, compiles queries and
// schedules trusted-core operator calls, standalone or across workers.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qshield/client.hpp"
#include "qshield/protocol.hpp"
#include "qshield/query.hpp"

namespace qshield::host {

using nlohmann::json;

struct StoredDoc {
  Digest did;
  Bytes ct;
};

// In memory, optionally mirrored to disk as one directory per cid holding
// manifest.json and numbered ciphertext files of at most chunk_size
// documents each.
class EncryptedStore {
 public:
  explicit EncryptedStore(std::optional<std::filesystem::path> root = std::nullopt, std::size_t chunk_size = 128);

  // Idempotent for an identical header; kArgument when the cid or the name
  // is already taken by a different collection.
  void create(query::CollectionInfo info);
  // Throws kIntegrity when did != H(ct) and kNotFound for an unknown cid.
  // Returns false when the document was already stored.
  bool store(const Digest& cid, const Digest& did, Bytes ct);
  // Validates the whole batch before storing any of it; returns the number
  // of new documents.
  std::size_t store_batch(const Digest& cid, std::vector<StoredDoc> docs);

  std::vector<StoredDoc> documents(const Digest& cid) const;
  std::optional<query::CollectionInfo> find(const Digest& cid) const;
  std::optional<query::CollectionInfo> find(std::string_view name) const;
  query::Catalog catalog() const;

  std::size_t chunk_size() const { return chunk_size_; }

 private:
  struct Entry {
    query::CollectionInfo info;
    std::vector<StoredDoc> docs;
    std::map<Digest, std::size_t> by_did;
  };

  void load();
  void flush(const Entry& e, std::size_t first_new) const;

  std::optional<std::filesystem::path> root_;
  std::size_t chunk_size_;
  mutable std::mutex mu_;
  std::map<Digest, Entry> entries_;
};

struct WorkerSpec {
  std::string worker_id;  // E1, E2, ...
  std::string node_id;    // N1, N2, ...
  std::string op_name;
  proto::Transport transport;
};

struct Placement {
  int plan_node = 0;
  std::string worker_id;
  std::string node_id;
};

// Service verbs carried in the frame code byte.
enum class Verb : std::uint8_t {
  kInfo = 0x40,
  kAttest = 0x41,        // relays a core attest/status frame
  kPolicyUpdate = 0x42,  // relays a core provision/update_policy frame
  kCreateCollection = 0x43,
  kUpload = 0x44,
  kQuery = 0x45,
  kCatalog = 0x46,
  kAttack = 0x47,
};

class HostService {
 public:
  HostService(proto::Transport core, EncryptedStore& store);

  // Initializes the core and keeps its public parameters.
  const client::CoreKeys& start(unsigned lambda = 128);
  const client::CoreKeys& keys() const;

  // Has the core (acting as broker) attest each worker and hand it the
  // common key. Any failure aborts and leaves distributed mode off.
  void attach_workers(std::vector<WorkerSpec> workers);
  void set_distributed(bool on);
  bool distributed() const { return distributed_; }
  const std::vector<Placement>& last_placement() const { return placement_; }

  proto::Envelope handle_query(const std::string& q, const Bytes& token);

  // Runs the plan with the invocation sequence rewritten by `script`:
  //   {"mutations":[{"op":"reorder","a":i,"b":j}, {"op":"swap_params","a":i,"b":j},
  //     {"op":"substitute","index":i,"params":{...}}, {"op":"insert","index":i,
  //     "f_name":..,"f_params":..,"inputs":[node..]}, {"op":"duplicate","index":i},
  //     {"op":"drop","index":i}, {"op":"raw_inputs","index":i,"s_ids":[..]},
  //     {"op":"finalize","s_id":n}]}
  // Indices address the operator invocations in schedule order.
  proto::Envelope handle_query_adversarial(const std::string& q, const Bytes& token, const json& script);

  // Service API entry point: one request frame in, one response frame out.
  Bytes handle(ByteView request);
  proto::Transport transport();

 private:
  struct Invocation {
    int node = 0;
    std::string f_name;
    json f_params;
    std::vector<int> inputs;
    std::optional<std::vector<std::uint64_t>> raw_inputs;
  };

  query::QueryPlan compile(const std::string& q) const;
  std::uint64_t unlock(const query::QueryPlan& plan, const Bytes& token);
  std::uint64_t invoke(const Invocation& inv, const std::vector<std::uint64_t>& inputs);
  proto::Envelope run(const query::QueryPlan& plan, const Bytes& token, std::vector<Invocation> invocations,
                      std::optional<std::uint64_t> final_state);
  void abort_session() noexcept;
  proto::Frame serve(const proto::Frame& req);

  proto::Transport core_;
  EncryptedStore& store_;
  std::optional<client::CoreKeys> keys_;
  std::mutex query_mu_;
  std::vector<WorkerSpec> workers_;
  std::map<std::string, std::size_t> rotation_;
  std::vector<Placement> placement_;
  bool distributed_ = false;
};

// Client stub for the service API.
class ServiceClient {
 public:
  explicit ServiceClient(proto::Transport t) : t_(std::move(t)) {}

  json info() const;
  client::CoreKeys keys() const;
  std::int64_t replay_floor() const;
  query::Catalog catalog() const;
  void create_collection(const client::CollectionMeta& meta) const;
  std::size_t upload(const Digest& cid, const std::vector<client::EncryptedDocument>& docs) const;
  proto::Envelope query(const std::string& q, const Bytes& token) const;
  proto::Envelope attack(const std::string& q, const Bytes& token, const json& script) const;

  // A core transport for the owner, relayed through the service.
  proto::Transport owner_relay() const;

 private:
  proto::Transport t_;
};

}  // namespace qshield::host
