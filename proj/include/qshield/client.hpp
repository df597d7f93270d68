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

// Data-owner and data-user workflows: key ceremony, policy management over
// the attested owner channel, document encryption, query tokens, response
// opening and trust-proof auditing.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qshield/document.hpp"
#include "qshield/operators.hpp"
#include "qshield/policy.hpp"
#include "qshield/protocol.hpp"
#include "qshield/query.hpp"
#include "qshield/sharing.hpp"

namespace qshield::client {

using nlohmann::json;

// Public parameters published by an initialized core.
struct CoreKeys {
  Bytes pke_pub;
  Bytes sig_pub;
  Digest measurement;

  json to_json() const;
  static CoreKeys from_json(const json& j);
};

// Sends init to a fresh core and returns its public parameters.
CoreKeys init_core(const proto::Transport& core, unsigned lambda = 128);

struct OwnerChannel {
  std::string channel_id;
  crypto::SymmetricKey key;

  // Challenges the core, checks the signed quote against the published
  // signing key and the expected measurement, then derives the channel key.
  static OwnerChannel establish(const proto::Transport& core, const CoreKeys& keys,
                                const Digest& expected_measurement);
};

struct PolicyAck {
  std::uint64_t seq = 0;
  Digest policy_digest;
  std::size_t entries = 0;
  bool replayed = false;
};

struct EncryptedDocument {
  Digest cid;
  Digest did;  // H(ct)
  Bytes ct;    // serialized AEAD ciphertext
};

struct CollectionMeta {
  Digest cid;
  std::string name;
  data::Schema schema;
};

class OwnerContext {
 public:
  // Runs the sharing setup and starts with an empty policy.
  static OwnerContext setup(unsigned lambda, std::size_t n);

  const sharing::ShareSet& shares() const { return shares_; }
  const Policy& policy() const { return pol_; }
  Digest uid(std::uint32_t user_index) const { return shares_.user(user_index).uid(); }

  // Attests the core, installs sk_a and the policy; the ack must carry the
  // digest of the local policy copy.
  PolicyAck provision(const proto::Transport& core, const CoreKeys& keys,
                      const Digest& expected_measurement = proto::measurement("core"));
  bool provisioned() const { return channel_.has_value(); }

  // Policy updates: applied locally, sent over the owner channel, and
  // confirmed against the ack. On any failure the local copy is restored.
  PolicyAck add_user(const proto::Transport& core, std::uint32_t user_index, std::set<Digest> cids = {});
  PolicyAck remove_user(const proto::Transport& core, std::uint32_t user_index);
  PolicyAck modify_user(const proto::Transport& core, std::uint32_t user_index, std::set<Digest> cids);
  PolicyAck grant(const proto::Transport& core, std::uint32_t user_index, const Digest& cid);

  // Registers a new collection and grants it to the listed users (firing
  // one policy update per user when provisioned).
  CollectionMeta create_collection(const proto::Transport* core, std::string name, data::Schema schema,
                                   const std::vector<std::uint32_t>& authorized_users);
  const CollectionMeta* collection(const Digest& cid) const;
  const CollectionMeta* collection(std::string_view name) const;
  const std::map<Digest, CollectionMeta>& collections() const { return collections_; }

  // Throws kNotFound for an unknown cid and kSchema when the document does
  // not match the collection schema.
  EncryptedDocument encrypt_document(const Digest& cid, const data::Document& doc) const;

  // Owner state file (contains secrets).
  json save() const;
  static OwnerContext load(const json& j);

 private:
  PolicyAck send_update(const proto::Transport& core, const json& body, const Policy& next);

  sharing::ShareSet shares_;
  Policy pol_;
  std::map<Digest, CollectionMeta> collections_;
  std::optional<OwnerChannel> channel_;
  std::uint64_t seq_ = 0;
};

struct QueryRequest {
  std::string q;
  Bytes token;
  std::uint64_t counter = 0;  // kept client-side for the audit
  std::uint32_t omega = 0;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AuditReport {
  bool pass = false;
  std::vector<Check> checks;

  // Name of the first failing check, or empty.
  std::string failed() const;
  // {"verdict": "PASS"|"FAIL", "checks": [{"name","pass","detail"}]}
  json to_json() const;
};

struct OpenedResponse {
  ops::Payload result;
  AuditReport audit;
};

class UserContext {
 public:
  UserContext(sharing::UserShare share, CoreKeys keys, query::Catalog catalog);

  const sharing::UserShare& share() const { return share_; }
  const CoreKeys& keys() const { return keys_; }
  const query::Catalog& catalog() const { return catalog_; }
  void set_catalog(query::Catalog c) { catalog_ = std::move(c); }
  std::int64_t counter() const { return counter_; }

  // The core keeps one replay floor for all users; raising the local
  // counter to it keeps the next token acceptable.
  void sync_counter(std::int64_t replay_floor);

  // Parses and plans q first; nothing is consumed when that fails.
  QueryRequest make_token(std::string_view q);

  // Verifies the signature (kProof), decrypts the result (kIntegrity) and
  // audits the trace.
  OpenedResponse open_response(const QueryRequest& req, const proto::Envelope& env) const;

  json save() const;
  static UserContext load(const json& j);

 private:
  sharing::UserShare share_;
  CoreKeys keys_;
  query::Catalog catalog_;
  std::int64_t counter_ = -1;
};

// Audit of a response trace against the query. Checks, in order:
// signature, budget, structure, freshness (when a counter is given),
// digest (when the decrypted result is given).
AuditReport audit_proof(std::string_view q, const query::Catalog& catalog, const proto::Envelope& env,
                        ByteView sig_pub, std::optional<std::uint64_t> counter = std::nullopt,
                        const std::optional<std::string>& result_plaintext = std::nullopt);

}  // namespace qshield::client
