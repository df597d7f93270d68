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

#include "qshield/client.hpp"

#include <functional>
#include <set>

#include "qshield/error.hpp"

namespace qshield::client {

using proto::Op;

namespace {

constexpr std::string_view kProvisionPurpose = "qshield/provision/v1";
constexpr std::string_view kPolicyPurpose = "qshield/policy/v1";
constexpr std::string_view kAckPurpose = "qshield/ack/v1";

json cid_list(const std::set<Digest>& cids) {
  json out = json::array();
  for (const auto& c : cids) out.push_back(c.hex());
  return out;
}

PolicyAck read_ack(const OwnerChannel& ch, const proto::Frame& reply, std::uint64_t seq, const Policy& expected) {
  if (reply.blobs.size() != 1) fail(ErrorCode::kChannel, "policy acknowledgement missing");
  json body = proto::channel_open(ch.key, kAckPurpose, ch.channel_id, reply.blobs[0]);
  PolicyAck ack;
  ack.seq = body.at("seq").get<std::uint64_t>();
  ack.policy_digest = Digest::from_hex(body.at("policy_digest").get<std::string>());
  ack.entries = body.at("entries").get<std::size_t>();
  ack.replayed = reply.args.value("replayed", false);
  if (ack.seq != seq) fail(ErrorCode::kChannel, "acknowledgement answers another update");
  if (ack.policy_digest != expected.digest()) {
    fail(ErrorCode::kIntegrity, "core policy digest " + ack.policy_digest.short_hex() +
                                    " differs from owner copy " + expected.digest().short_hex());
  }
  return ack;
}

}  // namespace

// ---- core keys --------------------------------------------------------------

json CoreKeys::to_json() const {
  return {{"pke_pub", to_hex(pke_pub)}, {"sig_pub", to_hex(sig_pub)}, {"measurement", measurement.hex()}};
}

CoreKeys CoreKeys::from_json(const json& j) {
  try {
    return {from_hex(j.at("pke_pub").get<std::string>()), from_hex(j.at("sig_pub").get<std::string>()),
            Digest::from_hex(j.at("measurement").get<std::string>())};
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed core keys: ") + e.what());
  }
}

CoreKeys init_core(const proto::Transport& core, unsigned lambda) {
  proto::Frame reply = proto::call(core, Op::kInit, {{"lambda", lambda}});
  return CoreKeys::from_json(reply.args);
}

OwnerChannel OwnerChannel::establish(const proto::Transport& core, const CoreKeys& keys,
                                     const Digest& expected_measurement) {
  Bytes nonce = random_bytes(32);
  crypto::KxKeyPair kx = crypto::KxKeyPair::generate();
  proto::Frame reply =
      proto::call(core, Op::kAttest, {{"nonce", to_hex(nonce)}, {"party_kx_pub", to_hex(kx.public_key)}});
  if (reply.blobs.size() != 1) fail(ErrorCode::kAttestation, "attestation reply lacks a signature");
  proto::SignedQuote sq{reply.args.at("quote").get<std::string>(), reply.blobs[0]};
  proto::Quote q = proto::verify_quote(sq, keys.sig_pub, expected_measurement, nonce, kx.public_key);
  return {q.channel_id, crypto::kx_initiator_key(kx, q.core_kx_pub)};
}

// ---- owner ------------------------------------------------------------------

OwnerContext OwnerContext::setup(unsigned lambda, std::size_t n) {
  OwnerContext ctx;
  ctx.shares_ = sharing::setup(lambda, n);
  return ctx;
}

PolicyAck OwnerContext::provision(const proto::Transport& core, const CoreKeys& keys,
                                  const Digest& expected_measurement) {
  OwnerChannel ch = OwnerChannel::establish(core, keys, expected_measurement);
  std::uint64_t seq = seq_ + 1;
  Bytes share = shares_.enclave.serialize();
  json body = {{"seq", seq}, {"enclave_share", to_hex(share)}, {"policy", pol_.to_json()}};
  Bytes sealed = proto::channel_seal(ch.key, kProvisionPurpose, ch.channel_id, body);
  body.clear();
  proto::Frame reply = proto::call(core, Op::kProvision, {{"channel_id", ch.channel_id}}, {sealed});
  PolicyAck ack = read_ack(ch, reply, seq, pol_);
  seq_ = seq;
  channel_ = std::move(ch);
  return ack;
}

PolicyAck OwnerContext::send_update(const proto::Transport& core, const json& update, const Policy& next) {
  if (!channel_) {
    pol_ = next;
    return {0, pol_.digest(), pol_.size(), false};
  }
  std::uint64_t seq = seq_ + 1;
  json body = update;
  body["seq"] = seq;
  Bytes sealed = proto::channel_seal(channel_->key, kPolicyPurpose, channel_->channel_id, body);
  proto::Frame reply = proto::call(core, Op::kUpdatePolicy, {{"channel_id", channel_->channel_id}}, {sealed});
  seq_ = seq;
  PolicyAck ack = read_ack(*channel_, reply, seq, next);
  pol_ = next;
  return ack;
}

PolicyAck OwnerContext::add_user(const proto::Transport& core, std::uint32_t user_index, std::set<Digest> cids) {
  Digest id = uid(user_index);
  Policy next = pol_;
  next.add(id, cids);
  return send_update(core, {{"op", "add"}, {"uid", id.hex()}, {"cids", cid_list(cids)}}, next);
}

PolicyAck OwnerContext::remove_user(const proto::Transport& core, std::uint32_t user_index) {
  Digest id = uid(user_index);
  Policy next = pol_;
  next.remove(id);
  return send_update(core, {{"op", "remove"}, {"uid", id.hex()}}, next);
}

PolicyAck OwnerContext::modify_user(const proto::Transport& core, std::uint32_t user_index,
                                    std::set<Digest> cids) {
  Digest id = uid(user_index);
  Policy next = pol_;
  next.modify(id, cids);
  return send_update(core, {{"op", "modify"}, {"uid", id.hex()}, {"cids", cid_list(cids)}}, next);
}

PolicyAck OwnerContext::grant(const proto::Transport& core, std::uint32_t user_index, const Digest& cid) {
  Digest id = uid(user_index);
  Policy next = pol_;
  next.grant(id, cid);
  return send_update(core, {{"op", "grant"}, {"uid", id.hex()}, {"cids", cid_list({cid})}}, next);
}

CollectionMeta OwnerContext::create_collection(const proto::Transport* core, std::string name,
                                               data::Schema schema,
                                               const std::vector<std::uint32_t>& authorized_users) {
  if (name.empty()) fail(ErrorCode::kArgument, "collection name must be nonempty");
  if (collection(name) != nullptr) fail(ErrorCode::kArgument, "collection '" + name + "' already exists");
  for (auto idx : authorized_users) shares_.user(idx);
  std::sort(schema.begin(), schema.end());
  if (std::adjacent_find(schema.begin(), schema.end()) != schema.end()) {
    fail(ErrorCode::kSchema, "schema lists an attribute twice");
  }
  CollectionMeta meta{hash_tagged("qshield/cid/v1", random_bytes(32)), std::move(name), std::move(schema)};
  collections_.emplace(meta.cid, meta);

  static const proto::Transport kLocalOnly = [](ByteView) -> Bytes {
    fail(ErrorCode::kState, "owner is not connected to a core");
  };
  const proto::Transport& t = core != nullptr ? *core : kLocalOnly;
  for (auto idx : authorized_users) {
    if (core == nullptr && channel_) fail(ErrorCode::kState, "provisioned owner needs the core to grant access");
    if (pol_.contains(uid(idx))) {
      grant(t, idx, meta.cid);
    } else {
      add_user(t, idx, {meta.cid});
    }
  }
  return meta;
}

const CollectionMeta* OwnerContext::collection(const Digest& cid) const {
  auto it = collections_.find(cid);
  return it == collections_.end() ? nullptr : &it->second;
}

const CollectionMeta* OwnerContext::collection(std::string_view name) const {
  for (const auto& [_, meta] : collections_) {
    if (meta.name == name) return &meta;
  }
  return nullptr;
}

EncryptedDocument OwnerContext::encrypt_document(const Digest& cid, const data::Document& doc) const {
  const CollectionMeta* meta = collection(cid);
  if (meta == nullptr) fail(ErrorCode::kNotFound, "unknown collection " + cid.short_hex());
  if (doc.names() != meta->schema) fail(ErrorCode::kSchema, "document does not match collection '" + meta->name + "'");
  std::string plain = doc.to_json().dump();
  Bytes ct = sharing::encrypt(shares_.sk, as_bytes(plain), proto::document_ad(cid, meta->name)).serialize();
  wipe(std::span<std::uint8_t>(reinterpret_cast<std::uint8_t*>(plain.data()), plain.size()));
  Digest did = hash(ct);
  return {cid, did, std::move(ct)};
}

json OwnerContext::save() const {
  json cols = json::array();
  for (const auto& [cid, meta] : collections_) {
    cols.push_back({{"cid", cid.hex()}, {"name", meta.name}, {"schema", meta.schema}});
  }
  json out = {{"shares", to_hex(shares_.export_binary())},
              {"policy", pol_.to_json()},
              {"collections", std::move(cols)},
              {"seq", seq_}};
  if (channel_) out["channel"] = {{"id", channel_->channel_id}, {"key", to_hex(channel_->key.view())}};
  return out;
}

OwnerContext OwnerContext::load(const json& j) {
  try {
    OwnerContext ctx;
    ctx.shares_ = sharing::ShareSet::import_binary(from_hex(j.at("shares").get<std::string>()));
    ctx.pol_ = Policy::from_json(j.at("policy"));
    for (const auto& c : j.at("collections")) {
      CollectionMeta meta{Digest::from_hex(c.at("cid").get<std::string>()), c.at("name").get<std::string>(),
                          c.at("schema").get<data::Schema>()};
      ctx.collections_.emplace(meta.cid, std::move(meta));
    }
    ctx.seq_ = j.at("seq").get<std::uint64_t>();
    if (j.contains("channel")) {
      Bytes key = from_hex(j["channel"].at("key").get<std::string>());
      ctx.channel_ = OwnerChannel{j["channel"].at("id").get<std::string>(), crypto::SymmetricKey(key)};
      wipe(key);
    }
    return ctx;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed owner state: ") + e.what());
  }
}

// ---- user -------------------------------------------------------------------

UserContext::UserContext(sharing::UserShare share, CoreKeys keys, query::Catalog catalog)
    : share_(std::move(share)), keys_(std::move(keys)), catalog_(std::move(catalog)) {}

void UserContext::sync_counter(std::int64_t replay_floor) { counter_ = std::max(counter_, replay_floor); }

QueryRequest UserContext::make_token(std::string_view q) {
  query::QueryPlan plan = query::compile(q, catalog_);
  QueryRequest req;
  req.q = std::string(q);
  req.omega = static_cast<std::uint32_t>(query::compute_endurance(plan));
  req.counter = static_cast<std::uint64_t>(counter_ + 1);
  req.token = proto::seal_token(keys_.pke_pub, {share_, req.omega, req.counter});
  counter_ += 1;
  return req;
}

OpenedResponse UserContext::open_response(const QueryRequest& req, const proto::Envelope& env) const {
  if (!crypto::verify_signature(keys_.sig_pub, as_bytes(env.tp), env.sig)) {
    fail(ErrorCode::kProof, "trust proof signature does not verify");
  }
  Bytes plain = crypto::open(share_.result_key(), env.result, as_bytes(proto::kResultPurpose));
  std::string text = to_string(plain);
  wipe(plain);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::kFormat, "result is not JSON");
  OpenedResponse out{ops::payload_from_json(j), {}};
  out.audit = audit_proof(req.q, catalog_, env, keys_.sig_pub, req.counter, text);
  return out;
}

json UserContext::save() const {
  return {{"share", to_hex(share_.serialize())},
          {"core", keys_.to_json()},
          {"catalog", catalog_.to_json()},
          {"counter", counter_}};
}

UserContext UserContext::load(const json& j) {
  try {
    UserContext ctx(sharing::UserShare::parse(from_hex(j.at("share").get<std::string>())),
                    CoreKeys::from_json(j.at("core")), query::Catalog::from_json(j.value("catalog", json::array())));
    ctx.counter_ = j.value("counter", std::int64_t{-1});
    return ctx;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed user state: ") + e.what());
  }
}

// ---- audit ------------------------------------------------------------------

std::string AuditReport::failed() const {
  for (const auto& c : checks) {
    if (!c.pass) return c.name;
  }
  return "";
}

json AuditReport::to_json() const {
  json list = json::array();
  for (const auto& c : checks) list.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"verdict", pass ? "PASS" : "FAIL"}, {"checks", std::move(list)}};
}

namespace {

// Matches the plan DAG below `node` against the trace below `s_id`: same
// operator, same parameters, and inputs that match pairwise. Source nodes
// correspond to the unlocked state S_0. Every operator state is used once.
std::string match_subtree(const query::QueryPlan& plan, const std::vector<proto::StateRecord>& trace, int node,
                          std::uint64_t s_id, std::set<std::uint64_t>& used, std::map<int, std::uint64_t>& placed) {
  const auto& n = plan.node(node);
  const std::string where = "plan node " + std::to_string(node) + " (" + n.op_name + ")";
  if (s_id == 0 || s_id >= trace.size()) return where + " maps to state " + std::to_string(s_id);
  if (!used.insert(s_id).second) return "state " + std::to_string(s_id) + " consumed twice";
  placed[node] = s_id;
  const auto& rec = trace[s_id];
  if (rec.f_name != n.op_name) return where + " executed as " + rec.f_name + " in state " + std::to_string(s_id);
  if (rec.f_params != n.params) return where + " ran with different parameters in state " + std::to_string(s_id);
  if (rec.p_states.size() != n.inputs.size()) return where + " has the wrong number of inputs";
  for (std::size_t k = 0; k < n.inputs.size(); ++k) {
    std::uint64_t parent = rec.p_states[k];
    if (parent >= s_id) return "state " + std::to_string(s_id) + " consumes a later state";
    if (plan.node(n.inputs[k]).is_source()) {
      if (parent != 0) return where + " input " + std::to_string(k) + " should be the unlocked data";
      continue;
    }
    std::string err = match_subtree(plan, trace, n.inputs[k], parent, used, placed);
    if (!err.empty()) return err;
  }
  return "";
}

}  // namespace

AuditReport audit_proof(std::string_view q, const query::Catalog& catalog, const proto::Envelope& env,
                        ByteView sig_pub, std::optional<std::uint64_t> counter,
                        const std::optional<std::string>& result_plaintext) {
  AuditReport report;
  auto check = [&](std::string name, bool pass, std::string detail) {
    report.checks.push_back({std::move(name), pass, std::move(detail)});
    return pass;
  };
  auto finish = [&] {
    report.pass = report.failed().empty();
    return report;
  };

  std::vector<proto::StateRecord> trace;
  if (!crypto::verify_signature(sig_pub, as_bytes(env.tp), env.sig)) {
    check("signature", false, "signature over the trace does not verify");
    return finish();
  }
  try {
    trace = proto::decode_trace(env.tp);
  } catch (const Error& e) {
    check("signature", false, e.what());
    return finish();
  }
  check("signature", true, std::to_string(trace.size()) + " signed states");

  query::QueryPlan plan;
  try {
    plan = query::compile(q, catalog);
  } catch (const Error& e) {
    check("budget", false, std::string("query does not compile: ") + e.what());
    return finish();
  }
  const std::uint64_t omega = plan.omega();
  {
    std::string err;
    if (trace.size() != omega + 1) {
      err = "expected " + std::to_string(omega + 1) + " states for endurance " + std::to_string(omega) +
            ", trace has " + std::to_string(trace.size());
    } else if (trace[0].f_name != "unlock" || !trace[0].p_states.empty()) {
      err = "first state is not the unlock state";
    } else {
      for (std::size_t i = 0; i < trace.size() && err.empty(); ++i) {
        if (trace[i].s_id != i) err = "state ids are not consecutive";
        else if (trace[i].w != omega - i) {
          err = "state " + std::to_string(i) + " records w=" + std::to_string(trace[i].w) + ", expected " +
                std::to_string(omega - i);
        }
      }
    }
    if (!check("budget", err.empty(), err.empty() ? "w descends " + std::to_string(omega) + " to 0" : err)) {
      return finish();
    }
  }

  {
    std::set<std::uint64_t> used;
    std::map<int, std::uint64_t> placed;
    std::string err = match_subtree(plan, trace, plan.sink, trace.size() - 1, used, placed);
    if (err.empty() && used.size() != omega) err = "trace holds states outside the plan";
    // The schedule is deterministic, so the order is checked as well.
    std::vector<int> order = plan.schedule();
    for (std::size_t k = 0; k < order.size() && err.empty(); ++k) {
      if (placed.at(order[k]) != k + 1) {
        err = "plan node " + std::to_string(order[k]) + " ran as state " + std::to_string(placed.at(order[k])) +
              ", scheduled as state " + std::to_string(k + 1);
      }
    }
    if (!check("structure", err.empty(), err.empty() ? "trace is isomorphic to the plan in schedule order" : err)) return finish();
  }

  if (counter) {
    auto c = trace[0].f_params.value("counter", std::uint64_t{0});
    bool ok = trace[0].f_params.contains("counter") && c == *counter;
    if (!check("freshness", ok, ok ? "unlock used counter " + std::to_string(c)
                                   : "unlock used counter " + std::to_string(c) + ", token carried " +
                                         std::to_string(*counter))) {
      return finish();
    }
  }

  if (result_plaintext) {
    bool ok = hash(*result_plaintext) == trace.back().s_db_digest;
    check("digest", ok, ok ? "result matches the final state" : "result does not match the final state digest");
  }
  return finish();
}

}  // namespace qshield::client
