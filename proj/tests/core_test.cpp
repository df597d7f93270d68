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

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include "qshield/core.hpp"
#include "qshield/error.hpp"
#include "support/deploy.hpp"
#include "support/oracle.hpp"

namespace qshield {
namespace {

using nlohmann::json;
using proto::Frame;
using proto::Op;
using testing::Deployment;
using testing::kJoinSumQuery;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

// Unlock frame the way the host builds it.
Frame unlock_request(const host::EncryptedStore& store, const query::QueryPlan& plan, const Bytes& token) {
  json headers = json::array();
  std::vector<Bytes> blobs{token};
  for (const auto& n : plan.nodes) {
    if (!n.is_source()) continue;
    Digest cid = Digest::from_hex(n.params.at("cid").get<std::string>());
    auto docs = store.documents(cid);
    auto info = store.find(cid);
    headers.push_back({{"cid", cid.hex()}, {"name", info->name}, {"schema", info->schema}, {"count", docs.size()}});
    for (auto& d : docs) blobs.push_back(d.ct);
  }
  return Frame::request(Op::kUnlock, {{"collections", headers}}, blobs);
}

Frame send(core::TrustedCore& core, const Frame& req) { return Frame::decode(core.call(req.encode())).check(); }

// Executes the plan operators in schedule order; returns plan node -> s_id.
std::map<int, std::uint64_t> execute(core::TrustedCore& core, const query::QueryPlan& plan) {
  std::map<int, std::uint64_t> sid;
  for (int id : plan.schedule()) {
    const auto& n = plan.node(id);
    std::vector<std::uint64_t> in;
    for (int i : n.inputs) in.push_back(plan.node(i).is_source() ? 0 : sid.at(i));
    Frame r = proto::call(core.transport(), Op::kExecOperator,
                          {{"f_name", n.op_name}, {"f_params", n.params}, {"inputs", in}});
    sid[id] = r.args.at("s_id").get<std::uint64_t>();
  }
  return sid;
}

struct JoinSum : ::testing::Test {
  Deployment d{3};
  data::Collection c1, c2;

  void SetUp() override {
    std::tie(c1, c2) = testing::join_corpus(60, 11);
    d.add(c1, {1, 2});
    d.add(c2, {1, 2});
  }

  query::QueryPlan plan() const { return query::compile(kJoinSumQuery, d.store.catalog()); }
};

TEST(CoreInit, PublishesUsableKeysOnce) {
  core::TrustedCore core;
  client::CoreKeys keys = client::init_core(core.transport());
  EXPECT_EQ(keys.pke_pub.size(), 32u);
  EXPECT_EQ(keys.sig_pub.size(), 32u);
  EXPECT_EQ(keys.measurement, proto::measurement("core"));
  EXPECT_EQ(code_of([&] { client::init_core(core.transport()); }), ErrorCode::kState);

  // The quote signature verifies under the published key.
  client::OwnerChannel ch = client::OwnerChannel::establish(core.transport(), keys, proto::measurement("core"));
  EXPECT_FALSE(ch.channel_id.empty());
}

TEST(CoreInit, RejectsUnsupportedSecurityLevel) {
  core::TrustedCore a, b;
  EXPECT_EQ(code_of([&] { client::init_core(a.transport(), 0); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([&] { client::init_core(b.transport(), 256); }), ErrorCode::kConfiguration);
}

TEST(CoreInit, UnknownOpcodeAndGarbageAreErrorFrames) {
  core::TrustedCore core;
  client::init_core(core.transport());
  Frame r = Frame::decode(core.call(Frame{0x7f, json::object(), {}}.encode()));
  EXPECT_EQ(r.code, static_cast<std::uint8_t>(ErrorCode::kArgument));
  Bytes junk{1, 2, 3};
  r = Frame::decode(core.call(junk));
  EXPECT_EQ(r.code, static_cast<std::uint8_t>(ErrorCode::kFormat));
}

TEST(CoreProvision, TamperedPayloadIsRejectedAndStateUnchanged) {
  core::TrustedCore core;
  client::CoreKeys keys = client::init_core(core.transport());
  auto owner = client::OwnerContext::setup(128, 2);
  client::OwnerChannel ch = client::OwnerChannel::establish(core.transport(), keys, keys.measurement);
  json body = {{"seq", 1}, {"enclave_share", to_hex(owner.shares().enclave.serialize())},
               {"policy", Policy().to_json()}};
  Bytes sealed = proto::channel_seal(ch.key, "qshield/provision/v1", ch.channel_id, body);
  sealed[sealed.size() / 2] ^= 0x01;
  EXPECT_EQ(code_of([&] { proto::call(core.transport(), Op::kProvision, {{"channel_id", ch.channel_id}}, {sealed}); }),
            ErrorCode::kChannel);
  Frame st = proto::call(core.transport(), Op::kStatus);
  EXPECT_FALSE(st.args.at("provisioned").get<bool>());
}

TEST(CoreProvision, SecondProvisionReplacesPolicyAndKeepsShare) {
  core::TrustedCore core;
  client::CoreKeys keys = client::init_core(core.transport());
  auto first = client::OwnerContext::setup(128, 1);
  auto second = client::OwnerContext::setup(128, 1);
  client::OwnerChannel ch = client::OwnerChannel::establish(core.transport(), keys, keys.measurement);
  auto provision = [&](std::uint64_t seq, const client::OwnerContext& o, const Policy& pol) {
    json body = {{"seq", seq}, {"enclave_share", to_hex(o.shares().enclave.serialize())}, {"policy", pol.to_json()}};
    Bytes sealed = proto::channel_seal(ch.key, "qshield/provision/v1", ch.channel_id, body);
    Frame r = proto::call(core.transport(), Op::kProvision, {{"channel_id", ch.channel_id}}, {sealed});
    return proto::channel_open(ch.key, "qshield/ack/v1", ch.channel_id, r.blobs.at(0));
  };
  Policy p1, p2;
  p1.add(first.uid(1), {});
  p2.add(first.uid(1), {hash("x")});
  json a1 = provision(1, first, p1);
  EXPECT_FALSE(a1.at("share_retained").get<bool>());
  json a2 = provision(2, second, p2);
  EXPECT_TRUE(a2.at("share_retained").get<bool>());
  EXPECT_EQ(a2.at("policy_digest").get<std::string>(), p2.digest().hex());
  // Stale sequence numbers are refused.
  EXPECT_EQ(code_of([&] { provision(1, first, p1); }), ErrorCode::kReplay);

  // The retained share still belongs to the first ceremony: a collection
  // encrypted under the first key opens for the first owner's user.
  host::EncryptedStore store;
  data::Collection c = data::Collection::make(hash("x"), "X", std::vector<data::Document>{data::Document{{"k", std::int64_t{7}}}});
  store.create({"X", hash("x"), c.schema});
  Bytes ad = proto::document_ad(hash("x"), "X");
  Bytes ct = sharing::encrypt(first.shares().sk, as_bytes(c.docs[0].to_json().dump()), ad).serialize();
  store.store(hash("x"), hash(ct), ct);
  client::UserContext user(first.shares().user(1), keys, store.catalog());
  auto req = user.make_token("SELECT COUNT(k) FROM X");
  auto plan = query::compile(req.q, store.catalog());
  send(core, unlock_request(store, plan, req.token));
  auto sid = execute(core, plan);
  Frame fin = proto::call(core.transport(), Op::kFinalize, {{"s_id", sid.at(plan.sink)}});
  auto opened = user.open_response(req, proto::Envelope::parse(fin.blobs.at(0)));
  EXPECT_TRUE(opened.audit.pass) << opened.audit.to_json().dump();
  EXPECT_EQ(ops::payload_to_json(opened.result), json({{"value", 1}}));
}

TEST(CoreProvision, OtherChannelsCannotChangePolicy) {
  Deployment d(2);
  client::OwnerChannel other = client::OwnerChannel::establish(d.core.transport(), d.keys, d.keys.measurement);
  json body = {{"seq", 99}, {"op", "add"}, {"uid", d.owner.uid(2).hex()}, {"cids", json::array()}};
  Bytes sealed = proto::channel_seal(other.key, "qshield/policy/v1", other.channel_id, body);
  EXPECT_EQ(code_of([&] {
              proto::call(d.core.transport(), Op::kUpdatePolicy, {{"channel_id", other.channel_id}}, {sealed});
            }),
            ErrorCode::kAuthorization);
}

TEST(CorePolicy, UnknownUserIsNotFoundAndLocalCopyRestored) {
  Deployment d(3);
  d.owner.add_user(d.owner_core(), 1);
  Digest before = d.owner.policy().digest();
  EXPECT_EQ(code_of([&] { d.owner.remove_user(d.owner_core(), 2); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { d.owner.modify_user(d.owner_core(), 3, {hash("c")}); }), ErrorCode::kNotFound);
  EXPECT_EQ(d.owner.policy().digest(), before);
  // The core still agrees with the owner.
  auto ack = d.owner.grant(d.owner_core(), 1, hash("c"));
  EXPECT_EQ(ack.policy_digest, d.owner.policy().digest());
}

TEST_F(JoinSum, UnlockSetsReplayFloorAndRejectsReplay) {
  auto user = d.user(1);
  auto req = user.make_token(kJoinSumQuery);
  EXPECT_EQ(req.counter, 0u);
  EXPECT_EQ(req.omega, 5u);
  Frame r = send(d.core, unlock_request(d.store, plan(), req.token));
  EXPECT_EQ(r.args.at("s_id"), 0);
  EXPECT_EQ(proto::call(d.core.transport(), Op::kStatus).args.at("replay_floor"), 0);
  // One session at a time.
  EXPECT_EQ(code_of([&] { send(d.core, unlock_request(d.store, plan(), req.token)); }), ErrorCode::kState);
  proto::call(d.core.transport(), Op::kAbort);
  EXPECT_EQ(code_of([&] { send(d.core, unlock_request(d.store, plan(), req.token)); }), ErrorCode::kReplay);
}

TEST_F(JoinSum, RevokedUserIsUnauthorized) {
  d.owner.remove_user(d.owner_core(), 2);
  auto user = d.user(2);
  auto req = user.make_token(kJoinSumQuery);
  EXPECT_EQ(code_of([&] { send(d.core, unlock_request(d.store, plan(), req.token)); }), ErrorCode::kAuthorization);
}

TEST_F(JoinSum, TokenForAnotherCoreIsATokenError) {
  core::TrustedCore other;
  client::CoreKeys keys = client::init_core(other.transport());
  client::UserContext user(d.owner.shares().user(1), keys, d.store.catalog());
  auto req = user.make_token(kJoinSumQuery);
  EXPECT_EQ(code_of([&] { send(d.core, unlock_request(d.store, plan(), req.token)); }), ErrorCode::kToken);
}

TEST_F(JoinSum, BudgetRunsOutAfterExactlyOmegaOperators) {
  auto user = d.user(1);
  auto req = user.make_token(kJoinSumQuery);
  auto p = plan();
  send(d.core, unlock_request(d.store, p, req.token));
  auto sid = execute(d.core, p);
  EXPECT_EQ(sid.size(), 5u);
  Frame st = proto::call(d.core.transport(), Op::kStatus);
  EXPECT_EQ(st.args.at("session").at("budget"), 0);
  EXPECT_EQ(st.args.at("session").at("states"), 6);

  const auto& n = p.node(p.sink);
  EXPECT_EQ(code_of([&] {
              proto::call(d.core.transport(), Op::kExecOperator,
                          {{"f_name", n.op_name}, {"f_params", n.params}, {"inputs", {sid.at(n.inputs[0])}}});
            }),
            ErrorCode::kEndurance);
  EXPECT_EQ(proto::call(d.core.transport(), Op::kStatus).args.at("session").at("states"), 6);

  Frame fin = proto::call(d.core.transport(), Op::kFinalize, {{"s_id", sid.at(p.sink)}});
  auto env = proto::Envelope::parse(fin.blobs.at(0));
  auto trace = proto::decode_trace(env.tp);
  ASSERT_EQ(trace.size(), 6u);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(trace[i].s_id, i);
    EXPECT_EQ(trace[i].w, 5 - i);
  }
  EXPECT_EQ(trace[0].f_name, "unlock");
  EXPECT_TRUE(crypto::verify_signature(d.keys.sig_pub, as_bytes(env.tp), env.sig));

  // Finalization zeroes the session.
  EXPECT_EQ(code_of([&] {
              proto::call(d.core.transport(), Op::kExecOperator,
                          {{"f_name", n.op_name}, {"f_params", n.params}, {"inputs", {0}}});
            }),
            ErrorCode::kState);
  EXPECT_EQ(code_of([&] { proto::call(d.core.transport(), Op::kFinalize, {{"s_id", 0}}); }), ErrorCode::kState);
}

TEST_F(JoinSum, ArityAndUnknownStatesAreStateErrors) {
  auto user = d.user(1);
  auto req = user.make_token(kJoinSumQuery);
  auto p = plan();
  send(d.core, unlock_request(d.store, p, req.token));
  auto exec = [&](const std::string& f, json params, std::vector<std::uint64_t> in) {
    return code_of([&] {
      proto::call(d.core.transport(), Op::kExecOperator, {{"f_name", f}, {"f_params", params}, {"inputs", in}});
    });
  };
  const auto& join = p.node(p.node(p.sink).inputs[0]);
  EXPECT_EQ(exec("join", join.params, {0}), ErrorCode::kState);
  EXPECT_EQ(exec("projection", p.node(3).params, {9}), ErrorCode::kState);
  EXPECT_EQ(exec("unlock", json::object(), {0}), ErrorCode::kState);
  // Failed invocations leave the budget alone.
  EXPECT_EQ(proto::call(d.core.transport(), Op::kStatus).args.at("session").at("budget"), 5);
  proto::call(d.core.transport(), Op::kAbort);
}

TEST_F(JoinSum, FinalizeOnUnlockStateGivesOneStateProof) {
  auto user = d.user(1);
  auto req = user.make_token(kJoinSumQuery);
  send(d.core, unlock_request(d.store, plan(), req.token));
  Frame fin = proto::call(d.core.transport(), Op::kFinalize, {{"s_id", 0}});
  auto env = proto::Envelope::parse(fin.blobs.at(0));
  EXPECT_EQ(proto::decode_trace(env.tp).size(), 1u);
  EXPECT_TRUE(crypto::verify_signature(d.keys.sig_pub, as_bytes(env.tp), env.sig));
}

TEST_F(JoinSum, EverySingleBitFlipOfTheProofBreaksTheSignature) {
  auto user = d.user(1);
  auto req = user.make_token(kJoinSumQuery);
  auto env = d.host.handle_query(kJoinSumQuery, req.token);
  std::string tp = env.tp;
  std::size_t accepted = 0;
  for (std::size_t bit = 0; bit < tp.size() * 8; ++bit) {
    std::string m = tp;
    m[bit / 8] = static_cast<char>(m[bit / 8] ^ (1 << (bit % 8)));
    accepted += crypto::verify_signature(d.keys.sig_pub, as_bytes(m), env.sig);
  }
  EXPECT_EQ(accepted, 0u);
}

// Scans every byte that leaves the core for secrets and document plaintext.
TEST(CoreHygiene, NothingSecretCrossesTheBoundary) {
  const std::string sentinel = "PLAINTEXT-SENTINEL-5c1e";
  core::TrustedCore core;
  std::vector<Bytes> outbound;
  proto::Transport recording = [&](ByteView req) {
    Bytes out = core.call(req);
    outbound.push_back(out);
    return out;
  };
  host::EncryptedStore store;
  host::HostService host(recording, store);
  client::CoreKeys keys = host.start();
  auto owner = client::OwnerContext::setup(128, 2);
  owner.provision(recording, keys);
  std::vector<data::Document> docs;
  for (int i = 0; i < 20; ++i) docs.push_back({{"k", std::int64_t{i}}, {"s", sentinel + std::to_string(i)}});
  auto meta = owner.create_collection(&recording, "S", {"k", "s"}, {1});
  store.create({meta.name, meta.cid, meta.schema});
  for (const auto& doc : docs) {
    auto e = owner.encrypt_document(meta.cid, doc);
    store.store(meta.cid, e.did, e.ct);
  }
  client::UserContext user(owner.shares().user(1), keys, store.catalog());
  for (const char* q : {"SELECT s FROM S WHERE k >= 3", "SELECT MAX(k) FROM S", "SELECT s FROM S WHERE s = 'zzz'"}) {
    auto req = user.make_token(q);
    auto env = host.handle_query(q, req.token);
    auto opened = user.open_response(req, env);
    EXPECT_TRUE(opened.audit.pass);
  }
  // Error paths too: replay, bad params, unknown attribute.
  auto req = user.make_token("SELECT s FROM S");
  host.handle_query(req.q, req.token);
  EXPECT_THROW(host.handle_query(req.q, req.token), Error);
  auto bad = user.make_token("SELECT s FROM S WHERE k > 1");
  EXPECT_THROW(host.handle_query_adversarial(bad.q, bad.token,
                                             {{"mutations", {{{"op", "substitute"}, {"index", 0},
                                                              {"params", {{"attrs", {"nope"}}, {"from", "00"}}}}}}}),
               Error);

  auto contains = [](const Bytes& hay, ByteView needle) {
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
  };
  Bytes sk_a = owner.shares().enclave.serialize();
  Bytes sk_b = owner.shares().user(1).serialize();
  std::vector<Bytes> secrets = {to_bytes(sentinel), Bytes(owner.shares().sk.view().begin(), owner.shares().sk.view().end()),
                                Bytes(sk_a.begin() + 9, sk_a.begin() + 9 + 48), Bytes(sk_b.begin() + 9, sk_b.end()),
                                Bytes(owner.shares().user(1).result_key().view().begin(),
                                      owner.shares().user(1).result_key().view().end())};
  ASSERT_GT(outbound.size(), 10u);
  for (const auto& out : outbound) {
    for (const auto& s : secrets) {
      EXPECT_FALSE(contains(out, s));
      EXPECT_FALSE(contains(out, to_bytes(to_hex(s))));
    }
  }
}

TEST(CoreConcurrency, CallsFromManyThreadsAreSerialized) {
  Deployment d(2);
  auto [c1, c2] = testing::join_corpus(20, 3);
  d.add(c1, {1});
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 20; ++i) {
        Frame r = Frame::decode(d.core.call(Frame::request(Op::kStatus).encode()));
        ok += !r.is_error();
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok.load(), 160);
}

}  // namespace
}  // namespace qshield
