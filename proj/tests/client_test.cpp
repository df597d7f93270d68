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

#include "qshield/client.hpp"
#include "qshield/error.hpp"
#include "support/deploy.hpp"
#include "support/oracle.hpp"

namespace qshield {
namespace {

using nlohmann::json;
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

struct Honest : ::testing::Test {
  Deployment d{2};
  data::Collection c1, c2;
  client::UserContext user = client::UserContext({}, {}, {});
  client::QueryRequest req;
  proto::Envelope env;
  std::vector<proto::StateRecord> trace;

  void SetUp() override {
    std::tie(c1, c2) = testing::join_corpus(80, 5);
    d.add(c1, {1});
    d.add(c2, {1});
    user = d.user(1);
    req = user.make_token(kJoinSumQuery);
    env = d.host.handle_query(req.q, req.token);
    trace = proto::decode_trace(env.tp);
  }

  // Re-signs a doctored trace with a key the test controls.
  client::AuditReport audit_forged(const std::vector<proto::StateRecord>& records) {
    crypto::SigningKeyPair key = crypto::SigningKeyPair::generate();
    proto::Envelope forged = env;
    forged.tp = proto::encode_trace(records);
    forged.sig = key.sign(as_bytes(forged.tp));
    return client::audit_proof(req.q, user.catalog(), forged, key.public_key, req.counter);
  }
};

TEST_F(Honest, OpensToOracleAnswerWithPassingAudit) {
  auto opened = user.open_response(req, env);
  EXPECT_TRUE(opened.audit.pass) << opened.audit.to_json().dump();
  std::map<std::string, data::Collection> db{{"C1", c1}, {"C2", c2}};
  auto expect = testing::brute_force(query::parse(kJoinSumQuery), db);
  ASSERT_TRUE(expect.scalar.has_value());
  EXPECT_TRUE(data::values_equal(std::get<data::Value>(opened.result), *expect.scalar));

  json report = opened.audit.to_json();
  EXPECT_EQ(report.at("verdict"), "PASS");
  std::vector<std::string> names;
  for (const auto& c : report.at("checks")) names.push_back(c.at("name"));
  EXPECT_EQ(names, (std::vector<std::string>{"signature", "budget", "structure", "freshness", "digest"}));
}

TEST_F(Honest, ResignedHonestTraceStillPasses) {
  // Guards the forging helper: an untouched trace must pass.
  EXPECT_TRUE(audit_forged(trace).pass);
}

TEST_F(Honest, BitFlippedResultIsAnIntegrityError) {
  proto::Envelope bad = env;
  bad.result[bad.result.size() / 2] ^= 0x10;
  EXPECT_EQ(code_of([&] { user.open_response(req, bad); }), ErrorCode::kIntegrity);
}

TEST_F(Honest, BitFlippedProofIsAProofError) {
  proto::Envelope bad = env;
  bad.tp[bad.tp.size() / 3] ^= 0x01;
  EXPECT_EQ(code_of([&] { user.open_response(req, bad); }), ErrorCode::kProof);
  auto report = client::audit_proof(req.q, user.catalog(), bad, d.keys.sig_pub);
  EXPECT_EQ(report.failed(), "signature");
}

TEST_F(Honest, SwappedOperatorOrderFailsStructure) {
  // States 1 and 2 trade places (the selection and the projection on the other source).
  auto t = trace;
  std::swap(t[1].f_name, t[2].f_name);
  std::swap(t[1].f_params, t[2].f_params);
  std::swap(t[1].s_db_digest, t[2].s_db_digest);
  EXPECT_EQ(audit_forged(t).failed(), "structure");
}

TEST_F(Honest, AlternativeTopologicalOrderFailsStructure) {
  // Runs the second source chain first; the DAG still matches, the schedule
  // does not.
  auto t = trace;
  std::swap(t[2].f_name, t[3].f_name);
  std::swap(t[2].f_params, t[3].f_params);
  std::swap(t[2].p_states, t[3].p_states);
  std::swap(t[2].s_db_digest, t[3].s_db_digest);
  t[4].p_states = {3, 2};
  auto report = audit_forged(t);
  EXPECT_EQ(report.failed(), "structure");
  EXPECT_NE(report.to_json().dump().find("scheduled as state"), std::string::npos);
}

TEST_F(Honest, SubstitutedParametersFailStructure) {
  auto t = trace;
  t[1].f_params["predicate"]["rhs"]["literal"] = 11;
  EXPECT_EQ(audit_forged(t).failed(), "structure");
}

TEST_F(Honest, ExtraStateFailsBudget) {
  auto t = trace;
  auto extra = t.back();
  extra.s_id = t.size();
  extra.p_states = {t.back().s_id};
  t.push_back(extra);
  EXPECT_EQ(audit_forged(t).failed(), "budget");
}

TEST_F(Honest, MissingStateFailsBudget) {
  auto t = trace;
  t.pop_back();
  EXPECT_EQ(audit_forged(t).failed(), "budget");
}

TEST_F(Honest, WrongWSequenceFailsBudget) {
  auto t = trace;
  std::swap(t[2].w, t[3].w);
  EXPECT_EQ(audit_forged(t).failed(), "budget");
}

TEST_F(Honest, RewiredEdgeFailsStructure) {
  auto t = trace;
  t.back().p_states = {0};
  EXPECT_EQ(audit_forged(t).failed(), "structure");
}

TEST_F(Honest, StaleUnlockCounterFailsFreshness) {
  auto t = trace;
  t[0].f_params["counter"] = req.counter + 7;
  EXPECT_EQ(audit_forged(t).failed(), "freshness");
}

TEST_F(Honest, ForeignResultFailsDigest) {
  auto report = client::audit_proof(req.q, user.catalog(), env, d.keys.sig_pub, req.counter,
                                    std::string(R"({"value":12345})"));
  EXPECT_EQ(report.failed(), "digest");
}

TEST_F(Honest, DifferentQueryFailsAudit) {
  auto report = client::audit_proof("SELECT SUM(A4) FROM C1 JOIN C2 ON C1.A3 = C2.A3 WHERE C1.A1 <= 9",
                                    user.catalog(), env, d.keys.sig_pub, req.counter);
  EXPECT_EQ(report.failed(), "structure");
  report = client::audit_proof("SELECT A1 FROM C1", user.catalog(), env, d.keys.sig_pub, req.counter);
  EXPECT_EQ(report.failed(), "budget");
}

TEST(UserTokens, CountersIncreaseAndMalformedQueriesConsumeNothing) {
  Deployment d(1);
  auto [c1, c2] = testing::join_corpus(5, 1);
  d.add(c1, {1});
  d.add(c2, {1});
  auto user = d.user(1);
  auto a = user.make_token(kJoinSumQuery);
  auto b = user.make_token(kJoinSumQuery);
  EXPECT_EQ(a.counter, 0u);
  EXPECT_EQ(b.counter, 1u);
  EXPECT_EQ(a.omega, 5u);
  EXPECT_NE(a.token, b.token);
  EXPECT_EQ(code_of([&] { user.make_token("SELEC A1 FROM C1"); }), ErrorCode::kSyntax);
  EXPECT_EQ(code_of([&] { user.make_token("SELECT A9 FROM C1"); }), ErrorCode::kSemantic);
  EXPECT_EQ(user.counter(), 1);
  EXPECT_EQ(user.make_token("SELECT A1 FROM C1").counter, 2u);

  user.sync_counter(10);
  EXPECT_EQ(user.make_token("SELECT A1 FROM C1").counter, 11u);
  user.sync_counter(3);
  EXPECT_EQ(user.counter(), 11);
}

TEST(UserTokens, StateFileRoundTrip) {
  Deployment d(1);
  auto [c1, c2] = testing::join_corpus(5, 1);
  d.add(c1, {1});
  auto user = d.user(1);
  user.make_token("SELECT A1 FROM C1");
  auto back = client::UserContext::load(user.save());
  EXPECT_EQ(back.counter(), 0);
  EXPECT_EQ(back.share().serialize(), user.share().serialize());
  EXPECT_EQ(back.catalog().to_json(), user.catalog().to_json());
  EXPECT_EQ(back.make_token("SELECT A1 FROM C1").counter, 1u);
}

TEST(OwnerSetup, RejectsZeroUsers) {
  EXPECT_THROW(client::OwnerContext::setup(128, 0), Error);
}

TEST(OwnerSetup, UidIsHashOfShareAndUsersStartEmpty) {
  Deployment d(4);
  EXPECT_EQ(d.owner.shares().size(), 4u);
  for (std::uint32_t i = 1; i <= 4; ++i) EXPECT_EQ(d.owner.uid(i), d.owner.shares().user(i).uid());
  d.owner.add_user(d.owner_core(), 3);
  ASSERT_NE(d.owner.policy().find(d.owner.uid(3)), nullptr);
  EXPECT_TRUE(d.owner.policy().find(d.owner.uid(3))->empty());
}

TEST(OwnerUpload, DocumentIdsAndErrors) {
  Deployment d(2);
  auto [c1, c2] = testing::join_corpus(3, 2);
  auto meta = d.add(c1, {1, 2});
  // Collection creation granted both users through policy updates.
  for (std::uint32_t u : {1u, 2u}) EXPECT_TRUE(d.owner.policy().find(d.owner.uid(u))->contains(meta.cid));
  auto e = d.owner.encrypt_document(meta.cid, c1.docs[0]);
  EXPECT_EQ(e.did, hash(e.ct));
  EXPECT_EQ(code_of([&] { d.owner.encrypt_document(hash("nope"), c1.docs[0]); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { d.owner.encrypt_document(meta.cid, c2.docs[0]); }), ErrorCode::kSchema);
  // Same plaintext twice gives fresh ciphertexts.
  EXPECT_NE(d.owner.encrypt_document(meta.cid, c1.docs[0]).did, e.did);
}

TEST(OwnerState, SaveLoadKeepsChannelAndSequence) {
  Deployment d(2);
  auto [c1, c2] = testing::join_corpus(3, 2);
  auto meta = d.add(c1, {1});
  auto back = client::OwnerContext::load(d.owner.save());
  EXPECT_EQ(back.policy(), d.owner.policy());
  EXPECT_EQ(back.shares().sk, d.owner.shares().sk);
  ASSERT_NE(back.collection("C1"), nullptr);
  EXPECT_EQ(back.collection("C1")->cid, meta.cid);
  // The reloaded owner continues the sequence on the same channel.
  auto ack = back.add_user(d.owner_core(), 2, {meta.cid});
  EXPECT_EQ(ack.policy_digest, back.policy().digest());
  EXPECT_FALSE(ack.replayed);
}

TEST(OwnerChannelTest, MeasurementMismatchIsAttestationFailure) {
  core::TrustedCore core;
  auto keys = client::init_core(core.transport());
  auto owner = client::OwnerContext::setup(128, 1);
  EXPECT_EQ(code_of([&] { owner.provision(core.transport(), keys, proto::measurement("core-modified")); }),
            ErrorCode::kAttestation);
  EXPECT_FALSE(owner.provisioned());

  core::Options modified{proto::measurement("tampered-build")};
  core::TrustedCore evil(modified);
  auto evil_keys = client::init_core(evil.transport());
  EXPECT_EQ(code_of([&] { owner.provision(evil.transport(), evil_keys); }), ErrorCode::kAttestation);
}

TEST(OwnerChannelTest, TwoChannelsHaveIndependentKeys) {
  core::TrustedCore core;
  auto keys = client::init_core(core.transport());
  auto a = client::OwnerChannel::establish(core.transport(), keys, keys.measurement);
  auto b = client::OwnerChannel::establish(core.transport(), keys, keys.measurement);
  EXPECT_NE(a.channel_id, b.channel_id);
  EXPECT_FALSE(a.key == b.key);
}

TEST(OwnerChannelTest, QuoteForAnotherKeyIsRejected) {
  core::TrustedCore core;
  auto keys = client::init_core(core.transport());
  auto other = crypto::SigningKeyPair::generate();
  client::CoreKeys wrong = keys;
  wrong.sig_pub = other.public_key;
  EXPECT_EQ(code_of([&] { client::OwnerChannel::establish(core.transport(), wrong, keys.measurement); }),
            ErrorCode::kAttestation);
}

}  // namespace
}  // namespace qshield
