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

#include <filesystem>
#include <fstream>

#include "qshield/error.hpp"
#include "qshield/host.hpp"
#include "support/deploy.hpp"
#include "support/oracle.hpp"

namespace qshield {
namespace {

namespace fs = std::filesystem;
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

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qshield-host-" + random_hex());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static std::string random_hex() { return to_hex(random_bytes(6)); }
};

Bytes blob(std::string_view s) { return to_bytes(s); }

TEST(Store, VerifiesDidAndIsIdempotent) {
  host::EncryptedStore store;
  Digest cid = hash("c");
  store.create({"C", cid, {"a"}});
  store.create({"C", cid, {"a"}});
  EXPECT_EQ(code_of([&] { store.create({"C", hash("other"), {"a"}}); }), ErrorCode::kArgument);
  EXPECT_EQ(code_of([&] { store.create({"D", cid, {"a"}}); }), ErrorCode::kArgument);

  Bytes ct = blob("ciphertext-1");
  EXPECT_TRUE(store.store(cid, hash(ct), ct));
  EXPECT_FALSE(store.store(cid, hash(ct), ct));
  EXPECT_EQ(store.documents(cid).size(), 1u);
  EXPECT_EQ(code_of([&] { store.store(cid, hash("something else"), ct); }), ErrorCode::kIntegrity);
  EXPECT_EQ(code_of([&] { store.store(hash("missing"), hash(ct), ct); }), ErrorCode::kNotFound);

  // A batch with one bad entry stores nothing.
  Bytes ok = blob("ciphertext-2");
  EXPECT_EQ(code_of([&] { store.store_batch(cid, {{hash(ok), ok}, {hash("x"), blob("y")}}); }), ErrorCode::kIntegrity);
  EXPECT_EQ(store.documents(cid).size(), 1u);
}

TEST(Store, DiskLayoutFollowsChunkingAndReloads) {
  TempDir dir;
  Digest cid = hash("c");
  {
    host::EncryptedStore store(dir.path, 3);
    store.create({"C", cid, {"a", "b"}});
    for (int i = 0; i < 7; ++i) {
      Bytes ct = blob("doc-" + std::to_string(i));
      store.store(cid, hash(ct), ct);
    }
  }
  fs::path cdir = dir.path / cid.hex();
  ASSERT_TRUE(fs::exists(cdir / "manifest.json"));
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(cdir)) files += e.path().extension() == ".bin";
  EXPECT_EQ(files, data::chunk_sizes(7, 3).size());

  host::EncryptedStore reopened(dir.path, 3);
  auto docs = reopened.documents(cid);
  ASSERT_EQ(docs.size(), 7u);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(to_string(docs[i].ct), "doc-" + std::to_string(i));
  EXPECT_EQ(reopened.find("C")->schema, (data::Schema{"a", "b"}));
  Bytes more = blob("doc-7");
  reopened.store(cid, hash(more), more);
  EXPECT_EQ(host::EncryptedStore(dir.path, 3).documents(cid).size(), 8u);
}

TEST(Store, CorruptedChunkIsDetectedOnLoad) {
  TempDir dir;
  Digest cid = hash("c");
  {
    host::EncryptedStore store(dir.path, 2);
    store.create({"C", cid, {"a"}});
    for (int i = 0; i < 4; ++i) {
      Bytes ct = blob("doc-" + std::to_string(i));
      store.store(cid, hash(ct), ct);
    }
  }
  fs::path chunk = dir.path / cid.hex() / "chunk-00002.bin";
  std::fstream f(chunk, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(-1, std::ios::end);
  f.put('Z');
  f.close();
  EXPECT_EQ(code_of([&] { host::EncryptedStore(dir.path, 2); }), ErrorCode::kIntegrity);
}

// The full service path: owner through the relay, uploads and queries through
// the service API, everything framed.
TEST(Service, JoinSumEndToEndMatchesOracle) {
  TempDir dir;
  core::TrustedCore core;
  host::EncryptedStore store(dir.path);
  host::HostService service(core.transport(), store);
  service.start();
  host::ServiceClient api(service.transport());
  client::CoreKeys keys = api.keys();

  auto owner = client::OwnerContext::setup(128, 2);
  proto::Transport relay = api.owner_relay();
  owner.provision(relay, keys);
  auto [c1, c2] = testing::join_corpus(200, 21);
  for (const auto* c : {&c1, &c2}) {
    auto meta = owner.create_collection(&relay, c->name, c->schema, {1});
    api.create_collection(meta);
    std::vector<client::EncryptedDocument> docs;
    for (const auto& d : c->docs) docs.push_back(owner.encrypt_document(meta.cid, d));
    EXPECT_EQ(api.upload(meta.cid, docs), c->docs.size());
    EXPECT_EQ(api.upload(meta.cid, docs), 0u);
  }

  client::UserContext user(owner.shares().user(1), keys, api.catalog());
  user.sync_counter(api.replay_floor());
  auto req = user.make_token(kJoinSumQuery);
  auto opened = user.open_response(req, api.query(req.q, req.token));
  EXPECT_TRUE(opened.audit.pass) << opened.audit.to_json().dump();
  std::map<std::string, data::Collection> db{{"C1", c1}, {"C2", c2}};
  auto expect = testing::brute_force(query::parse(kJoinSumQuery), db);
  EXPECT_TRUE(data::values_equal(std::get<data::Value>(opened.result), *expect.scalar));
  EXPECT_EQ(api.replay_floor(), 0);

  // Replays surface as the core's replay error.
  EXPECT_EQ(code_of([&] { api.query(req.q, req.token); }), ErrorCode::kReplay);
  auto missing = user.make_token("SELECT A1 FROM C1");
  EXPECT_EQ(code_of([&] { api.query("SELECT A1 FROM C9", missing.token); }), ErrorCode::kNotFound);

  // Nothing on disk is plaintext.
  for (const auto& e : fs::recursive_directory_iterator(dir.path)) {
    if (!e.is_regular_file() || e.path().extension() != ".bin") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(bytes.find("\"A1\":"), std::string::npos);
    EXPECT_EQ(bytes.find("\"A4\":"), std::string::npos);
  }
}

TEST(Service, RelayOnlyForwardsOwnerOpcodes) {
  core::TrustedCore core;
  host::EncryptedStore store;
  host::HostService service(core.transport(), store);
  service.start();
  Bytes inner = proto::Frame::request(proto::Op::kFinalize, {{"s_id", 0}}).encode();
  proto::Frame req{static_cast<std::uint8_t>(host::Verb::kPolicyUpdate), json::object(), {inner}};
  proto::Frame reply = proto::Frame::decode(service.handle(req.encode()));
  EXPECT_EQ(reply.code, static_cast<std::uint8_t>(ErrorCode::kArgument));
  reply = proto::Frame::decode(service.handle(proto::Frame{0x7e, json::object(), {}}.encode()));
  EXPECT_EQ(reply.code, static_cast<std::uint8_t>(ErrorCode::kArgument));
}

struct Adversary : ::testing::Test {
  Deployment d{2};
  data::Collection c1, c2;
  client::UserContext user = client::UserContext({}, {}, {});

  void SetUp() override {
    std::tie(c1, c2) = testing::join_corpus(40, 8);
    d.add(c1, {1});
    d.add(c2, {1});
    user = d.user(1);
  }

  // "error:<code>" or the audit verdict.
  std::string outcome(const json& mutations) {
    auto req = user.make_token(kJoinSumQuery);
    json list = mutations.is_array() ? mutations : json::array({mutations});
    try {
      auto env = d.host.handle_query_adversarial(req.q, req.token, {{"mutations", list}});
      auto opened = user.open_response(req, env);
      return opened.audit.pass ? "PASS" : "FAIL:" + opened.audit.failed();
    } catch (const Error& e) {
      return std::string("error:") + std::string(error_code_name(e.code()));
    }
  }
};

TEST_F(Adversary, EmptyScriptIsTheHonestRun) {
  EXPECT_EQ(outcome(json::array()), "PASS");
  auto req = user.make_token(kJoinSumQuery);
  auto a = d.host.handle_query_adversarial(req.q, req.token, json::object());
  EXPECT_TRUE(user.open_response(req, a).audit.pass);
}

TEST_F(Adversary, SixthOperatorHitsTheBudget) {
  EXPECT_EQ(outcome({{{"op", "duplicate"}, {"index", 4}}}), "error:endurance");
  json extra = {{"op", "insert"}, {"index", 5}, {"f_name", "aggregation"},
                {"f_params", {{"attr", "A4"}, {"fn", "sum"}}}, {"inputs", {5}}};
  EXPECT_EQ(outcome({extra}), "error:endurance");
}

TEST_F(Adversary, DeviationsAreDetected) {
  EXPECT_EQ(outcome({{{"op", "drop"}, {"index", 1}}}), "FAIL:budget");
  EXPECT_EQ(outcome({{{"op", "finalize"}, {"s_id", 4}}}), "FAIL:digest");
  EXPECT_EQ(outcome({{{"op", "reorder"}, {"a", 1}, {"b", 2}}}), "FAIL:structure");
  json pred = {{"lhs", {{"attribute", "A1"}, {"collection", "C1"}}}, {"op", "<="}, {"rhs", {{"literal", 20}}}};
  std::string cid = d.store.find("C1")->cid.hex();
  EXPECT_EQ(outcome({{{"op", "substitute"}, {"index", 0}, {"params", {{"from", cid}, {"predicate", pred}}}}}),
            "FAIL:structure");
  // Selection and projection trade parameters: the core rejects the call.
  std::string swapped = outcome({{{"op", "swap_params"}, {"a", 0}, {"b", 1}}});
  EXPECT_TRUE(swapped.rfind("error:", 0) == 0 || swapped.rfind("FAIL:", 0) == 0) << swapped;
  std::string reused = outcome({{{"op", "raw_inputs"}, {"index", 3}, {"s_ids", {2, 2}}}});
  EXPECT_TRUE(reused.rfind("error:", 0) == 0 || reused.rfind("FAIL:", 0) == 0) << reused;
}

TEST_F(Adversary, FailedRunsDoNotWedgeTheService) {
  EXPECT_EQ(outcome({{{"op", "duplicate"}, {"index", 0}}}).substr(0, 5), "error");
  EXPECT_EQ(outcome(json::array()), "PASS");
}

struct Distributed : ::testing::Test {
  core::WorkerCore e1{"E1", "selection"}, e2{"E2", "projection"}, e3{"E3", "projection"}, e4{"E4", "join"},
      e5{"E5", "aggregation"};

  std::vector<host::WorkerSpec> pool() {
    return {{"E1", "N1", "selection", e1.transport()},
            {"E2", "N2", "projection", e2.transport()},
            {"E3", "N2", "projection", e3.transport()},
            {"E4", "N3", "join", e4.transport()},
            {"E5", "N1", "aggregation", e5.transport()}};
  }
};

TEST_F(Distributed, MatchesStandaloneResultAndTrace) {
  auto [c1, c2] = testing::join_corpus(120, 4);
  Deployment solo(1), dist(1);
  for (auto* d : {&solo, &dist}) {
    d->add(c1, {1});
    d->add(c2, {1});
  }
  dist.host.attach_workers(pool());
  ASSERT_TRUE(dist.host.distributed());

  auto u1 = solo.user(1);
  auto r1 = u1.make_token(kJoinSumQuery);
  auto o1 = u1.open_response(r1, solo.host.handle_query(r1.q, r1.token));
  auto u2 = dist.user(1);
  auto r2 = u2.make_token(kJoinSumQuery);
  auto env2 = dist.host.handle_query(r2.q, r2.token);
  auto o2 = u2.open_response(r2, env2);
  EXPECT_TRUE(o1.audit.pass);
  EXPECT_TRUE(o2.audit.pass) << o2.audit.to_json().dump();
  EXPECT_EQ(ops::payload_to_json(o1.result), ops::payload_to_json(o2.result));

  auto placement = dist.host.last_placement();
  ASSERT_EQ(placement.size(), 5u);
  std::vector<std::string> workers;
  for (const auto& p : placement) workers.push_back(p.worker_id + "@" + p.node_id);
  EXPECT_EQ(workers, (std::vector<std::string>{"E1@N1", "E2@N2", "E3@N2", "E4@N3", "E5@N1"}));

  // Same state chain except for worker-independent unlock metadata; the
  // collection ids differ between the two deployments, so compare shape.
  auto t1 = proto::decode_trace(solo.host.handle_query(r1.q, u1.make_token(kJoinSumQuery).token).tp);
  auto t2 = proto::decode_trace(env2.tp);
  ASSERT_EQ(t1.size(), t2.size());
  for (std::size_t i = 1; i < t1.size(); ++i) {
    EXPECT_EQ(t1[i].f_name, t2[i].f_name);
    EXPECT_EQ(t1[i].p_states, t2[i].p_states);
    EXPECT_EQ(t1[i].w, t2[i].w);
  }
  EXPECT_EQ(t1.back().s_db_digest, t2.back().s_db_digest);
}

TEST_F(Distributed, UnattestedWorkerAbortsSetup) {
  Deployment d(1);
  auto [c1, c2] = testing::join_corpus(10, 4);
  d.add(c1, {1});
  core::WorkerCore rogue("E6", "projection", core::Options{proto::measurement("patched-worker")});
  auto workers = pool();
  workers.push_back({"E6", "N4", "projection", rogue.transport()});
  EXPECT_EQ(code_of([&] { d.host.attach_workers(workers); }), ErrorCode::kAttestation);
  EXPECT_FALSE(d.host.distributed());
  EXPECT_EQ(code_of([&] { d.host.set_distributed(true); }), ErrorCode::kState);

  // A worker built for a different operator does not pass either.
  core::WorkerCore wrong("E7", "join");
  EXPECT_EQ(code_of([&] { d.host.attach_workers({{"E7", "N1", "selection", wrong.transport()}}); }),
            ErrorCode::kAttestation);
  // Standalone still works.
  auto user = d.user(1);
  auto req = user.make_token("SELECT A1 FROM C1");
  EXPECT_TRUE(user.open_response(req, d.host.handle_query(req.q, req.token)).audit.pass);
}

TEST_F(Distributed, TamperedWorkerResultAbortsSession) {
  Deployment d(1);
  auto [c1, c2] = testing::join_corpus(10, 4);
  d.add(c1, {1});
  d.add(c2, {1});
  // A man in the middle flips one bit of every job result.
  proto::Transport flaky = [&](ByteView req) {
    Bytes out = e2.call(req);
    proto::Frame f = proto::Frame::decode(out);
    if (req[4] == static_cast<std::uint8_t>(proto::Op::kRunJob) && !f.is_error()) {
      f.blobs[0][f.blobs[0].size() - 1] ^= 1;
      return f.encode();
    }
    return out;
  };
  auto workers = pool();
  workers[1].transport = flaky;
  workers.erase(workers.begin() + 2);
  d.host.attach_workers(workers);
  auto user = d.user(1);
  auto req = user.make_token(kJoinSumQuery);
  EXPECT_EQ(code_of([&] { d.host.handle_query(req.q, req.token); }), ErrorCode::kChannel);
  // The session is gone; a new query on standalone mode runs.
  d.host.set_distributed(false);
  auto next = user.make_token(kJoinSumQuery);
  EXPECT_TRUE(user.open_response(next, d.host.handle_query(next.q, next.token)).audit.pass);
}

}  // namespace
}  // namespace qshield
