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

// Acceptance run: one PASS/FAIL line per criterion. Bounds are pinned below;
// the process exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "qshield/bytes.hpp"
#include "qshield/crypto.hpp"
#include "qshield/document.hpp"
#include "qshield/error.hpp"
#include "qshield/sharing.hpp"
#include "support/deploy.hpp"
#include "support/oracle.hpp"

namespace qshield::acceptance {
namespace {

namespace fs = std::filesystem;
using data::Collection;
using data::Document;
using data::Value;
using nlohmann::json;
using testing::Deployment;

// Pinned bounds.
constexpr double kCryptoSeconds = 60;
constexpr double kJoinSumSeconds = 10;
constexpr double kOperatorSeconds = 30;
constexpr int kMutationRuns = 600;  // at least 500
constexpr double kLinearOpMs = 500;
constexpr double kJoinGrowthMin = 6;       // t_join(1000) / t_join(250); quadratic is 16
constexpr double kJoinOverProjection = 2;  // join growth vs projection growth
constexpr double kDecryptRatioMax = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

// "error:<code>" or "PASS" / "FAIL:<check>".
std::string run_outcome(Deployment& d, client::UserContext& user, const std::string& q, const json& mutations,
                        std::vector<client::QueryRequest>* consumed) {
  auto req = user.make_token(q);
  if (consumed != nullptr) consumed->push_back(req);
  try {
    auto env = d.host.handle_query_adversarial(req.q, req.token, {{"mutations", mutations}});
    auto opened = user.open_response(req, env);
    return opened.audit.pass ? "PASS" : "FAIL:" + opened.audit.failed();
  } catch (const Error& e) {
    return "error:" + std::string(error_code_name(e.code()));
  }
}

// ---- 1 --------------------------------------------------------------------

Verdict crypto_correctness() {
  auto start = Clock::now();
  const std::vector<std::size_t> sizes = {1, 2, 16, 64};
  std::map<std::size_t, std::vector<sharing::ShareSet>> by_n;
  std::size_t setups = 0, shares = 0, wrong = 0, false_decrypts = 0, cross = 0;
  for (int i = 0; i < 200; ++i) {
    std::size_t n = sizes[i % sizes.size()];
    sharing::ShareSet s = sharing::setup(128, n);
    ++setups;
    for (const auto& u : s.users) {
      ++shares;
      if (!(sharing::reconstruct_key(s.enclave, u) == s.sk)) ++wrong;
    }
    by_n[n].push_back(std::move(s));
  }
  const Bytes msg = random_bytes(64);
  for (auto& [n, group] : by_n) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto& mine = group[i];
      const auto& other = group[(i + 1) % group.size()];
      crypto::Ciphertext ct = sharing::encrypt(mine.sk, msg);
      for (const auto& u : other.users) {
        ++cross;
        try {
          crypto::aead_decrypt(sharing::reconstruct_key(mine.enclave, u), ct);
          ++false_decrypts;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kIntegrity) ++false_decrypts;
        }
      }
    }
  }
  double secs = seconds_since(start);
  return {wrong == 0 && false_decrypts == 0 && secs < kCryptoSeconds,
          std::to_string(setups) + " setups, " + std::to_string(shares) + " shares, " + std::to_string(wrong) +
              " reconstruct mismatches; " + std::to_string(cross) + " cross-setup attempts, " +
              std::to_string(false_decrypts) + " false decrypts; " + fmt(secs) + " s (bound " +
              fmt(kCryptoSeconds, 0) + " s)"};
}

// ---- 2 --------------------------------------------------------------------

Verdict join_sum_end_to_end() {
  auto [c1, c2] = testing::join_corpus(1000, 2024);
  auto start = Clock::now();
  core::TrustedCore core;
  host::EncryptedStore store;
  host::HostService service(core.transport(), store);
  service.start();
  host::ServiceClient api(service.transport());
  client::CoreKeys keys = api.keys();
  auto owner = client::OwnerContext::setup(128, 1);
  proto::Transport relay = api.owner_relay();
  owner.provision(relay, keys);
  for (const auto* c : {&c1, &c2}) {
    auto meta = owner.create_collection(&relay, c->name, c->schema, {1});
    api.create_collection(meta);
    std::vector<client::EncryptedDocument> docs;
    for (const auto& doc : c->docs) docs.push_back(owner.encrypt_document(meta.cid, doc));
    api.upload(meta.cid, docs);
  }
  client::UserContext user(owner.shares().user(1), keys, api.catalog());
  user.sync_counter(api.replay_floor());
  auto req = user.make_token(testing::kJoinSumQuery);
  auto opened = user.open_response(req, api.query(req.q, req.token));
  double secs = seconds_since(start);

  std::map<std::string, Collection> db{{"C1", c1}, {"C2", c2}};
  auto expect = testing::brute_force(query::parse(testing::kJoinSumQuery), db);
  const auto* got = std::get_if<Value>(&opened.result);
  bool exact = got != nullptr && expect.scalar && std::holds_alternative<std::int64_t>(*got) && *got == *expect.scalar;
  std::string got_text = got != nullptr ? data::value_to_json(*got).dump() : "non-scalar";
  return {exact && opened.audit.pass && secs < kJoinSumSeconds,
          "SUM = " + got_text + ", oracle " + data::value_to_json(*expect.scalar).dump() + ", audit " +
              (opened.audit.pass ? "PASS" : "FAIL:" + opened.audit.failed()) + "; " + fmt(secs) + " s (bound " +
              fmt(kJoinSumSeconds, 0) + " s)"};
}

// ---- 3 --------------------------------------------------------------------

struct RandomCase {
  Collection c1, c2;
  std::string attr;  // predicate attribute of C1
  data::CompareOp op;
  std::int64_t literal;
};

RandomCase random_case(std::mt19937& rng) {
  std::uniform_int_distribution<int> len(0, 50), keys(1, 12), op(0, 5);
  int range = keys(rng);
  std::uniform_int_distribution<int> key(0, range - 1), small(0, 20), big(-1000, 1000);
  std::vector<Document> d1, d2;
  for (int i = len(rng); i > 0; --i) {
    d1.push_back({{"A1", std::int64_t{small(rng)}}, {"A3", std::int64_t{key(rng)}}, {"A5", std::int64_t{big(rng)}}});
  }
  for (int i = len(rng); i > 0; --i) {
    d2.push_back({{"A2", std::int64_t{big(rng)}}, {"A3", std::int64_t{key(rng)}}, {"A4", std::int64_t{big(rng)}}});
  }
  RandomCase rc{Collection::make(hash("C1"), "C1", d1, data::Schema{"A1", "A3", "A5"}),
                Collection::make(hash("C2"), "C2", d2, data::Schema{"A2", "A3", "A4"}),
                "",
                static_cast<data::CompareOp>(op(rng)),
                0};
  const char* attrs[] = {"A1", "A3", "A5"};
  rc.attr = attrs[std::uniform_int_distribution<int>(0, 2)(rng)];
  if (rc.attr == "A1") rc.literal = small(rng);
  if (rc.attr == "A3") rc.literal = key(rng);
  if (rc.attr == "A5") rc.literal = big(rng) / 2;
  return rc;
}

// Direct definitions of the four operators, checked against the library's.
bool direct_definitions_hold(const RandomCase& rc, std::string* why) {
  data::Predicate where{{"", rc.attr}, rc.op, Value{rc.literal}};
  auto holds = [&](const Document& d) {
    std::int64_t v = std::get<std::int64_t>(d.at(rc.attr));
    switch (rc.op) {
      case data::CompareOp::kEq: return v == rc.literal;
      case data::CompareOp::kNe: return v != rc.literal;
      case data::CompareOp::kLt: return v < rc.literal;
      case data::CompareOp::kLe: return v <= rc.literal;
      case data::CompareOp::kGt: return v > rc.literal;
      case data::CompareOp::kGe: return v >= rc.literal;
    }
    return false;
  };
  std::vector<Document> selected;
  for (const auto& d : rc.c1.docs) {
    if (holds(d)) selected.push_back(d);
  }
  if (data::select(rc.c1, where).docs != selected) return *why = "select", false;

  std::vector<Document> projected;
  for (const auto& d : rc.c1.docs) projected.push_back({{"A1", d.at("A1")}, {"A5", d.at("A5")}});
  if (data::project(rc.c1, {"A5", "A1"}).docs != projected) return *why = "project", false;

  std::vector<Document> joined;
  for (const auto& l : rc.c1.docs) {
    for (const auto& r : rc.c2.docs) {
      if (l.at("A3") != r.at("A3")) continue;
      joined.push_back(
          {{"A1", l.at("A1")}, {"A3", l.at("A3")}, {"A5", l.at("A5")}, {"A2", r.at("A2")}, {"A4", r.at("A4")}});
    }
  }
  data::Predicate on{{"C1", "A3"}, data::CompareOp::kEq, data::AttributeRef{"C2", "A3"}};
  if (data::join(rc.c1, rc.c2, on).docs != joined) return *why = "join", false;

  std::int64_t sum = 0, mn = 0, mx = 0;
  for (std::size_t i = 0; i < rc.c2.docs.size(); ++i) {
    std::int64_t v = std::get<std::int64_t>(rc.c2.docs[i].at("A4"));
    sum += v;
    mn = i == 0 ? v : std::min(mn, v);
    mx = i == 0 ? v : std::max(mx, v);
  }
  auto n = static_cast<std::int64_t>(rc.c2.docs.size());
  if (data::aggregate(rc.c2, data::AggregateFn::kCount, "A4") != Value{n}) return *why = "count", false;
  if (n > 0) {
    if (data::aggregate(rc.c2, data::AggregateFn::kSum, "A4") != Value{sum}) return *why = "sum", false;
    if (data::aggregate(rc.c2, data::AggregateFn::kMin, "A4") != Value{mn}) return *why = "min", false;
    if (data::aggregate(rc.c2, data::AggregateFn::kMax, "A4") != Value{mx}) return *why = "max", false;
    Value avg = data::aggregate(rc.c2, data::AggregateFn::kAvg, "A4");
    if (!data::values_equal(avg, Value{static_cast<double>(sum) / static_cast<double>(n)})) {
      return *why = "avg", false;
    }
  }
  return true;
}

// The same case as three queries through the core, against the brute-force
// interpreter.
bool queries_match_oracle(const RandomCase& rc, std::mt19937& rng, std::string* why) {
  Deployment d(1);
  d.add(rc.c1, {1});
  d.add(rc.c2, {1});
  auto user = d.user(1);
  std::map<std::string, Collection> db{{"C1", rc.c1}, {"C2", rc.c2}};
  std::string pred = std::string(op_symbol(rc.op)) + " " + std::to_string(rc.literal);
  const char* fns[] = {"SUM", "AVG", "COUNT", "MIN", "MAX"};
  const char* agg_attrs[] = {"A1", "A3", "A5"};
  std::vector<std::string> queries = {
      "SELECT C1.A1, C1.A5, C2.A4 FROM C1 JOIN C2 ON C1.A3 = C2.A3 WHERE C1." + rc.attr + " " + pred,
      "SELECT A3, A5 FROM C1 WHERE " + rc.attr + " " + pred,
      std::string("SELECT ") + fns[std::uniform_int_distribution<int>(0, 4)(rng)] + "(" +
          agg_attrs[std::uniform_int_distribution<int>(0, 2)(rng)] + ") FROM C1 WHERE " + rc.attr + " " + pred,
  };
  for (const auto& q : queries) {
    auto ast = query::parse(q);
    auto expect = testing::brute_force(ast, db);
    auto req = user.make_token(q);
    try {
      auto opened = user.open_response(req, d.host.handle_query(req.q, req.token));
      if (!opened.audit.pass) return *why = q + ": audit " + opened.audit.failed(), false;
      if (expect.empty_aggregate) return *why = q + ": expected an empty-aggregate error", false;
      if (expect.scalar) {
        const auto* v = std::get_if<Value>(&opened.result);
        if (v == nullptr || !data::values_equal(*v, *expect.scalar)) return *why = q + ": scalar differs", false;
      } else {
        const auto* c = std::get_if<Collection>(&opened.result);
        auto plan = query::plan(ast, d.store.catalog());
        if (c == nullptr || testing::rows_of(plan, *c) != expect.rows) return *why = q + ": rows differ", false;
      }
    } catch (const Error& e) {
      if (!(expect.empty_aggregate && e.code() == ErrorCode::kEmptyAggregate)) {
        return *why = q + ": " + e.what(), false;
      }
      user.sync_counter(req.counter);
    }
  }
  return true;
}

Verdict operator_oracles() {
  auto start = Clock::now();
  std::mt19937 rng(303);
  int failures = 0;
  std::string first;
  for (int trial = 0; trial < 100; ++trial) {
    RandomCase rc = random_case(rng);
    std::string why;
    if (!direct_definitions_hold(rc, &why) || !queries_match_oracle(rc, rng, &why)) {
      if (failures++ == 0) first = "trial " + std::to_string(trial) + ": " + why;
    }
  }
  double secs = seconds_since(start);
  std::string detail = "100 random cases, 4 direct operator checks + 3 queries each, " + std::to_string(failures) +
                       " mismatches; " + fmt(secs) + " s (bound " + fmt(kOperatorSeconds, 0) + " s)";
  if (!first.empty()) detail += "; first: " + first;
  return {failures == 0 && secs < kOperatorSeconds, detail};
}

// ---- 4 --------------------------------------------------------------------

// Parameters that differ from p yet stay well formed for the same operator.
json perturb(const json& p, const query::QueryPlan& plan, const query::PlanNode& node, const query::Catalog& cat,
             std::mt19937& rng) {
  json out = p;
  if (p.contains("predicate")) {
    json& pr = out["predicate"];
    if (pr.at("rhs").contains("literal")) {
      pr["rhs"]["literal"] = pr["rhs"]["literal"].get<std::int64_t>() + std::uniform_int_distribution<int>(1, 7)(rng);
    } else {
      std::swap(pr["lhs"], pr["rhs"]);
    }
    return out;
  }
  if (p.contains("fn")) {
    std::vector<std::string> fns = {"sum", "avg", "count", "min", "max"};
    fns.erase(std::find(fns.begin(), fns.end(), p.at("fn").get<std::string>()));
    out["fn"] = fns[std::uniform_int_distribution<std::size_t>(0, fns.size() - 1)(rng)];
    return out;
  }
  auto attrs = p.at("attrs").get<std::vector<std::string>>();
  if (attrs.size() > 1) {
    attrs.erase(attrs.begin() + std::uniform_int_distribution<std::ptrdiff_t>(0, attrs.size() - 1)(rng));
  } else {
    const query::PlanNode* n = &node;
    while (!n->is_source()) n = &plan.node(n->inputs.at(0));
    const auto* info = cat.find(n->params.at("collection").get<std::string>());
    std::vector<std::string> others;
    for (const auto& a : info->schema) {
      if (a != attrs[0]) others.push_back(a);
    }
    attrs = {others[std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng)]};
  }
  out["attrs"] = attrs;
  return out;
}

Verdict threat_model() {
  Deployment d(1);
  auto [c1, c2] = testing::join_corpus(40, 77, 8);
  auto m1 = d.add(c1, {1});
  d.add(c2, {1});
  auto user = d.user(1);
  const query::Catalog cat = d.store.catalog();
  const std::vector<std::string> shapes = {
      testing::kJoinSumQuery,
      "SELECT A1, A5 FROM C1 WHERE A3 > 2",
      "SELECT MAX(A5) FROM C1 WHERE A1 >= 5",
      "SELECT C1.A1, C2.A4 FROM C1 JOIN C2 ON C1.A3 = C2.A3",
  };
  std::mt19937 rng(4242);
  std::vector<client::QueryRequest> consumed;
  std::map<std::string, int> outcomes;
  std::map<std::string, int> kinds;
  int undetected = 0, invalid = 0;
  std::string first_bad;
  // Codes the host raises about the script itself; a run ending there never
  // reached the core and says nothing about detection.
  const std::set<std::string> harness_errors = {"error:argument", "error:format", "error:not-found", "error:channel"};

  for (int run = 0; run < kMutationRuns; ++run) {
    const std::string& q = shapes[static_cast<std::size_t>(run) % shapes.size()];
    auto plan = query::plan(query::parse(q), cat);
    std::vector<int> order = plan.schedule();
    std::size_t size = order.size();
    json script = json::array();
    int count = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 2 : 1;
    std::set<std::string> used;
    std::string label;
    while (static_cast<int>(script.size()) < count) {
      std::vector<std::string> choices = {"substitute", "insert", "drop"};
      if (size >= 2) choices.push_back("reorder");
      std::string kind = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
      if (used.count(kind) != 0 || size == 0) continue;
      auto pick = [&] { return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng); };
      json m;
      if (kind == "reorder") {
        std::size_t a = pick(), b = pick();
        while (b == a) b = pick();
        m = {{"op", "reorder"}, {"a", a}, {"b", b}};
      } else if (kind == "substitute") {
        if (!order.empty() && script.empty()) {
          std::size_t i = pick();
          const auto& node = plan.node(order[i]);
          m = {{"op", "substitute"}, {"index", i}, {"params", perturb(node.params, plan, node, cat, rng)}};
        } else {
          continue;  // indices no longer line up with plan nodes
        }
      } else if (kind == "insert") {
        json params = {{"attrs", {"A3"}}, {"from", m1.cid.hex()}};
        m = {{"op", "insert"}, {"index", std::uniform_int_distribution<std::size_t>(0, size)(rng)},
             {"f_name", "projection"}, {"f_params", params}};
        ++size;
      } else {
        std::size_t i = pick();
        // Dropping the op inserted just before would restore the honest run.
        if (used.count("insert") != 0 && script.back().at("index").get<std::size_t>() == i) continue;
        m = {{"op", "drop"}, {"index", i}};
        --size;
      }
      used.insert(kind);
      label += (label.empty() ? "" : "+") + kind;
      script.push_back(std::move(m));
    }
    ++kinds[label];
    std::string out = run_outcome(d, user, q, script, &consumed);
    ++outcomes[out];
    if (out == "PASS" || harness_errors.count(out) != 0) {
      (out == "PASS" ? undetected : invalid)++;
      if (first_bad.empty()) first_bad = out + " for " + script.dump() + " on " + q;
    }
  }

  // Honest runs, then every token the core has seen goes back in.
  int honest_pass = 0;
  for (const auto& q : shapes) {
    honest_pass += run_outcome(d, user, q, json::array(), &consumed) == "PASS";
  }
  std::size_t replays = 0, replay_rejected = 0;
  for (const auto& req : consumed) {
    ++replays;
    try {
      d.host.handle_query(req.q, req.token);
    } catch (const Error& e) {
      replay_rejected += e.code() == ErrorCode::kReplay;
    }
  }

  std::string hist;
  for (const auto& [k, v] : outcomes) hist += (hist.empty() ? "" : ", ") + k + " x" + std::to_string(v);
  std::string detail = std::to_string(kMutationRuns) + " scripts (" + std::to_string(kinds.size()) +
                       " kinds), " + std::to_string(undetected) + " undetected, " + std::to_string(invalid) +
                       " harness errors [" + hist + "]; honest " + std::to_string(honest_pass) + "/" +
                       std::to_string(shapes.size()) + " PASS; replay rejected " + std::to_string(replay_rejected) +
                       "/" + std::to_string(replays);
  if (!first_bad.empty()) detail += "; first: " + first_bad;
  bool ok = undetected == 0 && invalid == 0 && honest_pass == static_cast<int>(shapes.size()) &&
            replay_rejected == replays;
  return {ok, detail};
}

// ---- 5 --------------------------------------------------------------------

Verdict performance() {
  std::string detail;
  bool ok = true;

  auto big = bench::operators({10000}, 3, 5, {"projection", "selection", "aggregation"});
  for (const auto& r : big) {
    ok = ok && r.median_ms <= kLinearOpMs;
    detail += r.op + "(10k) " + fmt(r.median_ms) + " ms, ";
  }
  detail += "bound " + fmt(kLinearOpMs, 0) + " ms; ";

  auto growth = bench::operators({250, 1000}, 3, 6, {"projection", "join"});
  std::map<std::string, std::map<std::size_t, double>> t;
  for (const auto& r : growth) t[r.op][r.n] = r.median_ms;
  double join_growth = t["join"][1000] / t["join"][250];
  double proj_growth = t["projection"][1000] / t["projection"][250];
  ok = ok && join_growth >= kJoinGrowthMin && join_growth >= kJoinOverProjection * proj_growth;
  detail += "join 1000x1000 " + fmt(t["join"][1000]) + " ms, growth x" + fmt(join_growth) + " vs projection x" +
            fmt(proj_growth) + " (need >= " + fmt(kJoinGrowthMin, 0) + " and >= " + fmt(kJoinOverProjection, 0) +
            "x); ";

  auto dec = bench::decrypt({1, 100 * 1024}, 9);
  double ratio = dec[1].median_ms / dec[0].median_ms;
  ok = ok && ratio < kDecryptRatioMax;
  detail += "decrypt 1 B " + fmt(dec[0].median_ms) + " ms vs 100 KB " + fmt(dec[1].median_ms) + " ms, ratio " +
            fmt(ratio) + " (< " + fmt(kDecryptRatioMax, 0) + ")";
  return {ok, detail};
}

// ---- 6 --------------------------------------------------------------------

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

Verdict chunking() {
  int cases = 0, failures = 0;
  std::string first;
  fs::path root = fs::temp_directory_path() / ("qshield-accept-" + to_hex(random_bytes(6)));
  for (std::size_t r : {0u, 1u, 6u, 7u, 1000u}) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < r; ++i) docs.push_back({{"n", static_cast<std::int64_t>(i)}});
    Collection c = Collection::make(hash("chunk"), "chunk", docs, data::Schema{"n"});
    for (std::size_t s : {1u, 3u, 128u}) {
      ++cases;
      std::vector<std::size_t> expect;
      std::size_t files = (r + s - 1) / s;
      for (std::size_t f = 0; f < files; ++f) expect.push_back(f + 1 < files ? s : r - s * (files - 1));

      auto parts = data::chunk(c, s);
      std::vector<Document> joined;
      std::vector<std::size_t> got;
      bool indices = true;
      for (std::size_t f = 0; f < parts.size(); ++f) {
        indices = indices && parts[f].file_index == f + 1;
        got.push_back(parts[f].docs.size());
        joined.insert(joined.end(), parts[f].docs.begin(), parts[f].docs.end());
      }

      // The stored form: one numbered file per chunk, each counting its documents.
      fs::path dir = root / (std::to_string(r) + "-" + std::to_string(s));
      std::vector<std::size_t> on_disk;
      {
        host::EncryptedStore store(dir, s);
        Digest cid = hash("chunk-" + std::to_string(r) + "-" + std::to_string(s));
        store.create({"chunk", cid, {"n"}});
        std::vector<host::StoredDoc> stored;
        for (const auto& d : docs) {
          Bytes ct = to_bytes(d.to_json().dump() + "#" + to_hex(random_bytes(4)));
          stored.push_back({hash(ct), ct});
        }
        store.store_batch(cid, std::move(stored));
        fs::path cdir = dir / cid.hex();
        for (std::size_t f = 1;; ++f) {
          char name[32];
          std::snprintf(name, sizeof name, "chunk-%05zu.bin", f);
          std::ifstream in(cdir / name, std::ios::binary);
          if (!in) break;
          in.ignore(5);
          on_disk.push_back(read_u32(in));
        }
      }

      bool ok = indices && joined == docs && got == expect && data::chunk_sizes(r, s) == expect && on_disk == expect;
      if (!ok && failures++ == 0) first = "r=" + std::to_string(r) + " s=" + std::to_string(s);
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(cases) + " (r, s) pairs; identity, in-memory sizes and on-disk file counts " +
                       (failures == 0 ? "all match ceil(r/s) with a remainder file"
                                      : std::to_string(failures) + " mismatches, first " + first);
  return {failures == 0, detail};
}

// ---- 7 --------------------------------------------------------------------

Verdict policy_lifecycle() {
  Deployment d(3);
  std::vector<Collection> cs;
  std::map<Digest, std::string> names;
  for (int i = 1; i <= 3; ++i) {
    std::vector<Document> docs;
    for (int k = 0; k < 3 + i; ++k) docs.push_back({{"A1", std::int64_t{k}}});
    Collection c = Collection::make(hash("C" + std::to_string(i)), "C" + std::to_string(i), docs,
                                    data::Schema{"A1"});
    auto meta = d.add(c, {1});
    names[meta.cid] = c.name;
    cs.push_back(c);
  }
  auto cid_of = [&](const std::string& n) { return d.store.find(n)->cid; };

  // Observed authorized set: COUNT over each collection is its size when
  // authorized and 0 otherwise; nullopt when the core refuses the user.
  host::ServiceClient api(d.host.transport());
  std::map<std::uint32_t, client::UserContext> users;
  for (std::uint32_t u = 1; u <= 3; ++u) users.emplace(u, d.user(u));
  auto observe = [&](std::uint32_t u) -> std::optional<std::set<std::string>> {
    std::set<std::string> seen;
    for (const auto& c : cs) {
      auto& user = users.at(u);
      user.sync_counter(api.replay_floor());
      auto req = user.make_token("SELECT COUNT(A1) FROM " + c.name);
      try {
        auto opened = user.open_response(req, d.host.handle_query(req.q, req.token));
        auto n = std::get<std::int64_t>(std::get<Value>(opened.result));
        if (!opened.audit.pass) return std::set<std::string>{"<audit failed>"};
        if (n == static_cast<std::int64_t>(c.docs.size())) seen.insert(c.name);
        else if (n != 0) seen.insert("<partial " + c.name + ">");
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kAuthorization) return std::nullopt;
        throw;
      }
    }
    return seen;
  };
  auto expected = [&](std::uint32_t u) -> std::optional<std::set<std::string>> {
    const auto* set = d.owner.policy().find(d.owner.uid(u));
    if (set == nullptr) return std::nullopt;
    std::set<std::string> out;
    for (const auto& cid : *set) out.insert(names.at(cid));
    return out;
  };

  // Records the last policy frame so it can be resent verbatim.
  Bytes last_update, last_reply;
  proto::Transport core = d.owner_core();
  proto::Transport recording = [&](ByteView req) {
    Bytes reply = core(req);
    if (req.size() > 4 && req[4] == static_cast<std::uint8_t>(proto::Op::kUpdatePolicy)) {
      last_update.assign(req.begin(), req.end());
      last_reply = reply;
    }
    return reply;
  };

  struct Step {
    std::string name;
    std::function<client::PolicyAck()> apply;
  };
  std::vector<Step> steps = {
      {"add u2 {C1}", [&] { return d.owner.add_user(recording, 2, {cid_of("C1")}); }},
      {"modify u2 {C2,C3}", [&] { return d.owner.modify_user(recording, 2, {cid_of("C2"), cid_of("C3")}); }},
      {"grant u2 C1", [&] { return d.owner.grant(recording, 2, cid_of("C1")); }},
      {"add u3 {}", [&] { return d.owner.add_user(recording, 3, {}); }},
      {"remove u2", [&] { return d.owner.remove_user(recording, 2); }},
      {"modify u1 {C3}", [&] { return d.owner.modify_user(recording, 1, {cid_of("C3")}); }},
  };

  int mismatches = 0, ack_failures = 0, checks = 0;
  std::string first;
  auto compare_all = [&](const std::string& when) {
    for (std::uint32_t u = 1; u <= 3; ++u) {
      ++checks;
      if (observe(u) != expected(u) && mismatches++ == 0) first = "user " + std::to_string(u) + " after " + when;
    }
  };
  compare_all("setup");
  auto last_seq = d.owner.save().at("seq").get<std::uint64_t>();
  for (const auto& step : steps) {
    client::PolicyAck ack = step.apply();
    bool ack_ok = ack.seq == last_seq + 1 && !ack.replayed && ack.policy_digest == d.owner.policy().digest() &&
                  ack.entries == d.owner.policy().size();
    // The retransmitted update returns the cached acknowledgement unchanged.
    proto::Frame again = proto::Frame::decode(core(last_update));
    proto::Frame original = proto::Frame::decode(last_reply);
    ack_ok = ack_ok && again.code == 0 && again.args.value("replayed", false) && again.blobs == original.blobs;
    if (!ack_ok && ack_failures++ == 0 && first.empty()) first = "ack after " + step.name;
    last_seq = ack.seq;
    compare_all(step.name);
  }
  std::string detail = std::to_string(steps.size()) + " updates (add, modify, grant, remove), " +
                       std::to_string(checks) + " authorized-set comparisons, " + std::to_string(mismatches) +
                       " mismatches, " + std::to_string(ack_failures) + " acknowledgement failures";
  if (!first.empty()) detail += "; first: " + first;
  return {mismatches == 0 && ack_failures == 0, detail};
}

}  // namespace
}  // namespace qshield::acceptance

int main() {
  using namespace qshield::acceptance;
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {"crypto correctness", crypto_correctness}, {"join-sum end to end", join_sum_end_to_end},
      {"operator oracles", operator_oracles},     {"threat model detection", threat_model},
      {"performance properties", performance},    {"chunking round trip", chunking},
      {"policy lifecycle", policy_lifecycle},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << index << " (" << c.name << "): " << v.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
