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

#include "bench.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <chrono>
#include <random>

#include "qshield/client.hpp"
#include "qshield/core.hpp"
#include "qshield/error.hpp"
#include "qshield/sharing.hpp"

namespace qshield::bench {

using nlohmann::json;
using proto::Frame;
using proto::Op;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::pair<double, double> summarize(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  return {samples[samples.size() / 2], samples.front()};
}

std::vector<data::Document> synthetic(std::size_t n, const std::array<const char*, 3>& names, std::mt19937& rng) {
  std::uniform_int_distribution<int> small(0, 20), key(0, 49), big(-1000, 1000);
  std::vector<data::Document> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    data::Document d;
    d.add(names[0], std::int64_t{names[0] == std::string("A1") ? small(rng) : big(rng)});
    d.add(names[1], std::int64_t{key(rng)});
    d.add(names[2], std::int64_t{big(rng)});
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace

std::vector<OperatorTiming> operators(const std::vector<std::size_t>& sizes, int reps, std::uint32_t seed,
                                      const std::vector<std::string>& ops) {
  if (reps < 1) fail(ErrorCode::kArgument, "reps must be >= 1");
  for (const auto& op : ops) {
    if (std::find(kAllOperators.begin(), kAllOperators.end(), op) == kAllOperators.end()) {
      fail(ErrorCode::kArgument, "unknown operator '" + op + "'");
    }
  }
  auto wanted = [&](const char* op) { return std::find(ops.begin(), ops.end(), op) != ops.end(); };
  std::mt19937 rng(seed);
  std::vector<OperatorTiming> rows;
  for (std::size_t n : sizes) {
    core::TrustedCore core;
    proto::Transport t = core.transport();
    client::CoreKeys keys = client::init_core(t);
    auto owner = client::OwnerContext::setup(128, 1);
    owner.provision(t, keys);
    auto c1 = owner.create_collection(&t, "C1", {"A1", "A3", "A5"}, {1});
    auto c2 = owner.create_collection(&t, "C2", {"A2", "A3", "A4"}, {1});

    json headers = json::array();
    std::vector<Bytes> blobs;
    const std::uint32_t omega = static_cast<std::uint32_t>(reps) * 6;
    blobs.push_back(proto::seal_token(keys.pke_pub, {owner.shares().user(1), omega, 0}));
    for (const auto& [meta, names] : {std::pair{c1, std::array<const char*, 3>{"A1", "A3", "A5"}},
                                      std::pair{c2, std::array<const char*, 3>{"A2", "A3", "A4"}}}) {
      auto docs = synthetic(n, names, rng);
      headers.push_back({{"cid", meta.cid.hex()}, {"name", meta.name}, {"schema", meta.schema}, {"count", n}});
      for (const auto& d : docs) blobs.push_back(owner.encrypt_document(meta.cid, d).ct);
    }
    proto::call(t, Op::kUnlock, {{"collections", headers}}, std::move(blobs));

    auto exec = [&](const std::string& f, const json& params, std::vector<std::uint64_t> in) {
      auto start = Clock::now();
      Frame r = proto::call(t, Op::kExecOperator, {{"f_name", f}, {"f_params", params}, {"inputs", in}});
      return std::pair{elapsed_ms(start), r.args.at("s_id").get<std::uint64_t>()};
    };
    const std::string from = c1.cid.hex();
    json pred = {{"lhs", {{"attribute", "A1"}, {"collection", "C1"}}}, {"op", "<="}, {"rhs", {{"literal", 10}}}};
    json join_pred = {{"lhs", {{"attribute", "A3"}, {"collection", "C1"}}},
                      {"op", "="},
                      {"rhs", {{"attribute", "A3"}, {"collection", "C2"}}}};
    std::map<std::string, std::vector<double>> samples;
    for (int r = 0; r < reps; ++r) {
      if (wanted("projection")) {
        samples["projection"].push_back(exec("projection", {{"attrs", {"A3"}}, {"from", from}}, {0}).first);
      }
      if (wanted("selection")) {
        samples["selection"].push_back(exec("selection", {{"from", from}, {"predicate", pred}}, {0}).first);
      }
      if (wanted("aggregation")) {
        samples["aggregation"].push_back(
            exec("aggregation", {{"attr", "A5"}, {"fn", "sum"}, {"from", from}}, {0}).first);
      }
      if (!wanted("join")) continue;
      auto left = exec("projection", {{"attrs", {"A1", "A3", "A5"}}, {"from", from}}, {0}).second;
      auto right = exec("projection", {{"attrs", {"A2", "A3", "A4"}}, {"from", c2.cid.hex()}}, {0}).second;
      samples["join"].push_back(exec("join", {{"predicate", join_pred}}, {left, right}).first);
    }
    proto::call(t, Op::kAbort);
    for (const auto& op : kAllOperators) {
      if (!wanted(op.c_str())) continue;
      auto [median, min] = summarize(samples[op]);
      rows.push_back({op, n, median, min});
    }
  }
  return rows;
}

std::vector<DecryptTiming> decrypt(const std::vector<std::size_t>& sizes, int reps) {
  if (reps < 1) fail(ErrorCode::kArgument, "reps must be >= 1");
  sharing::ShareSet shares = sharing::setup(128, 1);
  const Digest cid = hash("bench");
  Policy pol;
  pol.add(shares.user(1).uid(), {cid});
  std::vector<DecryptTiming> rows;
  for (std::size_t bytes : sizes) {
    Bytes msg = random_bytes(bytes);
    std::vector<sharing::TaggedCiphertext> cts{{cid, {}, sharing::encrypt(shares.sk, msg)}};
    std::vector<double> samples;
    for (int r = 0; r < reps; ++r) {
      auto start = Clock::now();
      auto out = sharing::decrypt(pol, shares.enclave, shares.user(1), cts);
      samples.push_back(elapsed_ms(start));
      if (out.size() != 1 || out[0].plaintext.size() != bytes) fail(ErrorCode::kInternal, "decrypt bench mismatch");
    }
    auto [median, min] = summarize(samples);
    rows.push_back({bytes, median, min});
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<OperatorTiming>& rows) {
  out << "operator,n,median_ms,min_ms\n";
  for (const auto& r : rows) out << r.op << ',' << r.n << ',' << r.median_ms << ',' << r.min_ms << '\n';
}

void write_csv(std::ostream& out, const std::vector<DecryptTiming>& rows) {
  out << "bytes,median_ms,min_ms\n";
  for (const auto& r : rows) out << r.bytes << ',' << r.median_ms << ',' << r.min_ms << '\n';
}

}  // namespace qshield::bench
