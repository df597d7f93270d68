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

#include "qshield/query.hpp"

#include <gtest/gtest.h>

#include "qshield/error.hpp"
#include "qshield/operators.hpp"
#include "support/oracle.hpp"

namespace qshield::query {
namespace {

using data::Value;
using testing::brute_force;
using testing::join_corpus;

constexpr const char* kJoinSum = "SELECT SUM(A4) FROM C1 JOIN C2 ON C1.A3 = C2.A3 WHERE C1.A1 <= 10";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

Catalog join_catalog() {
  Catalog c;
  c.add({"C1", hash("C1"), {"A1", "A3", "A5"}});
  c.add({"C2", hash("C2"), {"A2", "A3", "A4"}});
  return c;
}

TEST(Parse, JoinSumShape) {
  Ast ast = parse(kJoinSum);
  ASSERT_TRUE(ast.aggregate.has_value());
  EXPECT_EQ(ast.aggregate->fn, AggregateFn::kSum);
  EXPECT_EQ(ast.aggregate->attr.attribute, "A4");
  EXPECT_EQ(ast.from, "C1");
  ASSERT_TRUE(ast.join.has_value());
  EXPECT_EQ(ast.join->collection, "C2");
  EXPECT_EQ(ast.join->left, (AttributeRef{"C1", "A3"}));
  EXPECT_EQ(ast.join->right, (AttributeRef{"C2", "A3"}));
  ASSERT_TRUE(ast.where.has_value());
  EXPECT_EQ(ast.where->lhs, (AttributeRef{"C1", "A1"}));
  EXPECT_EQ(ast.where->op, data::CompareOp::kLe);
  EXPECT_EQ(std::get<Value>(ast.where->rhs), Value{std::int64_t{10}});
}

TEST(Parse, LiteralsAndCase) {
  Ast ast = parse("select a, b from T where s = 'it''s'");
  EXPECT_EQ(ast.columns.size(), 2u);
  EXPECT_EQ(std::get<Value>(ast.where->rhs), Value{std::string("it's")});
  EXPECT_EQ(std::get<Value>(parse("SELECT a FROM T WHERE x > -2.5").where->rhs), Value{-2.5});
  EXPECT_EQ(std::get<Value>(parse("SELECT a FROM T WHERE x != NULL").where->rhs), Value{});
  EXPECT_EQ(std::get<Value>(parse("SELECT a FROM T WHERE x = true").where->rhs), Value{true});
}

TEST(Parse, SyntaxErrorsCarryPosition) {
  for (const char* bad : {"SELECT FROM", "", "SELECT A1", "SELECT A1 FROM C1 ORDER BY A1",
                          "SELECT MEDIAN(A1) FROM C1", "SELECT A1 FROM C1 WHERE A1 == 3",
                          "SELECT A1 FROM C1 JOIN C2 ON A3 = C2.A3", "SELECT A1 FROM C1 WHERE A1 < 'x",
                          "SELECT A1 FROM C1 WHERE A1 < 99999999999999999999", "SELECT A1; FROM C1"}) {
    EXPECT_EQ(code_of([&] { parse(bad); }), ErrorCode::kSyntax) << bad;
  }
  try {
    parse("SELECT FROM");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("position 8"), std::string::npos) << e.what();
  }
}

TEST(Plan, JoinSumIsFiveOperatorDag) {
  QueryPlan p = compile(kJoinSum, join_catalog());
  ASSERT_EQ(p.nodes.size(), 7u);
  std::vector<std::string> ops;
  for (const auto& n : p.nodes) ops.push_back(n.op_name);
  EXPECT_EQ(ops, (std::vector<std::string>{"source", "source", "selection", "projection", "projection",
                                           "join", "aggregation"}));
  EXPECT_EQ(p.nodes[2].inputs, (std::vector<int>{0}));
  EXPECT_EQ(p.nodes[3].inputs, (std::vector<int>{2}));
  EXPECT_EQ(p.nodes[4].inputs, (std::vector<int>{1}));
  EXPECT_EQ(p.nodes[5].inputs, (std::vector<int>{3, 4}));
  EXPECT_EQ(p.nodes[6].inputs, (std::vector<int>{5}));
  EXPECT_EQ(p.sink, 6);
  EXPECT_EQ(p.nodes[3].params["attrs"], nlohmann::json({"A3"}));
  EXPECT_EQ(p.nodes[4].params["attrs"], nlohmann::json({"A3", "A4"}));
  EXPECT_EQ(p.nodes[4].params["from"], hash("C2").hex());
  EXPECT_FALSE(p.nodes[3].params.contains("from"));
  EXPECT_EQ(p.nodes[6].params["fn"], "sum");
  EXPECT_EQ(p.nodes[6].params["attr"], "A4");
  EXPECT_EQ(compute_endurance(p), 5u);
}

TEST(Plan, SingleProjection) {
  Catalog cat = join_catalog();
  QueryPlan p = compile("SELECT A1 FROM C1", cat);
  EXPECT_EQ(p.omega(), 1u);
  EXPECT_EQ(p.nodes[p.sink].op_name, "projection");
  EXPECT_EQ(p.outputs.size(), 1u);
}

TEST(Plan, Deterministic) {
  Catalog cat = join_catalog();
  EXPECT_EQ(compile(kJoinSum, cat).canonical(), compile(kJoinSum, cat).canonical());
  auto j = compile(kJoinSum, cat).to_json();
  auto it = j["nodes"][0].begin();
  EXPECT_EQ(it.key(), "node_id");
  EXPECT_EQ((++it).key(), "op_name");
  EXPECT_EQ((++it).key(), "params");
  EXPECT_EQ((++it).key(), "inputs");
}

TEST(Plan, SemanticErrors) {
  Catalog cat = join_catalog();
  EXPECT_EQ(code_of([&] { compile("SELECT A1 FROM C9", cat); }), ErrorCode::kSemantic);
  EXPECT_EQ(code_of([&] { compile("SELECT A1 FROM C1 WHERE C3.A1 < 3", cat); }), ErrorCode::kSemantic);
  EXPECT_EQ(code_of([&] { compile("SELECT A3 FROM C1 JOIN C2 ON C1.A3 = C2.A3", cat); }), ErrorCode::kSemantic);
  EXPECT_EQ(code_of([&] { compile("SELECT A9 FROM C1", cat); }), ErrorCode::kSemantic);
  EXPECT_EQ(code_of([&] { compile("SELECT A1 FROM C1 JOIN C1 ON C1.A3 = C1.A3", cat); }), ErrorCode::kSemantic);
  EXPECT_EQ(code_of([&] { compile("SELECT A1 FROM C1 WHERE A1 < 'x'", cat); }), ErrorCode::kPredicate);
}

TEST(Plan, JoinOutputNaming) {
  Catalog cat = join_catalog();
  QueryPlan p = compile("SELECT C1.A5, C2.A4 FROM C1 JOIN C2 ON C2.A3 = C1.A3", cat);
  // join keeps A3, the select list does not: a final projection drops it
  EXPECT_EQ(p.omega(), 4u);
  EXPECT_EQ(p.nodes[p.sink].params["attrs"], nlohmann::json({"A4", "A5"}));
  QueryPlan q = compile("SELECT C1.A3, A4 FROM C1 JOIN C2 ON C1.A3 = C2.A3", cat);
  EXPECT_EQ(q.omega(), 3u);
}

ops::Dataset dataset_of(std::vector<data::Collection> cs) {
  std::sort(cs.begin(), cs.end(), [](const auto& a, const auto& b) { return a.cid < b.cid; });
  return {std::move(cs)};
}

// Executing the compiled plan must agree with the brute-force interpreter.
TEST(Plan, ExecutionMatchesBruteForce) {
  const char* queries[] = {
      kJoinSum,
      "SELECT SUM(A4) FROM C1 JOIN C2 ON C1.A3 = C2.A3",
      "SELECT COUNT(A1) FROM C1 JOIN C2 ON C1.A3 = C2.A3 WHERE C2.A2 > 0",
      "SELECT AVG(A5) FROM C1 WHERE A1 >= 7",
      "SELECT MIN(A2) FROM C2",
      "SELECT MAX(C1.A3) FROM C1 JOIN C2 ON C1.A3 = C2.A3 WHERE A4 < 100",
      "SELECT A1, A5 FROM C1 WHERE A5 != 0",
      "SELECT C1.A5, C2.A4, C2.A3 FROM C1 JOIN C2 ON C2.A3 = C1.A3 WHERE A1 = 3",
      "SELECT A3 FROM C2",
      "SELECT COUNT(A1) FROM C1 WHERE A1 > 1000",
  };
  for (std::uint32_t seed = 1; seed <= 5; ++seed) {
    auto [c1, c2] = join_corpus(seed * 40, seed, 10);
    Catalog cat = testing::catalog_of({&c1, &c2});
    ops::Dataset ds = dataset_of({c1, c2});
    std::map<std::string, data::Collection> db{{"C1", c1}, {"C2", c2}};
    for (const char* q : queries) {
      Ast ast = parse(q);
      QueryPlan p = plan(ast, cat);
      auto expected = brute_force(ast, db);
      ops::Payload got = ops::evaluate(p, ds);
      if (ast.aggregate) {
        ASSERT_TRUE(expected.scalar.has_value()) << q;
        ASSERT_TRUE(std::holds_alternative<Value>(got)) << q;
        EXPECT_TRUE(data::values_equal(std::get<Value>(got), *expected.scalar)) << q << " seed " << seed;
      } else {
        ASSERT_TRUE(std::holds_alternative<data::Collection>(got)) << q;
        EXPECT_EQ(testing::rows_of(p, std::get<data::Collection>(got)), expected.rows) << q;
      }
    }
  }
}

TEST(Plan, BudgetMatchesInvocationCount) {
  auto [c1, c2] = join_corpus(30, 9);
  Catalog cat = testing::catalog_of({&c1, &c2});
  for (const char* q : {kJoinSum, "SELECT A1 FROM C1", "SELECT SUM(A2) FROM C2 WHERE A3 < 4"}) {
    QueryPlan p = compile(q, cat);
    EXPECT_EQ(p.schedule().size(), p.omega()) << q;
  }
}

TEST(Catalog, JsonRoundTrip) {
  Catalog cat = join_catalog();
  Catalog back = Catalog::from_json(cat.to_json());
  EXPECT_EQ(back.to_json(), cat.to_json());
  ASSERT_NE(back.find(hash("C2")), nullptr);
  EXPECT_EQ(back.find(hash("C2"))->name, "C2");
}

}  // namespace
}  // namespace qshield::query
