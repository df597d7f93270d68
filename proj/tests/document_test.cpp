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

#include "qshield/document.hpp"

#include <gtest/gtest.h>

#include <random>

#include "qshield/error.hpp"

namespace qshield::data {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

Collection people() {
  return Collection::make(hash("people"), "P",
                          {{{"age", std::int64_t{30}}, {"city", "Oslo"}, {"id", std::int64_t{1}}},
                           {{"age", std::int64_t{41}}, {"city", "Rome"}, {"id", std::int64_t{2}}},
                           {{"age", std::int64_t{25}}, {"city", "Oslo"}, {"id", std::int64_t{3}}}});
}

Predicate lit(std::string attr, CompareOp op, Value v) { return {{"", std::move(attr)}, op, std::move(v)}; }

Predicate eq_ref(std::string l, std::string r) {
  return {{"", std::move(l)}, CompareOp::kEq, AttributeRef{"", std::move(r)}};
}

TEST(Chunking, FileSizes) {
  EXPECT_EQ(chunk_sizes(7, 3), (std::vector<std::size_t>{3, 3, 1}));
  EXPECT_EQ(chunk_sizes(6, 3), (std::vector<std::size_t>{3, 3}));
  EXPECT_TRUE(chunk_sizes(0, 3).empty());
  EXPECT_EQ(chunk_sizes(1, 128), (std::vector<std::size_t>{1}));
  EXPECT_EQ(code_of([] { chunk_sizes(4, 0); }), ErrorCode::kArgument);
}

TEST(Chunking, FilesPartitionDocumentsInOrder) {
  for (std::size_t r : {0u, 1u, 6u, 7u, 200u}) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < r; ++i) docs.push_back({{"n", static_cast<std::int64_t>(i)}});
    Collection c = Collection::make(hash("c"), "C", docs, Schema{"n"});
    for (std::size_t s : {1u, 3u, 128u}) {
      auto files = chunk(c, s);
      EXPECT_EQ(files.size(), (r + s - 1) / s);
      std::vector<Document> rejoined;
      for (std::size_t i = 0; i < files.size(); ++i) {
        EXPECT_EQ(files[i].file_index, i + 1);
        EXPECT_LE(files[i].docs.size(), s);
        if (i + 1 < files.size()) EXPECT_EQ(files[i].docs.size(), s);
        rejoined.insert(rejoined.end(), files[i].docs.begin(), files[i].docs.end());
      }
      EXPECT_EQ(rejoined, c.docs);
    }
  }
}

TEST(Collection, SchemaAndTypeValidation) {
  EXPECT_EQ(code_of([] { Collection::make(hash("x"), "X", {{{"a", std::int64_t{1}}}, {{"b", std::int64_t{1}}}}); }),
            ErrorCode::kSchema);
  EXPECT_EQ(code_of([] { Collection::make(hash("x"), "X", {{{"a", std::int64_t{1}}}, {{"a", "one"}}}); }),
            ErrorCode::kType);
  // Integers and reals share a class; nulls fit anywhere.
  EXPECT_NO_THROW(Collection::make(hash("x"), "X",
                                   {{{"a", std::int64_t{1}}}, {{"a", 2.5}}, {{"a", std::monostate{}}}}));
  EXPECT_EQ(code_of([] { Document d{{"a", true}}; d.add("a", false); }), ErrorCode::kSchema);
}

TEST(Collection, JsonRoundTrip) {
  Collection c = people();
  auto j = c.to_json();
  EXPECT_EQ(j["header"]["count"], 3);
  EXPECT_EQ(Collection::from_json(j), c);
  j["header"]["count"] = 4;
  EXPECT_EQ(code_of([&] { Collection::from_json(j); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { value_from_json(nlohmann::json::array()); }), ErrorCode::kType);
}

TEST(Operators, ProjectKeepsExactlyAttrs) {
  Collection out = project(people(), {"id", "city"});
  EXPECT_EQ(out.schema, (Schema{"city", "id"}));
  ASSERT_EQ(out.docs.size(), 3u);
  for (const auto& d : out.docs) EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(code_of([] { project(people(), {"zip"}); }), ErrorCode::kSchema);
}

TEST(Operators, SelectFilters) {
  Collection out = select(people(), lit("age", CompareOp::kGe, std::int64_t{30}));
  ASSERT_EQ(out.docs.size(), 2u);
  EXPECT_EQ(std::get<std::int64_t>(out.docs[1].at("id")), 2);
  EXPECT_EQ(select(people(), lit("city", CompareOp::kEq, "Oslo")).docs.size(), 2u);
  EXPECT_EQ(select(people(), lit("age", CompareOp::kLt, 30.5)).docs.size(), 2u);
  EXPECT_EQ(code_of([] { select(people(), lit("city", CompareOp::kLt, "Oslo")); }), ErrorCode::kPredicate);
  EXPECT_EQ(code_of([] { select(people(), lit("zip", CompareOp::kEq, "x")); }), ErrorCode::kSchema);
}

TEST(Operators, Aggregates) {
  Collection c = people();
  EXPECT_EQ(std::get<std::int64_t>(aggregate(c, AggregateFn::kSum, "age")), 96);
  EXPECT_DOUBLE_EQ(std::get<double>(aggregate(c, AggregateFn::kAvg, "age")), 32.0);
  EXPECT_EQ(std::get<std::int64_t>(aggregate(c, AggregateFn::kCount, "age")), 3);
  EXPECT_EQ(std::get<std::int64_t>(aggregate(c, AggregateFn::kMin, "age")), 25);
  EXPECT_EQ(std::get<std::int64_t>(aggregate(c, AggregateFn::kMax, "age")), 41);
  EXPECT_EQ(code_of([&] { aggregate(c, AggregateFn::kSum, "city"); }), ErrorCode::kType);

  Collection empty = select(c, lit("age", CompareOp::kGt, std::int64_t{100}));
  EXPECT_EQ(std::get<std::int64_t>(aggregate(empty, AggregateFn::kCount, "age")), 0);
  EXPECT_EQ(code_of([&] { aggregate(empty, AggregateFn::kSum, "age"); }), ErrorCode::kEmptyAggregate);

  Collection big = Collection::make(hash("b"), "B", {{{"v", INT64_MAX}}, {{"v", std::int64_t{1}}}});
  EXPECT_EQ(code_of([&] { aggregate(big, AggregateFn::kSum, "v"); }), ErrorCode::kType);
  Collection mixed = Collection::make(hash("m"), "M", {{{"v", std::int64_t{1}}}, {{"v", 0.5}}});
  EXPECT_DOUBLE_EQ(std::get<double>(aggregate(mixed, AggregateFn::kSum, "v")), 1.5);
}

TEST(Operators, JoinNamesSharedAttributes) {
  Collection left = Collection::make(hash("L"), "L", {{{"k", std::int64_t{1}}, {"x", "l1"}}});
  Collection right = Collection::make(hash("R"), "R",
                                      {{{"k", std::int64_t{1}}, {"x", "r1"}}, {{"k", std::int64_t{2}}, {"x", "r2"}}});
  Collection out = join(left, right, eq_ref("k", "k"));
  const std::string lx = "c" + hash("L").short_hex() + "_x";
  const std::string rx = "c" + hash("R").short_hex() + "_x";
  ASSERT_EQ(out.docs.size(), 1u);
  EXPECT_EQ(out.schema.size(), 3u);
  EXPECT_EQ(std::get<std::string>(out.docs[0].at(lx)), "l1");
  EXPECT_EQ(std::get<std::string>(out.docs[0].at(rx)), "r1");
  EXPECT_EQ(out.cid, joined_cid(hash("L"), hash("R")));
  EXPECT_EQ(out.name, "join(L,R)");
  EXPECT_EQ(code_of([&] { join(left, right, lit("k", CompareOp::kEq, std::int64_t{1})); }), ErrorCode::kPredicate);
  Predicate lt = eq_ref("k", "k");
  lt.op = CompareOp::kLt;
  EXPECT_EQ(code_of([&] { join(left, right, lt); }), ErrorCode::kPredicate);
}

// Join must equal the filtered cross product, in left-major order.
TEST(Operators, JoinMatchesCrossProductOracle) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> key(0, 6), len(0, 25);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Document> ld, rd;
    for (int i = len(rng); i > 0; --i) ld.push_back({{"a", std::int64_t{key(rng)}}, {"p", std::int64_t{i}}});
    for (int i = len(rng); i > 0; --i) rd.push_back({{"b", static_cast<double>(key(rng))}, {"q", std::int64_t{i}}});
    Collection l = Collection::make(hash("l"), "l", ld, Schema{"a", "p"});
    Collection r = Collection::make(hash("r"), "r", rd, Schema{"b", "q"});
    Collection out = join(l, r, eq_ref("a", "b"));

    std::vector<Document> expected;
    for (const auto& x : ld) {
      for (const auto& y : rd) {
        if (static_cast<double>(std::get<std::int64_t>(x.at("a"))) != std::get<double>(y.at("b"))) continue;
        expected.push_back({{"a", x.at("a")}, {"b", y.at("b")}, {"p", x.at("p")}, {"q", y.at("q")}});
      }
    }
    ASSERT_EQ(out.docs, expected) << "trial " << trial;
    EXPECT_EQ(out.schema, (Schema{"a", "b", "p", "q"}));
  }
}

TEST(Predicates, JsonRoundTrip) {
  Predicate a = lit("age", CompareOp::kLe, std::int64_t{10});
  a.lhs.collection = "C1";
  Predicate b{{"C1", "A3"}, CompareOp::kEq, AttributeRef{"C2", "A3"}};
  Predicate c = lit("n", CompareOp::kNe, std::monostate{});
  for (const auto& p : {a, b, c}) EXPECT_EQ(Predicate::from_json(p.to_json()), p);
  EXPECT_EQ(code_of([] { op_from_symbol("=="); }), ErrorCode::kSyntax);
  EXPECT_EQ(aggregate_from_name("SUM"), AggregateFn::kSum);
}

TEST(Values, NumericEqualityAcrossKinds) {
  EXPECT_TRUE(values_equal(std::int64_t{3}, 3.0));
  EXPECT_FALSE(values_equal(std::int64_t{3}, "3"));
  EXPECT_TRUE(values_equal(std::monostate{}, std::monostate{}));
  EXPECT_TRUE(compare(CompareOp::kLt, std::int64_t{-1}, 0.0));
  EXPECT_EQ(code_of([] { compare(CompareOp::kGt, true, std::int64_t{0}); }), ErrorCode::kPredicate);
}

}  // namespace
}  // namespace qshield::data
