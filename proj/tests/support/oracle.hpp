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

// Reference material shared by the test binaries: synthetic corpora and a
// brute-force query interpreter that works straight off the parsed query,
// without the planner or the operator implementations.

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qshield/document.hpp"
#include "qshield/query.hpp"

namespace qshield::testing {

using data::Collection;
using data::Document;
using data::Value;

// C1[A1,A3,A5] and C2[A2,A3,A4] with integer values; A3 is the join key.
inline std::pair<Collection, Collection> join_corpus(std::size_t n, std::uint32_t seed,
                                                     int key_range = 50) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> small(0, 20), key(0, key_range - 1), big(-1000, 1000);
  std::vector<Document> c1, c2;
  for (std::size_t i = 0; i < n; ++i) {
    c1.push_back({{"A1", std::int64_t{small(rng)}}, {"A3", std::int64_t{key(rng)}}, {"A5", std::int64_t{big(rng)}}});
    c2.push_back({{"A2", std::int64_t{big(rng)}}, {"A3", std::int64_t{key(rng)}}, {"A4", std::int64_t{big(rng)}}});
  }
  return {Collection::make(hash("C1"), "C1", c1, data::Schema{"A1", "A3", "A5"}),
          Collection::make(hash("C2"), "C2", c2, data::Schema{"A2", "A3", "A4"})};
}

inline query::Catalog catalog_of(const std::vector<const Collection*>& cs) {
  query::Catalog cat;
  for (const auto* c : cs) cat.add({c->name, c->cid, c->schema});
  return cat;
}

struct OracleResult {
  std::optional<Value> scalar;
  std::vector<std::vector<Value>> rows;  // select-list order
  bool empty_aggregate = false;
};

namespace detail {

inline const Value& lookup(const std::vector<std::pair<const Collection*, const Document*>>& row,
                           const data::AttributeRef& ref) {
  for (const auto& [c, d] : row) {
    if (!ref.collection.empty() && ref.collection != c->name) continue;
    if (const Value* v = d->find(ref.attribute)) return *v;
  }
  throw std::logic_error("oracle: unresolved attribute " + ref.attribute);
}

inline long double num(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<long double>(*i);
  return static_cast<long double>(std::get<double>(v));
}

inline bool holds(data::CompareOp op, const Value& a, const Value& b) {
  using data::CompareOp;
  bool numeric = (std::holds_alternative<std::int64_t>(a) || std::holds_alternative<double>(a)) &&
                 (std::holds_alternative<std::int64_t>(b) || std::holds_alternative<double>(b));
  if (op == CompareOp::kEq) return numeric ? num(a) == num(b) : a == b;
  if (op == CompareOp::kNe) return numeric ? num(a) != num(b) : a != b;
  if (!numeric) throw std::logic_error("oracle: ordering on non-numeric");
  long double x = num(a), y = num(b);
  switch (op) {
    case CompareOp::kLt: return x < y;
    case CompareOp::kLe: return x <= y;
    case CompareOp::kGt: return x > y;
    case CompareOp::kGe: return x >= y;
    default: return false;
  }
}

}  // namespace detail

// Cross product, then ON and WHERE filters, then the select list.
inline OracleResult brute_force(const query::Ast& ast, const std::map<std::string, Collection>& db) {
  const Collection& from = db.at(ast.from);
  std::vector<std::vector<std::pair<const Collection*, const Document*>>> rows;
  for (const auto& l : from.docs) {
    if (!ast.join) {
      rows.push_back({{&from, &l}});
      continue;
    }
    const Collection& other = db.at(ast.join->collection);
    for (const auto& r : other.docs) rows.push_back({{&from, &l}, {&other, &r}});
  }
  std::vector<std::vector<std::pair<const Collection*, const Document*>>> kept;
  for (auto& row : rows) {
    if (ast.join && !detail::holds(data::CompareOp::kEq, detail::lookup(row, ast.join->left),
                                   detail::lookup(row, ast.join->right))) {
      continue;
    }
    if (ast.where && !detail::holds(ast.where->op, detail::lookup(row, ast.where->lhs),
                                    std::get<Value>(ast.where->rhs))) {
      continue;
    }
    kept.push_back(std::move(row));
  }

  OracleResult out;
  if (!ast.aggregate) {
    for (const auto& row : kept) {
      std::vector<Value> values;
      for (const auto& c : ast.columns) values.push_back(detail::lookup(row, c));
      out.rows.push_back(std::move(values));
    }
    return out;
  }
  const auto& agg = *ast.aggregate;
  if (agg.fn == data::AggregateFn::kCount) {
    out.scalar = static_cast<std::int64_t>(kept.size());
    return out;
  }
  if (kept.empty()) {
    out.empty_aggregate = true;
    return out;
  }
  std::vector<Value> vals;
  bool ints = true;
  for (const auto& row : kept) {
    vals.push_back(detail::lookup(row, agg.attr));
    ints = ints && std::holds_alternative<std::int64_t>(vals.back());
  }
  switch (agg.fn) {
    case data::AggregateFn::kSum:
    case data::AggregateFn::kAvg: {
      long double total = 0;
      std::int64_t itotal = 0;
      for (const auto& v : vals) {
        total += detail::num(v);
        if (ints) itotal += std::get<std::int64_t>(v);
      }
      if (agg.fn == data::AggregateFn::kAvg) {
        out.scalar = static_cast<double>(total / static_cast<long double>(vals.size()));
      } else if (ints) {
        out.scalar = itotal;
      } else {
        out.scalar = static_cast<double>(total);
      }
      break;
    }
    case data::AggregateFn::kMin:
    case data::AggregateFn::kMax: {
      Value best = vals.front();
      for (const auto& v : vals) {
        bool better = agg.fn == data::AggregateFn::kMin ? detail::num(v) < detail::num(best)
                                                        : detail::num(v) > detail::num(best);
        if (better) best = v;
      }
      out.scalar = best;
      break;
    }
    default: break;
  }
  return out;
}

// Reads the plan's result collection back into select-list order.
inline std::vector<std::vector<Value>> rows_of(const query::QueryPlan& plan, const Collection& result) {
  std::vector<std::vector<Value>> rows;
  for (const auto& d : result.docs) {
    std::vector<Value> values;
    for (const auto& o : plan.outputs) values.push_back(d.at(o.name));
    rows.push_back(std::move(values));
  }
  return rows;
}

}  // namespace qshield::testing
