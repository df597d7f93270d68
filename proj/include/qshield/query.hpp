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

// SQL-like query expressions and their compilation into an operator DAG.
//
//   SELECT (attr, ... | AGG(attr)) FROM coll
//     [JOIN coll ON coll.attr = coll.attr]
//     [WHERE [coll.]attr CMP literal]

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qshield/document.hpp"

namespace qshield::query {

using data::AggregateFn;
using data::AttributeRef;
using data::Predicate;

struct AggregateCall {
  AggregateFn fn = AggregateFn::kSum;
  AttributeRef attr;
};

struct JoinClause {
  std::string collection;
  AttributeRef left;
  AttributeRef right;
};

struct Ast {
  std::vector<AttributeRef> columns;  // empty iff aggregate is set
  std::optional<AggregateCall> aggregate;
  std::string from;
  std::optional<JoinClause> join;
  std::optional<Predicate> where;
};

// Throws kSyntax; the message carries the 1-based character position.
Ast parse(std::string_view text);

struct CollectionInfo {
  std::string name;
  Digest cid;
  data::Schema schema;
};

class Catalog {
 public:
  void add(CollectionInfo info);
  const CollectionInfo* find(std::string_view name) const;
  const CollectionInfo* find(const Digest& cid) const;
  const std::map<std::string, CollectionInfo, std::less<>>& entries() const { return by_name_; }

  nlohmann::json to_json() const;
  static Catalog from_json(const nlohmann::json& j);

 private:
  std::map<std::string, CollectionInfo, std::less<>> by_name_;
};

inline constexpr std::string_view kSource = "source";
inline constexpr std::string_view kProjection = "projection";
inline constexpr std::string_view kSelection = "selection";
inline constexpr std::string_view kAggregation = "aggregation";
inline constexpr std::string_view kJoin = "join";

struct PlanNode {
  int node_id = 0;
  std::string op_name;
  nlohmann::json params;
  std::vector<int> inputs;

  bool is_source() const { return op_name == kSource; }
};

// How a selected column is named in the result collection.
struct OutputColumn {
  AttributeRef column;
  std::string name;
};

struct QueryPlan {
  std::vector<PlanNode> nodes;  // node_id == index
  int sink = 0;
  std::vector<OutputColumn> outputs;  // empty for aggregate queries

  const PlanNode& node(int id) const;
  // Number of operator (non-source) nodes: the endurance budget.
  std::size_t omega() const;
  // Node ids of operators in an order where inputs precede consumers.
  std::vector<int> schedule() const;

  // {"nodes":[{node_id, op_name, params, inputs}...], "sink": id}
  nlohmann::ordered_json to_json() const;
  std::string canonical() const;
};

// Throws kSemantic for unknown collections, unknown or ambiguous attributes
// and predicates naming a collection outside FROM/JOIN.
QueryPlan plan(const Ast& ast, const Catalog& catalog);

std::size_t compute_endurance(const QueryPlan& p);

inline QueryPlan compile(std::string_view text, const Catalog& catalog) {
  return plan(parse(text), catalog);
}

}  // namespace qshield::query
