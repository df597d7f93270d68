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

// Document-oriented data model and the plaintext semantics of the four
// relational operators (projection, selection, aggregation, join).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qshield/bytes.hpp"

namespace qshield::data {

using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

enum class ValueKind { kNull, kBool, kInteger, kReal, kString };

ValueKind kind_of(const Value& v);
bool is_numeric(const Value& v);
std::string_view kind_name(ValueKind k);

nlohmann::json value_to_json(const Value& v);
// Throws kType for objects and arrays.
Value value_from_json(const nlohmann::json& j);

// Equality across any scalar kinds; integers and reals compare numerically.
bool values_equal(const Value& a, const Value& b);

class Document {
 public:
  Document() = default;
  Document(std::initializer_list<std::pair<const std::string, Value>> attrs);

  // Throws kSchema for an empty name or a duplicate.
  void add(std::string name, Value value);
  void set(const std::string& name, Value value);

  const Value* find(std::string_view name) const;
  // Throws kSchema when absent.
  const Value& at(std::string_view name) const;
  std::size_t size() const { return attrs_.size(); }
  std::vector<std::string> names() const;
  const std::map<std::string, Value, std::less<>>& attributes() const { return attrs_; }

  nlohmann::json to_json() const;
  static Document from_json(const nlohmann::json& j);

  bool operator==(const Document&) const = default;

 private:
  std::map<std::string, Value, std::less<>> attrs_;
};

using Schema = std::vector<std::string>;  // sorted, unique

struct Collection {
  Digest cid;
  std::string name;
  Schema schema;
  std::vector<Document> docs;

  // Derives the schema from the first document (or uses the given one) and
  // validates every document against it. Throws kSchema / kType.
  static Collection make(Digest cid, std::string name, std::vector<Document> docs,
                         std::optional<Schema> schema = std::nullopt);

  void validate() const;
  bool has_attribute(std::string_view attr) const;

  // {"documents":[...],"header":{"cid","count","name","schema"}}
  nlohmann::json to_json() const;
  static Collection from_json(const nlohmann::json& j);

  bool operator==(const Collection&) const = default;
};

struct DataFile {
  std::size_t file_index = 0;  // 1-based
  std::vector<Document> docs;
};

// Sizes of the files a collection of r documents splits into with chunk
// size s: ceil(r/s) files, all full except possibly the last.
std::vector<std::size_t> chunk_sizes(std::size_t r, std::size_t s);
// Throws kArgument for s == 0.
std::vector<DataFile> chunk(const Collection& c, std::size_t s);

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

std::string_view op_symbol(CompareOp op);
// Throws kSyntax for unknown symbols.
CompareOp op_from_symbol(std::string_view sym);

// Throws kPredicate when an ordering operator meets a non-numeric value.
bool compare(CompareOp op, const Value& lhs, const Value& rhs);

struct AttributeRef {
  std::string collection;  // may be empty
  std::string attribute;

  bool operator==(const AttributeRef&) const = default;
};

struct Predicate {
  AttributeRef lhs;
  CompareOp op = CompareOp::kEq;
  std::variant<Value, AttributeRef> rhs;

  bool rhs_is_literal() const { return std::holds_alternative<Value>(rhs); }

  nlohmann::json to_json() const;
  static Predicate from_json(const nlohmann::json& j);

  bool operator==(const Predicate&) const = default;
};

enum class AggregateFn { kSum, kAvg, kCount, kMin, kMax };

std::string_view aggregate_name(AggregateFn fn);
AggregateFn aggregate_from_name(std::string_view name);

// Keeps exactly attrs (which must be a subset of the schema).
Collection project(const Collection& c, const std::vector<std::string>& attrs);
// Keeps the documents satisfying p; p.rhs must be a literal.
Collection select(const Collection& c, const Predicate& p);
Value aggregate(const Collection& c, AggregateFn fn, const std::string& attr);

// How the attributes of two joined collections are named in the result:
// the join attribute appears once when both sides use the same name; every
// other name present on both sides is prefixed "c<cid-short>_".
struct JoinLayout {
  Schema schema;
  std::map<std::string, std::string> left_names;   // input name -> output name
  std::map<std::string, std::string> right_names;  // join attr may be absent
};

JoinLayout join_layout(const Schema& left, const Digest& left_cid, const Schema& right,
                       const Digest& right_cid, const std::string& left_attr,
                       const std::string& right_attr);

Digest joined_cid(const Digest& left, const Digest& right);
std::string joined_name(std::string_view left, std::string_view right);

// Nested-loop equi-join: left documents outer, right inner. p.lhs names an
// attribute of `left`, p.rhs an attribute of `right`.
Collection join(const Collection& left, const Collection& right, const Predicate& p);

}  // namespace qshield::data
