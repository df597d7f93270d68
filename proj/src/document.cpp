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

#include <algorithm>
#include <cmath>
#include <set>

#include "qshield/error.hpp"

namespace qshield::data {

using nlohmann::json;

ValueKind kind_of(const Value& v) { return static_cast<ValueKind>(v.index()); }

bool is_numeric(const Value& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

std::string_view kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::kNull: return "null";
    case ValueKind::kBool: return "boolean";
    case ValueKind::kInteger: return "integer";
    case ValueKind::kReal: return "float";
    case ValueKind::kString: return "string";
  }
  return "?";
}

json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::monostate>) {
          return nullptr;
        } else {
          return x;
        }
      },
      v);
}

Value value_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return std::monostate{};
    case json::value_t::boolean: return j.get<bool>();
    case json::value_t::number_integer: return j.get<std::int64_t>();
    case json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) fail(ErrorCode::kType, "integer exceeds 64-bit range");
      return static_cast<std::int64_t>(u);
    }
    case json::value_t::number_float: return j.get<double>();
    case json::value_t::string: return j.get<std::string>();
    default: fail(ErrorCode::kType, "attribute values must be scalars");
  }
}

namespace {

long double as_long_double(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<long double>(*i);
  return static_cast<long double>(std::get<double>(v));
}

// Coarse type class used for the per-collection stability invariant.
int type_class(const Value& v) {
  switch (kind_of(v)) {
    case ValueKind::kNull: return 0;
    case ValueKind::kBool: return 1;
    case ValueKind::kInteger:
    case ValueKind::kReal: return 2;
    case ValueKind::kString: return 3;
  }
  return -1;
}

}  // namespace

bool values_equal(const Value& a, const Value& b) {
  if (is_numeric(a) && is_numeric(b)) {
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
      return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    }
    return as_long_double(a) == as_long_double(b);
  }
  return a == b;
}

// ---- Document ----------------------------------------------------------------

Document::Document(std::initializer_list<std::pair<const std::string, Value>> attrs) {
  for (const auto& [name, value] : attrs) add(name, value);
}

void Document::add(std::string name, Value value) {
  if (name.empty()) fail(ErrorCode::kSchema, "attribute name must be nonempty");
  auto [it, inserted] = attrs_.emplace(std::move(name), std::move(value));
  if (!inserted) fail(ErrorCode::kSchema, "duplicate attribute '" + it->first + "'");
}

void Document::set(const std::string& name, Value value) {
  if (name.empty()) fail(ErrorCode::kSchema, "attribute name must be nonempty");
  attrs_.insert_or_assign(name, std::move(value));
}

const Value* Document::find(std::string_view name) const {
  auto it = attrs_.find(name);
  return it == attrs_.end() ? nullptr : &it->second;
}

const Value& Document::at(std::string_view name) const {
  const Value* v = find(name);
  if (v == nullptr) fail(ErrorCode::kSchema, "document has no attribute '" + std::string(name) + "'");
  return *v;
}

std::vector<std::string> Document::names() const {
  std::vector<std::string> out;
  out.reserve(attrs_.size());
  for (const auto& [name, _] : attrs_) out.push_back(name);
  return out;
}

json Document::to_json() const {
  json out = json::object();
  for (const auto& [name, value] : attrs_) out[name] = value_to_json(value);
  return out;
}

Document Document::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "document must be a JSON object");
  Document d;
  for (const auto& [name, value] : j.items()) d.add(name, value_from_json(value));
  return d;
}

// ---- Collection --------------------------------------------------------------

Collection Collection::make(Digest cid, std::string name, std::vector<Document> docs,
                            std::optional<Schema> schema) {
  Collection c;
  c.cid = cid;
  c.name = std::move(name);
  if (schema) {
    c.schema = std::move(*schema);
    std::sort(c.schema.begin(), c.schema.end());
  } else if (!docs.empty()) {
    c.schema = docs.front().names();
  }
  c.docs = std::move(docs);
  c.validate();
  return c;
}

void Collection::validate() const {
  if (std::adjacent_find(schema.begin(), schema.end()) != schema.end() ||
      !std::is_sorted(schema.begin(), schema.end())) {
    fail(ErrorCode::kSchema, "schema must be sorted and unique");
  }
  std::vector<int> classes(schema.size(), 0);
  for (const auto& d : docs) {
    if (d.size() != schema.size()) fail(ErrorCode::kSchema, "document does not match collection schema");
    std::size_t i = 0;
    for (const auto& [attr, value] : d.attributes()) {
      if (attr != schema[i]) fail(ErrorCode::kSchema, "document does not match collection schema");
      int cls = type_class(value);
      if (cls != 0) {
        if (classes[i] == 0) {
          classes[i] = cls;
        } else if (classes[i] != cls) {
          fail(ErrorCode::kType, "attribute '" + attr + "' changes type within collection");
        }
      }
      ++i;
    }
  }
}

bool Collection::has_attribute(std::string_view attr) const {
  return std::binary_search(schema.begin(), schema.end(), attr);
}

json Collection::to_json() const {
  json documents = json::array();
  for (const auto& d : docs) documents.push_back(d.to_json());
  return {{"header", {{"cid", cid.hex()}, {"name", name}, {"schema", schema}, {"count", docs.size()}}},
          {"documents", std::move(documents)}};
}

Collection Collection::from_json(const json& j) {
  try {
    const json& header = j.at("header");
    std::vector<Document> docs;
    for (const auto& d : j.at("documents")) docs.push_back(Document::from_json(d));
    if (docs.size() != header.at("count").get<std::size_t>()) {
      fail(ErrorCode::kFormat, "collection count does not match documents");
    }
    return make(Digest::from_hex(header.at("cid").get<std::string>()),
                header.at("name").get<std::string>(), std::move(docs),
                header.at("schema").get<Schema>());
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed collection: ") + e.what());
  }
}

// ---- chunking ----------------------------------------------------------------

std::vector<std::size_t> chunk_sizes(std::size_t r, std::size_t s) {
  if (s == 0) fail(ErrorCode::kArgument, "chunk size must be >= 1");
  std::vector<std::size_t> sizes(r / s, s);
  if (r % s != 0) sizes.push_back(r % s);
  return sizes;
}

std::vector<DataFile> chunk(const Collection& c, std::size_t s) {
  std::vector<DataFile> files;
  std::size_t offset = 0;
  for (std::size_t size : chunk_sizes(c.docs.size(), s)) {
    DataFile f;
    f.file_index = files.size() + 1;
    f.docs.assign(c.docs.begin() + offset, c.docs.begin() + offset + size);
    offset += size;
    files.push_back(std::move(f));
  }
  return files;
}

// ---- predicates --------------------------------------------------------------

std::string_view op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "?";
}

CompareOp op_from_symbol(std::string_view sym) {
  if (sym == "=") return CompareOp::kEq;
  if (sym == "!=" || sym == "<>") return CompareOp::kNe;
  if (sym == "<") return CompareOp::kLt;
  if (sym == "<=") return CompareOp::kLe;
  if (sym == ">") return CompareOp::kGt;
  if (sym == ">=") return CompareOp::kGe;
  fail(ErrorCode::kSyntax, "unknown comparison operator '" + std::string(sym) + "'");
}

bool compare(CompareOp op, const Value& lhs, const Value& rhs) {
  if (op == CompareOp::kEq) return values_equal(lhs, rhs);
  if (op == CompareOp::kNe) return !values_equal(lhs, rhs);
  if (!is_numeric(lhs) || !is_numeric(rhs)) {
    fail(ErrorCode::kPredicate, std::string("ordering comparison on ") +
                                    std::string(kind_name(kind_of(lhs))) + " and " +
                                    std::string(kind_name(kind_of(rhs))));
  }
  bool both_int = std::holds_alternative<std::int64_t>(lhs) && std::holds_alternative<std::int64_t>(rhs);
  auto cmp = [&](auto a, auto b) {
    switch (op) {
      case CompareOp::kLt: return a < b;
      case CompareOp::kLe: return a <= b;
      case CompareOp::kGt: return a > b;
      case CompareOp::kGe: return a >= b;
      default: return false;
    }
  };
  if (both_int) return cmp(std::get<std::int64_t>(lhs), std::get<std::int64_t>(rhs));
  return cmp(as_long_double(lhs), as_long_double(rhs));
}

namespace {

json ref_to_json(const AttributeRef& r) {
  return {{"collection", r.collection}, {"attribute", r.attribute}};
}

AttributeRef ref_from_json(const json& j) {
  return {j.at("collection").get<std::string>(), j.at("attribute").get<std::string>()};
}

bool is_ordering(CompareOp op) { return op != CompareOp::kEq && op != CompareOp::kNe; }

}  // namespace

json Predicate::to_json() const {
  json r;
  if (rhs_is_literal()) {
    r = {{"literal", value_to_json(std::get<Value>(rhs))}};
  } else {
    r = ref_to_json(std::get<AttributeRef>(rhs));
  }
  return {{"lhs", ref_to_json(lhs)}, {"op", op_symbol(op)}, {"rhs", std::move(r)}};
}

Predicate Predicate::from_json(const json& j) {
  try {
    Predicate p;
    p.lhs = ref_from_json(j.at("lhs"));
    p.op = op_from_symbol(j.at("op").get<std::string>());
    const json& r = j.at("rhs");
    if (r.contains("literal")) {
      p.rhs = value_from_json(r.at("literal"));
    } else {
      p.rhs = ref_from_json(r);
    }
    return p;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed predicate: ") + e.what());
  }
}

std::string_view aggregate_name(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::kSum: return "sum";
    case AggregateFn::kAvg: return "avg";
    case AggregateFn::kCount: return "count";
    case AggregateFn::kMin: return "min";
    case AggregateFn::kMax: return "max";
  }
  return "?";
}

AggregateFn aggregate_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "sum") return AggregateFn::kSum;
  if (lower == "avg") return AggregateFn::kAvg;
  if (lower == "count") return AggregateFn::kCount;
  if (lower == "min") return AggregateFn::kMin;
  if (lower == "max") return AggregateFn::kMax;
  fail(ErrorCode::kSyntax, "unknown aggregate function '" + std::string(name) + "'");
}

// ---- operators ---------------------------------------------------------------

Collection project(const Collection& c, const std::vector<std::string>& attrs) {
  Schema keep(attrs.begin(), attrs.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (const auto& a : keep) {
    if (!c.has_attribute(a)) fail(ErrorCode::kSchema, "projection on unknown attribute '" + a + "'");
  }
  Collection out;
  out.cid = c.cid;
  out.name = c.name;
  out.schema = keep;
  out.docs.reserve(c.docs.size());
  for (const auto& d : c.docs) {
    Document pruned;
    for (const auto& a : keep) pruned.add(a, d.at(a));
    out.docs.push_back(std::move(pruned));
  }
  return out;
}

Collection select(const Collection& c, const Predicate& p) {
  if (!p.rhs_is_literal()) fail(ErrorCode::kPredicate, "selection needs a literal right-hand side");
  const Value& literal = std::get<Value>(p.rhs);
  if (!c.has_attribute(p.lhs.attribute)) {
    fail(ErrorCode::kSchema, "selection on unknown attribute '" + p.lhs.attribute + "'");
  }
  if (is_ordering(p.op) && !is_numeric(literal)) {
    fail(ErrorCode::kPredicate, "ordering comparison against a non-numeric literal");
  }
  Collection out;
  out.cid = c.cid;
  out.name = c.name;
  out.schema = c.schema;
  for (const auto& d : c.docs) {
    if (compare(p.op, d.at(p.lhs.attribute), literal)) out.docs.push_back(d);
  }
  return out;
}

Value aggregate(const Collection& c, AggregateFn fn, const std::string& attr) {
  if (!c.has_attribute(attr)) fail(ErrorCode::kSchema, "aggregate over unknown attribute '" + attr + "'");
  if (fn == AggregateFn::kCount) return static_cast<std::int64_t>(c.docs.size());
  if (c.docs.empty()) {
    fail(ErrorCode::kEmptyAggregate, std::string(aggregate_name(fn)) + " over an empty collection");
  }

  bool all_int = true;
  for (const auto& d : c.docs) {
    const Value& v = d.at(attr);
    if (!is_numeric(v)) {
      fail(ErrorCode::kType, std::string(aggregate_name(fn)) + " over non-numeric attribute '" + attr + "'");
    }
    all_int = all_int && std::holds_alternative<std::int64_t>(v);
  }

  switch (fn) {
    case AggregateFn::kSum:
    case AggregateFn::kAvg: {
      if (all_int) {
        __int128 total = 0;
        for (const auto& d : c.docs) total += std::get<std::int64_t>(d.at(attr));
        if (fn == AggregateFn::kAvg) {
          return static_cast<double>(static_cast<long double>(total) / static_cast<long double>(c.docs.size()));
        }
        if (total > INT64_MAX || total < INT64_MIN) fail(ErrorCode::kType, "integer sum overflows 64 bits");
        return static_cast<std::int64_t>(total);
      }
      double total = 0.0;
      for (const auto& d : c.docs) total += static_cast<double>(as_long_double(d.at(attr)));
      if (fn == AggregateFn::kAvg) return total / static_cast<double>(c.docs.size());
      return total;
    }
    case AggregateFn::kMin:
    case AggregateFn::kMax: {
      const Value* best = &c.docs.front().at(attr);
      for (const auto& d : c.docs) {
        const Value& v = d.at(attr);
        bool better = fn == AggregateFn::kMin ? compare(CompareOp::kLt, v, *best)
                                              : compare(CompareOp::kGt, v, *best);
        if (better) best = &v;
      }
      return *best;
    }
    case AggregateFn::kCount: break;
  }
  return std::monostate{};
}

JoinLayout join_layout(const Schema& left, const Digest& left_cid, const Schema& right,
                       const Digest& right_cid, const std::string& left_attr,
                       const std::string& right_attr) {
  std::set<std::string> right_set(right.begin(), right.end());
  std::set<std::string> left_set(left.begin(), left.end());
  const bool natural = left_attr == right_attr;
  const std::string left_prefix = "c" + left_cid.short_hex() + "_";
  const std::string right_prefix = "c" + right_cid.short_hex() + "_";

  JoinLayout layout;
  for (const auto& a : left) {
    bool shared = right_set.contains(a) && !(natural && a == left_attr);
    layout.left_names[a] = shared ? left_prefix + a : a;
  }
  for (const auto& a : right) {
    if (natural && a == right_attr) continue;
    layout.right_names[a] = left_set.contains(a) ? right_prefix + a : a;
  }
  std::set<std::string> out;
  for (const auto& [_, name] : layout.left_names) out.insert(name);
  for (const auto& [_, name] : layout.right_names) {
    if (!out.insert(name).second) fail(ErrorCode::kSchema, "join produces duplicate attribute '" + name + "'");
  }
  layout.schema.assign(out.begin(), out.end());
  return layout;
}

Digest joined_cid(const Digest& left, const Digest& right) {
  Bytes buf(left.bytes.begin(), left.bytes.end());
  buf.insert(buf.end(), right.bytes.begin(), right.bytes.end());
  return hash_tagged("qshield/join/v1", buf);
}

std::string joined_name(std::string_view left, std::string_view right) {
  return "join(" + std::string(left) + "," + std::string(right) + ")";
}

Collection join(const Collection& left, const Collection& right, const Predicate& p) {
  if (p.op != CompareOp::kEq) fail(ErrorCode::kPredicate, "join needs an equality predicate");
  if (p.rhs_is_literal()) fail(ErrorCode::kPredicate, "join predicate must compare two attributes");
  const std::string& lattr = p.lhs.attribute;
  const std::string& rattr = std::get<AttributeRef>(p.rhs).attribute;
  if (!left.has_attribute(lattr)) fail(ErrorCode::kSchema, "join on unknown attribute '" + lattr + "'");
  if (!right.has_attribute(rattr)) fail(ErrorCode::kSchema, "join on unknown attribute '" + rattr + "'");

  JoinLayout layout = join_layout(left.schema, left.cid, right.schema, right.cid, lattr, rattr);

  std::vector<const Value*> right_keys;
  right_keys.reserve(right.docs.size());
  for (const auto& d : right.docs) right_keys.push_back(&d.at(rattr));

  Collection out;
  out.cid = joined_cid(left.cid, right.cid);
  out.name = joined_name(left.name, right.name);
  out.schema = layout.schema;
  for (const auto& dl : left.docs) {
    const Value& key = dl.at(lattr);
    for (std::size_t j = 0; j < right.docs.size(); ++j) {
      if (!values_equal(key, *right_keys[j])) continue;
      Document merged;
      for (const auto& [name, value] : dl.attributes()) merged.add(layout.left_names.at(name), value);
      for (const auto& [name, value] : right.docs[j].attributes()) {
        auto it = layout.right_names.find(name);
        if (it != layout.right_names.end()) merged.add(it->second, value);
      }
      out.docs.push_back(std::move(merged));
    }
  }
  return out;
}

}  // namespace qshield::data
