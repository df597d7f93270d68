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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <memory>
#include <set>

#include "qshield/error.hpp"

namespace qshield::query {

using nlohmann::json;

namespace {

enum class Tok { kIdent, kInteger, kReal, kString, kSymbol, kEnd };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;  // 1-based
};

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

const std::set<std::string, std::less<>> kKeywords = {"SELECT", "FROM", "JOIN", "ON", "WHERE",
                                                      "TRUE", "FALSE", "NULL"};

[[noreturn]] void syntax(std::size_t pos, const std::string& msg) {
  fail(ErrorCode::kSyntax, "at position " + std::to_string(pos) + ": " + msg);
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(c) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::kIdent, std::string(s.substr(start, i - start)), start + 1});
    } else if (std::isdigit(c) || (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      ++i;
      bool real = false;
      while (i < s.size()) {
        char d = s[i];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          ++i;
        } else if (d == '.' || d == 'e' || d == 'E') {
          real = true;
          ++i;
          if ((d == 'e' || d == 'E') && i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
        } else {
          break;
        }
      }
      out.push_back({real ? Tok::kReal : Tok::kInteger, std::string(s.substr(start, i - start)), start + 1});
    } else if (c == '\'') {
      std::string text;
      ++i;
      for (;;) {
        if (i >= s.size()) syntax(start + 1, "unterminated string literal");
        if (s[i] == '\'') {
          if (i + 1 < s.size() && s[i + 1] == '\'') {
            text += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        text += s[i++];
      }
      out.push_back({Tok::kString, std::move(text), start + 1});
    } else {
      std::string_view two = s.substr(i, 2);
      if (two == "<=" || two == ">=" || two == "!=" || two == "<>") {
        i += 2;
      } else if (std::string_view("(),.=<>*").find(static_cast<char>(c)) != std::string_view::npos) {
        ++i;
      } else {
        syntax(start + 1, std::string("unexpected character '") + static_cast<char>(c) + "'");
      }
      out.push_back({Tok::kSymbol, std::string(s.substr(start, i - start)), start + 1});
    }
  }
  out.push_back({Tok::kEnd, "", s.size() + 1});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  Ast run() {
    Ast ast;
    keyword("SELECT");
    select_list(ast);
    keyword("FROM");
    ast.from = name("collection name");
    if (is_keyword("JOIN")) {
      ++at_;
      JoinClause j;
      j.collection = name("collection name");
      keyword("ON");
      j.left = qualified_ref();
      symbol("=");
      j.right = qualified_ref();
      ast.join = std::move(j);
    }
    if (is_keyword("WHERE")) {
      ++at_;
      Predicate p;
      p.lhs = attribute_ref();
      p.op = comparison();
      p.rhs = literal();
      ast.where = std::move(p);
    }
    if (peek().kind != Tok::kEnd) syntax(peek().pos, "unexpected '" + peek().text + "'");
    return ast;
  }

 private:
  const Token& peek() const { return toks_[at_]; }

  bool is_keyword(std::string_view kw) const {
    return peek().kind == Tok::kIdent && upper(peek().text) == kw;
  }

  bool is_symbol(std::string_view sym) const { return peek().kind == Tok::kSymbol && peek().text == sym; }

  std::string describe() const { return peek().kind == Tok::kEnd ? "end of input" : "'" + peek().text + "'"; }

  void keyword(std::string_view kw) {
    if (!is_keyword(kw)) syntax(peek().pos, "expected " + std::string(kw) + ", found " + describe());
    ++at_;
  }

  void symbol(std::string_view sym) {
    if (!is_symbol(sym)) syntax(peek().pos, "expected '" + std::string(sym) + "', found " + describe());
    ++at_;
  }

  std::string name(std::string_view what) {
    if (peek().kind != Tok::kIdent || kKeywords.contains(upper(peek().text))) {
      syntax(peek().pos, "expected " + std::string(what) + ", found " + describe());
    }
    return toks_[at_++].text;
  }

  AttributeRef attribute_ref() {
    std::string first = name("attribute");
    if (!is_symbol(".")) return {"", std::move(first)};
    ++at_;
    return {std::move(first), name("attribute")};
  }

  AttributeRef qualified_ref() {
    std::size_t pos = peek().pos;
    AttributeRef r = attribute_ref();
    if (r.collection.empty()) syntax(pos, "join condition needs collection-qualified attributes");
    return r;
  }

  void select_list(Ast& ast) {
    if (peek().kind == Tok::kIdent && toks_[at_ + 1].kind == Tok::kSymbol && toks_[at_ + 1].text == "(") {
      std::size_t pos = peek().pos;
      AggregateCall call;
      try {
        call.fn = data::aggregate_from_name(peek().text);
      } catch (const Error&) {
        syntax(pos, "unknown aggregate function '" + peek().text + "'");
      }
      at_ += 2;
      call.attr = attribute_ref();
      symbol(")");
      ast.aggregate = std::move(call);
      return;
    }
    ast.columns.push_back(attribute_ref());
    while (is_symbol(",")) {
      ++at_;
      ast.columns.push_back(attribute_ref());
    }
  }

  data::CompareOp comparison() {
    if (peek().kind != Tok::kSymbol) syntax(peek().pos, "expected comparison operator, found " + describe());
    std::size_t pos = peek().pos;
    try {
      return data::op_from_symbol(toks_[at_++].text);
    } catch (const Error&) {
      syntax(pos, "expected comparison operator");
    }
  }

  data::Value literal() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::kInteger: {
        std::int64_t v = 0;
        auto [end, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || end != t.text.data() + t.text.size()) syntax(t.pos, "integer literal out of range");
        ++at_;
        return v;
      }
      case Tok::kReal: {
        std::size_t used = 0;
        double v = 0;
        try {
          v = std::stod(t.text, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != t.text.size()) syntax(t.pos, "malformed number '" + t.text + "'");
        ++at_;
        return v;
      }
      case Tok::kString: ++at_; return t.text;
      case Tok::kIdent: {
        std::string kw = upper(t.text);
        if (kw == "TRUE" || kw == "FALSE" || kw == "NULL") {
          ++at_;
          if (kw == "NULL") return std::monostate{};
          return kw == "TRUE";
        }
        break;
      }
      default: break;
    }
    syntax(t.pos, "expected literal, found " + describe());
  }

  std::vector<Token> toks_;
  std::size_t at_ = 0;
};

[[noreturn]] void semantic(const std::string& msg) { fail(ErrorCode::kSemantic, msg); }

}  // namespace

Ast parse(std::string_view text) {
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
    fail(ErrorCode::kSyntax, "empty query");
  }
  return Parser(text).run();
}

// ---- Catalog -----------------------------------------------------------------

void Catalog::add(CollectionInfo info) {
  std::sort(info.schema.begin(), info.schema.end());
  if (find(info.cid) != nullptr && find(info.name) == nullptr) {
    fail(ErrorCode::kArgument, "collection id already registered under another name");
  }
  std::string key = info.name;
  by_name_.insert_or_assign(std::move(key), std::move(info));
}

const CollectionInfo* Catalog::find(std::string_view name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &it->second;
}

const CollectionInfo* Catalog::find(const Digest& cid) const {
  for (const auto& [_, info] : by_name_) {
    if (info.cid == cid) return &info;
  }
  return nullptr;
}

json Catalog::to_json() const {
  json out = json::array();
  for (const auto& [_, info] : by_name_) {
    out.push_back({{"name", info.name}, {"cid", info.cid.hex()}, {"schema", info.schema}});
  }
  return out;
}

Catalog Catalog::from_json(const json& j) {
  try {
    Catalog c;
    for (const auto& e : j) {
      c.add({e.at("name").get<std::string>(), Digest::from_hex(e.at("cid").get<std::string>()),
             e.at("schema").get<data::Schema>()});
    }
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed catalog: ") + e.what());
  }
}

// ---- QueryPlan ---------------------------------------------------------------

const PlanNode& QueryPlan::node(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) {
    fail(ErrorCode::kArgument, "no plan node " + std::to_string(id));
  }
  return nodes[id];
}

std::size_t QueryPlan::omega() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const PlanNode& n) { return !n.is_source(); }));
}

std::vector<int> QueryPlan::schedule() const {
  std::vector<int> out;
  for (const auto& n : nodes) {
    if (!n.is_source()) out.push_back(n.node_id);
  }
  return out;
}

nlohmann::ordered_json QueryPlan::to_json() const {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& n : nodes) {
    nlohmann::ordered_json node;
    node["node_id"] = n.node_id;
    node["op_name"] = n.op_name;
    node["params"] = nlohmann::ordered_json::parse(n.params.dump());
    node["inputs"] = n.inputs;
    list.push_back(std::move(node));
  }
  nlohmann::ordered_json out;
  out["nodes"] = std::move(list);
  out["sink"] = sink;
  return out;
}

std::string QueryPlan::canonical() const { return to_json().dump(); }

std::size_t compute_endurance(const QueryPlan& p) { return p.omega(); }

// ---- planner -----------------------------------------------------------------

namespace {

struct Resolved {
  std::size_t source;
  std::string attr;
};

class Planner {
 public:
  Planner(const Ast& ast, const Catalog& catalog) : ast_(ast) {
    sources_.push_back(lookup(catalog, ast.from));
    if (ast.join) {
      if (ast.join->collection == ast.from) semantic("self-joins are not supported");
      sources_.push_back(lookup(catalog, ast.join->collection));
    }
  }

  QueryPlan run() {
    std::vector<std::set<std::string>> needed(sources_.size());
    std::vector<Resolved> columns;
    for (const auto& c : ast_.columns) {
      columns.push_back(resolve(c));
      needed[columns.back().source].insert(columns.back().attr);
    }
    std::optional<Resolved> agg;
    if (ast_.aggregate) {
      agg = resolve(ast_.aggregate->attr);
      needed[agg->source].insert(agg->attr);
    }
    std::optional<Resolved> jl, jr;
    if (ast_.join) {
      jl = resolve(ast_.join->left);
      jr = resolve(ast_.join->right);
      if (jl->source == jr->source) semantic("join condition must compare the two joined collections");
      if (jl->source != 0) std::swap(jl, jr);
      needed[0].insert(jl->attr);
      needed[1].insert(jr->attr);
    }
    std::optional<Resolved> where;
    if (ast_.where) {
      where = resolve(ast_.where->lhs);
      if (!ast_.where->rhs_is_literal()) semantic("WHERE compares an attribute with a literal");
      const data::Value& lit = std::get<data::Value>(ast_.where->rhs);
      bool ordering = ast_.where->op != data::CompareOp::kEq && ast_.where->op != data::CompareOp::kNe;
      if (ordering && !data::is_numeric(lit)) {
        fail(ErrorCode::kPredicate, "ordering comparison against a non-numeric literal");
      }
    }

    for (const auto* s : sources_) {
      add(kSource, {{"cid", s->cid.hex()}, {"collection", s->name}}, {});
    }

    std::vector<int> tops;
    std::vector<data::Schema> projected;
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      int cur = static_cast<int>(i);
      const std::string from = sources_[i]->cid.hex();
      if (where && where->source == i) {
        Predicate p = *ast_.where;
        p.lhs = {sources_[i]->name, where->attr};
        cur = add(kSelection, {{"from", from}, {"predicate", p.to_json()}}, {cur});
      }
      data::Schema attrs(needed[i].begin(), needed[i].end());
      json params = {{"attrs", attrs}};
      if (plan_.nodes[cur].is_source()) params["from"] = from;
      cur = add(kProjection, std::move(params), {cur});
      tops.push_back(cur);
      projected.push_back(std::move(attrs));
    }

    auto out_name = [&](const Resolved& r) { return r.attr; };
    std::function<std::string(const Resolved&)> name_of = out_name;
    int top = tops[0];
    data::Schema result_schema = projected[0];

    if (ast_.join) {
      Predicate p{{sources_[0]->name, jl->attr}, data::CompareOp::kEq,
                  AttributeRef{sources_[1]->name, jr->attr}};
      top = add(kJoin, {{"predicate", p.to_json()}}, {tops[0], tops[1]});
      auto layout = std::make_shared<data::JoinLayout>(data::join_layout(
          projected[0], sources_[0]->cid, projected[1], sources_[1]->cid, jl->attr, jr->attr));
      result_schema = layout->schema;
      std::string left_join_attr = jl->attr;
      name_of = [layout, left_join_attr](const Resolved& r) {
        if (r.source == 0) return layout->left_names.at(r.attr);
        auto it = layout->right_names.find(r.attr);
        return it != layout->right_names.end() ? it->second : layout->left_names.at(left_join_attr);
      };
    }

    if (agg) {
      top = add(kAggregation,
                {{"attr", name_of(*agg)}, {"fn", std::string(data::aggregate_name(ast_.aggregate->fn))}}, {top});
    } else {
      std::set<std::string> wanted;
      for (std::size_t k = 0; k < columns.size(); ++k) {
        std::string n = name_of(columns[k]);
        wanted.insert(n);
        plan_.outputs.push_back({{sources_[columns[k].source]->name, columns[k].attr}, n});
      }
      if (data::Schema(wanted.begin(), wanted.end()) != result_schema) {
        top = add(kProjection, {{"attrs", data::Schema(wanted.begin(), wanted.end())}}, {top});
      }
    }
    plan_.sink = top;
    return std::move(plan_);
  }

 private:
  static const CollectionInfo* lookup(const Catalog& catalog, const std::string& name) {
    const CollectionInfo* info = catalog.find(name);
    if (info == nullptr) semantic("unknown collection '" + name + "'");
    return info;
  }

  Resolved resolve(const AttributeRef& ref) const {
    auto has = [&](std::size_t i) {
      return std::binary_search(sources_[i]->schema.begin(), sources_[i]->schema.end(), ref.attribute);
    };
    if (!ref.collection.empty()) {
      for (std::size_t i = 0; i < sources_.size(); ++i) {
        if (sources_[i]->name != ref.collection) continue;
        if (!has(i)) semantic("collection '" + ref.collection + "' has no attribute '" + ref.attribute + "'");
        return {i, ref.attribute};
      }
      semantic("'" + ref.collection + "' is not a collection of this query");
    }
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      if (!has(i)) continue;
      if (found) semantic("attribute '" + ref.attribute + "' is ambiguous");
      found = i;
    }
    if (!found) semantic("unknown attribute '" + ref.attribute + "'");
    return {*found, ref.attribute};
  }

  int add(std::string_view op, json params, std::vector<int> inputs) {
    PlanNode n;
    n.node_id = static_cast<int>(plan_.nodes.size());
    n.op_name = op;
    n.params = std::move(params);
    n.inputs = std::move(inputs);
    plan_.nodes.push_back(std::move(n));
    return plan_.nodes.back().node_id;
  }

  const Ast& ast_;
  std::vector<const CollectionInfo*> sources_;
  QueryPlan plan_;
};

}  // namespace

QueryPlan plan(const Ast& ast, const Catalog& catalog) { return Planner(ast, catalog).run(); }

}  // namespace qshield::query
