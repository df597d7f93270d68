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

#include "cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "bench.hpp"
#include "qshield/client.hpp"
#include "qshield/core.hpp"
#include "qshield/error.hpp"
#include "qshield/host.hpp"

namespace qshield::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kNotFound, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::kFormat, path.string() + " is not valid JSON");
  return j;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCode::kInternal, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

proto::Transport http_transport(const std::string& url) {
  if (url.empty()) throw Usage("--server (or QSHIELD_SERVER) is required");
  auto http = std::make_shared<httplib::Client>(url);
  http->set_read_timeout(600, 0);
  return [http, url](ByteView frame) -> Bytes {
    std::string body(frame.begin(), frame.end());
    auto res = http->Post("/frame", body, "application/octet-stream");
    if (!res) fail(ErrorCode::kChannel, "cannot reach " + url + ": " + httplib::to_string(res.error()));
    if (res->status != 200) fail(ErrorCode::kChannel, url + " answered HTTP " + std::to_string(res->status));
    return to_bytes(res->body);
  };
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw Usage("bad size '" + item + "'");
    }
  }
  if (out.empty()) throw Usage("no sizes given");
  return out;
}

std::string value_text(const data::Value& v) { return data::value_to_json(v).dump(); }

// Human-readable rendering of a decrypted result.
void print_result(std::ostream& out, const ops::Payload& p) {
  if (const auto* v = std::get_if<data::Value>(&p)) {
    out << "result: " << value_text(*v) << '\n';
  } else if (const auto* c = std::get_if<data::Collection>(&p)) {
    out << "result: " << c->docs.size() << " document(s)\n";
    for (const auto& d : c->docs) out << "  " << d.to_json().dump() << '\n';
  } else {
    out << "result: unlocked data set\n";
  }
}

void print_audit(std::ostream& out, const client::AuditReport& a) {
  out << "audit: " << (a.pass ? "PASS" : "FAIL") << '\n';
  for (const auto& c : a.checks) out << "  " << (c.pass ? "ok   " : "FAIL ") << c.name << ": " << c.detail << '\n';
}

struct Common {
  bool json_out = false;
  std::string server = env_or("QSHIELD_SERVER", "");
  std::string home = env_or("QSHIELD_HOME", ".");
};

fs::path owner_file(const Common& c) { return fs::path(c.home) / "owner.json"; }

// ---- owner ------------------------------------------------------------------

int owner_setup(const Common& c, std::size_t users, unsigned lambda, std::ostream& out) {
  host::ServiceClient api(http_transport(c.server));
  client::CoreKeys keys = api.keys();
  auto owner = client::OwnerContext::setup(lambda, users);
  auto ack = owner.provision(api.owner_relay(), keys);
  write_json(owner_file(c), owner.save());
  json files = json::array({owner_file(c).string()});
  for (std::uint32_t i = 1; i <= users; ++i) {
    client::UserContext user(owner.shares().user(i), keys, api.catalog());
    fs::path p = fs::path(c.home) / ("user-" + std::to_string(i) + ".json");
    write_json(p, user.save());
    files.push_back(p.string());
  }
  if (c.json_out) {
    out << json{{"files", files}, {"policy_digest", ack.policy_digest.hex()}, {"users", users}}.dump() << '\n';
  } else {
    out << "provisioned core " << keys.measurement.short_hex() << " with " << users << " user share(s)\n";
    for (const auto& f : files) out << "  wrote " << f.get<std::string>() << '\n';
  }
  return 0;
}

std::set<Digest> collection_ids(const client::OwnerContext& owner, const std::string& list) {
  std::set<Digest> out;
  for (const auto& name : split_list(list)) {
    const auto* meta = owner.collection(name);
    if (meta == nullptr) fail(ErrorCode::kNotFound, "owner has no collection '" + name + "'");
    out.insert(meta->cid);
  }
  return out;
}

int owner_upload(const Common& c, const std::string& name, const std::string& file, const std::string& users,
                 std::ostream& out) {
  host::ServiceClient api(http_transport(c.server));
  auto owner = client::OwnerContext::load(read_json(owner_file(c)));
  proto::Transport relay = api.owner_relay();
  json docs_json = read_json(file);
  if (docs_json.is_object() && docs_json.contains("documents")) docs_json = docs_json.at("documents");
  if (!docs_json.is_array()) fail(ErrorCode::kFormat, file + " must hold an array of documents");
  std::vector<data::Document> docs;
  for (const auto& d : docs_json) docs.push_back(data::Document::from_json(d));

  const client::CollectionMeta* meta = owner.collection(name);
  bool created = false;
  client::CollectionMeta fresh;
  if (meta == nullptr) {
    if (docs.empty()) fail(ErrorCode::kArgument, "cannot create collection '" + name + "' from no documents");
    data::Schema schema = data::Collection::make(Digest{}, name, docs).schema;
    std::vector<std::uint32_t> granted;
    for (const auto& u : split_list(users)) granted.push_back(static_cast<std::uint32_t>(std::stoul(u)));
    fresh = owner.create_collection(&relay, name, schema, granted);
    write_json(owner_file(c), owner.save());
    api.create_collection(fresh);
    meta = &fresh;
    created = true;
  }
  std::vector<client::EncryptedDocument> enc;
  for (const auto& d : docs) enc.push_back(owner.encrypt_document(meta->cid, d));
  std::size_t stored = api.upload(meta->cid, enc);
  json dids = json::array();
  for (const auto& e : enc) dids.push_back(e.did.hex());
  if (c.json_out) {
    out << json{{"cid", meta->cid.hex()}, {"collection", name}, {"created", created}, {"stored", stored},
                {"dids", dids}}
               .dump()
        << '\n';
  } else {
    out << (created ? "created " : "appended to ") << name << " (" << meta->cid.short_hex() << "): " << stored
        << " document(s) stored\n";
  }
  return 0;
}

int owner_policy(const Common& c, const std::string& op, std::uint32_t user, const std::string& collections,
                 std::ostream& out) {
  host::ServiceClient api(http_transport(c.server));
  auto owner = client::OwnerContext::load(read_json(owner_file(c)));
  proto::Transport relay = api.owner_relay();
  client::PolicyAck ack;
  if (op == "add") {
    ack = owner.add_user(relay, user, collection_ids(owner, collections));
  } else if (op == "remove") {
    ack = owner.remove_user(relay, user);
  } else if (op == "modify") {
    ack = owner.modify_user(relay, user, collection_ids(owner, collections));
  } else if (op == "grant") {
    auto ids = collection_ids(owner, collections);
    if (ids.empty()) throw Usage("grant needs --collections");
    for (const auto& cid : ids) ack = owner.grant(relay, user, cid);
  } else {
    throw Usage("unknown policy operation '" + op + "'");
  }
  write_json(owner_file(c), owner.save());
  if (c.json_out) {
    out << json{{"op", op}, {"user", user}, {"seq", ack.seq}, {"policy_digest", ack.policy_digest.hex()},
                {"entries", ack.entries}}
               .dump()
        << '\n';
  } else {
    out << op << " user " << user << ": acknowledged, policy " << ack.policy_digest.short_hex() << " ("
        << ack.entries << " entr" << (ack.entries == 1 ? "y" : "ies") << ")\n";
  }
  return 0;
}

// ---- user -------------------------------------------------------------------

client::UserContext load_user(const std::string& path) { return client::UserContext::load(read_json(path)); }

// Refreshes the catalog and counter from the service when one is given.
void sync_user(client::UserContext& user, const Common& c) {
  if (c.server.empty()) return;
  host::ServiceClient api(http_transport(c.server));
  user.set_catalog(api.catalog());
  user.sync_counter(api.replay_floor());
}

int user_token(const Common& c, const std::string& user_file, const std::string& expr, std::ostream& out) {
  auto user = load_user(user_file);
  sync_user(user, c);
  auto req = user.make_token(expr);
  write_json(user_file, user.save());
  json j = {{"counter", req.counter}, {"omega", req.omega}, {"token", to_hex(req.token)}};
  if (c.json_out) {
    out << j.dump() << '\n';
  } else {
    out << "counter " << req.counter << ", endurance " << req.omega << "\n" << to_hex(req.token) << '\n';
  }
  return 0;
}

json opened_json(const client::OpenedResponse& r) {
  return {{"result", ops::payload_to_json(r.result)}, {"audit", r.audit.to_json()}};
}

int user_query(const Common& c, const std::string& user_file, const std::string& expr, const std::string& save,
               std::ostream& out) {
  auto user = load_user(user_file);
  sync_user(user, c);
  host::ServiceClient api(http_transport(c.server));
  auto req = user.make_token(expr);
  write_json(user_file, user.save());
  proto::Envelope env = api.query(req.q, req.token);
  if (!save.empty()) {
    write_json(save, {{"q", req.q}, {"counter", req.counter}, {"envelope", to_hex(env.serialize())}});
  }
  auto opened = user.open_response(req, env);
  if (c.json_out) {
    out << opened_json(opened).dump() << '\n';
  } else {
    print_result(out, opened.result);
    print_audit(out, opened.audit);
  }
  return opened.audit.pass ? 0 : 1;
}

int user_audit(const Common& c, const std::string& user_file, const std::string& envelope_file,
               std::ostream& out) {
  auto user = load_user(user_file);
  json saved = read_json(envelope_file);
  client::QueryRequest req;
  req.q = saved.at("q").get<std::string>();
  req.counter = saved.at("counter").get<std::uint64_t>();
  auto env = proto::Envelope::parse(from_hex(saved.at("envelope").get<std::string>()));
  auto opened = user.open_response(req, env);
  if (c.json_out) {
    out << opened_json(opened).dump() << '\n';
  } else {
    print_result(out, opened.result);
    print_audit(out, opened.audit);
  }
  return opened.audit.pass ? 0 : 1;
}

// ---- server -----------------------------------------------------------------

int server_start(const Common& c, const std::string& listen, const std::string& store_path, bool distributed,
                 unsigned lambda, const std::string& port_file, std::ostream& out) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw Usage("--listen must be HOST:PORT");
  std::string host_name = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw Usage("bad port in --listen");
  }

  core::TrustedCore core;
  host::EncryptedStore store{fs::path(store_path)};
  host::HostService service(core.transport(), store);
  client::CoreKeys keys = service.start(lambda);

  // Worker placement of the distributed example: E1(N1) E2(N2) E3(N2) E4(N3) E5(N1).
  std::vector<std::unique_ptr<core::WorkerCore>> workers;
  if (distributed) {
    const std::vector<std::array<const char*, 3>> layout = {{"E1", "N1", "selection"},
                                                            {"E2", "N2", "projection"},
                                                            {"E3", "N2", "projection"},
                                                            {"E4", "N3", "join"},
                                                            {"E5", "N1", "aggregation"}};
    std::vector<host::WorkerSpec> specs;
    for (const auto& [id, node, op] : layout) {
      workers.push_back(std::make_unique<core::WorkerCore>(id, op));
      specs.push_back({id, node, op, workers.back()->transport()});
    }
    service.attach_workers(std::move(specs));
  }

  httplib::Server http;
  http.Post("/frame", [&](const httplib::Request& req, httplib::Response& res) {
    Bytes reply = service.handle(as_bytes(req.body));
    res.set_content(std::string(reply.begin(), reply.end()), "application/octet-stream");
  });
  http.Post("/shutdown", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.remote_addr != "127.0.0.1" && req.remote_addr != "::1") {
      res.status = 403;
      return;
    }
    res.set_content("bye\n", "text/plain");
    http.stop();
  });
  if (port == 0) {
    port = http.bind_to_any_port(host_name);
  } else if (!http.bind_to_port(host_name, port)) {
    port = -1;
  }
  if (port < 0) fail(ErrorCode::kConfiguration, "cannot listen on " + listen);
  std::string url = "http://" + host_name + ":" + std::to_string(port);
  if (!port_file.empty()) {
    std::ofstream pf(port_file + ".tmp");
    pf << port << '\n';
    pf.close();
    fs::rename(port_file + ".tmp", port_file);
  }
  if (c.json_out) {
    out << json{{"url", url}, {"measurement", keys.measurement.hex()}, {"distributed", distributed},
                {"store", store_path}}
               .dump()
        << std::endl;
  } else {
    out << "serving " << url << " (core " << keys.measurement.short_hex() << ", "
        << (distributed ? "distributed" : "standalone") << ", store " << store_path << ")" << std::endl;
  }
  http.listen_after_bind();
  return 0;
}

int server_stop(const Common& c, std::ostream& out) {
  if (c.server.empty()) throw Usage("--server (or QSHIELD_SERVER) is required");
  httplib::Client http(c.server);
  auto res = http.Post("/shutdown");
  if (!res || res->status != 200) fail(ErrorCode::kChannel, "server did not accept the shutdown request");
  if (!c.json_out) out << "stopped " << c.server << '\n';
  return 0;
}

// Mints a token, has the service run the scripted deviation, and audits the
// outcome. Exit 0 means the deviation was caught.
int server_attack(const Common& c, const std::string& script_file, const std::string& user_file,
                  const std::string& expr, std::ostream& out) {
  json script = read_json(script_file);
  auto user = load_user(user_file);
  sync_user(user, c);
  host::ServiceClient api(http_transport(c.server));
  auto req = user.make_token(expr);
  write_json(user_file, user.save());
  json report;
  bool detected = true;
  try {
    auto env = api.attack(req.q, req.token, script);
    auto opened = user.open_response(req, env);
    detected = !opened.audit.pass;
    report = {{"outcome", opened.audit.pass ? "undetected" : "audit"}, {"audit", opened.audit.to_json()}};
  } catch (const Error& e) {
    report = {{"outcome", "core_error"}, {"error", std::string(error_code_name(e.code()))}, {"message", e.what()}};
  }
  if (c.json_out) {
    out << report.dump() << '\n';
  } else if (report.at("outcome") == "core_error") {
    out << "core refused: " << report.at("error").get<std::string>() << ": " << report.at("message").get<std::string>()
        << '\n';
  } else {
    out << "audit: " << report.at("audit").at("verdict").get<std::string>() << '\n';
    for (const auto& ch : report.at("audit").at("checks")) {
      out << "  " << (ch.at("pass").get<bool>() ? "ok   " : "FAIL ") << ch.at("name").get<std::string>() << ": "
          << ch.at("detail").get<std::string>() << '\n';
    }
  }
  return detected ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"QShield: SQL-like queries over encrypted collections with an isolated trusted core", "qshield"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_flag("--json", c.json_out, "Machine-readable output");
  app.add_option("--server", c.server, "Service URL (env QSHIELD_SERVER)");
  app.add_option("--home", c.home, "Directory with owner and user state files (env QSHIELD_HOME)");

  int status = 0;

  // owner
  auto* owner = app.add_subcommand("owner", "Data owner: key ceremony, uploads, policy");
  owner->require_subcommand(1);
  std::size_t users = 0;
  unsigned lambda = 128;
  auto* setup = owner->add_subcommand("setup", "Generate shares, provision the core, write share files");
  setup->add_option("--users", users, "Number of data users")->required();
  setup->add_option("--lambda", lambda, "Security level in bits");
  setup->callback([&] { status = owner_setup(c, users, lambda, out); });

  std::string collection, docs_file, user_list;
  auto* upload = owner->add_subcommand("upload", "Encrypt and upload documents");
  upload->add_option("--collection", collection, "Collection name")->required();
  upload->add_option("--file", docs_file, "JSON array of documents")->required();
  upload->add_option("--users", user_list, "Users granted a newly created collection (e.g. 1,2)");
  upload->callback([&] { status = owner_upload(c, collection, docs_file, user_list, out); });

  std::string policy_op, collections;
  std::uint32_t policy_user = 0;
  auto* policy = owner->add_subcommand("policy", "Change the access policy");
  policy->add_option("op", policy_op, "add | remove | modify | grant")->required();
  policy->add_option("--user", policy_user, "User index")->required();
  policy->add_option("--collections", collections, "Collection names (comma separated)");
  policy->callback([&] { status = owner_policy(c, policy_op, policy_user, collections, out); });

  // user
  auto* user = app.add_subcommand("user", "Data user: tokens, queries, audits");
  user->require_subcommand(1);
  std::string user_file, expr, envelope_file;
  auto add_user_file = [&](CLI::App* cmd) {
    cmd->add_option("--user", user_file, "User state file")->required();
  };
  auto* token = user->add_subcommand("token", "Mint a query token");
  add_user_file(token);
  token->add_option("--expr", expr, "Query expression")->required();
  token->callback([&] { status = user_token(c, user_file, expr, out); });

  auto* query = user->add_subcommand("query", "Run a query, decrypt and audit the response");
  add_user_file(query);
  query->add_option("--expr", expr, "Query expression")->required();
  query->add_option("--save-envelope", envelope_file, "Keep the response for a later audit");
  query->callback([&] { status = user_query(c, user_file, expr, envelope_file, out); });

  auto* audit = user->add_subcommand("audit", "Audit a saved response");
  add_user_file(audit);
  audit->add_option("--envelope", envelope_file, "File written by query --save-envelope")->required();
  audit->callback([&] { status = user_audit(c, user_file, envelope_file, out); });

  // server
  auto* server = app.add_subcommand("server", "Application server");
  server->require_subcommand(1);
  std::string listen = "127.0.0.1:8750", store_path = env_or("QSHIELD_STORE", "qshield-store"), port_file;
  bool distributed = false;
  auto* start = server->add_subcommand("start", "Start the trusted core and serve the service API");
  start->add_option("--listen", listen, "HOST:PORT (port 0 picks one)");
  start->add_option("--store", store_path, "Store directory (env QSHIELD_STORE)");
  start->add_option("--lambda", lambda, "Security level in bits");
  start->add_option("--port-file", port_file, "Write the bound port here");
  start->add_flag("--distributed", distributed, "Run operators on attested single-operator workers");
  start->callback([&] { status = server_start(c, listen, store_path, distributed, lambda, port_file, out); });

  auto* stop = server->add_subcommand("stop", "Stop a local server");
  stop->callback([&] { status = server_stop(c, out); });

  std::string script_file;
  auto* attack = server->add_subcommand("attack", "Run a query with a scripted invocation deviation");
  attack->add_option("--script", script_file, "Mutation script (JSON)")->required();
  add_user_file(attack);
  attack->add_option("--expr", expr, "Query expression")->required();
  attack->callback([&] { status = server_attack(c, script_file, user_file, expr, out); });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "CSV timings");
  bench_cmd->require_subcommand(1);
  std::string sizes;
  int reps = 5;
  auto* bops = bench_cmd->add_subcommand("operators", "Operator invocations through the core boundary");
  bops->add_option("--sizes", sizes, "Documents per collection")->default_str("100,1000,10000");
  bops->add_option("--reps", reps, "Repetitions per size");
  std::string op_list;
  bops->add_option("--ops", op_list, "Operators to time")->default_str("projection,selection,aggregation,join");
  bops->callback([&] {
    auto ops = op_list.empty() ? bench::kAllOperators : split_list(op_list);
    bench::write_csv(out, bench::operators(parse_sizes(sizes.empty() ? "100,1000,10000" : sizes), reps, 1, ops));
  });
  auto* bdec = bench_cmd->add_subcommand("decrypt", "Key reconstruction plus decryption of one ciphertext");
  bdec->add_option("--sizes", sizes, "Plaintext sizes in bytes")->default_str("1,1024,10240,102400");
  bdec->add_option("--reps", reps, "Repetitions per size");
  bdec->callback([&] {
    bench::write_csv(out, bench::decrypt(parse_sizes(sizes.empty() ? "1,1024,10240,102400" : sizes), reps));
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Usage& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    if (c.json_out) {
      err << json{{"error", std::string(error_code_name(e.code()))}, {"message", e.what()}}.dump() << '\n';
    } else {
      err << "error (" << error_code_name(e.code()) << "): " << e.what() << '\n';
    }
    return 1;
  } catch (const json::exception& e) {
    err << "error (format): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return status;
}

}  // namespace qshield::cli
