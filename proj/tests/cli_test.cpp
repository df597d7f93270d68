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

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "qshield/bytes.hpp"
#include "support/oracle.hpp"

namespace qshield {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kJoinSumQuery = "SELECT SUM(A4) FROM C1 JOIN C2 ON C1.A3 = C2.A3 WHERE C1.A1 <= 10";

struct Result {
  int status = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

class CliSession : public ::testing::Test {
 protected:
  fs::path dir;
  std::string url;
  std::thread server;

  void SetUp() override {
    dir = fs::temp_directory_path() / ("qshield-cli-" + to_hex(random_bytes(6)));
    fs::create_directories(dir);
    fs::path port_file = dir / "port";
    server = std::thread([this, port_file] {
      run({"server", "start", "--listen", "127.0.0.1:0", "--store", (dir / "store").string(), "--port-file",
           port_file.string()});
    });
    for (int i = 0; i < 500 && !fs::exists(port_file); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    ASSERT_TRUE(fs::exists(port_file));
    std::ifstream in(port_file);
    int port = 0;
    in >> port;
    url = "http://127.0.0.1:" + std::to_string(port);
  }

  void TearDown() override {
    if (!url.empty()) run({"--server", url, "server", "stop"});
    if (server.joinable()) server.join();
    fs::remove_all(dir);
  }

  Result cmd(std::vector<std::string> args) {
    args.insert(args.begin(), {"--server", url, "--home", dir.string()});
    return run(args);
  }

  std::string write(const std::string& name, const json& j) {
    fs::path p = dir / name;
    std::ofstream(p) << j.dump();
    return p.string();
  }

  std::string user_file(int i) const { return (dir / ("user-" + std::to_string(i) + ".json")).string(); }
};

json documents_json(const data::Collection& c) {
  json out = json::array();
  for (const auto& d : c.docs) out.push_back(d.to_json());
  return out;
}

TEST_F(CliSession, JoinSumQueryPrintsScalarAndPass) {
  auto setup = cmd({"owner", "setup", "--users", "4"});
  ASSERT_EQ(setup.status, 0) << setup.err;
  for (int i = 1; i <= 4; ++i) EXPECT_TRUE(fs::exists(user_file(i)));
  EXPECT_TRUE(fs::exists(dir / "owner.json"));

  auto [c1, c2] = testing::join_corpus(60, 9);
  ASSERT_EQ(cmd({"owner", "upload", "--collection", "C1", "--file", write("c1.json", documents_json(c1)), "--users",
                 "1"})
                .status,
            0);
  ASSERT_EQ(cmd({"owner", "upload", "--collection", "C2", "--file", write("c2.json", documents_json(c2)), "--users",
                 "1"})
                .status,
            0);

  auto q = cmd({"user", "query", "--user", user_file(1), "--expr", kJoinSumQuery, "--json", "--save-envelope",
                (dir / "env.json").string()});
  ASSERT_EQ(q.status, 0) << q.err;
  json j = json::parse(q.out);
  std::map<std::string, data::Collection> db{{"C1", c1}, {"C2", c2}};
  auto expect = testing::brute_force(query::parse(kJoinSumQuery), db);
  EXPECT_EQ(j.at("result").at("value"), data::value_to_json(*expect.scalar));
  EXPECT_EQ(j.at("audit").at("verdict"), "PASS");

  auto human = cmd({"user", "query", "--user", user_file(1), "--expr", kJoinSumQuery});
  EXPECT_EQ(human.status, 0);
  EXPECT_NE(human.out.find("result: " + data::value_to_json(*expect.scalar).dump()), std::string::npos);
  EXPECT_NE(human.out.find("audit: PASS"), std::string::npos);

  auto audit = cmd({"user", "audit", "--user", user_file(1), "--envelope", (dir / "env.json").string(), "--json"});
  EXPECT_EQ(audit.status, 0) << audit.err;
  EXPECT_EQ(json::parse(audit.out).at("audit").at("verdict"), "PASS");
}

TEST_F(CliSession, PolicyChangesAndAttacks) {
  ASSERT_EQ(cmd({"owner", "setup", "--users", "2"}).status, 0);
  auto [c1, c2] = testing::join_corpus(20, 2);
  ASSERT_EQ(cmd({"owner", "upload", "--collection", "C1", "--file", write("c1.json", documents_json(c1)), "--users",
                 "1"})
                .status,
            0);

  auto denied = cmd({"user", "query", "--user", user_file(2), "--expr", "SELECT COUNT(A1) FROM C1"});
  EXPECT_EQ(denied.status, 1);
  EXPECT_NE(denied.err.find("authorization"), std::string::npos);

  auto add = cmd({"owner", "policy", "add", "--user", "2", "--collections", "C1", "--json"});
  ASSERT_EQ(add.status, 0) << add.err;
  auto count = cmd({"user", "query", "--user", user_file(2), "--expr", "SELECT COUNT(A1) FROM C1", "--json"});
  ASSERT_EQ(count.status, 0) << count.err;
  EXPECT_EQ(json::parse(count.out).at("result").at("value"), 20);

  std::string q = "SELECT A1 FROM C1 WHERE A3 > 10";
  auto substitute = cmd({"server", "attack", "--script",
                      write("sub.json", {{"mutations", {{{"op", "substitute"}, {"index", 1},
                                                         {"params", {{"attrs", {"A3"}}}}}}}}),
                      "--user", user_file(1), "--expr", q, "--json"});
  EXPECT_EQ(substitute.status, 0) << substitute.out << substitute.err;
  EXPECT_NE(json::parse(substitute.out).at("outcome"), "undetected");

  auto reorder = cmd({"server", "attack", "--script",
                      write("reorder.json", {{"mutations", {{{"op", "reorder"}, {"a", 0}, {"b", 1}}}}}), "--user",
                      user_file(1), "--expr", q, "--json"});
  EXPECT_EQ(reorder.status, 0) << reorder.out << reorder.err;
  EXPECT_NE(json::parse(reorder.out).at("outcome"), "undetected");

  auto extra = cmd({"server", "attack", "--script",
                    write("dup.json", {{"mutations", {{{"op", "duplicate"}, {"index", 0}}}}}), "--user",
                    user_file(1), "--expr", q, "--json"});
  EXPECT_EQ(extra.status, 0);
  EXPECT_EQ(json::parse(extra.out).at("error"), "endurance");

  auto honest = cmd({"server", "attack", "--script", write("none.json", {{"mutations", json::array()}}), "--user",
                     user_file(1), "--expr", q, "--json"});
  EXPECT_EQ(honest.status, 1);
  EXPECT_EQ(json::parse(honest.out).at("outcome"), "undetected");
}

TEST_F(CliSession, TokensCountUpAndBadInputFails) {
  ASSERT_EQ(cmd({"owner", "setup", "--users", "1"}).status, 0);
  auto [c1, c2] = testing::join_corpus(5, 2);
  ASSERT_EQ(cmd({"owner", "upload", "--collection", "C1", "--file", write("c1.json", documents_json(c1)), "--users",
                 "1"})
                .status,
            0);
  auto a = cmd({"user", "token", "--user", user_file(1), "--expr", "SELECT A1 FROM C1", "--json"});
  auto b = cmd({"user", "token", "--user", user_file(1), "--expr", "SELECT A1 FROM C1", "--json"});
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(json::parse(a.out).at("counter").get<int>() + 1, json::parse(b.out).at("counter").get<int>());
  EXPECT_EQ(json::parse(a.out).at("omega"), 1);

  auto bad = cmd({"user", "token", "--user", user_file(1), "--expr", "SELECT FROM"});
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.err.find("syntax"), std::string::npos);
  auto c = cmd({"user", "token", "--user", user_file(1), "--expr", "SELECT A1 FROM C1", "--json"});
  EXPECT_EQ(json::parse(c.out).at("counter").get<int>(), json::parse(b.out).at("counter").get<int>() + 1);

  EXPECT_EQ(cmd({"owner", "upload", "--collection", "C1"}).status, 2);
  EXPECT_EQ(cmd({"owner", "policy", "remove", "--user", "7"}).status, 1);
}

TEST(Cli, UsageErrorsAndBenchCsv) {
  EXPECT_EQ(run({}).status, 2);
  EXPECT_EQ(run({"frobnicate"}).status, 2);
  EXPECT_EQ(run({"user", "query", "--user", "x.json"}).status, 2);
  EXPECT_EQ(run({"user", "query", "--user", "missing.json", "--expr", "SELECT A1 FROM C1"}).status, 1);
  auto help = run({"--help"});
  EXPECT_EQ(help.status, 0);
  EXPECT_NE(help.out.find("owner"), std::string::npos);

  auto ops = run({"bench", "operators", "--sizes", "20,40", "--reps", "1"});
  ASSERT_EQ(ops.status, 0) << ops.err;
  std::istringstream lines(ops.out);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "operator,n,median_ms,min_ms");
  int rows = 0;
  for (std::string l; std::getline(lines, l);) rows += !l.empty();
  EXPECT_EQ(rows, 8);

  auto some = run({"bench", "operators", "--sizes", "30", "--reps", "1", "--ops", "selection,join"});
  ASSERT_EQ(some.status, 0) << some.err;
  EXPECT_NE(some.out.find("\nselection,30,"), std::string::npos);
  EXPECT_NE(some.out.find("\njoin,30,"), std::string::npos);
  EXPECT_EQ(some.out.find("projection"), std::string::npos);
  EXPECT_EQ(run({"bench", "operators", "--sizes", "30", "--ops", "sort"}).status, 1);

  auto dec = run({"bench", "decrypt", "--sizes", "1,1024", "--reps", "2"});
  ASSERT_EQ(dec.status, 0) << dec.err;
  EXPECT_EQ(dec.out.substr(0, dec.out.find('\n')), "bytes,median_ms,min_ms");
}

}  // namespace
}  // namespace qshield
