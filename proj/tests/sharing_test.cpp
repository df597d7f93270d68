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

#include "qshield/sharing.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "qshield/error.hpp"

namespace qshield::sharing {
namespace {

using pairing::G1;
using pairing::G2;
using pairing::GT;
using pairing::Scalar;

// Key computed straight from the master exponent by a different pairing
// route than setup uses: e(g, h^m) instead of e(g^m, h).
SymmetricKey oracle_key(const MasterSecret& master) {
  return derive_key(pairing::pair(G1::generator(), G2::generator() * master.m));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

TEST(GroupContext, NonDegenerateAndBilinear) {
  const auto& ctx = pairing::GroupContext::bls12_381();
  EXPECT_GE(ctx.security_bits, 128u);
  EXPECT_TRUE(ctx.non_degenerate());
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(ctx.bilinear_spot_check());
}

TEST(GroupContext, TargetEncodingIsCanonical) {
  GT e = pairing::pair(G1::generator() * Scalar::random_nonzero(), G2::generator());
  Bytes enc = e.encode();
  ASSERT_EQ(enc.size(), GT::kEncodedSize);
  GT back = GT::decode(enc);
  EXPECT_TRUE(back == e);
  EXPECT_EQ(back.encode(), enc);
  Bytes bad = enc;
  bad[100] ^= 1;
  EXPECT_EQ(code_of([&] { GT::decode(bad); }), ErrorCode::kFormat);
}

TEST(Setup, SingleUserReconstructs) {
  ShareSet set = setup(128, 1);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_TRUE(reconstruct_key(set.enclave, set.users[0]) == set.sk);
}

TEST(Setup, SixteenUsersMatchDirectOracle) {
  MasterSecret master;
  ShareSet set = setup(128, 16, &master);
  ASSERT_EQ(set.users.size(), 16u);
  ASSERT_EQ(master.t.size(), 16u);
  SymmetricKey expected = oracle_key(master);
  EXPECT_TRUE(expected == set.sk);
  for (const auto& user : set.users) {
    EXPECT_TRUE(reconstruct_key(set.enclave, user) == expected) << "user " << user.index;
  }
}

TEST(Setup, MasterExponentsAreNonzeroAndDistinct) {
  MasterSecret master;
  setup(128, 32, &master);
  EXPECT_FALSE(master.r.is_zero());
  EXPECT_FALSE(master.m.is_zero());
  for (std::size_t i = 0; i < master.t.size(); ++i) {
    EXPECT_FALSE(master.t[i].is_zero());
    for (std::size_t j = i + 1; j < master.t.size(); ++j) EXPECT_FALSE(master.t[i] == master.t[j]);
  }
}

TEST(Setup, RejectsBadArguments) {
  EXPECT_EQ(code_of([] { setup(128, 0); }), ErrorCode::kArgument);
  EXPECT_EQ(code_of([] { setup(256, 2); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { setup(0, 2); }), ErrorCode::kConfiguration);
}

TEST(Setup, IndependentRuns) {
  ShareSet a = setup(128, 2);
  ShareSet b = setup(128, 2);
  EXPECT_FALSE(a.sk == b.sk);
  EXPECT_NE(a.users[0].serialize(), b.users[0].serialize());
}

TEST(Encrypt, RoundTripAndFreshNonce) {
  ShareSet set = setup(128, 1);
  Ciphertext c1 = encrypt(set.sk, as_bytes("hello"));
  Ciphertext c2 = encrypt(set.sk, as_bytes("hello"));
  EXPECT_NE(c1, c2);
  EXPECT_EQ(to_string(crypto::aead_decrypt(set.sk, c1)), "hello");
  EXPECT_EQ(to_string(crypto::aead_decrypt(set.sk, c2)), "hello");
}

TEST(Encrypt, WrongKeyFailsAuthentication) {
  ShareSet set = setup(128, 1);
  Ciphertext c = encrypt(set.sk, as_bytes("hello"));
  SymmetricKey other = SymmetricKey::generate();
  EXPECT_EQ(code_of([&] { crypto::aead_decrypt(other, c); }), ErrorCode::kIntegrity);
  EXPECT_EQ(code_of([&] { encrypt(set.sk, {}); }), ErrorCode::kArgument);
}

TEST(Reconstruct, CrossSetupShareGivesWrongKey) {
  ShareSet a = setup(128, 2);
  ShareSet b = setup(128, 2);
  SymmetricKey crossed = reconstruct_key(a.enclave, b.users[1]);
  EXPECT_FALSE(crossed == a.sk);
  Ciphertext c = encrypt(a.sk, as_bytes("payload"));
  EXPECT_EQ(code_of([&] { crypto::aead_decrypt(crossed, c); }), ErrorCode::kIntegrity);
}

TEST(Reconstruct, IndexOutOfRange) {
  ShareSet set = setup(128, 2);
  UserShare bogus = set.users[1];
  bogus.index = 3;
  EXPECT_EQ(code_of([&] { reconstruct_key(set.enclave, bogus); }), ErrorCode::kArgument);
}

TEST(Reconstruct, MismatchedGroupContext) {
  ShareSet set = setup(128, 1);
  UserShare foreign = set.users[0];
  foreign.group = static_cast<GroupId>(7);
  EXPECT_EQ(code_of([&] { reconstruct_key(set.enclave, foreign); }), ErrorCode::kContext);
}

// Colluding users hold only G2 elements plus the public generators. Every
// combination they can form lands on the wrong key.
TEST(Reconstruct, UserCollusionNeverYieldsKey) {
  const G1 g = G1::generator();
  for (int run = 0; run < 100; ++run) {
    ShareSet set = setup(128, 2);
    const G2& v1 = set.users[0].v;
    const G2& v2 = set.users[1].v;
    GT p1 = pairing::pair(g, v1);
    GT p2 = pairing::pair(g, v2);
    const GT candidates[] = {p1, p2, p1 * p2, p1 / p2, p1.square() / p2, pairing::pair(g, v1 + v2)};
    for (const auto& c : candidates) ASSERT_FALSE(derive_key(c) == set.sk);
  }
}

Policy policy_for(const UserShare& user, std::set<Digest> cids) {
  Policy pol;
  pol.add(user.uid(), std::move(cids));
  return pol;
}

std::vector<TaggedCiphertext> tag_all(const SymmetricKey& sk,
                                      const std::vector<std::pair<Digest, std::string>>& docs) {
  std::vector<TaggedCiphertext> out;
  for (const auto& [cid, text] : docs) out.push_back({cid, {}, encrypt(sk, as_bytes(text))});
  return out;
}

TEST(Decrypt, FiltersByPolicy) {
  ShareSet set = setup(128, 2);
  Digest cid1 = hash("c1"), cid2 = hash("c2");
  auto cts = tag_all(set.sk, {{cid1, "a"}, {cid2, "b"}, {cid1, "c"}});
  Policy pol = policy_for(set.users[0], {cid1});
  auto out = decrypt(pol, set.enclave, set.users[0], cts);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].cid, cid1);
  EXPECT_EQ(to_string(out[0].plaintext.view()), "a");
  EXPECT_EQ(to_string(out[1].plaintext.view()), "c");
}

TEST(Decrypt, EmptyGrantGivesEmptyResult) {
  ShareSet set = setup(128, 1);
  auto cts = tag_all(set.sk, {{hash("c1"), "a"}});
  Policy pol = policy_for(set.users[0], {});
  EXPECT_TRUE(decrypt(pol, set.enclave, set.users[0], cts).empty());
}

TEST(Decrypt, UnknownUserIsUnauthorized) {
  ShareSet set = setup(128, 2);
  auto cts = tag_all(set.sk, {{hash("c1"), "a"}});
  Policy pol = policy_for(set.users[0], {hash("c1")});
  EXPECT_EQ(code_of([&] { decrypt(pol, set.enclave, set.users[1], cts); }),
            ErrorCode::kAuthorization);
}

TEST(Decrypt, TamperedBodyIsIntegrityError) {
  ShareSet set = setup(128, 1);
  Digest cid = hash("c1");
  auto cts = tag_all(set.sk, {{cid, "abc"}});
  cts[0].ct.body[0] ^= 0x01;
  Policy pol = policy_for(set.users[0], {cid});
  EXPECT_EQ(code_of([&] { decrypt(pol, set.enclave, set.users[0], cts); }), ErrorCode::kIntegrity);
}

TEST(Decrypt, AssociatedDataIsBound) {
  ShareSet set = setup(128, 1);
  Digest cid = hash("c1");
  std::vector<TaggedCiphertext> cts{{cid, to_bytes("ad-1"), encrypt(set.sk, as_bytes("x"), as_bytes("ad-1"))}};
  Policy pol = policy_for(set.users[0], {cid});
  EXPECT_EQ(decrypt(pol, set.enclave, set.users[0], cts).size(), 1u);
  cts[0].ad = to_bytes("ad-2");
  EXPECT_EQ(code_of([&] { decrypt(pol, set.enclave, set.users[0], cts); }), ErrorCode::kIntegrity);
}

TEST(Decrypt, OutputSetIndependentOfOrder) {
  ShareSet set = setup(128, 1);
  Digest cid1 = hash("c1"), cid2 = hash("c2"), cid3 = hash("c3");
  auto cts = tag_all(set.sk, {{cid1, "a"}, {cid2, "b"}, {cid3, "c"}, {cid1, "d"}, {cid3, "e"}});
  Policy pol = policy_for(set.users[0], {cid1, cid3});
  auto collect = [&](const std::vector<TaggedCiphertext>& in) {
    std::multiset<std::pair<Digest, std::string>> s;
    for (auto& pt : decrypt(pol, set.enclave, set.users[0], in)) s.emplace(pt.cid, to_string(pt.plaintext.view()));
    return s;
  };
  auto baseline = collect(cts);
  EXPECT_EQ(baseline.size(), 4u);
  std::mt19937 rng(7);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(cts.begin(), cts.end(), rng);
    EXPECT_EQ(collect(cts), baseline);
  }
}

TEST(Formats, ShareSetExportRoundTrip) {
  ShareSet set = setup(128, 3);
  Bytes wire = set.export_binary();
  ASSERT_EQ(std::string(wire.begin(), wire.begin() + 5), "QSHD1");
  EXPECT_EQ(wire.size(), 5 + 4 + 3 * 48 + 576 + 3 * (4 + 96));
  ShareSet back = ShareSet::import_binary(wire);
  EXPECT_TRUE(back.sk == set.sk);
  EXPECT_EQ(back.export_binary(), wire);
  Bytes truncated(wire.begin(), wire.end() - 1);
  EXPECT_EQ(code_of([&] { ShareSet::import_binary(truncated); }), ErrorCode::kFormat);
}

TEST(Formats, UserShareRoundTripAndUid) {
  ShareSet set = setup(128, 2);
  const UserShare& u = set.users[1];
  UserShare back = UserShare::parse(u.serialize());
  EXPECT_EQ(back.index, 2u);
  EXPECT_TRUE(back.v == u.v);
  EXPECT_EQ(back.uid(), hash(u.v.encode()));
  EXPECT_FALSE(back.result_key() == SymmetricKey::from_digest(back.uid()));
  EnclaveShare ea = EnclaveShare::parse(set.enclave.serialize());
  EXPECT_TRUE(reconstruct_key(ea, back) == set.sk);
}

}  // namespace
}  // namespace qshield::sharing
