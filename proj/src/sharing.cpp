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

#include <algorithm>

#include "qshield/error.hpp"

namespace qshield::sharing {

using pairing::G1;
using pairing::G2;
using pairing::GT;
using pairing::Scalar;

namespace {

constexpr std::string_view kEnclaveMagic = "QSEA1";
constexpr std::string_view kUserMagic = "QSUS1";
constexpr std::string_view kShareSetMagic = "QSHD1";
constexpr std::string_view kResultKeyTag = "qshield/user-result-key/v1";

void append(Bytes& out, ByteView b) { out.insert(out.end(), b.begin(), b.end()); }

void append_enclave_elements(Bytes& out, const EnclaveShare& share) {
  for (const auto& ui : share.u) append(out, ui.encode());
  append(out, share.blind.encode());
}

EnclaveShare read_enclave_elements(ByteReader& in, std::uint32_t n) {
  EnclaveShare share;
  share.u.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    G1 ui = G1::decode(in.take(G1::kEncodedSize));
    if (ui.is_identity()) fail(ErrorCode::kFormat, "enclave share element is the identity");
    share.u.push_back(ui);
  }
  share.blind = GT::decode(in.take(GT::kEncodedSize));
  return share;
}

UserShare read_user_share(ByteReader& in) {
  UserShare share;
  share.index = in.u32();
  if (share.index == 0) fail(ErrorCode::kFormat, "user share index must be >= 1");
  share.v = G2::decode(in.take(G2::kEncodedSize));
  if (share.v.is_identity()) fail(ErrorCode::kFormat, "user share is the identity");
  return share;
}

}  // namespace

Bytes EnclaveShare::serialize() const {
  Bytes out(kEnclaveMagic.begin(), kEnclaveMagic.end());
  put_u32(out, static_cast<std::uint32_t>(u.size()));
  append_enclave_elements(out, *this);
  return out;
}

EnclaveShare EnclaveShare::parse(ByteView wire) {
  ByteReader in(wire);
  in.expect_magic(kEnclaveMagic);
  std::uint32_t n = in.u32();
  if (n == 0) fail(ErrorCode::kFormat, "empty enclave share");
  if (in.remaining() != std::size_t{n} * G1::kEncodedSize + GT::kEncodedSize) {
    fail(ErrorCode::kFormat, "enclave share length mismatch");
  }
  EnclaveShare share = read_enclave_elements(in, n);
  in.expect_done();
  return share;
}

Bytes UserShare::serialize() const {
  Bytes out(kUserMagic.begin(), kUserMagic.end());
  put_u32(out, index);
  append(out, v.encode());
  return out;
}

UserShare UserShare::parse(ByteView wire) {
  ByteReader in(wire);
  in.expect_magic(kUserMagic);
  UserShare share = read_user_share(in);
  in.expect_done();
  return share;
}

Digest UserShare::uid() const { return hash(v.encode()); }

SymmetricKey UserShare::result_key() const {
  return SymmetricKey::from_digest(hash_tagged(kResultKeyTag, v.encode()));
}

const UserShare& ShareSet::user(std::uint32_t index) const {
  if (index == 0 || index > users.size()) {
    fail(ErrorCode::kArgument, "user index " + std::to_string(index) + " out of range");
  }
  return users[index - 1];
}

Bytes ShareSet::export_binary() const {
  Bytes out(kShareSetMagic.begin(), kShareSetMagic.end());
  put_u32(out, static_cast<std::uint32_t>(users.size()));
  append_enclave_elements(out, enclave);
  for (const auto& user : users) {
    put_u32(out, user.index);
    append(out, user.v.encode());
  }
  return out;
}

ShareSet ShareSet::import_binary(ByteView wire) {
  ByteReader in(wire);
  in.expect_magic(kShareSetMagic);
  std::uint32_t n = in.u32();
  if (n == 0) fail(ErrorCode::kFormat, "share set with no users");
  ShareSet set;
  set.enclave = read_enclave_elements(in, n);
  for (std::uint32_t i = 0; i < n; ++i) {
    UserShare share = read_user_share(in);
    if (share.index != i + 1) fail(ErrorCode::kFormat, "user shares out of order");
    set.users.push_back(share);
  }
  in.expect_done();
  set.sk = reconstruct_key(set.enclave, set.users.front());
  return set;
}

ShareSet setup(unsigned lambda, std::size_t n, MasterSecret* retain) {
  if (n == 0) fail(ErrorCode::kArgument, "setup needs at least one user");
  if (lambda == 0 || lambda > kMaxSecurityBits) {
    fail(ErrorCode::kConfiguration,
         "security level " + std::to_string(lambda) + " not supported by BLS12-381");
  }

  Scalar r, m, two_r_plus_m, r_plus_m;
  do {
    r = Scalar::random_nonzero();
    m = Scalar::random_nonzero();
    r_plus_m = r + m;
    two_r_plus_m = r + r + m;
  } while (r_plus_m.is_zero() || two_r_plus_m.is_zero());

  std::vector<Scalar> t;
  t.reserve(n);
  while (t.size() < n) {
    Scalar ti = Scalar::random_nonzero();
    if (std::find(t.begin(), t.end(), ti) == t.end()) t.push_back(ti);
  }

  const G1 g = G1::generator();
  const G2 h = G2::generator();

  ShareSet set;
  set.sk = derive_key(pairing::pair(g * m, h));
  set.enclave.blind = pairing::pair(g * r_plus_m, h);
  set.enclave.u.reserve(n);
  set.users.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    set.enclave.u.push_back(g * t[i]);
    UserShare share;
    share.index = static_cast<std::uint32_t>(i + 1);
    share.v = h * (two_r_plus_m * t[i].inverse());
    set.users.push_back(share);
  }

  if (retain != nullptr) *retain = MasterSecret{r, m, std::move(t)};
  return set;
}

SymmetricKey derive_key(const GT& element) {
  Bytes enc = element.encode();
  SymmetricKey key = SymmetricKey::from_digest(hash(enc));
  wipe(enc);
  return key;
}

Ciphertext encrypt(const SymmetricKey& sk, ByteView msg, ByteView ad) {
  if (msg.empty()) fail(ErrorCode::kArgument, "refusing to encrypt an empty message");
  return crypto::aead_encrypt(sk, msg, ad);
}

SymmetricKey reconstruct_key(const EnclaveShare& sk_a, const UserShare& sk_b) {
  if (sk_a.group != sk_b.group) fail(ErrorCode::kContext, "shares belong to different groups");
  if (sk_b.index == 0 || sk_b.index > sk_a.u.size()) {
    fail(ErrorCode::kArgument, "user share index " + std::to_string(sk_b.index) +
                                   " outside enclave share of size " +
                                   std::to_string(sk_a.u.size()));
  }
  // e(g^t_i, h^((2r+m)/t_i)) = e(g,h)^(2r+m);  (e(g,h)^(r+m))^2 / that = e(g,h)^m
  GT paired = pairing::pair(sk_a.u[sk_b.index - 1], sk_b.v);
  GT secret = sk_a.blind.square() / paired;
  return derive_key(secret);
}

std::vector<AuthorizedPlaintext> decrypt(const Policy& pol, const EnclaveShare& sk_a,
                                         const UserShare& sk_b,
                                         std::span<const TaggedCiphertext> cts) {
  const Policy::CidSet* granted = pol.find(sk_b.uid());
  if (granted == nullptr) fail(ErrorCode::kAuthorization, "user is not in the access policy");

  std::vector<AuthorizedPlaintext> out;
  if (cts.empty()) return out;

  SymmetricKey sk = reconstruct_key(sk_a, sk_b);
  try {
    std::vector<AuthorizedPlaintext> opened;
    opened.reserve(cts.size());
    for (const auto& tagged : cts) {
      opened.push_back({tagged.cid, crypto::SecretBytes(crypto::aead_decrypt(sk, tagged.ct, tagged.ad))});
    }
    sk.wipe();
    for (auto& pt : opened) {
      if (granted->contains(pt.cid)) out.push_back(std::move(pt));
    }
  } catch (...) {
    sk.wipe();
    throw;
  }
  return out;
}

}  // namespace qshield::sharing
