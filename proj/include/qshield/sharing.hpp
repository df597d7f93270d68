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

// Two-level secret sharing of a symmetric data key over a bilinear group.
//
// The data key sk = H(e(g,h)^m) is split into an enclave share
//   sk_a = { g^t_1 .. g^t_n, e(g,h)^(r+m) }
// and one share per user
//   sk_b^i = h^((2r+m)/t_i).
// Pairing g^t_i with sk_b^i gives e(g,h)^(2r+m); squaring the blind and
// dividing leaves e(g,h)^m. Neither side can recover sk alone.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qshield/bytes.hpp"
#include "qshield/crypto.hpp"
#include "qshield/pairing.hpp"
#include "qshield/policy.hpp"

namespace qshield::sharing {

using crypto::Ciphertext;
using crypto::SymmetricKey;
using pairing::GroupId;

// Only retained by tests; setup never exposes it otherwise.
struct MasterSecret {
  pairing::Scalar r;
  pairing::Scalar m;
  std::vector<pairing::Scalar> t;
};

struct EnclaveShare {
  GroupId group = GroupId::kBls12_381;
  std::vector<pairing::G1> u;
  pairing::GT blind;

  std::size_t size() const { return u.size(); }

  // "QSEA1" | n (u32 BE) | n compressed G1 | GT
  Bytes serialize() const;
  static EnclaveShare parse(ByteView wire);
};

struct UserShare {
  GroupId group = GroupId::kBls12_381;
  std::uint32_t index = 0;  // 1-based
  pairing::G2 v;

  // "QSUS1" | index (u32 BE) | compressed G2
  Bytes serialize() const;
  static UserShare parse(ByteView wire);

  // H(canonical encoding of v); the user's entry key in a Policy.
  Digest uid() const;
  // Key under which query results are returned to this user.
  SymmetricKey result_key() const;
};

struct ShareSet {
  SymmetricKey sk;
  EnclaveShare enclave;
  std::vector<UserShare> users;

  std::size_t size() const { return users.size(); }
  const UserShare& user(std::uint32_t index) const;

  // "QSHD1" | n (u32 BE) | enclave share elements | n x (index u32 BE | G2)
  // The data key is not stored; import reconstructs it from the shares.
  Bytes export_binary() const;
  static ShareSet import_binary(ByteView wire);
};

inline constexpr unsigned kMaxSecurityBits = 128;

// Throws kArgument for n == 0 and kConfiguration for unsupported lambda.
ShareSet setup(unsigned lambda, std::size_t n, MasterSecret* retain = nullptr);

// H(canonical encoding of a target-group element).
SymmetricKey derive_key(const pairing::GT& element);

// AEAD under the data key; msg must be nonempty.
Ciphertext encrypt(const SymmetricKey& sk, ByteView msg, ByteView ad = {});

// Throws kArgument if the user index is outside the enclave share and
// kContext if the shares come from different groups.
SymmetricKey reconstruct_key(const EnclaveShare& sk_a, const UserShare& sk_b);

struct TaggedCiphertext {
  Digest cid;
  Bytes ad;
  Ciphertext ct;
};

struct AuthorizedPlaintext {
  Digest cid;
  crypto::SecretBytes plaintext;
};

// Reconstructs sk, opens every ciphertext, then keeps only those whose cid
// the policy grants to the caller. The reconstructed key is wiped before
// returning. Throws kAuthorization when the user has no policy entry and
// kIntegrity when any ciphertext fails authentication. Output preserves the
// relative input order of the retained ciphertexts.
std::vector<AuthorizedPlaintext> decrypt(const Policy& pol, const EnclaveShare& sk_a,
                                         const UserShare& sk_b,
                                         std::span<const TaggedCiphertext> cts);

}  // namespace qshield::sharing
