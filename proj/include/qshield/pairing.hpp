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

// Value types over the BLS12-381 pairing groups (backed by blst).
//
// The secret-sharing scheme is written for a symmetric map e: G1 x G1 -> G2.
// BLS12-381 is asymmetric, so enclave-side elements live in G1, user-side
// elements in G2, and the pairing is e: G1 x G2 -> GT. The exponent algebra
// is unchanged.

#include <blst.h>

#include <array>
#include <cstdint>

#include "qshield/bytes.hpp"

namespace qshield::pairing {

enum class GroupId : std::uint8_t { kBls12_381 = 1 };

// Element of Z_p, p the (prime) group order.
class Scalar {
 public:
  Scalar();
  static Scalar random();
  static Scalar random_nonzero();
  static Scalar from_u64(std::uint64_t v);
  // Interprets 32 big-endian bytes; values >= p are reduced.
  static Scalar from_be_bytes(ByteView b);

  Scalar(const Scalar&) = default;
  Scalar& operator=(const Scalar&) = default;
  ~Scalar();

  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator*(const Scalar& o) const;
  Scalar inverse() const;
  bool is_zero() const;
  std::array<std::uint8_t, 32> to_be_bytes() const;

  bool operator==(const Scalar& o) const;

  const blst_fr& raw() const { return value_; }

 private:
  blst_fr value_;
};

class G1 {
 public:
  static constexpr std::size_t kEncodedSize = 48;

  static G1 generator();
  static G1 identity();
  // Rejects off-curve, out-of-subgroup and malformed encodings with kFormat.
  static G1 decode(ByteView compressed);

  G1 operator*(const Scalar& k) const;
  G1 operator+(const G1& o) const;
  bool is_identity() const;
  std::array<std::uint8_t, kEncodedSize> encode() const;

  bool operator==(const G1& o) const;

  const blst_p1& raw() const { return point_; }

 private:
  blst_p1 point_{};
};

class G2 {
 public:
  static constexpr std::size_t kEncodedSize = 96;

  static G2 generator();
  static G2 identity();
  static G2 decode(ByteView compressed);

  G2 operator*(const Scalar& k) const;
  G2 operator+(const G2& o) const;
  bool is_identity() const;
  std::array<std::uint8_t, kEncodedSize> encode() const;

  bool operator==(const G2& o) const;

  const blst_p2& raw() const { return point_; }

 private:
  blst_p2 point_{};
};

// Target group element (order-p subgroup of Fp12*).
class GT {
 public:
  // 12 base-field components, 48 bytes each, big-endian, tower order.
  static constexpr std::size_t kEncodedSize = 12 * 48;

  static GT one();
  static GT decode(ByteView encoded);

  GT operator*(const GT& o) const;
  GT operator/(const GT& o) const;
  GT square() const;
  GT inverse() const;
  GT pow(const Scalar& k) const;
  bool is_one() const;
  Bytes encode() const;

  bool operator==(const GT& o) const;

  friend GT pair(const G1& a, const G2& b);

 private:
  blst_fp12 value_{};
};

GT pair(const G1& a, const G2& b);

// Public parameters of the instantiated group.
struct GroupContext {
  GroupId id = GroupId::kBls12_381;
  unsigned security_bits = 128;

  static const GroupContext& bls12_381();

  // e(g1, g2) != 1.
  bool non_degenerate() const;
  // e(g1^a, g2^b) == e(g1, g2)^(a*b) for fresh random a, b.
  bool bilinear_spot_check() const;
};

}  // namespace qshield::pairing
