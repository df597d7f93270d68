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

#include "qshield/pairing.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "qshield/error.hpp"
#include "sodium_init.hpp"

namespace qshield::pairing {

namespace {

blst_scalar to_blst_scalar(const Scalar& k) {
  blst_scalar s;
  blst_scalar_from_fr(&s, &k.raw());
  return s;
}

}  // namespace

Scalar::Scalar() { std::memset(&value_, 0, sizeof value_); }

Scalar::~Scalar() { sodium_memzero(&value_, sizeof value_); }

Scalar Scalar::random() {
  detail::ensure_sodium();
  // 512 random bits reduced mod p; the bias is below 2^-256.
  std::uint8_t buf[64];
  randombytes_buf(buf, sizeof buf);
  blst_scalar s;
  blst_scalar_from_le_bytes(&s, buf, sizeof buf);
  sodium_memzero(buf, sizeof buf);
  Scalar out;
  blst_fr_from_scalar(&out.value_, &s);
  sodium_memzero(&s, sizeof s);
  return out;
}

Scalar Scalar::random_nonzero() {
  for (;;) {
    Scalar s = random();
    if (!s.is_zero()) return s;
  }
}

Scalar Scalar::from_u64(std::uint64_t v) {
  const std::uint64_t limbs[4] = {v, 0, 0, 0};
  blst_scalar s;
  blst_scalar_from_uint64(&s, limbs);
  Scalar out;
  blst_fr_from_scalar(&out.value_, &s);
  return out;
}

Scalar Scalar::from_be_bytes(ByteView b) {
  if (b.size() != 32) fail(ErrorCode::kFormat, "scalar must be 32 bytes");
  blst_scalar s;
  blst_scalar_from_be_bytes(&s, b.data(), b.size());
  Scalar out;
  blst_fr_from_scalar(&out.value_, &s);
  return out;
}

Scalar Scalar::operator+(const Scalar& o) const {
  Scalar out;
  blst_fr_add(&out.value_, &value_, &o.value_);
  return out;
}

Scalar Scalar::operator-(const Scalar& o) const {
  Scalar out;
  blst_fr_sub(&out.value_, &value_, &o.value_);
  return out;
}

Scalar Scalar::operator*(const Scalar& o) const {
  Scalar out;
  blst_fr_mul(&out.value_, &value_, &o.value_);
  return out;
}

Scalar Scalar::inverse() const {
  if (is_zero()) fail(ErrorCode::kArgument, "zero has no inverse");
  Scalar out;
  blst_fr_inverse(&out.value_, &value_);
  return out;
}

bool Scalar::is_zero() const {
  blst_fr zero;
  std::memset(&zero, 0, sizeof zero);
  return std::memcmp(&zero, &value_, sizeof zero) == 0;
}

std::array<std::uint8_t, 32> Scalar::to_be_bytes() const {
  blst_scalar s = to_blst_scalar(*this);
  std::array<std::uint8_t, 32> out;
  blst_bendian_from_scalar(out.data(), &s);
  return out;
}

bool Scalar::operator==(const Scalar& o) const {
  return std::memcmp(&value_, &o.value_, sizeof value_) == 0;
}

// ---- G1 -------------------------------------------------------------------

G1 G1::generator() {
  G1 g;
  g.point_ = *blst_p1_generator();
  return g;
}

G1 G1::identity() { return G1{}; }

G1 G1::decode(ByteView compressed) {
  if (compressed.size() != kEncodedSize) fail(ErrorCode::kFormat, "G1 encoding must be 48 bytes");
  blst_p1_affine aff;
  if (blst_p1_uncompress(&aff, compressed.data()) != BLST_SUCCESS) {
    fail(ErrorCode::kFormat, "invalid G1 encoding");
  }
  if (!blst_p1_affine_in_g1(&aff)) fail(ErrorCode::kFormat, "G1 point outside the subgroup");
  G1 out;
  blst_p1_from_affine(&out.point_, &aff);
  return out;
}

G1 G1::operator*(const Scalar& k) const {
  blst_scalar s = to_blst_scalar(k);
  G1 out;
  blst_p1_mult(&out.point_, &point_, s.b, 255);
  sodium_memzero(&s, sizeof s);
  return out;
}

G1 G1::operator+(const G1& o) const {
  G1 out;
  blst_p1_add_or_double(&out.point_, &point_, &o.point_);
  return out;
}

bool G1::is_identity() const { return blst_p1_is_inf(&point_); }

std::array<std::uint8_t, G1::kEncodedSize> G1::encode() const {
  std::array<std::uint8_t, kEncodedSize> out;
  blst_p1_compress(out.data(), &point_);
  return out;
}

bool G1::operator==(const G1& o) const { return blst_p1_is_equal(&point_, &o.point_); }

// ---- G2 -------------------------------------------------------------------

G2 G2::generator() {
  G2 g;
  g.point_ = *blst_p2_generator();
  return g;
}

G2 G2::identity() { return G2{}; }

G2 G2::decode(ByteView compressed) {
  if (compressed.size() != kEncodedSize) fail(ErrorCode::kFormat, "G2 encoding must be 96 bytes");
  blst_p2_affine aff;
  if (blst_p2_uncompress(&aff, compressed.data()) != BLST_SUCCESS) {
    fail(ErrorCode::kFormat, "invalid G2 encoding");
  }
  if (!blst_p2_affine_in_g2(&aff)) fail(ErrorCode::kFormat, "G2 point outside the subgroup");
  G2 out;
  blst_p2_from_affine(&out.point_, &aff);
  return out;
}

G2 G2::operator*(const Scalar& k) const {
  blst_scalar s = to_blst_scalar(k);
  G2 out;
  blst_p2_mult(&out.point_, &point_, s.b, 255);
  sodium_memzero(&s, sizeof s);
  return out;
}

G2 G2::operator+(const G2& o) const {
  G2 out;
  blst_p2_add_or_double(&out.point_, &point_, &o.point_);
  return out;
}

bool G2::is_identity() const { return blst_p2_is_inf(&point_); }

std::array<std::uint8_t, G2::kEncodedSize> G2::encode() const {
  std::array<std::uint8_t, kEncodedSize> out;
  blst_p2_compress(out.data(), &point_);
  return out;
}

bool G2::operator==(const G2& o) const { return blst_p2_is_equal(&point_, &o.point_); }

// ---- GT -------------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_fp(blst_fp12& v, Fn&& fn) {
  for (auto& f6 : v.fp6)
    for (auto& f2 : f6.fp2)
      for (auto& f : f2.fp) fn(f);
}

template <typename Fn>
void for_each_fp(const blst_fp12& v, Fn&& fn) {
  for (const auto& f6 : v.fp6)
    for (const auto& f2 : f6.fp2)
      for (const auto& f : f2.fp) fn(f);
}

}  // namespace

GT GT::one() {
  GT out;
  out.value_ = *blst_fp12_one();
  return out;
}

Bytes GT::encode() const {
  Bytes out;
  out.reserve(kEncodedSize);
  for_each_fp(value_, [&](const blst_fp& f) {
    std::uint8_t buf[48];
    blst_bendian_from_fp(buf, &f);
    out.insert(out.end(), buf, buf + 48);
  });
  return out;
}

GT GT::decode(ByteView encoded) {
  if (encoded.size() != kEncodedSize) fail(ErrorCode::kFormat, "GT encoding must be 576 bytes");
  GT out;
  std::size_t offset = 0;
  bool canonical = true;
  for_each_fp(out.value_, [&](blst_fp& f) {
    const std::uint8_t* chunk = encoded.data() + offset;
    blst_fp_from_bendian(&f, chunk);
    std::uint8_t back[48];
    blst_bendian_from_fp(back, &f);
    canonical = canonical && std::memcmp(back, chunk, 48) == 0;
    offset += 48;
  });
  if (!canonical) fail(ErrorCode::kFormat, "GT component not reduced");
  if (!blst_fp12_in_group(&out.value_)) fail(ErrorCode::kFormat, "GT element outside the subgroup");
  return out;
}

GT GT::operator*(const GT& o) const {
  GT out;
  blst_fp12_mul(&out.value_, &value_, &o.value_);
  return out;
}

GT GT::operator/(const GT& o) const { return *this * o.inverse(); }

GT GT::square() const {
  GT out;
  blst_fp12_sqr(&out.value_, &value_);
  return out;
}

GT GT::inverse() const {
  GT out;
  blst_fp12_inverse(&out.value_, &value_);
  return out;
}

GT GT::pow(const Scalar& k) const {
  auto bits = k.to_be_bytes();
  GT acc = one();
  for (std::uint8_t byte : bits) {
    for (int i = 7; i >= 0; --i) {
      acc = acc.square();
      if ((byte >> i) & 1) acc = acc * *this;
    }
  }
  sodium_memzero(bits.data(), bits.size());
  return acc;
}

bool GT::is_one() const { return blst_fp12_is_one(&value_); }

bool GT::operator==(const GT& o) const { return blst_fp12_is_equal(&value_, &o.value_); }

GT pair(const G1& a, const G2& b) {
  blst_p1_affine pa;
  blst_p2_affine pb;
  blst_p1_to_affine(&pa, &a.raw());
  blst_p2_to_affine(&pb, &b.raw());
  blst_fp12 ml;
  blst_miller_loop(&ml, &pb, &pa);
  GT out;
  blst_final_exp(&out.value_, &ml);
  return out;
}

// ---- GroupContext ----------------------------------------------------------

const GroupContext& GroupContext::bls12_381() {
  static const GroupContext ctx{};
  return ctx;
}

bool GroupContext::non_degenerate() const {
  return !pair(G1::generator(), G2::generator()).is_one();
}

bool GroupContext::bilinear_spot_check() const {
  Scalar a = Scalar::random_nonzero();
  Scalar b = Scalar::random_nonzero();
  GT lhs = pair(G1::generator() * a, G2::generator() * b);
  GT rhs = pair(G1::generator(), G2::generator()).pow(a * b);
  return lhs == rhs;
}

}  // namespace qshield::pairing
