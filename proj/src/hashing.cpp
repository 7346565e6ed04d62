#include "dynmatch/hashing.hpp"

#include <cmath>
#include <string>

#include "dynmatch/error.hpp"
#include "dynmatch/rng.hpp"

namespace dynmatch {

namespace {

std::uint64_t mul61(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 z = static_cast<unsigned __int128>(a) * b;
  std::uint64_t r = static_cast<std::uint64_t>(z & kMersenne61) + static_cast<std::uint64_t>(z >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

}  // namespace

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p) {
  if (p == kMersenne61) return mul61(a, b);
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % p);
}

std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t p) {
  std::uint64_t r = 1 % p;
  a %= p;
  for (; e; e >>= 1) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
  }
  return r;
}

bool is_prime(std::uint64_t x) {
  if (x < 2) return false;
  for (std::uint64_t s : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (x % s == 0) return x == s;
  }
  std::uint64_t d = x - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  // This witness set is deterministic for all 64-bit inputs.
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t y = powmod(a, d, x);
    if (y == 1 || y == x - 1) continue;
    bool composite = true;
    for (int i = 1; i < r && composite; ++i) {
      y = mulmod(y, y, x);
      if (y == x - 1) composite = false;
    }
    if (composite) return false;
  }
  return true;
}

std::uint64_t next_prime(std::uint64_t x) {
  if (x <= 2) return 2;
  for (std::uint64_t c = x | 1; c <= kPrimeCeiling; c += 2)
    if (is_prime(c)) return c;
  throw ParameterError("no prime below 2^62 at least " + std::to_string(x));
}

KWiseHash KWiseHash::sample(unsigned k, std::uint64_t domain, std::uint64_t range, std::uint64_t seed,
                            std::uint64_t prime_floor) {
  if (k < 1) throw ParameterError("hash independence k must be >= 1");
  if (domain < 1 || range < 1) throw ParameterError("hash domain and range must be >= 1");
  KWiseHash h;
  const std::uint64_t need = std::max(domain, range);
  if (prime_floor == 0 && need <= kMersenne61) {
    h.p_ = kMersenne61;
  } else {
    if (need > kPrimeCeiling || prime_floor > kPrimeCeiling)
      throw ParameterError("hash field would exceed 2^62");
    h.p_ = next_prime(std::max(prime_floor, need));
  }
  h.domain_ = domain;
  h.range_ = range;
  h.seed_ = seed;
  Rng rng(seed);
  h.coeffs_.resize(k);
  for (auto& c : h.coeffs_) c = rng.below(h.p_);
  return h;
}

std::uint64_t KWiseHash::field_value(std::uint64_t x) const {
  x %= p_;
  std::uint64_t acc = 0;
  for (std::uint64_t c : coeffs_) {
    acc = mulmod(acc, x, p_) + c;
    if (acc >= p_) acc -= p_;
  }
  return acc;
}

double eval_unit_interval(const KWiseHash& h, std::uint64_t index) {
  return static_cast<double>(h(index)) / static_cast<double>(kUnitRange);
}

bool unit_accept(const KWiseHash& h, std::uint64_t index, double threshold) {
  if (threshold >= 1.0) return true;
  if (!(threshold > 0.0)) return h(index) == 0;
  // Values of the form j / 2^40 are exact doubles, so this is the real comparison.
  const auto cut = static_cast<std::uint64_t>(std::floor(threshold * static_cast<double>(kUnitRange)));
  return h(index) <= cut;
}

}  // namespace dynmatch
