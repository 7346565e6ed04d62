#pragma once

#include <cstdint>
#include <vector>

namespace dynmatch {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;
inline constexpr std::uint64_t kUnitRange = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kPrimeCeiling = std::uint64_t{1} << 62;

bool is_prime(std::uint64_t x);
// Smallest prime >= x; ParameterError if that exceeds kPrimeCeiling.
std::uint64_t next_prime(std::uint64_t x);

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t p);
std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t p);

// Degree-(k-1) polynomial over Z_p, reduced into [0, range).
class KWiseHash {
 public:
  KWiseHash() = default;

  // p is 2^61-1 unless prime_floor is given, in which case p is the smallest
  // prime >= max(prime_floor, domain, range).
  static KWiseHash sample(unsigned k, std::uint64_t domain, std::uint64_t range, std::uint64_t seed,
                          std::uint64_t prime_floor = 0);

  std::uint64_t field_value(std::uint64_t x) const;
  std::uint64_t operator()(std::uint64_t x) const { return field_value(x) % range_; }

  unsigned k() const { return static_cast<unsigned>(coeffs_.size()); }
  std::uint64_t domain() const { return domain_; }
  std::uint64_t range() const { return range_; }
  std::uint64_t prime() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint64_t>& coefficients() const { return coeffs_; }

  // k field elements plus (domain, range, p, seed).
  std::size_t words() const { return coeffs_.size() + 4; }

  bool operator==(const KWiseHash&) const = default;

 private:
  std::vector<std::uint64_t> coeffs_;  // highest degree first
  std::uint64_t domain_ = 1, range_ = 1, p_ = kMersenne61, seed_ = 0;
};

// h(index) / 2^40 for a hash whose range is 2^40.
double eval_unit_interval(const KWiseHash& h, std::uint64_t index);

inline KWiseHash sample_unit_hash(unsigned k, std::uint64_t domain, std::uint64_t seed) {
  return KWiseHash::sample(k, domain, kUnitRange, seed);
}

// h(index) <= min(1, threshold), compared in integer bucket space.
bool unit_accept(const KWiseHash& h, std::uint64_t index, double threshold);

}  // namespace dynmatch
