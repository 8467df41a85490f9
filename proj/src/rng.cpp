#include "causalembed/rng.hpp"

#include <cmath>
#include <numbers>

namespace causalembed {

namespace {

constexpr std::uint32_t kMultiplier0 = 0xD2511F53u;
constexpr std::uint32_t kMultiplier1 = 0xCD9E8D57u;
constexpr std::uint32_t kKeyBump0 = 0x9E3779B9u;
constexpr std::uint32_t kKeyBump1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
  const std::uint64_t product =
      static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b);
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

PhiloxRng::PhiloxRng(std::uint64_t seed, std::uint64_t stream) {
  key_[0] = static_cast<std::uint32_t>(seed);
  key_[1] = static_cast<std::uint32_t>(seed >> 32);
  ctr_[0] = 0;
  ctr_[1] = 0;
  ctr_[2] = static_cast<std::uint32_t>(stream);
  ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
}

void PhiloxRng::block(const std::uint32_t key[2], const std::uint32_t ctr[4],
                      std::uint32_t out[4]) {
  std::uint32_t k0 = key[0];
  std::uint32_t k1 = key[1];
  std::uint32_t x0 = ctr[0];
  std::uint32_t x1 = ctr[1];
  std::uint32_t x2 = ctr[2];
  std::uint32_t x3 = ctr[3];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kMultiplier0, x0, hi0, lo0);
    mul_hi_lo(kMultiplier1, x2, hi1, lo1);
    const std::uint32_t y0 = hi1 ^ x1 ^ k0;
    const std::uint32_t y1 = lo1;
    const std::uint32_t y2 = hi0 ^ x3 ^ k1;
    const std::uint32_t y3 = lo0;
    x0 = y0;
    x1 = y1;
    x2 = y2;
    x3 = y3;
    k0 += kKeyBump0;
    k1 += kKeyBump1;
  }
  out[0] = x0;
  out[1] = x1;
  out[2] = x2;
  out[3] = x3;
}

void PhiloxRng::refill() {
  block(key_, ctr_, buffer_);
  buffered_ = 4;
  // 64-bit block counter in words 0..1; the stream tag in words 2..3 is
  // never touched.
  if (++ctr_[0] == 0) {
    ++ctr_[1];
  }
}

std::uint32_t PhiloxRng::next_u32() {
  if (buffered_ == 0) {
    refill();
  }
  return buffer_[4 - buffered_--];
}

std::uint64_t PhiloxRng::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double PhiloxRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double PhiloxRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double PhiloxRng::normal() {
  // First uniform shifted into (0, 1] so the logarithm is finite.
  const double u1 =
      (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double PhiloxRng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

}  // namespace causalembed
