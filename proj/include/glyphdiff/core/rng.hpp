#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace gd {

// Deterministic RNG with a fixed algorithm (splitmix64 seeding + xoshiro256++
// core, Box-Muller normals). std::mt19937 distributions are implementation
// defined; everything here is pinned so corpora and training runs are
// reproducible byte for byte.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) { reseed(seed); }

  void reseed(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
    have_normal_ = false;
  }

  // Independent stream for (seed, index) pairs; used by per-sample workers.
  Rng derive(uint64_t stream) const {
    uint64_t x = s_[0] ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    return Rng(x ^ s_[1]);
  }

  uint64_t next_u64() {
    uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 bits.
  double u01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n ? uint64_t(u01() * double(n)) % n : 0; }

  int range(int lo, int hi) { return lo + int(below(uint64_t(hi - lo + 1))); }

  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return cached_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = u01();
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_normal_ = true;
    return r * std::cos(a);
  }

  // Index sampled from unnormalized weights.
  size_t categorical(const std::vector<double>& w) {
    double total = 0;
    for (double v : w) total += v;
    double x = u01() * total;
    for (size_t i = 0; i < w.size(); ++i) {
      x -= w[i];
      if (x < 0) return i;
    }
    return w.empty() ? 0 : w.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4] = {1, 2, 3, 4};
  bool have_normal_ = false;
  double cached_ = 0.0;
};

}  // namespace gd
