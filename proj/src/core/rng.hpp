#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gp {

// splitmix64; used to derive independent per-stage seeds from one root seed.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable seed for a named stage. Hashing the name keeps the derivation
// independent of call order, so pipeline and standalone runs agree.
inline uint64_t stage_seed(uint64_t root, std::string_view stage) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  uint64_t s = root ^ h;
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  // Inclusive bounds.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(eng_);
  }
  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(eng_);
  }
  uint64_t next_u64() { return eng_(); }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gp
