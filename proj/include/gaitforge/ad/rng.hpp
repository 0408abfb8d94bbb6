#pragma once

#include <cmath>
#include <cstdint>

namespace gf {

// Counter-based random stream. Every draw is a pure function of
// (key, counter), so streams keyed by (seed, env, episode, purpose) give
// results that do not depend on worker scheduling.
class Rng {
 public:
  Rng() = default;
  explicit Rng(uint64_t key) : key_(key) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Hash-chain key derivation: derive(master, a, b, ...) gives independent
  // streams for nested scopes.
  static uint64_t derive(uint64_t key, uint64_t salt) {
    return mix(key ^ mix(salt ^ 0xd1b54a32d192ed03ull));
  }
  template <typename... Rest>
  static uint64_t derive(uint64_t key, uint64_t salt, Rest... rest) {
    return derive(derive(key, salt), rest...);
  }

  uint64_t next_u64() { return mix(key_ ^ mix(counter_++)); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  uint64_t key() const { return key_; }

 private:
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gf
