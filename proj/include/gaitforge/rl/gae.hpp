#pragma once

#include <cstdint>
#include <vector>

#include "gaitforge/ad/array.hpp"

namespace gf::rl {

// Step boundary classification for advantage estimation. Timeouts (and
// segment truncations) bootstrap with the next state's value; true
// terminations do not.
enum class Boundary : uint8_t { kContinue = 0, kTerminal = 1, kTruncated = 2 };

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Standard GAE recursion over one contiguous sequence. bootstrap[t] is the
// value of the state after step t and is read when boundary[t] is
// kTruncated; the last step must be kTerminal or kTruncated.
inline GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
                     const std::vector<Boundary>& boundary, const std::vector<double>& bootstrap,
                     double gamma, double lambda) {
  const size_t n = rewards.size();
  gf::ad::check(values.size() == n && boundary.size() == n && bootstrap.size() == n,
                "gae: length mismatch");
  gf::ad::check(n > 0, "gae: empty sequence");
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double carry = 0.0;
  for (size_t i = n; i-- > 0;) {
    double next_value = 0.0;
    double next_carry = carry;
    switch (boundary[i]) {
      case Boundary::kContinue:
        gf::ad::check(i + 1 < n, "gae: sequence ends mid-episode");
        next_value = values[i + 1];
        break;
      case Boundary::kTerminal:
        next_value = 0.0;
        next_carry = 0.0;
        break;
      case Boundary::kTruncated:
        next_value = bootstrap[i];
        next_carry = 0.0;
        break;
    }
    const double delta = rewards[i] + gamma * next_value - values[i];
    carry = delta + gamma * lambda * next_carry;
    out.advantages[i] = carry;
    out.returns[i] = carry + values[i];
  }
  return out;
}

}  // namespace gf::rl
