#ifndef CECM_RANDOM_HPP
#define CECM_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace cecm {

/// Deterministic standard-normal sampler (Box-Muller over mt19937_64).
/// Hand-rolled so that streams are bit-identical across standard libraries.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    have_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cecm

#endif
