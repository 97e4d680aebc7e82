#pragma once

#include <array>
#include <cstdint>

namespace splab {

/// Counter-based RNG: a 10-round Philox-style 4x64 bijection keyed by
/// (seed, path_id) with the counter (step, block). Draws within a step are
/// served sequentially from consecutive blocks, so every (seed, path, step)
/// stream is reproducible independently of execution order or thread count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t path_id)
      : key0_(seed), key1_(path_id) {
    at_step(0);
  }

  /// Rewind the stream to the beginning of a step.
  void at_step(std::uint64_t step) {
    step_ = step;
    block_ = 0;
    have_ = 0;
  }

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    return buf_[--have_];
  }

  /// Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the inverse CDF (Wichura's PPND16); one draw each.
  double normal();

  /// Poisson with arbitrary mean (Knuth product below 10, PTRD above).
  std::uint64_t poisson(double mean);

  /// Gamma(shape, scale=1) for shape >= 1 (Marsaglia-Tsang squeeze).
  double gamma(double shape);

 private:
  std::uint64_t key0_, key1_;
  std::uint64_t step_{0}, block_{0};
  std::array<std::uint64_t, 4> buf_{};
  int have_{0};

  void refill();
};

/// Inverse standard normal CDF, accurate to ~1e-15 (PPND16).
double inverse_normal_cdf(double p);

}  // namespace splab
