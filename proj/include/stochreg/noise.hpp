#ifndef STOCHREG_NOISE_HPP
#define STOCHREG_NOISE_HPP

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace stochreg {

// Scalar Wiener path on a uniform fine grid of step dt.
//
// Increments are produced by a counter-based generator: the pair of normals
// with pair index p = j / 2 is obtained from two 64-bit words of
// splitmix64(seed, p), mapped to uniforms in (0, 1] with 53-bit resolution
// and transformed by Box-Muller (cos branch for even j, sin branch for odd j),
// then scaled by sqrt(dt). Increment j therefore depends only on (seed, j, dt),
// so paths with a longer horizon share the common prefix.
class BrownianPath {
 public:
  static BrownianPath generate(std::uint64_t seed, double dt, double horizon);

  std::uint64_t seed() const { return seed_; }
  double step() const { return dt_; }
  std::size_t size() const { return count_; }
  double horizon() const { return static_cast<double>(count_) * dt_; }

  // Increment over (j dt, (j+1) dt].
  double increment(std::size_t j) const;

  // Exact ascending-order sum of fine increments with indices in [first, last).
  double increment_between(std::size_t first, std::size_t last) const;

  // W(tb) - W(ta); both times must lie on the fine grid.
  double increment_over(double ta, double tb) const;

  // Grid index of t; throws ConfigError when t is off the grid.
  std::size_t grid_index(double t) const;

  std::vector<double> materialize() const;

  // Sums over consecutive blocks of `factor` fine increments.
  std::vector<double> aggregate(std::size_t factor) const;

  // Little-endian dump: u64 seed, f64 dt, u64 N, then N f64 increments.
  void write_binary(std::ostream& os) const;
  static std::vector<double> read_binary(std::istream& is, std::uint64_t* seed = nullptr,
                                         double* dt = nullptr);

 private:
  BrownianPath(std::uint64_t seed, double dt, std::size_t count)
      : seed_(seed), dt_(dt), sqrt_dt_(std::sqrt(dt)), count_(count) {}

  std::uint64_t seed_;
  double dt_;
  double sqrt_dt_;
  std::size_t count_;
};

// Standard normal with counter index j under `seed` (the unscaled draw).
double counter_normal(std::uint64_t seed, std::uint64_t j);

}  // namespace stochreg

#endif  // STOCHREG_NOISE_HPP
