#include "stochreg/noise.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "stochreg/linalg.hpp"

namespace stochreg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// (0, 1] with 53 random bits, never 0 so log() stays finite.
double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  os.write(buf, 8);
}

template <typename T>
T get_le(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw Error("truncated increment dump");
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t j) {
  const std::uint64_t pair = j >> 1;
  const std::uint64_t key = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  const std::uint64_t w1 = splitmix64(key + 2 * pair);
  const std::uint64_t w2 = splitmix64(key + 2 * pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(to_unit(w1)));
  const double angle = 2.0 * M_PI * to_unit(w2);
  return (j & 1U) ? radius * std::sin(angle) : radius * std::cos(angle);
}

BrownianPath BrownianPath::generate(std::uint64_t seed, double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("Brownian path needs dt > 0 and T > 0");
  const double count = std::ceil(horizon / dt - 1e-9);
  if (!(count < static_cast<double>(std::numeric_limits<std::int64_t>::max())))
    throw ConfigError("Brownian path increment count overflows the index type");
  return BrownianPath(seed, dt, static_cast<std::size_t>(count));
}

double BrownianPath::increment(std::size_t j) const { return sqrt_dt_ * counter_normal(seed_, j); }

double BrownianPath::increment_between(std::size_t first, std::size_t last) const {
  if (first > last || last > count_) throw ConfigError("increment index range outside the path");
  double sum = 0.0;
  for (std::size_t j = first; j < last; ++j) sum += increment(j);
  return sum;
}

std::size_t BrownianPath::grid_index(double t) const {
  const double q = t / dt_;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-7 * std::max(1.0, std::abs(q)) || r < 0.0)
    throw ConfigError("time " + std::to_string(t) + " is not on the fine grid");
  return static_cast<std::size_t>(r);
}

double BrownianPath::increment_over(double ta, double tb) const {
  const std::size_t a = grid_index(ta);
  const std::size_t b = grid_index(tb);
  if (a > b) throw ConfigError("increment_over requires ta <= tb");
  return increment_between(a, b);
}

std::vector<double> BrownianPath::materialize() const {
  std::vector<double> out(count_);
  for (std::size_t j = 0; j < count_; ++j) out[j] = increment(j);
  return out;
}

std::vector<double> BrownianPath::aggregate(std::size_t factor) const {
  if (factor == 0) throw ConfigError("aggregation factor must be positive");
  std::vector<double> out(count_ / factor);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = increment_between(k * factor, (k + 1) * factor);
  return out;
}

void BrownianPath::write_binary(std::ostream& os) const {
  put_le<std::uint64_t>(os, seed_);
  put_le<double>(os, dt_);
  put_le<std::uint64_t>(os, count_);
  for (std::size_t j = 0; j < count_; ++j) put_le<double>(os, increment(j));
}

std::vector<double> BrownianPath::read_binary(std::istream& is, std::uint64_t* seed, double* dt) {
  const auto s = get_le<std::uint64_t>(is);
  const auto step = get_le<double>(is);
  const auto count = get_le<std::uint64_t>(is);
  if (seed) *seed = s;
  if (dt) *dt = step;
  std::vector<double> out(count);
  for (auto& v : out) v = get_le<double>(is);
  return out;
}

}  // namespace stochreg
