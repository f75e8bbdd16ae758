#ifndef RASGG_RNG_HPP_
#define RASGG_RNG_HPP_

#include "rasgg/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace rasgg {

/// SplitMix64 finalizer; used only to derive well-spread seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named, counter-derived random substream. The same (seed, tag, a, b)
/// always yields the same engine state, independent of call order.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view tag,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = mix64(seed ^ hash_tag(tag));
  s = mix64(s ^ a);
  s = mix64(s ^ (b * 0x2545f4914f6cdd1dULL));
  return std::mt19937_64(s);
}

/// SplitMix64 as a standard random bit generator. Cheap to seed, so it backs
/// the many short-lived per-instance substreams where seeding a Mersenne
/// Twister would dominate the cost of the few draws made.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    const std::uint64_t x = state_;
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(x);
  }

 private:
  std::uint64_t state_;
};

/// make_stream() with the lightweight engine.
inline SplitMix64 make_light_stream(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
  std::uint64_t s = mix64(seed ^ hash_tag(tag));
  s = mix64(s ^ a);
  s = mix64(s ^ (b * 0x2545f4914f6cdd1dULL));
  return SplitMix64(s);
}

/// Draws an index from the (not necessarily normalized) weights by inverting
/// the cumulative sum. Zero-weight entries are never selected.
template <typename Derived, typename Engine>
std::size_t sample_categorical(const Eigen::MatrixBase<Derived>& w, Engine& rng) {
  const double total = w.sum();
  if (!(total > 0.0)) throw Error("sampling", "categorical weights sum to zero");
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    acc += w[i];
    last_positive = i;
    if (u < acc) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(last_positive);
}

/// Beta(alpha, beta) via the ratio of two Gamma draws.
template <typename Engine>
double sample_beta(double alpha, double beta, Engine& rng) {
  if (!(alpha > 0.0 && beta > 0.0)) throw Error("sampling", "beta shape parameters must be > 0");
  const double x = std::gamma_distribution<double>(alpha, 1.0)(rng);
  const double y = std::gamma_distribution<double>(beta, 1.0)(rng);
  if (x + y <= 0.0) return 0.5;
  return x / (x + y);
}

}  // namespace rasgg

#endif  // RASGG_RNG_HPP_
