#pragma once

// Deterministic uniform sampling on S^{d-1}.
//
// The generator and its consumption order are pinned exactly, so any
// implementation in any language can reproduce the same points bit for bit:
//
//   stream   SplitMix64 (Steele/Lea/Flood constants):
//              state += 0x9E3779B97F4A7C15
//              z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//              z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31
//   unit     top 53 bits: u = (z >> 11) * 2^-53, giving u in [0, 1)
//   normals  Marsaglia polar rejection: a = 2u - 1, b = 2u' - 1 (drawn in
//            that order); reject unless r = a^2 + b^2 lies in (0, 1); accept
//            as (a*g, b*g) with g = sqrt(-2 ln r / r)
//   point    ceil(d/2) accepted pairs in sequence; for odd d the second
//            normal of the final pair is discarded. If the resulting
//            d-vector has norm below 1e-150 the whole point is redrawn.
//            Points come one after another from a single stream.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sphex {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53 random bits
  double next_unit() { return double(next() >> 11) * 0x1.0p-53; }

  // First output of a stream seeded with x. Increment and finalizer are both
  // bijections on 64-bit words, so distinct inputs cannot collide.
  static std::uint64_t mix(std::uint64_t x) { return SplitMix64(x).next(); }

 private:
  std::uint64_t state_;
};

// Stable per-trial seeds. mix is a bijection and addition by a fixed master
// is one too, so for a fixed master seed all 2^64 trial indices map to
// distinct seeds; no birthday collisions, by construction.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed,
                                       std::uint64_t trial_index) {
  return SplitMix64::mix(master_seed + SplitMix64::mix(trial_index));
}

struct SpherePoint {
  std::vector<double> x;
  unsigned dim() const { return static_cast<unsigned>(x.size()); }
};

// n points on S^{d-1}, stored row-major in one flat buffer. The seed that
// produced a sampled set rides along for provenance; sets built from user
// data carry seed 0.
class SampleSet {
 public:
  SampleSet() = default;

  SampleSet(unsigned d, std::size_t n, std::uint64_t seed = 0)
      : d_(d), seed_(seed), pts_(std::size_t(d) * n) {
    if (d < 2) throw std::invalid_argument("SampleSet: need d >= 2");
  }

  static SampleSet adopt(unsigned d, std::vector<double> flat,
                         std::uint64_t seed = 0) {
    if (d < 2) throw std::invalid_argument("SampleSet: need d >= 2");
    if (flat.size() % d != 0)
      throw std::invalid_argument("SampleSet: buffer of " +
                                  std::to_string(flat.size()) +
                                  " values is not a multiple of d = " +
                                  std::to_string(d));
    SampleSet s;
    s.d_ = d;
    s.seed_ = seed;
    s.pts_ = std::move(flat);
    return s;
  }

  unsigned dim() const { return d_; }
  std::size_t size() const { return d_ ? pts_.size() / d_ : 0; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> operator[](std::size_t i) const {
    return {pts_.data() + i * d_, d_};
  }
  double* row(std::size_t i) { return pts_.data() + i * d_; }
  const std::vector<double>& flat() const { return pts_; }

 private:
  unsigned d_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> pts_;
};

namespace detail {

// one accepted Marsaglia pair, exactly as pinned above
inline void polar_pair(SplitMix64& g, double& n0, double& n1) {
  for (;;) {
    const double a = 2.0 * g.next_unit() - 1.0;
    const double b = 2.0 * g.next_unit() - 1.0;
    const double r = a * a + b * b;
    if (r >= 1.0 || r == 0.0) continue;
    const double m = std::sqrt(-2.0 * std::log(r) / r);
    n0 = a * m;
    n1 = b * m;
    return;
  }
}

// d standard normals per the point contract (odd d discards the last spare)
inline void fill_gaussian(SplitMix64& g, std::span<double> out) {
  std::size_t i = 0;
  for (; i + 1 < out.size(); i += 2) polar_pair(g, out[i], out[i + 1]);
  if (i < out.size()) {
    double spare;
    polar_pair(g, out[i], spare);
  }
}

// normalizes in place; false if the vector is too short to normalize safely
inline bool to_unit(std::span<double> v) {
  double ss = 0.0;
  for (double c : v) ss += c * c;
  const double norm = std::sqrt(ss);
  if (norm < 1e-150) return false;
  for (double& c : v) c /= norm;
  return true;
}

}  // namespace detail

// One uniform point drawn from (and advancing) the caller's stream.
inline SpherePoint sample_sphere_point(unsigned d, SplitMix64& g) {
  if (d < 2) throw std::invalid_argument("sample_sphere_point: need d >= 2");
  SpherePoint p;
  p.x.resize(d);
  do {
    detail::fill_gaussian(g, p.x);
  } while (!detail::to_unit(p.x));
  return p;
}

// n i.i.d. uniform points on S^{d-1}; identical output for identical
// (d, n, seed) on every platform, regardless of threads elsewhere.
inline SampleSet sample_uniform_sphere(unsigned d, std::size_t n,
                                       std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("sample_uniform_sphere: need d >= 2");
  if (n < 1) throw std::invalid_argument("sample_uniform_sphere: need n >= 1");
  SampleSet set(d, n, seed);
  SplitMix64 g(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row{set.row(i), d};
    do {
      detail::fill_gaussian(g, row);
    } while (!detail::to_unit(row));
  }
  return set;
}

}  // namespace sphex
