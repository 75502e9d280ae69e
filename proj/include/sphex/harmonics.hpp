#pragma once

// Dimensions of spherical-harmonic subspaces on S^{d-1} and the Gegenbauer
// polynomials attached to them. Everything here is exact combinatorics plus
// stable polynomial evaluation; no linear algebra, no allocation in hot paths.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphex/common.hpp"

namespace sphex {

// Coefficient magnitudes of the polynomials overflow binary64 usefulness past
// this degree, so it is a hard cap rather than a soft warning.
inline constexpr unsigned max_degree = 64;

namespace detail {

// C(n, k) in exact integer arithmetic. The running product of j consecutive
// integers is divisible by j!, so interleaved multiply/divide stays integral.
// Throws std::overflow_error instead of wrapping.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (std::uint64_t j = 1; j <= k; ++j) {
    r *= n - k + j;
    r /= j;
    if (r > std::numeric_limits<std::uint64_t>::max())
      throw std::overflow_error("binomial(" + std::to_string(n) + ", " +
                                std::to_string(k) + ") exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace detail

// alpha_{l,d}: dimension of the space of degree-l spherical harmonics on
// S^{d-1}. For d = 3 this is the familiar 2l + 1.
inline std::uint64_t harmonic_dim(unsigned d, unsigned l) {
  if (d < 2) throw std::invalid_argument("harmonic_dim: need d >= 2");
  if (l == 0) return 1;
  if (l == 1) return d;
  // degree-l homogeneous harmonics: C(d+l-1, l) - C(d+l-3, l-2)
  return detail::binomial(d + l - 1, l) - detail::binomial(d + l - 3, l - 2);
}

// beta_{q,d} = sum_{l=0..q} alpha_{l,d}: dimension of the full expansion
// space up to degree q. Summed directly; no closed form is trusted here
// (one is cross-checked in the tests instead).
inline std::uint64_t cumulative_dim(unsigned d, unsigned q) {
  std::uint64_t b = 0;
  for (unsigned l = 0; l <= q; ++l) {
    const std::uint64_t a = harmonic_dim(d, l);
    if (b > std::numeric_limits<std::uint64_t>::max() - a)
      throw std::overflow_error("cumulative_dim(" + std::to_string(d) + ", " +
                                std::to_string(q) + ") exceeds 64 bits");
    b += a;
  }
  return b;
}

// Surface area of S^{d-1} in R^d: 2 pi^{d/2} / Gamma(d/2), evaluated through
// lgamma so large d cannot overflow intermediate Gamma values.
inline double sphere_area(unsigned d) {
  if (d < 1) throw std::invalid_argument("sphere_area: need d >= 1");
  return 2.0 * std::exp(0.5 * d * std::log(std::numbers::pi) -
                        std::lgamma(0.5 * d));
}

// P_d^l on [-1, 1], normalized so P_d^l(1) = 1. For d = 3 these are the
// Legendre polynomials; for d = 2, Chebyshev. Stored in the mixed form
//
//   P(t) = sum_{j=0}^{floor(l/2)} c_j t^{l-2j} (1 - t^2)^j
//
// with c_0 = 1 and c_{j+1} = -c_j (l-2j)(l-2j-1) / (2(j+1)(d-1+2j)).
// The (1 - t^2)^j factors keep individual terms small near the endpoints,
// which is exactly where plain monomial expansions of high-degree Legendre
// family polynomials shed digits.
class GegenbauerPoly {
 public:
  GegenbauerPoly(unsigned d, unsigned l) : d_(d), l_(l) {
    if (d < 2) throw std::invalid_argument("GegenbauerPoly: need d >= 2");
    if (l > max_degree)
      throw std::invalid_argument("GegenbauerPoly: degree " + std::to_string(l) +
                                  " exceeds cap " + std::to_string(max_degree));
    coeff_.resize(l / 2 + 1);
    coeff_[0] = 1.0;
    for (unsigned j = 0; j + 1 < coeff_.size(); ++j) {
      const double num = double(l - 2 * j) * double(l - 2 * j - 1);
      const double den = 2.0 * double(j + 1) * double(d - 1 + 2 * j);
      coeff_[j + 1] = -coeff_[j] * num / den;
    }
  }

  // Horner in (1 - t^2) against precomputed powers of t^2. Exactly 1.0 at
  // t = 1 and (-1)^l at t = -1; |t| up to 1 + 1e-9 is clamped onto the
  // endpoint, anything worse raises std::domain_error.
  double operator()(double t) const {
    t = clamp_cosine(t);
    const double t2 = t * t;
    const double u = 1.0 - t2;
    const std::size_t m = coeff_.size() - 1;
    std::array<double, max_degree / 2 + 1> t2pow;
    t2pow[0] = 1.0;
    for (std::size_t k = 1; k <= m; ++k) t2pow[k] = t2pow[k - 1] * t2;
    double s = 0.0;
    for (std::size_t j = m + 1; j-- > 0;) s = s * u + coeff_[j] * t2pow[m - j];
    return (l_ % 2 != 0) ? s * t : s;
  }

  unsigned dim_ambient() const { return d_; }
  unsigned degree() const { return l_; }
  const std::vector<double>& coefficients() const { return coeff_; }

 private:
  unsigned d_, l_;
  std::vector<double> coeff_;
};

// Evaluates the whole family P_d^0 .. P_d^q at one point in O(q) through the
// degree recurrence
//
//   (l + d - 2) P_{l+1}(t) = (2l + d - 2) t P_l(t) - l P_{l-1}(t),
//
// seeded with P_0 = 1, P_1 = t. The ratios are divided out once at
// construction so the per-degree step in the hot loops is multiply-only.
class ZonalRecurrence {
 public:
  ZonalRecurrence() = default;

  ZonalRecurrence(unsigned d, unsigned q) : d_(d), q_(q), a_(q + 1), b_(q + 1) {
    if (d < 2) throw std::invalid_argument("ZonalRecurrence: need d >= 2");
    for (unsigned l = 1; l < q; ++l) {
      a_[l] = double(2 * l + d - 2) / double(l + d - 2);
      b_[l] = double(l) / double(l + d - 2);
    }
  }

  unsigned top_degree() const { return q_; }

  // Fills out[0..q] with P_d^l(t). The clamp matches GegenbauerPoly's.
  void basis(double t, std::span<double> out) const {
    t = clamp_cosine(t);
    out[0] = 1.0;
    if (q_ == 0) return;
    out[1] = t;
    for (unsigned l = 1; l < q_; ++l)
      out[l + 1] = a_[l] * t * out[l] - b_[l] * out[l - 1];
  }

  // sum_l w[l] P_d^l(t) without materializing the basis.
  double weighted_sum(double t, std::span<const double> w) const {
    t = clamp_cosine(t);
    double acc = w[0];
    if (q_ == 0) return acc;
    double pm = 1.0, pc = t;
    acc += w[1] * t;
    for (unsigned l = 1; l < q_; ++l) {
      const double pn = a_[l] * t * pc - b_[l] * pm;
      acc += w[l + 1] * pn;
      pm = pc;
      pc = pn;
    }
    return acc;
  }

 private:
  unsigned d_ = 0, q_ = 0;
  std::vector<double> a_, b_;
};

// Everything one (d, q) pair needs, precomputed once: subspace dimensions,
// sphere areas, and the polynomial family in both the coefficient form and
// the recurrence form. Immutable after construction, safe to share across
// threads by const reference.
struct ProblemParams {
  unsigned d = 0;
  unsigned q = 0;
  std::vector<std::uint64_t> alpha;  // alpha[l], l = 0..q
  std::vector<double> alpha_f;       // same, as doubles, for weighting
  std::uint64_t beta = 0;            // sum of alpha
  double area = 0.0;                 // |S^{d-1}|
  double area_sub = 0.0;             // |S^{d-2}|, used by quadrature targets
  std::vector<GegenbauerPoly> poly;  // degrees 0..q
  ZonalRecurrence recur;

  ProblemParams(unsigned d_in, unsigned q_in) : d(d_in), q(q_in) {
    if (d < 2) throw std::invalid_argument("ProblemParams: need d >= 2");
    if (q > max_degree)
      throw std::invalid_argument("ProblemParams: degree " + std::to_string(q) +
                                  " exceeds cap " + std::to_string(max_degree));
    alpha.reserve(q + 1);
    alpha_f.reserve(q + 1);
    poly.reserve(q + 1);
    for (unsigned l = 0; l <= q; ++l) {
      alpha.push_back(harmonic_dim(d, l));
      alpha_f.push_back(double(alpha.back()));
      poly.emplace_back(d, l);
    }
    beta = cumulative_dim(d, q);
    area = sphere_area(d);
    area_sub = sphere_area(d - 1);
    recur = ZonalRecurrence(d, q);
  }
};

}  // namespace sphex
