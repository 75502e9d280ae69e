#pragma once

// Independent cross-checks of the kernel machinery: Monte Carlo estimates of
// sphere inner products, quadrature for the one-dimensional orthogonality
// integrals, and the standard zonal test functions. These deliberately favor
// directness over speed; they are the referees, not the players.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sphex/common.hpp"
#include "sphex/harmonics.hpp"
#include "sphex/quadrature.hpp"
#include "sphex/regression.hpp"
#include "sphex/sampling.hpp"

namespace sphex {

using SphereFn = std::function<double(std::span<const double>)>;

struct MCEstimate {
  double value = 0.0;      // estimate of integral over S^{d-1} of f * g
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

// <f, g> = |S^{d-1}| E_w[f(w) g(w)] over uniform w, with a standard error
// from the same pass (Welford). Deterministic in (d, n, seed).
inline MCEstimate mc_inner_product(const SphereFn& f, const SphereFn& g,
                                   unsigned d, std::size_t n,
                                   std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("mc_inner_product: need n >= 2");
  const double area = sphere_area(d);
  SplitMix64 rng(seed);
  SpherePoint w;
  w.x.resize(d);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row{w.x.data(), d};
    do {
      detail::fill_gaussian(rng, row);
    } while (!detail::to_unit(row));
    const double v = area * f(w.x) * g(w.x);
    if (!std::isfinite(v))
      throw std::invalid_argument(
          "mc_inner_product: non-finite integrand at sample index " +
          std::to_string(i));
    const double delta = v - mean;
    mean += delta / double(i + 1);
    m2 += delta * (v - mean);
  }
  MCEstimate est;
  est.value = mean;
  est.std_error = std::sqrt(m2 / double(n - 1) / double(n));
  est.n = n;
  est.seed = seed;
  return est;
}

// f(sigma) = sum_l coeff[l] P_d^l(<sigma, center>). The workhorse test
// function family: any member with degrees <= q lives inside the expansion
// space exactly.
struct ZonalFunction {
  unsigned d = 0;
  SpherePoint center;
  std::vector<double> coeff;  // index = degree
  ZonalRecurrence recur;

  double operator()(std::span<const double> sigma) const {
    double t = 0.0;
    for (unsigned c = 0; c < d; ++c) t += center.x[c] * sigma[c];
    return recur.weighted_sum(clamp_cosine(t), coeff);
  }

  unsigned degree() const { return unsigned(coeff.size()) - 1; }
};

inline ZonalFunction make_zonal(unsigned d, SpherePoint center,
                                std::vector<double> coeff) {
  if (center.dim() != d)
    throw std::invalid_argument("make_zonal: center has wrong dimension");
  if (coeff.empty())
    throw std::invalid_argument("make_zonal: need at least the degree-0 term");
  ZonalFunction f;
  f.d = d;
  f.center = std::move(center);
  f.coeff = std::move(coeff);
  f.recur = ZonalRecurrence(d, f.degree());
  return f;
}

// Random band-limited test function: uniform center, then q+1 standard
// normal coefficients. Consumption order (center first, then coefficients
// as one Gaussian block) is fixed so runs replicate across implementations.
inline ZonalFunction make_bandlimited(const ProblemParams& p,
                                      std::uint64_t seed) {
  SplitMix64 rng(seed);
  SpherePoint center = sample_sphere_point(p.d, rng);
  std::vector<double> coeff(p.q + 1);
  detail::fill_gaussian(rng, coeff);
  return make_zonal(p.d, std::move(center), std::move(coeff));
}

struct ReproducingCheck {
  double estimate = 0.0;   // alpha-scaled Monte Carlo expectation
  double target = 0.0;
  double std_error = 0.0;  // of the scaled estimate
  std::size_t n = 0;
  bool pass = false;       // |estimate - target| <= 5 std errors
};

namespace detail {

inline ReproducingCheck degree_pair_check(const ProblemParams& p, unsigned la,
                                          unsigned lb, const SpherePoint& x,
                                          const SpherePoint& y, std::size_t n,
                                          std::uint64_t seed, double target) {
  if (la > p.q || lb > p.q)
    throw std::invalid_argument("reproducing check: degree exceeds params.q");
  if (x.dim() != p.d || y.dim() != p.d)
    throw std::invalid_argument("reproducing check: point dimension mismatch");
  const GegenbauerPoly& pa = p.poly[la];
  const GegenbauerPoly& pb = p.poly[lb];
  const double scale =
      std::sqrt(double(p.alpha[la]) * double(p.alpha[lb]));
  SplitMix64 rng(seed);
  SpherePoint w;
  w.x.resize(p.d);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row{w.x.data(), p.d};
    do {
      fill_gaussian(rng, row);
    } while (!to_unit(row));
    double tx = 0.0, ty = 0.0;
    for (unsigned c = 0; c < p.d; ++c) {
      tx += x.x[c] * w.x[c];
      ty += y.x[c] * w.x[c];
    }
    const double v = scale * pa(clamp_cosine(tx)) * pb(clamp_cosine(ty));
    const double delta = v - mean;
    mean += delta / double(i + 1);
    m2 += delta * (v - mean);
  }
  ReproducingCheck chk;
  chk.estimate = mean;
  chk.target = target;
  chk.std_error = n > 1 ? std::sqrt(m2 / double(n - 1) / double(n)) : 0.0;
  chk.n = n;
  chk.pass = std::abs(chk.estimate - chk.target) <= 5.0 * chk.std_error;
  return chk;
}

}  // namespace detail

// P_d^l(<x, y>) = alpha_l E_w[P_d^l(<x, w>) P_d^l(<y, w>)]: the degree-l
// component of the kernel reproduces itself under uniform averaging. The
// verdict is a 5-standard-error two-sided test.
inline ReproducingCheck check_reproducing(const ProblemParams& p, unsigned l,
                                          const SpherePoint& x,
                                          const SpherePoint& y, std::size_t n,
                                          std::uint64_t seed) {
  if (l > p.q)
    throw std::invalid_argument("reproducing check: degree exceeds params.q");
  if (x.dim() != p.d || y.dim() != p.d)
    throw std::invalid_argument("reproducing check: point dimension mismatch");
  double txy = 0.0;
  for (unsigned c = 0; c < p.d; ++c) txy += x.x[c] * y.x[c];
  const double target = p.poly[l](clamp_cosine(txy));
  return detail::degree_pair_check(p, l, l, x, y, n, seed, target);
}

// Distinct degrees average to zero; same harness, target 0.
inline ReproducingCheck check_cross_degree(const ProblemParams& p, unsigned la,
                                           unsigned lb, const SpherePoint& x,
                                           const SpherePoint& y, std::size_t n,
                                           std::uint64_t seed) {
  if (la == lb)
    throw std::invalid_argument("check_cross_degree: degrees must differ");
  return detail::degree_pair_check(p, la, lb, x, y, n, seed, 0.0);
}

// integral over [-1,1] of P_d^l P_d^l' (1-t^2)^{(d-3)/2} dt, via the
// substitution t = cos(theta) which turns the weight into sin(theta)^{d-2}
// and removes the d = 2 endpoint singularity. Composite 32-point
// Gauss-Legendre; the default node budget integrates every degree pair under
// the cap to machine precision.
inline double quad_orthogonality(unsigned d, unsigned la, unsigned lb,
                                 unsigned nodes = 512) {
  if (d < 2) throw std::invalid_argument("quad_orthogonality: need d >= 2");
  if (nodes < 64)
    throw std::invalid_argument("quad_orthogonality: need at least 64 nodes");
  const GegenbauerPoly pa(d, la), pb(d, lb);
  const GLRule rule = gauss_legendre(32);
  const unsigned panels = (nodes + 31) / 32;
  const double power = double(d) - 2.0;
  auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    return pa(c) * pb(c) * std::pow(std::sin(theta), power);
  };
  return integrate_panels(integrand, 0.0, std::numbers::pi, rule, panels);
}

// |S^{d-1}| / (alpha_{l,d} |S^{d-2}|) on the diagonal, zero off it.
inline double orthogonality_target(unsigned d, unsigned la, unsigned lb) {
  if (la != lb) return 0.0;
  return sphere_area(d) / (double(harmonic_dim(d, la)) * sphere_area(d - 1));
}

// The kernel diagonal k_{q,d}(w, w). It is the same number for every w on
// the sphere (the cosine is identically 1), which is the fact that lets the
// sampling distribution stay uniform; the unused argument documents intent.
inline double check_leverage_constant(const ProblemParams& p,
                                      const SpherePoint& w) {
  if (w.dim() != p.d)
    throw std::invalid_argument("check_leverage_constant: point has " +
                                std::to_string(w.dim()) +
                                " coordinates, params want " +
                                std::to_string(p.d));
  for (double c : w.x)
    if (!std::isfinite(c))
      throw std::invalid_argument("check_leverage_constant: non-finite point");
  return kernel_value(p, 1.0);
}

// One printed line of a check suite:
//   name, setting, value, target, tolerance, PASS|FAIL
struct CheckLine {
  std::string name;
  std::string setting;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline std::string format_check_line(const CheckLine& c) {
  return c.name + ", " + c.setting + ", " + fmt17(c.value) + ", " +
         fmt17(c.target) + ", " + fmt17(c.tolerance) + ", " +
         (c.pass ? "PASS" : "FAIL");
}

// ---- suites (shared by the CLI and the acceptance gate) ----

// Quadrature vs the closed-form orthogonality constants.
inline std::vector<CheckLine> orthogonality_suite(
    const std::vector<unsigned>& dims = {3, 4, 5}, unsigned lmax = 10) {
  std::vector<CheckLine> lines;
  char buf[96];
  for (unsigned d : dims) {
    for (unsigned la = 0; la <= lmax; ++la) {
      for (unsigned lb = la; lb <= lmax; ++lb) {
        const double got = quad_orthogonality(d, la, lb);
        const double want = orthogonality_target(d, la, lb);
        CheckLine line;
        std::snprintf(buf, sizeof buf, "d=%u l=%u l'=%u", d, la, lb);
        line.name = "orthogonality";
        line.setting = buf;
        line.value = got;
        line.target = want;
        if (la == lb) {
          line.tolerance = 1e-9 * want;  // relative on the diagonal
          line.pass = std::abs(got - want) <= line.tolerance;
        } else {
          line.tolerance = 1e-10;  // absolute off the diagonal
          line.pass = std::abs(got) <= line.tolerance;
        }
        lines.push_back(std::move(line));
      }
    }
  }
  return lines;
}

// Randomized reproducing-property checks plus a batch of cross-degree zeros.
// Passing d_fix >= 2 pins the dimension; q_max >= 0 caps the sampled degree.
inline std::vector<CheckLine> reproducing_suite(unsigned count = 50,
                                                std::size_t n = 200000,
                                                std::uint64_t seed = 2024,
                                                unsigned cross_count = 10,
                                                int d_fix = -1, int q_max = -1) {
  std::vector<CheckLine> lines;
  SplitMix64 pick(seed);
  const unsigned qcap = q_max >= 0 ? unsigned(q_max) : 10;
  if (qcap < 1) cross_count = 0;  // cross checks need two distinct degrees
  char buf[128];
  for (unsigned i = 0; i < count + cross_count; ++i) {
    const bool cross = i >= count;
    const unsigned d =
        d_fix >= 2 ? unsigned(d_fix) : 2 + unsigned(pick.next() % 5);  // 2..6
    const unsigned q = cross ? 1 + unsigned(pick.next() % qcap)
                             : unsigned(pick.next() % (qcap + 1));
    const ProblemParams p(d, q);
    const unsigned la = unsigned(pick.next() % (q + 1));
    unsigned lb = la;
    if (cross)
      while (lb == la) lb = unsigned(pick.next() % (q + 1));
    SpherePoint x = sample_sphere_point(d, pick);
    SpherePoint y = sample_sphere_point(d, pick);
    const std::uint64_t mc_seed = pick.next();
    const ReproducingCheck chk =
        cross ? check_cross_degree(p, la, lb, x, y, n, mc_seed)
              : check_reproducing(p, la, x, y, n, mc_seed);
    CheckLine line;
    std::snprintf(buf, sizeof buf, "d=%u l=%u l'=%u n=%zu", d, la,
                  cross ? lb : la, n);
    line.name = cross ? "cross-degree" : "reproducing";
    line.setting = buf;
    line.value = chk.estimate;
    line.target = chk.target;
    line.tolerance = 5.0 * chk.std_error;
    line.pass = chk.pass;
    lines.push_back(std::move(line));
  }
  return lines;
}

// Kernel diagonal equals beta/|S^{d-1}| and ignores the probe point.
// d_fix >= 2 pins the dimension, q_fix >= 0 pins the degree.
inline std::vector<CheckLine> leverage_suite(unsigned pairs = 20,
                                             std::uint64_t seed = 7,
                                             unsigned probes = 10,
                                             int d_fix = -1, int q_fix = -1) {
  std::vector<CheckLine> lines;
  SplitMix64 pick(seed);
  char buf[96];
  for (unsigned i = 0; i < pairs; ++i) {
    const unsigned d =
        d_fix >= 2 ? unsigned(d_fix) : 2 + unsigned(pick.next() % 5);  // 2..6
    const unsigned q =
        q_fix >= 0 ? unsigned(q_fix) : unsigned(pick.next() % 11);     // 0..10
    const ProblemParams p(d, q);
    const double want = double(p.beta) / p.area;
    bool constant = true;
    double got = 0.0;
    for (unsigned k = 0; k < probes; ++k) {
      SpherePoint w = sample_sphere_point(d, pick);
      const double v = check_leverage_constant(p, w);
      if (k == 0)
        got = v;
      else if (v != got)
        constant = false;  // must be bit-identical across probes
    }
    CheckLine line;
    std::snprintf(buf, sizeof buf, "d=%u q=%u probes=%u", d, q, probes);
    line.name = "leverage-constant";
    line.setting = buf;
    line.value = got;
    line.target = want;
    line.tolerance = 1e-12 * want;
    line.pass = constant && std::abs(got - want) <= line.tolerance;
    lines.push_back(std::move(line));
  }
  return lines;
}

// Subspace dimensions against an independent binomial identity:
// beta_{q,d} = C(d+q-1, q) + C(d+q-2, q-1).
inline std::vector<CheckLine> dims_suite(std::vector<unsigned> dims = {},
                                         unsigned qmax = 12) {
  if (dims.empty())
    for (unsigned d = 2; d <= 8; ++d) dims.push_back(d);
  std::vector<CheckLine> lines;
  char buf[64];
  for (unsigned d : dims) {
    for (unsigned q = 0; q <= qmax; ++q) {
      const std::uint64_t beta = cumulative_dim(d, q);
      const std::uint64_t identity =
          detail::binomial(d + q - 1, q) +
          (q >= 1 ? detail::binomial(d + q - 2, q - 1) : 0);
      CheckLine line;
      std::snprintf(buf, sizeof buf, "d=%u q=%u", d, q);
      line.name = "dimension-identity";
      line.setting = buf;
      line.value = double(beta);
      line.target = double(identity);
      line.tolerance = 0.0;
      line.pass = beta == identity;
      lines.push_back(std::move(line));
    }
  }
  // d = 3 sanity: beta is the perfect square (q+1)^2
  if (std::find(dims.begin(), dims.end(), 3u) == dims.end()) return lines;
  for (unsigned q = 0; q <= qmax; ++q) {
    CheckLine line;
    std::snprintf(buf, sizeof buf, "d=3 q=%u", q);
    line.name = "dimension-square";
    line.setting = buf;
    line.value = double(cumulative_dim(3, q));
    line.target = double((q + 1) * (q + 1));
    line.tolerance = 0.0;
    line.pass = line.value == line.target;
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace sphex
