#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "sphex/quadrature.hpp"
#include "sphex/regression.hpp"
#include "sphex/sampling.hpp"

using namespace sphex;

namespace {

// Marginal CDF of one coordinate of a uniform point on S^{d-1}, computed by
// numerical integration of the density prop. to sin(theta)^{d-2} after
// t = cos(theta); independent of any closed form.
double marginal_cdf(unsigned d, double t, const GLRule& rule) {
  auto w = [d](double theta) {
    return std::pow(std::sin(theta), double(d) - 2.0);
  };
  const double theta = std::acos(std::clamp(t, -1.0, 1.0));
  const double total = integrate_panels(w, 0.0, std::numbers::pi, rule, 16);
  const double upper = integrate_panels(w, theta, std::numbers::pi, rule, 16);
  return upper / total;
}

// KS distance of the samples against the integrated marginal. The CDF at the
// sorted samples is built incrementally, one short quadrature panel between
// neighbors, so large n stays cheap.
double ks_statistic(std::vector<double> samples, unsigned d,
                    const GLRule& rule) {
  std::sort(samples.begin(), samples.end());
  auto w = [d](double theta) {
    return std::pow(std::sin(theta), double(d) - 2.0);
  };
  const double total = integrate_panels(w, 0.0, std::numbers::pi, rule, 16);
  const double n = double(samples.size());
  double worst = 0.0;
  double acc = 0.0;
  double prev_theta = std::numbers::pi;  // CDF runs up from t = -1
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double theta = std::acos(std::clamp(samples[i], -1.0, 1.0));
    acc += integrate_panels(w, theta, prev_theta, rule, 1);
    prev_theta = theta;
    const double cdf = acc / total;
    worst = std::max(worst, std::abs(cdf - double(i) / n));
    worst = std::max(worst, std::abs(cdf - double(i + 1) / n));
  }
  return worst;
}

}  // namespace

TEST_CASE("generator matches the published output sequence", "[sampling]") {
  SplitMix64 g0(0);
  CHECK(g0.next() == 0xe220a8397b1dcdafULL);
  CHECK(g0.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(g0.next() == 0x06c45d188009454fULL);

  SplitMix64 g1(1);
  CHECK(g1.next() == 0x910a2dec89025cc1ULL);
  CHECK(g1.next() == 0xbeeb8da1658eec67ULL);
  CHECK(g1.next() == 0xf893a2eefb32555eULL);

  SplitMix64 gx(0x123456789abcdefULL);
  CHECK(gx.next() == 0x157a3807a48faa9dULL);
  CHECK(gx.next() == 0xd573529b34a1d093ULL);
  CHECK(gx.next() == 0x2f90b72e996dccbeULL);
}

TEST_CASE("unit doubles use the top 53 bits", "[sampling]") {
  SplitMix64 g(42);
  const double u = g.next_unit();
  CHECK(u == double(0xbdd732262feb6e95ULL >> 11) * 0x1.0p-53);
  CHECK(u == Catch::Approx(0.7415648787718233).epsilon(1e-16));
  SplitMix64 h(42);
  for (int i = 0; i < 1000; ++i) {
    const double v = h.next_unit();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("trial seed derivation is stable and collision-free", "[sampling]") {
  CHECK(derive_trial_seed(7, 0) == 0x120dec2b42f2827eULL);
  CHECK(derive_trial_seed(7, 1) == 0x33180454ba17a00cULL);
  CHECK(derive_trial_seed(7, 2) == 0x07b7474fc54d451fULL);
  CHECK(derive_trial_seed(7, 1) == derive_trial_seed(7, 1));
  CHECK(derive_trial_seed(7, 0) != derive_trial_seed(8, 0));

  std::vector<std::uint64_t> seen;
  seen.reserve(1000000);
  for (std::uint64_t i = 0; i < 1000000; ++i)
    seen.push_back(derive_trial_seed(123, i));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("sampling is deterministic and unit-norm", "[sampling]") {
  const SampleSet a = sample_uniform_sphere(4, 500, 99);
  const SampleSet b = sample_uniform_sphere(4, 500, 99);
  CHECK(a.flat() == b.flat());  // bitwise
  CHECK(a.seed() == 99);
  CHECK(a.dim() == 4);
  CHECK(a.size() == 500);

  const SampleSet c = sample_uniform_sphere(4, 500, 100);
  CHECK(a.flat() != c.flat());

  for (std::size_t i = 0; i < a.size(); ++i) {
    double ss = 0.0;
    for (double x : a[i]) ss += x * x;
    REQUIRE(std::abs(std::sqrt(ss) - 1.0) <= 1e-12);
  }
}

TEST_CASE("single-point draws advance the stream like batch draws",
          "[sampling]") {
  SplitMix64 g(321);
  const SpherePoint p0 = sample_sphere_point(5, g);
  const SpherePoint p1 = sample_sphere_point(5, g);
  const SampleSet batch = sample_uniform_sphere(5, 2, 321);
  for (unsigned c = 0; c < 5; ++c) {
    CHECK(p0.x[c] == batch[0][c]);
    CHECK(p1.x[c] == batch[1][c]);
  }
}

TEST_CASE("gaussian pairs have the right moments", "[sampling]") {
  SplitMix64 g(2718);
  const std::size_t n = 1000000;
  std::vector<double> buf(2);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n / 2; ++i) {
    detail::polar_pair(g, buf[0], buf[1]);
    sum += buf[0] + buf[1];
    sumsq += buf[0] * buf[0] + buf[1] * buf[1];
  }
  const double mean = sum / double(n);
  const double var = sumsq / double(n) - mean * mean;
  CHECK(std::abs(mean) < 5e-3);
  CHECK(var == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("empirical mean vector is small", "[sampling]") {
  const std::size_t n = 10000;
  const SampleSet pts = sample_uniform_sphere(3, n, 17);
  double m[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i)
    for (unsigned c = 0; c < 3; ++c) m[c] += pts[i][c];
  double norm = 0.0;
  for (double v : m) norm += (v / n) * (v / n);
  CHECK(std::sqrt(norm) <= 4.0 / std::sqrt(double(n)));
}

TEST_CASE("second-moment matrix is close to I/d", "[sampling]") {
  const unsigned d = 4;
  const std::size_t n = 20000;
  const SampleSet pts = sample_uniform_sphere(d, n, 23);
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (unsigned a = 0; a < d; ++a)
      for (unsigned b = 0; b < d; ++b) m[a * d + b] += pts[i][a] * pts[i][b];
  for (unsigned a = 0; a < d; ++a) {
    for (unsigned b = 0; b < d; ++b) {
      const double want = a == b ? 1.0 / d : 0.0;
      INFO("entry (" << a << "," << b << ")");
      CHECK(std::abs(m[a * d + b] / n - want) <= 0.01);
    }
  }
}

TEST_CASE("coordinate marginals pass a KS test per axis", "[sampling]") {
  // critical value for alpha = 0.01 is ~1.628/sqrt(n)
  const std::size_t n = 20000;
  const GLRule rule = gauss_legendre(32);
  const double crit = 1.628 / std::sqrt(double(n));
  for (unsigned d : {2u, 3u, 5u}) {
    const SampleSet pts = sample_uniform_sphere(d, n, 400 + d);
    for (unsigned axis = 0; axis < d; ++axis) {
      std::vector<double> coords(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = pts[i][axis];
      const double ks = ks_statistic(std::move(coords), d, rule);
      INFO("d=" << d << " axis=" << axis << " ks=" << ks);
      CHECK(ks < crit);
    }
  }
}

TEST_CASE("numeric marginal CDF matches closed forms where known",
          "[sampling]") {
  const GLRule rule = gauss_legendre(32);
  for (double t : {-0.9, -0.5, 0.0, 0.3, 0.8}) {
    CHECK(marginal_cdf(3, t, rule) ==
          Catch::Approx((1.0 + t) / 2.0).margin(1e-10));
    CHECK(marginal_cdf(2, t, rule) ==
          Catch::Approx(1.0 - std::acos(t) / std::numbers::pi).margin(1e-10));
    CHECK(marginal_cdf(5, t, rule) ==
          Catch::Approx((2.0 + 3.0 * t - t * t * t) / 4.0).margin(1e-10));
  }
}

TEST_CASE("rotating the points leaves the Gram matrix alone", "[sampling]") {
  const ProblemParams params(3, 3);
  const SampleSet pts = sample_uniform_sphere(3, 40, 31);

  SECTION("sign-flip rotation, exact to the bit") {
    // diag(-1,-1,1) has determinant +1 and preserves every product term
    std::vector<double> flipped = pts.flat();
    for (std::size_t i = 0; i < flipped.size(); i += 3) {
      flipped[i] = -flipped[i];
      flipped[i + 1] = -flipped[i + 1];
    }
    const GramMatrix g0 = build_gram(params, pts);
    const GramMatrix g1 = build_gram(params, SampleSet::adopt(3, flipped));
    REQUIRE((g0.k - g1.k).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("plane rotation, equal to rounding") {
    const double c = std::cos(0.7), s = std::sin(0.7);
    std::vector<double> rotated = pts.flat();
    for (std::size_t i = 0; i < rotated.size(); i += 3) {
      const double x = rotated[i], y = rotated[i + 1];
      rotated[i] = c * x - s * y;
      rotated[i + 1] = s * x + c * y;
    }
    const GramMatrix g0 = build_gram(params, pts);
    const GramMatrix g1 = build_gram(params, SampleSet::adopt(3, rotated));
    REQUIRE((g0.k - g1.k).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sample set input validation", "[sampling]") {
  CHECK_THROWS_AS(sample_uniform_sphere(1, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_uniform_sphere(3, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(SampleSet::adopt(3, std::vector<double>(7, 0.5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(SampleSet::adopt(1, std::vector<double>(4, 0.5)),
                  std::invalid_argument);
}
