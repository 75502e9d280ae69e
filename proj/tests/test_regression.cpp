#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "sphex/regression.hpp"
#include "sphex/validation.hpp"

using namespace sphex;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::MatrixXd fixed_random_matrix(Eigen::Index rows, Eigen::Index cols,
                                    std::uint64_t seed) {
  SplitMix64 g(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = 2.0 * g.next_unit() - 1.0;
  return m;
}

// orthonormalize the columns of m in place (modified Gram-Schmidt)
void orthonormalize(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index k = 0; k < j; ++k)
      m.col(j) -= m.col(k).dot(m.col(j)) * m.col(k);
    m.col(j) /= m.col(j).norm();
  }
}

GramMatrix fake_gram(Eigen::MatrixXd k) {
  return GramMatrix{std::move(k), ProblemParams(3, 1)};
}

}  // namespace

TEST_CASE("kernel spot values", "[regression]") {
  const ProblemParams p32(3, 2);
  CHECK(kernel_value(p32, 1.0) == Catch::Approx(9.0 / (4.0 * pi)).epsilon(1e-14));
  const ProblemParams p30(3, 0);
  CHECK(kernel_value(p30, -0.4) == Catch::Approx(1.0 / (4.0 * pi)).epsilon(1e-14));
  const ProblemParams p23(2, 3);
  CHECK(kernel_value(p23, 1.0) == Catch::Approx(7.0 / (2.0 * pi)).epsilon(1e-14));
  const ProblemParams p31(3, 1);
  CHECK(kernel_value(p31, 0.5) == Catch::Approx(2.5 / (4.0 * pi)).epsilon(1e-14));
  // the diagonal value is the constant beta / |S^{d-1}| for every (d, q)
  for (unsigned d = 2; d <= 6; ++d)
    for (unsigned q = 0; q <= 8; ++q) {
      const ProblemParams p(d, q);
      CHECK(kernel_value(p, 1.0) ==
            Catch::Approx(double(p.beta) / p.area).epsilon(1e-13));
    }
}

TEST_CASE("gram matrix structure", "[regression]") {
  SECTION("one point gives the 1x1 matrix [beta]") {
    const ProblemParams p(3, 4);
    std::vector<double> e1{1.0, 0.0, 0.0};
    const GramMatrix gm = build_gram(p, SampleSet::adopt(3, e1));
    REQUIRE(gm.size() == 1);
    CHECK(gm.k(0, 0) == double(p.beta));
  }

  SECTION("antipodal pair, d=3 q=1") {
    const ProblemParams p(3, 1);
    std::vector<double> flat{0.0, 0.0, 1.0, 0.0, 0.0, -1.0};
    const GramMatrix gm = build_gram(p, SampleSet::adopt(3, flat));
    CHECK(gm.k(0, 0) == 2.0);  // beta/s = 4/2
    CHECK(gm.k(1, 1) == 2.0);
    CHECK(gm.k(0, 1) == -1.0);  // (1*P0(-1) + 3*P1(-1))/2 = (1 - 3)/2
    CHECK(gm.k(1, 0) == -1.0);
  }

  SECTION("random points: exact diagonal, exact symmetry, PSD") {
    const ProblemParams p(3, 3);
    const SampleSet pts = sample_uniform_sphere(3, 40, 8);
    const GramMatrix gm = build_gram(p, pts);
    const double diag = double(p.beta) / 40.0;
    for (int i = 0; i < 40; ++i) CHECK(gm.k(i, i) == diag);
    CHECK((gm.k - gm.k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const SymmetricEigen eig = eigen_sym(gm.k);
    CHECK(eig.values(0) >= -1e-10 * eig.values(39));
  }

  SECTION("dimension mismatch is rejected") {
    const ProblemParams p(4, 2);
    CHECK_THROWS_AS(build_gram(p, sample_uniform_sphere(3, 5, 1)),
                    std::invalid_argument);
  }
}

TEST_CASE("symmetric eigendecomposition reconstructs its input",
          "[regression]") {
  Eigen::MatrixXd b = fixed_random_matrix(20, 20, 77);
  Eigen::MatrixXd a = 0.5 * (b + b.transpose());
  const SymmetricEigen eig = eigen_sym(a);
  for (int i = 1; i < 20; ++i) REQUIRE(eig.values(i) >= eig.values(i - 1));
  const Eigen::MatrixXd recon =
      eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
  CHECK((recon - a).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd gram = eig.vectors.transpose() * eig.vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() <
        1e-13);
  CHECK_THROWS_AS(eigen_sym(Eigen::MatrixXd::Zero(3, 4)),
                  std::invalid_argument);
}

TEST_CASE("pseudoinverse solve", "[regression]") {
  SECTION("scaled identity inverts directly") {
    const double beta_over_s = 9.0 / 5.0;
    GramMatrix gm =
        fake_gram(beta_over_s * Eigen::MatrixXd::Identity(5, 5));
    Eigen::VectorXd f(5);
    f << 1, -2, 3, 0.5, -0.25;
    const PinvSolution sol = pinv_solve(gm, f);
    CHECK(sol.rank == 5);
    CHECK((sol.z - f / beta_over_s).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(sol.condition == Catch::Approx(1.0).epsilon(1e-12));
  }

  SECTION("right-hand side in the null space maps to zero") {
    Eigen::VectorXd v(4);
    v << 0.5, 0.5, 0.5, 0.5;
    Eigen::VectorXd f(4);
    f << 1, -1, 0, 0;  // orthogonal to v
    GramMatrix gm = fake_gram(v * v.transpose());
    const PinvSolution sol = pinv_solve(gm, f);
    CHECK(sol.rank == 1);
    CHECK(sol.z.norm() < 1e-13);
  }

  SECTION("minimum-norm choice on a singular diagonal") {
    Eigen::VectorXd diag(3);
    diag << 2.0, 1.0, 0.0;
    GramMatrix gm = fake_gram(Eigen::MatrixXd(diag.asDiagonal()));
    Eigen::VectorXd f(3);
    f << 2.0, 3.0, 5.0;
    const PinvSolution sol = pinv_solve(gm, f);
    CHECK(sol.rank == 2);
    CHECK(sol.z(0) == Catch::Approx(1.0).margin(1e-14));
    CHECK(sol.z(1) == Catch::Approx(3.0).margin(1e-14));
    CHECK(std::abs(sol.z(2)) < 1e-14);
  }
}

TEST_CASE("pseudoinverse rank-3 oracle", "[regression]") {
  Eigen::MatrixXd v = fixed_random_matrix(5, 3, 1234);
  orthonormalize(v);
  Eigen::Vector3d lam(2.0, 1.0, 0.5);
  const Eigen::MatrixXd k = v * lam.asDiagonal() * v.transpose();
  const Eigen::VectorXd g = fixed_random_matrix(5, 1, 4321);
  const Eigen::VectorXd f = k * g;

  const PinvSolution sol = pinv_solve(fake_gram(k), f);
  CHECK(sol.rank == 3);
  CHECK(sol.lambda_max == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(sol.condition == Catch::Approx(4.0).epsilon(1e-10));
  CHECK((k * sol.z - f).norm() <= 1e-10 * f.norm());

  // the oracle: z must equal V diag(1/lam) V^T f, built by hand
  const Eigen::VectorXd z_ref =
      v * lam.cwiseInverse().asDiagonal() * v.transpose() * f;
  CHECK((sol.z - z_ref).cwiseAbs().maxCoeff() < 1e-10);

  // minimum-norm: no component outside the range of K
  CHECK((sol.z - v * (v.transpose() * sol.z)).norm() < 1e-12);
}

TEST_CASE("rank tolerance splits the spectrum where told", "[regression]") {
  Eigen::VectorXd diag(5);
  diag << 1.0, 1e-3, 1e-16, 0.0, 0.0;
  GramMatrix gm = fake_gram(Eigen::MatrixXd(diag.asDiagonal()));
  Eigen::VectorXd f = Eigen::VectorXd::Ones(5);
  CHECK(pinv_solve(gm, f).rank == 2);          // default s*eps cutoff
  CHECK(pinv_solve(gm, f, 1e-2).rank == 1);    // drops the 1e-3 eigenvalue
  CHECK(pinv_solve(gm, f, 1e-18).rank == 3);   // keeps the 1e-16 one
  CHECK_THROWS_AS(pinv_solve(gm, Eigen::VectorXd::Ones(4)),
                  std::invalid_argument);
}

TEST_CASE("fit is deterministic and linear in the data", "[regression]") {
  const ProblemParams p(3, 2);
  const auto f1 = [](std::span<const double> x) { return x[0] + 0.3; };
  const auto f2 = [](std::span<const double> x) { return x[1] * x[1]; };

  const ExpansionModel a1 = fit(p, 60, 5, f1);
  const ExpansionModel a2 = fit(p, 60, 5, f1);
  CHECK(a1.points.flat() == a2.points.flat());
  CHECK(a1.weights == a2.weights);  // bit-identical weights

  SECTION("linearity against a sum oracle on the same seed") {
    const ExpansionModel b = fit(p, 60, 5, f2);
    const ExpansionModel sum = fit(p, 60, 5, [&](std::span<const double> x) {
      return f1(x) + f2(x);
    });
    CHECK((sum.weights - a1.weights - b.weights).cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("scaling by a power of two is exact") {
    const ExpansionModel scaled = fit(p, 60, 5, [&](std::span<const double> x) {
      return 4.0 * f1(x);
    });
    CHECK(scaled.weights == 4.0 * a1.weights);
  }

  SECTION("scaling by ten holds to roundoff") {
    const ExpansionModel scaled = fit(p, 60, 5, [&](std::span<const double> x) {
      return 10.0 * f1(x);
    });
    CHECK((scaled.weights - 10.0 * a1.weights).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fit queries the oracle in sample order", "[regression]") {
  const ProblemParams p(4, 1);
  std::vector<std::vector<double>> seen;
  fit(p, 12, 9, [&](std::span<const double> x) {
    seen.emplace_back(x.begin(), x.end());
    return 1.0;
  });
  const SampleSet expect = sample_uniform_sphere(4, 12, 9);
  REQUIRE(seen.size() == 12);
  for (std::size_t i = 0; i < 12; ++i)
    for (unsigned c = 0; c < 4; ++c) REQUIRE(seen[i][c] == expect[i][c]);
}

TEST_CASE("non-finite oracle output names the sample index", "[regression]") {
  const ProblemParams p(3, 1);
  std::size_t calls = 0;
  try {
    fit(p, 20, 3, [&](std::span<const double>) {
      return calls++ == 7 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
    });
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("constants are recovered exactly", "[regression]") {
  for (unsigned q : {0u, 2u, 5u}) {
    const ProblemParams p(3, q);
    const ExpansionModel m =
        fit(p, 50, 41, [](std::span<const double>) { return 1.0; });
    const SampleSet test = sample_uniform_sphere(3, 100, 51);
    const Eigen::VectorXd y = evaluate_many(m, test);
    for (int i = 0; i < 100; ++i) {
      INFO("q=" << q << " i=" << i);
      REQUIRE(std::abs(y(i) - 1.0) < 1e-10);
    }
    // single-point path agrees with the batched one
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(evaluate(m, test[i]) == Catch::Approx(y(i)).margin(1e-10));
  }
}

TEST_CASE("a linear coordinate function is recovered exactly", "[regression]") {
  const ProblemParams p(3, 1);
  const ExpansionModel m =
      fit(p, 32, 6, [](std::span<const double> x) { return x[0]; });
  const SampleSet test = sample_uniform_sphere(3, 100, 61);
  const Eigen::VectorXd y = evaluate_many(m, test);
  for (int i = 0; i < 100; ++i)
    REQUIRE(std::abs(y(i) - test[std::size_t(i)][0]) < 1e-10);
}

TEST_CASE("band-limited targets: recovery, interpolation, idempotence",
          "[regression]") {
  const ProblemParams p(3, 4);
  const std::size_t s = 4 * p.beta * 4;  // well past the transition
  const ZonalFunction f = make_bandlimited(p, 2020);
  const ExpansionModel m = fit(p, s, 12, std::cref(f));

  SECTION("error on fresh points is at solver roundoff") {
    const SampleSet test = sample_uniform_sphere(3, 100, 13);
    const Eigen::VectorXd y = evaluate_many(m, test);
    for (int i = 0; i < 100; ++i)
      REQUIRE(std::abs(y(i) - f(test[std::size_t(i)])) < 1e-10);
  }

  SECTION("the fit interpolates its own samples") {
    for (std::size_t j : {std::size_t(0), std::size_t(1), s - 1})
      CHECK(evaluate(m, m.points[j]) ==
            Catch::Approx(f(m.points[j])).margin(1e-9));
  }

  SECTION("fitting the fitted function returns the same function") {
    const ExpansionModel m2 = fit(p, s, 77, [&](std::span<const double> x) {
      return evaluate(m, x);
    });
    const SampleSet test = sample_uniform_sphere(3, 100, 14);
    const Eigen::VectorXd y1 = evaluate_many(m, test);
    const Eigen::VectorXd y2 = evaluate_many(m2, test);
    CHECK((y1 - y2).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("gram spectrum concentrates on the expansion dimension",
          "[regression]") {
  // oversampled regime: exactly beta eigenvalues carry the projector
  const ProblemParams p(3, 4);
  const std::size_t s =
      std::size_t(std::ceil(8.0 * double(p.beta) * std::log(double(p.beta))));
  const GramMatrix gm = build_gram(p, sample_uniform_sphere(3, s, 2024));
  const SymmetricEigen eig = eigen_sym(gm.k);
  const std::size_t n = gm.size();
  for (std::size_t i = 0; i < p.beta; ++i) {
    const double lam = eig.values(n - 1 - i);
    INFO("signal eigenvalue " << i << " = " << lam);
    REQUIRE(lam > 0.5);
    REQUIRE(lam < 1.5);
  }
  for (std::size_t i = p.beta; i < n; ++i)
    REQUIRE(eig.values(n - 1 - i) * p.area < 1e-8);
}

TEST_CASE("undersampled fits fail to generalize", "[regression]") {
  const ProblemParams p(3, 3);
  const std::size_t s = p.beta - 1;
  unsigned failures = 0;
  for (unsigned trial = 0; trial < 40; ++trial) {
    const std::uint64_t seed = derive_trial_seed(909, trial);
    const ZonalFunction f = make_bandlimited(p, derive_trial_seed(seed, 0));
    const ExpansionModel m = fit(p, s, derive_trial_seed(seed, 1), std::cref(f));
    const SampleSet test =
        sample_uniform_sphere(3, 50, derive_trial_seed(seed, 2));
    const Eigen::VectorXd y = evaluate_many(m, test);
    double err = 0.0;
    for (int i = 0; i < 50; ++i)
      err = std::max(err, std::abs(y(i) - f(test[std::size_t(i)])));
    if (err > 1e-6) ++failures;
  }
  CHECK(failures >= 36);  // at least 90 percent
}

TEST_CASE("evaluation input validation", "[regression]") {
  const ProblemParams p(3, 2);
  std::vector<double> e1{1.0, 0.0, 0.0};
  ExpansionModel m{p, SampleSet::adopt(3, e1), Eigen::VectorXd::Ones(1)};

  std::vector<double> big{1.1, 0.0, 0.0};
  CHECK_THROWS_AS(evaluate_many(m, SampleSet::adopt(3, big)),
                  std::domain_error);
  CHECK_THROWS_AS(evaluate(m, std::span<const double>(big)),
                  std::domain_error);
  CHECK_THROWS_AS(evaluate_many(m, sample_uniform_sphere(4, 3, 1)),
                  std::invalid_argument);

  SECTION("zero weights evaluate to zero everywhere") {
    ExpansionModel z{p, sample_uniform_sphere(3, 6, 2),
                     Eigen::VectorXd::Zero(6)};
    const SampleSet test = sample_uniform_sphere(3, 20, 3);
    const Eigen::VectorXd y = evaluate_many(z, test);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("model scale is the square root of s times the area",
          "[regression]") {
  const ProblemParams p(3, 1);
  ExpansionModel m{p, sample_uniform_sphere(3, 4, 1), Eigen::VectorXd::Zero(4)};
  CHECK(m.scale() == Catch::Approx(std::sqrt(4.0 * 4.0 * pi)).epsilon(1e-14));
}

TEST_CASE("sample budget formula", "[regression]") {
  const ProblemParams p(3, 5);  // beta = 36
  CHECK(sample_count(p, 0.5, 0.1) == 1957);

  const ProblemParams p0(3, 0);  // beta = 1, ln floored at 1
  CHECK(sample_count(p0, 1.0, 1.0) == 2);

  SECTION("monotone in the degree") {
    std::uint64_t prev = 0;
    for (unsigned q = 0; q <= 8; ++q) {
      const std::uint64_t n = sample_count(ProblemParams(3, q), 0.5, 0.1);
      CHECK(n >= prev);
      prev = n;
    }
  }

  CHECK_THROWS_AS(sample_count(p, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(sample_count(p, 1.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(sample_count(p, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_count(p, 0.5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(sample_count(p, 0.5, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("oversampled recovery succeeds at the budgeted rate", "[regression]") {
  for (unsigned d : {3u, 4u}) {
    const ProblemParams p(d, 3);
    const std::size_t s = std::size_t(
        4 * p.beta * std::uint64_t(std::ceil(std::log(double(p.beta)))));
    unsigned hits = 0;
    for (unsigned trial = 0; trial < 100; ++trial) {
      const std::uint64_t seed = derive_trial_seed(100 + d, trial);
      const ZonalFunction f = make_bandlimited(p, derive_trial_seed(seed, 0));
      const ExpansionModel m =
          fit(p, s, derive_trial_seed(seed, 1), std::cref(f));
      const SampleSet test =
          sample_uniform_sphere(d, 100, derive_trial_seed(seed, 2));
      const Eigen::VectorXd y = evaluate_many(m, test);
      double err = 0.0;
      for (int i = 0; i < 100; ++i)
        err = std::max(err, std::abs(y(i) - f(test[std::size_t(i)])));
      if (err <= 1e-10) ++hits;
    }
    INFO("d=" << d);
    CHECK(hits >= 95);
  }
}
