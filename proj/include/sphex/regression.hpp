#pragma once

// Recovery of degree-<=q expansions from point samples, working entirely
// through the zonal kernel
//
//   k_{q,d}(x, y) = sum_{l=0..q} (alpha_{l,d} / |S^{d-1}|) P_d^l(<x, y>),
//
// the reproducing kernel of the expansion space. The pipeline is:
// sample points w_j, assemble K_{ij} = sum_l (alpha_l / s) P_l(<w_i, w_j>),
// take f_j = sqrt(|S^{d-1}| / s) f(w_j), solve z = pinv(K) f, and read the
// fitted function back off the sampled kernel columns. No orthonormal basis
// of the space is ever materialized.

#include <lapacke.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "sphex/common.hpp"
#include "sphex/harmonics.hpp"
#include "sphex/sampling.hpp"

namespace sphex {

// k_{q,d} evaluated at a cosine t. The diagonal value k(1) is the constant
// leverage beta/|S^{d-1}|, which is what makes plain uniform sampling the
// right importance distribution for this space.
inline double kernel_value(const ProblemParams& p, double t) {
  return p.recur.weighted_sum(t, p.alpha_f) / p.area;
}

struct GramMatrix {
  Eigen::MatrixXd k;  // s x s, entries sum_l (alpha_l / s) P_l(<w_i, w_j>)
  ProblemParams params;
  std::size_t size() const { return static_cast<std::size_t>(k.rows()); }
};

// Each pair's inner product is computed once and reused across all degrees,
// so assembly is O(s^2 (d + q)). Diagonal entries are beta/s by definition
// (<w, w> = 1 exactly on the sphere) and are written as such.
inline GramMatrix build_gram(const ProblemParams& p, const SampleSet& pts) {
  if (pts.dim() != p.d)
    throw std::invalid_argument("build_gram: points have d = " +
                                std::to_string(pts.dim()) + ", params want " +
                                std::to_string(p.d));
  const std::size_t s = pts.size();
  if (s < 1) throw std::invalid_argument("build_gram: empty sample set");
  const double inv_s = 1.0 / double(s);
  GramMatrix gm{Eigen::MatrixXd(s, s), p};
  const double diag = double(p.beta) * inv_s;
  for (std::size_t i = 0; i < s; ++i) {
    gm.k(i, i) = diag;
    const std::span<const double> wi = pts[i];
    for (std::size_t j = i + 1; j < s; ++j) {
      const std::span<const double> wj = pts[j];
      double t = 0.0;
      for (unsigned c = 0; c < p.d; ++c) t += wi[c] * wj[c];
      const double v = p.recur.weighted_sum(clamp_cosine(t), p.alpha_f) * inv_s;
      gm.k(i, j) = v;
      gm.k(j, i) = v;
    }
  }
  return gm;
}

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
};

// Full symmetric eigendecomposition via LAPACK's divide-and-conquer driver.
inline SymmetricEigen eigen_sym(Eigen::MatrixXd a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("eigen_sym: matrix is not square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd w(n);
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
  if (info != 0)
    throw numerical_error("eigen_sym: dsyevd failed with info = " +
                          std::to_string(info));
  return {std::move(w), std::move(a)};
}

struct PinvSolution {
  Eigen::VectorXd z;
  std::size_t rank = 0;     // eigenvalues kept
  double lambda_max = 0.0;  // largest eigenvalue
  double condition = 0.0;   // lambda_max / smallest kept eigenvalue
};

// Minimum-norm least-squares solve z = pinv(K) f. Eigenvalues at or below
// rank_tol * lambda_max are treated as exact zeros; the default tolerance is
// s * machine epsilon, the usual rank cutoff for an s x s symmetric matrix.
inline PinvSolution pinv_solve(const GramMatrix& gm, const Eigen::VectorXd& f,
                               double rank_tol = -1.0) {
  const std::size_t s = gm.size();
  if (static_cast<std::size_t>(f.size()) != s)
    throw std::invalid_argument("pinv_solve: f has " + std::to_string(f.size()) +
                                " entries for an s = " + std::to_string(s) +
                                " system");
  if (rank_tol < 0.0)
    rank_tol = double(s) * std::numeric_limits<double>::epsilon();

  const SymmetricEigen eig = eigen_sym(gm.k);
  PinvSolution sol;
  sol.lambda_max = std::max(eig.values(s - 1), 0.0);
  const double cutoff = rank_tol * sol.lambda_max;

  Eigen::VectorXd proj = eig.vectors.transpose() * f;
  double lambda_min_kept = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    const double lam = eig.values(i);
    if (lam > cutoff && lam > 0.0) {
      proj(i) /= lam;
      if (sol.rank == 0 || lam < lambda_min_kept) lambda_min_kept = lam;
      ++sol.rank;
    } else {
      proj(i) = 0.0;
    }
  }
  sol.condition = sol.rank ? sol.lambda_max / lambda_min_kept : 0.0;
  sol.z = eig.vectors * proj;
  return sol;
}

// A fitted expansion: the sampled points and their kernel weights. Scale is
// derived, never stored.
struct ExpansionModel {
  ProblemParams params;
  SampleSet points;
  Eigen::VectorXd weights;

  double scale() const {
    return std::sqrt(double(points.size()) * params.area);
  }
};

using Oracle = std::function<double(std::span<const double>)>;

struct FitInfo {
  std::size_t rank = 0;
  double lambda_max = 0.0;
  double condition = 0.0;
  double residual = 0.0;  // ||K z - f||_2 in the scaled system
};

// Core pipeline on caller-supplied points and raw values f(w_j). The
// recovery guarantee is stated for uniform draws; callers bringing their own
// points keep the algebra but not the guarantee.
inline ExpansionModel fit_samples(const ProblemParams& p, SampleSet pts,
                                  Eigen::VectorXd values, FitInfo* info = nullptr,
                                  double rank_tol = -1.0) {
  const std::size_t s = pts.size();
  if (s < 1) throw std::invalid_argument("fit_samples: empty sample set");
  if (static_cast<std::size_t>(values.size()) != s)
    throw std::invalid_argument("fit_samples: " + std::to_string(values.size()) +
                                " values for " + std::to_string(s) + " points");
  for (std::size_t j = 0; j < s; ++j)
    if (!std::isfinite(values(j)))
      throw std::invalid_argument("fit_samples: value at sample index " +
                                  std::to_string(j) + " is not finite");

  const double load = std::sqrt(p.area / double(s));
  Eigen::VectorXd f = values * load;
  const GramMatrix gm = build_gram(p, pts);
  PinvSolution sol = pinv_solve(gm, f, rank_tol);
  if (info) {
    info->rank = sol.rank;
    info->lambda_max = sol.lambda_max;
    info->condition = sol.condition;
    info->residual = (gm.k * sol.z - f).norm();
  }
  return ExpansionModel{p, std::move(pts), std::move(sol.z)};
}

// Draws s uniform points, queries the oracle once per point in sample order,
// and runs the kernel solve. Non-finite oracle output is an input-data error
// and names the offending index.
inline ExpansionModel fit(const ProblemParams& p, std::size_t s,
                          std::uint64_t seed, const Oracle& oracle,
                          FitInfo* info = nullptr, double rank_tol = -1.0) {
  if (s < 1) throw std::invalid_argument("fit: need s >= 1");
  SampleSet pts = sample_uniform_sphere(p.d, s, seed);
  Eigen::VectorXd values(s);
  for (std::size_t j = 0; j < s; ++j) {
    const double v = oracle(pts[j]);
    if (!std::isfinite(v))
      throw std::invalid_argument("fit: oracle returned a non-finite value at "
                                  "sample index " + std::to_string(j));
    values(j) = v;
  }
  return fit_samples(p, std::move(pts), std::move(values), info, rank_tol);
}

// y(sigma) = (1 / scale) sum_j z_j sum_l alpha_l P_l(<w_j, sigma>);
// O(s (d + q)) per point.
inline double evaluate(const ExpansionModel& m, std::span<const double> sigma) {
  const ProblemParams& p = m.params;
  if (sigma.size() != p.d)
    throw std::invalid_argument("evaluate: point has " +
                                std::to_string(sigma.size()) +
                                " coordinates, model wants " +
                                std::to_string(p.d));
  const std::size_t s = m.points.size();
  double acc = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    const std::span<const double> wj = m.points[j];
    double t = 0.0;
    for (unsigned c = 0; c < p.d; ++c) t += wj[c] * sigma[c];
    acc += m.weights(j) * p.recur.weighted_sum(clamp_cosine(t), p.alpha_f);
  }
  return acc / m.scale();
}

// Batch evaluation: inner products go through blocked matrix products, then
// the degree recurrence runs across contiguous rows of cosines. Scratch is
// capped at one block of rows, so huge batches never allocate an n x s
// buffer. Bit-identical to calling evaluate point by point is NOT guaranteed
// (summation order differs); determinism for fixed inputs is.
inline Eigen::VectorXd evaluate_many(const ExpansionModel& m,
                                     const SampleSet& pts) {
  const ProblemParams& p = m.params;
  if (pts.dim() != p.d)
    throw std::invalid_argument("evaluate_many: points have d = " +
                                std::to_string(pts.dim()) +
                                ", model wants " + std::to_string(p.d));
  const std::size_t n = pts.size();
  const std::size_t s = m.points.size();
  if (s < 1) throw std::invalid_argument("evaluate_many: model has no points");
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> P(pts.flat().data(), n, p.d);
  Eigen::Map<const RowMat> W(m.points.flat().data(), s, p.d);

  const std::size_t block =
      std::max<std::size_t>(1, std::min(n, (std::size_t(1) << 20) / s + 1));
  RowMat T(block, s);

  const unsigned q = p.q;
  const double* af = p.alpha_f.data();
  const double inv_scale = 1.0 / m.scale();
  Eigen::VectorXd out(n);

  std::vector<double> pm(s), pc(s);
  for (std::size_t i0 = 0; i0 < n; i0 += block) {
    const std::size_t bn = std::min(block, n - i0);
    T.topRows(bn).noalias() = P.middleRows(i0, bn) * W.transpose();
    for (std::size_t r = 0; r < bn; ++r) {
      double* t = T.data() + r * s;
      // validate then clamp branchlessly; GEMM rounding stays within the slack
      double worst = 0.0;
      for (std::size_t j = 0; j < s; ++j)
        worst = std::max(worst, std::abs(t[j]));
      if (worst > 1.0 + 1e-9)
        throw std::domain_error("evaluate_many: cosine " +
                                std::to_string(worst) +
                                " out of range; points are not unit vectors");
      double acc = 0.0;
      const double* z = m.weights.data();
      if (q == 0) {
        for (std::size_t j = 0; j < s; ++j) acc += z[j];
        out(i0 + r) = acc * af[0] * inv_scale;
        continue;
      }
      for (std::size_t j = 0; j < s; ++j) {
        const double tc = std::min(1.0, std::max(-1.0, t[j]));
        t[j] = tc;
        pm[j] = 1.0;
        pc[j] = tc;
        acc += z[j] * (af[0] + af[1] * tc);
      }
      for (unsigned l = 1; l < q; ++l) {
        const double a = double(2 * l + p.d - 2) / double(l + p.d - 2);
        const double b = double(l) / double(l + p.d - 2);
        const double w = af[l + 1];
        double part = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
          const double pn = a * t[j] * pc[j] - b * pm[j];
          part += z[j] * pn;
          pm[j] = pc[j];
          pc[j] = pn;
        }
        acc += w * part;
      }
      out(i0 + r) = acc * inv_scale;
    }
  }
  return out;
}

// Sample budget sufficient for relative error eps with failure odds delta:
// ceil(c * (beta / eps^2) * (ln beta + 1/delta)), the ln floored at 1 for
// beta = 1. The closed boundary eps = delta = 1 is accepted.
inline std::uint64_t sample_count(const ProblemParams& p, double eps,
                                  double delta, double c = 1.0) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::invalid_argument("sample_count: eps must lie in (0, 1]");
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("sample_count: delta must lie in (0, 1]");
  if (!(c > 0.0))
    throw std::invalid_argument("sample_count: c must be positive");
  const double b = double(p.beta);
  const double lnb = (p.beta == 1) ? 1.0 : std::log(b);
  const double raw = std::ceil(c * (b / (eps * eps)) * (lnb + 1.0 / delta));
  if (!(raw >= 1.0) || raw > 9.007199254740992e15)
    throw std::overflow_error("sample_count: budget does not fit in an integer");
  return static_cast<std::uint64_t>(raw);
}

}  // namespace sphex
