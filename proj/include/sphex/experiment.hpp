#pragma once

// Sweep harness: phase-transition maps over (d, q, s) and the noisy-recovery
// protocol. Cells run one after another; trials inside a cell run on a
// bounded worker pool. Every trial's seed derives from the linear
// (cell, trial) index, so results are identical for any worker count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sphex/common.hpp"
#include "sphex/harmonics.hpp"
#include "sphex/regression.hpp"
#include "sphex/sampling.hpp"
#include "sphex/validation.hpp"

namespace sphex {

enum class ErrorMetric { max_abs, rms };

struct ExperimentConfig {
  std::vector<unsigned> dims{3};
  std::vector<unsigned> degrees;
  std::vector<std::size_t> sample_counts;
  std::size_t trials = 100;
  ErrorMetric error_metric = ErrorMetric::max_abs;
  double success_threshold = 1e-12;  // test error counted as recovered
  std::size_t test_points = 100;
  std::uint64_t master_seed = 1;
  unsigned workers = 0;  // 0 = hardware concurrency
};

struct ExperimentResult {
  unsigned d = 0, q = 0;
  std::size_t s = 0;
  std::uint64_t beta = 0;
  std::size_t trials = 0, successes = 0;
  double success_rate = 0.0;
  double median_error = 0.0;
  double max_error = 0.0;
  std::uint64_t wall_time_ms = 0;  // summed per-trial compute time
  std::size_t error_trials = 0;    // trials that threw; counted as failures
};

namespace detail {

// runs fn(0..count-1) on a bounded pool; caller owns all determinism concerns
inline void run_indexed(std::size_t count, unsigned workers,
                        const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::min<std::size_t>(workers, count);
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

struct TrialOutcome {
  double error = std::numeric_limits<double>::infinity();
  bool threw = false;
  std::uint64_t nanos = 0;
};

// one recovery trial: random band-limited target, fit, fresh test points
inline TrialOutcome phase_trial(const ProblemParams& p, std::size_t s,
                                std::size_t test_points, ErrorMetric metric,
                                std::uint64_t trial_seed) {
  TrialOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ZonalFunction f = make_bandlimited(p, derive_trial_seed(trial_seed, 0));
    const ExpansionModel model =
        fit(p, s, derive_trial_seed(trial_seed, 1), std::cref(f));
    const SampleSet test =
        sample_uniform_sphere(p.d, test_points, derive_trial_seed(trial_seed, 2));
    const Eigen::VectorXd y = evaluate_many(model, test);
    double err = 0.0;
    if (metric == ErrorMetric::max_abs) {
      for (std::size_t i = 0; i < test.size(); ++i)
        err = std::max(err, std::abs(y(i) - f(test[i])));
    } else {
      for (std::size_t i = 0; i < test.size(); ++i) {
        const double e = y(i) - f(test[i]);
        err += e * e;
      }
      err = std::sqrt(err / double(test.size()));
    }
    out.error = err;
  } catch (const std::exception&) {
    out.threw = true;  // recorded as a failed trial, never aborts the sweep
  }
  out.nanos = std::chrono::duration_cast<std::chrono::nanoseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return out;
}

inline double median_of_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Full grid sweep. The grid is canonicalized up front (each axis sorted,
// duplicates dropped), so cell order, trial seeding, and output order are all
// functions of the grid's contents alone. Trial seeds come from the linear
// (cell, trial) index against the master seed. The optional progress callback
// fires after each finished cell.
inline std::vector<ExperimentResult> run_phase_transition(
    const ExperimentConfig& cfg,
    const std::function<void(const ExperimentResult&)>& progress = {}) {
  if (cfg.dims.empty() || cfg.degrees.empty() || cfg.sample_counts.empty())
    throw std::invalid_argument("run_phase_transition: empty grid");
  if (cfg.trials < 1)
    throw std::invalid_argument("run_phase_transition: need trials >= 1");
  if (cfg.test_points < 1)
    throw std::invalid_argument("run_phase_transition: need test points");
  if (!(cfg.success_threshold > 0.0))
    throw std::invalid_argument("run_phase_transition: bad threshold");

  const unsigned workers =
      cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());

  auto canon = [](auto axis) {
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    return axis;
  };
  const std::vector<unsigned> dims = canon(cfg.dims);
  const std::vector<unsigned> degrees = canon(cfg.degrees);
  const std::vector<std::size_t> sample_counts = canon(cfg.sample_counts);

  std::vector<ExperimentResult> results;
  std::size_t cell_index = 0;
  for (unsigned d : dims) {
    for (unsigned q : degrees) {
      const ProblemParams p(d, q);
      for (std::size_t s : sample_counts) {
        std::vector<detail::TrialOutcome> outcomes(cfg.trials);
        detail::run_indexed(cfg.trials, workers, [&](std::size_t t) {
          const std::uint64_t trial_seed = derive_trial_seed(
              cfg.master_seed, cell_index * cfg.trials + t);
          outcomes[t] = detail::phase_trial(p, s, cfg.test_points,
                                            cfg.error_metric, trial_seed);
        });

        ExperimentResult r;
        r.d = d;
        r.q = q;
        r.s = s;
        r.beta = p.beta;
        r.trials = cfg.trials;
        std::vector<double> errors;
        errors.reserve(cfg.trials);
        std::uint64_t nanos = 0;
        for (const auto& o : outcomes) {
          errors.push_back(o.error);
          nanos += o.nanos;
          if (o.threw) ++r.error_trials;
          if (!o.threw && o.error <= cfg.success_threshold) ++r.successes;
        }
        std::sort(errors.begin(), errors.end());
        r.success_rate = double(r.successes) / double(r.trials);
        r.median_error = detail::median_of_sorted(errors);
        r.max_error = errors.back();
        r.wall_time_ms = nanos / 1000000;
        results.push_back(r);
        if (progress) progress(r);
        ++cell_index;
      }
    }
  }
  return results;
}

struct NoisyRecovery {
  unsigned d = 0, q = 0;
  std::size_t s = 0;
  std::size_t trials = 0;
  std::size_t mc_points = 0;
  double eps_probe = 0.0;
  std::vector<double> ratios;  // ||y - f_low||^2 / ||f - f_low||^2 per trial
  double median_ratio = 0.0;
  bool pass = false;  // median <= eps_probe
};

// Recovery against an out-of-band contaminant: the target is a band-limited
// f_low plus one unit zonal term at degree q+1 (same axis). The fit sees the
// sum; the report compares what leaked into the recovery against the energy
// of the contaminant, both estimated by Monte Carlo on the same points.
inline NoisyRecovery run_noisy_recovery(const ProblemParams& p, std::size_t s,
                                        double eps_probe, std::size_t trials,
                                        std::uint64_t seed,
                                        std::size_t mc_points = 100000) {
  if (trials < 1) throw std::invalid_argument("run_noisy_recovery: trials >= 1");
  if (!(eps_probe > 0.0))
    throw std::invalid_argument("run_noisy_recovery: eps_probe must be positive");
  NoisyRecovery rep;
  rep.d = p.d;
  rep.q = p.q;
  rep.s = s;
  rep.trials = trials;
  rep.mc_points = mc_points;
  rep.eps_probe = eps_probe;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::uint64_t tseed = derive_trial_seed(seed, trial);
    const ZonalFunction f_low = make_bandlimited(p, derive_trial_seed(tseed, 0));
    std::vector<double> coeff = f_low.coeff;
    coeff.push_back(1.0);
    const ZonalFunction f = make_zonal(p.d, f_low.center, std::move(coeff));

    const ExpansionModel model =
        fit(p, s, derive_trial_seed(tseed, 1), std::cref(f));
    const SampleSet mc =
        sample_uniform_sphere(p.d, mc_points, derive_trial_seed(tseed, 2));
    const Eigen::VectorXd y = evaluate_many(model, mc);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < mc.size(); ++i) {
      const double low = f_low(mc[i]);
      const double dy = y(i) - low;
      const double dn = f(mc[i]) - low;
      num += dy * dy;
      den += dn * dn;
    }
    rep.ratios.push_back(num / den);
  }
  std::vector<double> sorted = rep.ratios;
  std::sort(sorted.begin(), sorted.end());
  rep.median_ratio = detail::median_of_sorted(sorted);
  rep.pass = rep.median_ratio <= eps_probe;
  return rep;
}

// ---- CSV ----

inline constexpr const char* csv_header =
    "d,q,s,beta,trials,successes,success_rate,median_error,max_error,"
    "wall_time_ms";

inline void emit_csv(std::ostream& out,
                     const std::vector<ExperimentResult>& results) {
  if (results.empty())
    throw std::invalid_argument("emit_csv: refusing to write an empty sweep");
  out << csv_header << '\n';
  for (const auto& r : results) {
    out << r.d << ',' << r.q << ',' << r.s << ',' << r.beta << ',' << r.trials
        << ',' << r.successes << ',' << fmt17(r.success_rate) << ','
        << fmt17(r.median_error) << ',' << fmt17(r.max_error) << ','
        << r.wall_time_ms << '\n';
  }
}

inline std::string csv_text(const std::vector<ExperimentResult>& results) {
  std::ostringstream ss;
  emit_csv(ss, results);
  return ss.str();
}

inline void write_csv(const std::string& path,
                      const std::vector<ExperimentResult>& results) {
  atomic_write_file(path, csv_text(results));
}

inline std::vector<ExperimentResult> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw format_error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header)
    throw format_error("csv: header does not match the sweep schema");
  std::vector<ExperimentResult> results;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 10)
      throw format_error("csv: line " + std::to_string(lineno) + " has " +
                         std::to_string(fields.size()) + " fields, want 10");
    try {
      ExperimentResult r;
      r.d = unsigned(std::stoul(fields[0]));
      r.q = unsigned(std::stoul(fields[1]));
      r.s = std::stoull(fields[2]);
      r.beta = std::stoull(fields[3]);
      r.trials = std::stoull(fields[4]);
      r.successes = std::stoull(fields[5]);
      r.success_rate = std::strtod(fields[6].c_str(), nullptr);
      r.median_error = std::strtod(fields[7].c_str(), nullptr);
      r.max_error = std::strtod(fields[8].c_str(), nullptr);
      r.wall_time_ms = std::stoull(fields[9]);
      results.push_back(r);
    } catch (const std::logic_error&) {
      throw format_error("csv: line " + std::to_string(lineno) +
                         " has a malformed field");
    }
  }
  return results;
}

// ---- plot script ----

// Self-contained gnuplot script: one success-rate map per dimension with the
// subspace-dimension curve overlaid. Data rides inline in heredoc blocks, so
// the script needs no side files.
inline std::string plot_script(const std::vector<ExperimentResult>& results) {
  if (results.empty())
    throw std::invalid_argument("plot_script: refusing to plot an empty sweep");
  std::vector<unsigned> dims;
  for (const auto& r : results)
    if (std::find(dims.begin(), dims.end(), r.d) == dims.end())
      dims.push_back(r.d);
  std::sort(dims.begin(), dims.end());

  std::ostringstream out;
  out << "# recovery success-rate maps over (q, s), one panel per dimension\n"
         "set terminal pngcairo size 960,720\n"
         "set cbrange [0:1]\n"
         "set cblabel 'success rate'\n"
         "set palette defined (0 '#2166ac', 0.5 '#f7f7f7', 1 '#b2182b')\n"
         "set xlabel 'expansion degree q'\n"
         "set ylabel 'sample count s'\n"
         "set key outside bottom center\n\n";
  char buf[160];
  for (unsigned d : dims) {
    out << "$phase_d" << d << " << EOD\n";
    for (const auto& r : results) {
      if (r.d != d) continue;
      std::snprintf(buf, sizeof buf, "%u %zu %.6f\n", r.q, r.s, r.success_rate);
      out << buf;
    }
    out << "EOD\n";
    out << "$dim_d" << d << " << EOD\n";
    std::vector<unsigned> qs;
    for (const auto& r : results)
      if (r.d == d && std::find(qs.begin(), qs.end(), r.q) == qs.end())
        qs.push_back(r.q);
    std::sort(qs.begin(), qs.end());
    for (unsigned q : qs) {
      const auto* row = &results.front();
      for (const auto& r : results)
        if (r.d == d && r.q == q) {
          row = &r;
          break;
        }
      std::snprintf(buf, sizeof buf, "%u %llu\n", q,
                    (unsigned long long)row->beta);
      out << buf;
    }
    out << "EOD\n";
    out << "set output 'phase_d" << d << ".png'\n";
    out << "set title 'recovery success rate, d = " << d << "'\n";
    out << "plot $phase_d" << d
        << " using 1:2:3 with points pt 5 ps 2.4 palette title 'cells', \\\n"
           "     $dim_d"
        << d
        << " using 1:2 with linespoints lw 2 pt 7 lc rgb 'black' "
           "title 'subspace dimension'\n\n";
  }
  return out.str();
}

inline void write_plot_script(const std::string& path,
                              const std::vector<ExperimentResult>& results) {
  atomic_write_file(path, plot_script(results));
}

}  // namespace sphex
