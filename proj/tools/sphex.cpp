// Command-line front end: fit expansions from oracles or sample tables,
// evaluate stored models, run the self-check suites, and sweep the
// phase-transition grid.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sphex/experiment.hpp"
#include "sphex/model_io.hpp"
#include "sphex/regression.hpp"
#include "sphex/validation.hpp"

namespace {

using namespace sphex;

// ---- small parsers ----

// "3", "3,4", "2-6", "40-200:20" and commas of those
template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      throw std::invalid_argument(std::string(what) + ": empty list entry");
    unsigned long long a = 0, b = 0, step = 1;
    const std::size_t dash = item.find('-', 1);
    try {
      if (dash == std::string::npos) {
        a = b = std::stoull(item);
      } else {
        a = std::stoull(item.substr(0, dash));
        const std::string rest = item.substr(dash + 1);
        const std::size_t colon = rest.find(':');
        if (colon == std::string::npos) {
          b = std::stoull(rest);
        } else {
          b = std::stoull(rest.substr(0, colon));
          step = std::stoull(rest.substr(colon + 1));
        }
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" +
                                  item + "'");
    }
    if (step == 0 || b < a)
      throw std::invalid_argument(std::string(what) + ": bad range '" + item +
                                  "'");
    for (unsigned long long v = a; v <= b; v += step) out.push_back(T(v));
  }
  if (out.empty())
    throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

struct PointTable {
  SampleSet points;
  std::vector<double> values;  // present only when the table carries values
};

// Whitespace-separated numbers, one point per line, '#' starts a comment.
// Each row needs d coordinates (plus one trailing value when with_values).
// Rows must be unit-norm within 1e-9; accepted rows are then normalized to
// exact unit length so downstream cosines stay in range.
PointTable parse_point_table(const std::string& path, unsigned d,
                             bool with_values) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path + " for reading");
  PointTable table;
  std::vector<double> flat;
  std::vector<double> row;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    row.clear();
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) {
      std::string bad;
      ls.clear();
      ls >> bad;
      throw format_error(path + ":" + std::to_string(lineno) +
                         ": cannot parse '" + bad + "' as a number");
    }
    if (row.empty()) continue;
    const std::size_t want = d + (with_values ? 1 : 0);
    if (row.size() != want)
      throw format_error(path + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(want) + " numbers, found " +
                         std::to_string(row.size()));
    double ss = 0.0;
    for (unsigned c = 0; c < d; ++c) ss += row[c] * row[c];
    const double norm = std::sqrt(ss);
    if (std::abs(norm - 1.0) > 1e-9)
      throw format_error(path + ":" + std::to_string(lineno) +
                         ": point norm " + fmt17(norm) +
                         " is not 1 within 1e-9");
    for (unsigned c = 0; c < d; ++c) flat.push_back(row[c] / norm);
    if (with_values) {
      if (!std::isfinite(row[d]))
        throw format_error(path + ":" + std::to_string(lineno) +
                           ": non-finite sample value");
      table.values.push_back(row[d]);
    }
  }
  if (flat.empty()) throw format_error(path + ": no points found");
  table.points = SampleSet::adopt(d, std::move(flat));
  return table;
}

// ---- oracles ----

struct NamedOracle {
  Oracle fn;
  std::string description;
};

// const | coord1 | zonal:q:seed | zonal-plus-noise:q:seed
NamedOracle resolve_oracle(const std::string& spec, unsigned d) {
  if (spec == "const")
    return {[](std::span<const double>) { return 1.0; }, "constant 1"};
  if (spec == "coord1")
    return {[](std::span<const double> x) { return x[0]; },
            "first coordinate"};
  const std::size_t c1 = spec.find(':');
  const std::size_t c2 = c1 == std::string::npos ? c1 : spec.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw std::invalid_argument(
        "unknown oracle '" + spec +
        "' (try const, coord1, zonal:q:seed, zonal-plus-noise:q:seed)");
  const std::string kind = spec.substr(0, c1);
  unsigned oq = 0;
  std::uint64_t oseed = 0;
  try {
    oq = unsigned(std::stoul(spec.substr(c1 + 1, c2 - c1 - 1)));
    oseed = std::stoull(spec.substr(c2 + 1));
  } catch (const std::logic_error&) {
    throw std::invalid_argument("oracle '" + spec + "': bad q or seed field");
  }
  const ProblemParams op(d, oq);
  if (kind == "zonal") {
    auto f = std::make_shared<ZonalFunction>(make_bandlimited(op, oseed));
    char buf[96];
    std::snprintf(buf, sizeof buf, "random zonal function, degree %u, seed %llu",
                  oq, (unsigned long long)oseed);
    return {[f](std::span<const double> x) { return (*f)(x); }, buf};
  }
  if (kind == "zonal-plus-noise") {
    ZonalFunction low = make_bandlimited(op, oseed);
    std::vector<double> coeff = low.coeff;
    coeff.push_back(1.0);
    auto f = std::make_shared<ZonalFunction>(
        make_zonal(d, low.center, std::move(coeff)));
    char buf[112];
    std::snprintf(buf, sizeof buf,
                  "random zonal function, degree %u plus a unit degree-%u "
                  "term, seed %llu",
                  oq, oq + 1, (unsigned long long)oseed);
    return {[f](std::span<const double> x) { return (*f)(x); }, buf};
  }
  throw std::invalid_argument("unknown oracle kind '" + kind + "'");
}

// ---- subcommands ----

int run_fit(unsigned d, unsigned q, const std::string& oracle_spec,
            const std::string& samples_file, std::size_t s, std::uint64_t seed,
            const std::string& out_path) {
  const ProblemParams params(d, q);
  FitInfo info;
  ExpansionModel model = [&] {
    if (!samples_file.empty()) {
      std::cerr << "warning: user-supplied samples replace uniform sampling; "
                   "the recovery guarantee assumes uniform draws\n";
      PointTable table = parse_point_table(samples_file, d, true);
      Eigen::VectorXd values(table.values.size());
      for (std::size_t i = 0; i < table.values.size(); ++i)
        values(i) = table.values[i];
      return fit_samples(params, std::move(table.points), std::move(values),
                         &info);
    }
    const NamedOracle oracle = resolve_oracle(oracle_spec, d);
    std::cerr << "oracle: " << oracle.description << "\n";
    return fit(params, s, seed, oracle.fn, &info);
  }();

  save_model(model, out_path);
  std::cout << "fit: d=" << d << " q=" << q << "\n"
            << "samples: s=" << model.points.size()
            << " (expansion space dimension beta=" << params.beta << ")\n"
            << "gram condition estimate: " << fmt17(info.condition)
            << " (rank " << info.rank << ")\n"
            << "residual norm: " << fmt17(info.residual) << "\n"
            << "wrote: " << out_path << "\n";
  return 0;
}

int run_eval(const std::string& model_path, const std::string& points_path) {
  const ExpansionModel model = load_model(model_path);
  const PointTable table = parse_point_table(points_path, model.params.d, false);
  const Eigen::VectorXd y = evaluate_many(model, table.points);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    std::cout << fmt17(y(i)) << "\n";
  return 0;
}

int run_check(const std::string& suite, std::uint64_t seed, std::size_t mc_n,
              int d_opt, int q_opt) {
  if (d_opt >= 0 && d_opt < 2)
    throw std::invalid_argument("check: --d must be at least 2");
  std::vector<CheckLine> lines;
  auto append = [&](std::vector<CheckLine> more) {
    lines.insert(lines.end(), more.begin(), more.end());
  };
  const std::vector<unsigned> one_d =
      d_opt >= 2 ? std::vector<unsigned>{unsigned(d_opt)}
                 : std::vector<unsigned>{};
  if (suite == "dims" || suite == "all")
    append(dims_suite(one_d, q_opt >= 0 ? unsigned(q_opt) : 12));
  if (suite == "orthogonality" || suite == "all")
    append(orthogonality_suite(
        one_d.empty() ? std::vector<unsigned>{3, 4, 5} : one_d,
        q_opt >= 0 ? unsigned(q_opt) : 10));
  if (suite == "leverage" || suite == "all")
    append(leverage_suite(20, seed, 10, d_opt, q_opt));
  if (suite == "reproducing" || suite == "all")
    append(reproducing_suite(50, mc_n, seed, 10, d_opt, q_opt));
  if (lines.empty())
    throw std::invalid_argument(
        "unknown suite '" + suite +
        "' (try dims, orthogonality, leverage, reproducing, all)");
  std::size_t failed = 0;
  for (const auto& line : lines) {
    std::cout << format_check_line(line) << "\n";
    if (!line.pass) ++failed;
  }
  if (failed)
    throw numerical_error(std::to_string(failed) + " of " +
                          std::to_string(lines.size()) + " checks failed");
  std::cerr << "all " << lines.size() << " checks passed\n";
  return 0;
}

int run_phase(const std::string& d_list, unsigned q_min, unsigned q_max,
              std::size_t s_min, std::size_t s_max, std::size_t s_step,
              std::size_t trials, std::uint64_t seed, double threshold,
              const std::string& metric, std::size_t test_points,
              unsigned workers, const std::string& csv_path,
              std::string plot_path) {
  ExperimentConfig cfg;
  cfg.dims = parse_list<unsigned>(d_list, "--d-list");
  if (q_max < q_min)
    throw std::invalid_argument("phase: --q-max is below --q-min");
  for (unsigned q = q_min; q <= q_max; ++q) cfg.degrees.push_back(q);
  if (s_max < s_min || s_step < 1)
    throw std::invalid_argument("phase: bad --s-min/--s-max/--s-step range");
  for (std::size_t s = s_min; s <= s_max; s += s_step)
    cfg.sample_counts.push_back(s);
  cfg.trials = trials;
  cfg.master_seed = seed;
  cfg.success_threshold = threshold;
  if (metric == "max_abs")
    cfg.error_metric = ErrorMetric::max_abs;
  else if (metric == "rms")
    cfg.error_metric = ErrorMetric::rms;
  else
    throw std::invalid_argument("phase: --metric must be max_abs or rms");
  cfg.test_points = test_points;
  cfg.workers = workers;

  const auto results = run_phase_transition(cfg, [](const ExperimentResult& r) {
    std::fprintf(stderr,
                 "cell d=%u q=%u s=%zu: rate %.3f, median err %.3e (%llu ms)\n",
                 r.d, r.q, r.s, r.success_rate, r.median_error,
                 (unsigned long long)r.wall_time_ms);
  });

  write_csv(csv_path, results);
  if (plot_path.empty()) plot_path = csv_path + ".gp";
  write_plot_script(plot_path, results);
  std::cout << "wrote: " << csv_path << "\n" << "wrote: " << plot_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "spherical-harmonic expansion recovery from random sphere samples"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand(
      "fit",
      "Fit a degree-q expansion from sphere samples. Draws s uniform points "
      "and queries a built-in oracle, or reads point/value rows from a file.");
  unsigned fit_d = 0, fit_q = 0;
  std::string fit_oracle, fit_samples, fit_out;
  std::size_t fit_s = 0;
  std::uint64_t fit_seed = 1;
  fit_cmd->add_option("--d", fit_d, "ambient dimension (sphere lives in R^d)")
      ->required();
  fit_cmd->add_option("--q", fit_q, "expansion degree cap")->required();
  auto* oracle_opt = fit_cmd->add_option(
      "--oracle", fit_oracle,
      "value oracle: const | coord1 | zonal:q:seed | zonal-plus-noise:q:seed");
  auto* samples_opt = fit_cmd->add_option(
      "--samples-file", fit_samples,
      "text table of rows: d coordinates then the sampled value");
  auto* s_opt =
      fit_cmd->add_option("--s", fit_s, "number of uniform samples to draw");
  auto* seed_opt =
      fit_cmd->add_option("--seed", fit_seed, "sampling seed (default 1)");
  fit_cmd->add_option("--out", fit_out, "output model path")->required();
  oracle_opt->excludes(samples_opt);
  samples_opt->excludes(s_opt)->excludes(seed_opt);
  s_opt->needs(oracle_opt);

  // eval
  auto* eval_cmd = app.add_subcommand(
      "eval", "Evaluate a stored model at points read from a file; prints one "
              "value per line with 17 significant digits.");
  std::string eval_model, eval_points;
  eval_cmd->add_option("--model", eval_model, "model file")->required();
  eval_cmd->add_option("--points", eval_points, "text table of unit points")
      ->required();

  // check
  auto* check_cmd = app.add_subcommand(
      "check",
      "Run the self-check suites (subspace dimensions, quadrature "
      "orthogonality, kernel reproducing property, constant leverage). "
      "Prints 'name, setting, value, target, tolerance, PASS|FAIL' lines.");
  std::string check_suite = "all";
  std::uint64_t check_seed = 2024;
  std::size_t check_n = 200000;
  int check_d = -1, check_q = -1;
  check_cmd->add_option(
      "--suite", check_suite,
      "dims | orthogonality | leverage | reproducing | all (default all)");
  check_cmd->add_option("--d", check_d,
                        "restrict checks to this ambient dimension");
  check_cmd->add_option("--q", check_q,
                        "degree bound (dims/orthogonality) or pinned degree "
                        "(leverage/reproducing)");
  check_cmd->add_option("--seed", check_seed,
                        "seed for the randomized checks (default 2024)");
  check_cmd->add_option("--mc-n", check_n,
                        "Monte Carlo points per reproducing check");

  // phase
  auto* phase_cmd = app.add_subcommand(
      "phase",
      "Sweep recovery success rate over a (d, q, s) grid with random "
      "band-limited targets; writes a CSV and a gnuplot script.");
  std::string ph_d = "3", ph_metric = "max_abs", ph_csv, ph_plot;
  unsigned ph_qmin = 0, ph_qmax = 0;
  std::size_t ph_smin = 0, ph_smax = 0, ph_sstep = 1;
  std::size_t ph_trials = 100, ph_test_points = 100;
  std::uint64_t ph_seed = 1;
  double ph_threshold = 1e-12;
  unsigned ph_workers = 0;
  phase_cmd->add_option("--d-list", ph_d,
                        "comma-separated dimensions (default 3)");
  phase_cmd->add_option("--q-min", ph_qmin, "lowest degree")->required();
  phase_cmd->add_option("--q-max", ph_qmax, "highest degree, inclusive")
      ->required();
  phase_cmd->add_option("--s-min", ph_smin, "lowest sample count")->required();
  phase_cmd->add_option("--s-max", ph_smax, "highest sample count, inclusive")
      ->required();
  phase_cmd->add_option("--s-step", ph_sstep, "sample-count stride (default 1)");
  phase_cmd->add_option("--trials", ph_trials, "trials per cell (default 100)");
  phase_cmd->add_option("--seed", ph_seed, "master seed (default 1)");
  phase_cmd->add_option("--threshold", ph_threshold,
                        "test error still counted as recovered "
                        "(default 1e-12)");
  phase_cmd->add_option("--metric", ph_metric,
                        "per-trial test-error metric: max_abs | rms "
                        "(default max_abs)");
  phase_cmd->add_option("--test-points", ph_test_points,
                        "fresh test points per trial (default 100)");
  phase_cmd->add_option("--workers", ph_workers,
                        "worker threads (default: hardware)");
  phase_cmd->add_option("--out-csv", ph_csv, "output CSV path")->required();
  phase_cmd->add_option("--out-plot", ph_plot,
                        "output gnuplot path (default: CSV path + .gp)");

  try {
    app.parse(argc, argv);
    if (fit_cmd->parsed()) {
      if (fit_oracle.empty() && fit_samples.empty())
        throw CLI::RequiredError("fit: one of --oracle or --samples-file");
      if (!fit_oracle.empty() && fit_s == 0)
        throw CLI::RequiredError("fit: --s (with --oracle)");
      return run_fit(fit_d, fit_q, fit_oracle, fit_samples, fit_s, fit_seed,
                     fit_out);
    }
    if (eval_cmd->parsed()) return run_eval(eval_model, eval_points);
    if (check_cmd->parsed())
      return run_check(check_suite, check_seed, check_n, check_d, check_q);
    if (phase_cmd->parsed())
      return run_phase(ph_d, ph_qmin, ph_qmax, ph_smin, ph_smax, ph_sstep,
                       ph_trials, ph_seed, ph_threshold, ph_metric,
                       ph_test_points, ph_workers, ph_csv, ph_plot);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help exits 0, any usage error exits 1
  } catch (const sphex::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const sphex::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const sphex::format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::overflow_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}
