#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptscale/adapt.hpp"
#include "adaptscale/analysis.hpp"
#include "adaptscale/cli.hpp"
#include "adaptscale/complexity.hpp"
#include "adaptscale/errors.hpp"
#include "adaptscale/exact.hpp"
#include "adaptscale/hamio.hpp"
#include "adaptscale/pauli.hpp"
#include "adaptscale/pools.hpp"

namespace fs = std::filesystem;
using namespace adaptscale;

namespace {

std::string g(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

analysis::Interval parse_interval(const std::vector<double>& v, const std::string& what) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw Error(what + " expects VALUE or VALUE,LOWER,UPPER");
}

analysis::LogBase parse_base(const std::string& s) {
  if (s == "none") return analysis::LogBase::none;
  if (s == "e" || s == "natural") return analysis::LogBase::natural;
  if (s == "10" || s == "base10") return analysis::LogBase::base10;
  throw Error("unknown log base '" + s + "' (none, natural, base10)");
}

// Header row plus numeric rows; '#' lines are ignored.
std::map<std::string, std::vector<double>> read_columns(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> cols;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (names.empty()) {
      names = cells;
      continue;
    }
    for (std::size_t i = 0; i < names.size() && i < cells.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(cells[i].c_str(), &end);
      cols[names[i]].push_back(end == cells[i].c_str() ? std::nan("") : v);
    }
  }
  return cols;
}

const std::vector<double>& column(const std::map<std::string, std::vector<double>>& cols, const std::string& name) {
  const auto it = cols.find(name);
  if (it == cols.end()) throw Error("column '" + name + "' not found");
  return it->second;
}

nlohmann::ordered_json fit_json(const analysis::ScalingFit& f) {
  nlohmann::ordered_json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r_squared"] = f.r_squared;
  j["residual_variance"] = f.residual_variance;
  j["n_points"] = f.n_points;
  j["covariance"] = {{f.covariance(0, 0), f.covariance(0, 1)}, {f.covariance(1, 0), f.covariance(1, 1)}};
  j["log_base"] = std::string(analysis::to_string(f.log_base));
  j["x_range"] = {f.x_min, f.x_max};
  return j;
}

nlohmann::ordered_json interval_json(const analysis::Interval& iv) {
  return {{"value", iv.value}, {"lower", iv.lower}, {"upper", iv.upper}};
}

hamio::MolecularProblem load_problem(const std::string& path, int multiplicity) {
  auto p = hamio::read_fcidump_file(path);
  p.label = fs::path(path).stem().string();
  if (multiplicity > 0) p.spin_multiplicity_target = multiplicity;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptscale: ADAPT-VQE resource scaling toolkit"};
  app.require_subcommand(1);
  std::size_t jobs = 0;
  std::uint64_t seed = 0;
  std::string config_path;
  app.add_option("--jobs", jobs, "Parallel manifest entries");
  app.add_option("--seed", seed, "Default seed for random subpools");
  app.add_option("--config", config_path, "Config file (default: $ADAPTSCALE_CONFIG)");

  // fci
  auto* fci = app.add_subcommand("fci", "Exact ground state in the FCIDUMP sector");
  std::string fci_file, fci_json, fci_solver = "auto";
  int fci_mult = 0;
  std::vector<double> fci_alpha{0.25, 0.5, 2.0};
  fci->add_option("fcidump", fci_file)->required()->check(CLI::ExistingFile);
  fci->add_option("--spin,--spin-multiplicity", fci_mult, "Override 2S+1");
  fci->add_option("--solver", fci_solver)->check(CLI::IsMember({"auto", "dense", "lanczos"}));
  fci->add_option("--alpha", fci_alpha, "Renyi orders")->delimiter(',');
  fci->add_option("--out,--json", fci_json, "Write reference JSON here");

  // adapt
  auto* ad = app.add_subcommand("adapt", "Run ADAPT-VQE against the FCI reference");
  std::string ad_file, ad_pool = "qeb", ad_out, ad_json;
  bool ad_tetris = false;
  double ad_target = adapt::kEpsilonChem;
  std::size_t ad_maxit = 200;
  double ad_fraction = 0.0;
  std::uint64_t ad_pool_seed = 0;
  int ad_mult = 0;
  std::string ad_ref;
  ad->add_option("fcidump", ad_file)->required()->check(CLI::ExistingFile);
  ad->add_option("--pool", ad_pool)->check(CLI::IsMember({"qubit", "qeb", "ceo"}));
  ad->add_flag("--tetris", ad_tetris);
  ad->add_option("--target-error,--target", ad_target, "Target energy error in Hartree");
  ad->add_option("--max-iters,--max-iterations", ad_maxit);
  ad->add_option("--pool-fraction", ad_fraction, "Random subpool fraction in (0, 1]");
  ad->add_option("--pool-seed", ad_pool_seed, "Subpool seed (default: --seed)");
  ad->add_option("--spin,--spin-multiplicity", ad_mult);
  ad->add_option("--reference-energy", ad_ref, "Hartree value or reference JSON (default: in-repo FCI)");
  ad->add_option("--trace,--out", ad_out, "Trace CSV path");
  ad->add_option("--json", ad_json, "Trace JSON path");

  // renyi
  auto* re = app.add_subcommand("renyi", "Renyi entropies of a reference distribution");
  std::string re_file;
  std::vector<double> re_alpha{complexity::kAlphaStar};
  double re_floor = complexity::kDefaultFloor;
  bool re_limits = false;
  re->add_option("reference", re_file, "Reference JSON or FCIDUMP")->required()->check(CLI::ExistingFile);
  re->add_option("--alpha", re_alpha)->delimiter(',');
  re->add_option("--floor", re_floor);
  re->add_flag("--limits", re_limits, "Also emit Hartley, Shannon, collision and min entropies");

  // fit
  auto* fit = app.add_subcommand("fit", "Least-squares fit of y (optionally log) against x");
  std::string fit_file, fit_x = "x", fit_y = "y", fit_base = "natural";
  fit->add_option("data", fit_file, "CSV with a header row")->required()->check(CLI::ExistingFile);
  fit->add_option("--x", fit_x);
  fit->add_option("--y", fit_y);
  fit->add_option("--log", fit_base, "none, natural or base10");
  std::vector<double> fit_at;
  bool fit_bootstrap = false;
  fit->add_option("--at", fit_at, "Predict at these x values")->delimiter(',');
  fit->add_flag("--bootstrap", fit_bootstrap, "Bootstrap the mean-response interval (10^4 resamples, --seed)");

  // surface
  auto* su = app.add_subcommand("surface", "R^2 surface over (alpha, epsilon) from sweep outputs");
  std::string su_dir;
  std::vector<double> su_alpha{0.0, 0.25, 0.5, 1.0, 2.0};
  std::vector<double> su_eps{1e-2, adapt::kEpsilonChem, 1e-4};
  bool su_last = false;
  su->add_option("output_dir", su_dir)->required()->check(CLI::ExistingDirectory);
  su->add_option("--alpha", su_alpha)->delimiter(',');
  su->add_option("--epsilon", su_eps)->delimiter(',');
  su->add_flag("--last-crossing", su_last);

  // extrapolate
  auto* ex = app.add_subcommand("extrapolate", "Iterations needed to reach an energy error");
  double ex_slope = 0, ex_intercept = 0, ex_slope_se = 0, ex_intercept_se = 0;
  double ex_eps = adapt::kEpsilonChem, ex_level = 0.95;
  std::string ex_trace, ex_base = "base10";
  ex->add_option("--slope", ex_slope);
  ex->add_option("--intercept", ex_intercept);
  ex->add_option("--slope-se", ex_slope_se);
  ex->add_option("--intercept-se", ex_intercept_se);
  ex->add_option("--log", ex_base);
  ex->add_option("--trace", ex_trace, "Fit the decay of a trace CSV instead")->check(CLI::ExistingFile);
  std::string ex_window;
  ex->add_option("--fit-window", ex_window, "LO:HI iteration window of the trace fit");
  ex->add_option("--epsilon", ex_eps);
  ex->add_option("--level", ex_level);

  // budget
  auto* bu = app.add_subcommand("budget", "Total parameter and CNOT budget from interval inputs");
  std::vector<double> bu_n, bu_p, bu_c;
  bu->add_option("--n-adapt", bu_n, "VALUE[,LOWER,UPPER]")->required()->delimiter(',');
  bu->add_option("--params-per-iter", bu_p, "VALUE[,LOWER,UPPER]")->required()->delimiter(',');
  bu->add_option("--cnots-per-iter", bu_c, "VALUE[,LOWER,UPPER]")->required()->delimiter(',');

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run every entry of an experiment manifest");
  std::string sw_file;
  bool sw_force = false, sw_quiet = false;
  sw->add_option("manifest", sw_file)->required()->check(CLI::ExistingFile);
  sw->add_flag("--force", sw_force, "Recompute completed entries");
  sw->add_flag("--quiet", sw_quiet);

  // count-dets
  auto* cd = app.add_subcommand("count-dets", "Number of determinants in a sector");
  std::size_t cd_n = 0, cd_a = 0, cd_b = 0;
  cd->add_option("--orbitals", cd_n)->required();
  cd->add_option("--alpha", cd_a)->required();
  cd->add_option("--beta", cd_b)->required();

  // dump-hamiltonian
  auto* dh = app.add_subcommand("dump-hamiltonian", "Jordan-Wigner qubit Hamiltonian as text");
  std::string dh_file, dh_out;
  dh->add_option("fcidump", dh_file)->required()->check(CLI::ExistingFile);
  dh->add_option("--out", dh_out);

  auto* ve = app.add_subcommand("version", "Version, cost-table hash and default constants");

  CLI11_PARSE(app, argc, argv);

  try {
    const cli::ToolConfig config =
        cli::load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
    const std::size_t n_jobs = jobs ? jobs : config.jobs;
    const std::uint64_t base_seed = seed ? seed : config.seed;
    const pools::CostTable table = cli::load_cost_table(config.cost_table);

    if (*ve) {
      std::cout << cli::version_banner(table);
      return 0;
    }

    if (*fci) {
      const auto problem = load_problem(fci_file, fci_mult);
      exact::FciOptions opt;
      opt.solver = fci_solver == "dense"     ? exact::Solver::dense
                   : fci_solver == "lanczos" ? exact::Solver::lanczos
                                             : exact::Solver::automatic;
      const auto v = exact::fci_ground_state(problem, opt);
      const auto ref = cli::make_reference(v, problem.label, problem.spin_multiplicity_target,
                                           complexity::kDefaultFloor, "");
      std::cout << "energy=" << g(v.energy, 15) << "\n"
                << "spin_sq=" << g(v.spin_sq) << "\n"
                << "n_determinants=" << v.determinants.size() << "\n";
      // Same floored, renormalized distribution that the reference JSON reports.
      std::vector<double> probs = ref.probabilities;
      double total = 0.0;
      for (double p : probs) total += p;
      for (auto& p : probs) p /= total;
      const exact::CiDistribution d{probs};
      for (const auto& r : complexity::renyi_curve(d, fci_alpha))
        std::cout << "h_" << complexity::order_name(r) << "=" << g(r.value) << "\n";
      const auto lim = complexity::renyi_limits(d);
      std::cout << "h_hartley=" << g(lim.hartley) << "\nh_shannon=" << g(lim.shannon) << "\n";
      if (!fci_json.empty()) {
        std::ofstream out(fci_json);
        out << cli::reference_json(ref, fci_alpha);
        if (!out) throw Error("cannot write " + fci_json);
      }
      return 0;
    }

    if (*ad) {
      auto problem = load_problem(ad_file, ad_mult);
      double reference_energy = 0.0;
      if (ad_ref.empty()) {
        reference_energy = exact::fci_ground_state(problem).energy;
      } else if (fs::exists(ad_ref)) {
        reference_energy = cli::read_reference_json(ad_ref).energy;
      } else {
        std::size_t used = 0;
        try {
          reference_energy = std::stod(ad_ref, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != ad_ref.size()) throw Error("--reference-energy: not a number or file: " + ad_ref);
      }
      const auto h = pauli::jordan_wigner(problem);
      const auto kind = pools::parse_pool_kind(ad_pool);
      const auto full = pools::build_pool(kind, problem.n_orbitals, problem.n_alpha, problem.n_beta, table);
      auto pool = full;
      std::optional<double> frac;
      std::optional<std::uint64_t> pseed;
      if (ad_fraction > 0.0) {
        frac = ad_fraction;
        pseed = ad_pool_seed ? ad_pool_seed : base_seed;
        pool = pools::random_subpool(full, *frac, *pseed);
      }
      adapt::AdaptConfig cfg;
      cfg.target_error = ad_target;
      cfg.max_iterations = ad_maxit;
      cfg.tetris = ad_tetris;
      cfg.reference_energy = reference_energy;
      cfg.spin_multiplicity = problem.spin_multiplicity_target;
      std::cerr << "pool " << ad_pool << " size " << pool.size() << " of " << full.size() << "\n";
      auto trace = adapt::run_adapt(h, pool, adapt::aufbau_reference(problem.n_alpha, problem.n_beta), cfg,
                                    [](const adapt::IterationRecord& r) {
                                      std::cerr << "iter " << r.iteration_index << " error " << g(r.energy_error, 4)
                                                << " gradient " << g(r.max_gradient, 4) << " ops +"
                                                << r.operators_added << "\n";
                                    });
      trace.molecule_label = problem.label;
      cli::ManifestEntry entry;
      entry.label = problem.label;
      entry.fcidump = ad_file;
      entry.spin_multiplicity = problem.spin_multiplicity_target;
      entry.pool = kind;
      entry.tetris = ad_tetris;
      entry.target_error = ad_target;
      entry.max_iterations = ad_maxit;
      entry.pool_fraction = frac;
      entry.pool_seed = pseed;
      const std::string hash = cli::entry_hash(entry, table);
      if (!ad_out.empty()) {
        std::ofstream out(ad_out);
        cli::write_trace_csv(out, trace, hash);
        if (!out) throw Error("cannot write " + ad_out);
      } else {
        cli::write_trace_csv(std::cout, trace, hash);
      }
      if (!ad_json.empty()) {
        std::ofstream out(ad_json);
        out << cli::trace_json(trace, {kind, full.size(), pool.size(), frac, pseed}, table, hash);
        if (!out) throw Error("cannot write " + ad_json);
      }
      std::cerr << "stop " << adapt::to_string(trace.stop_reason) << " after " << trace.records.size()
                << " iterations\n";
      return 0;
    }

    if (*re) {
      std::vector<double> probs;
      if (fs::path(re_file).extension() == ".json") {
        probs = cli::read_reference_json(re_file).probabilities;
      } else {
        probs = exact::ci_distribution(exact::fci_ground_state(load_problem(re_file, 0))).probabilities;
      }
      double total = 0.0;
      for (double p : probs) total += p;
      for (auto& p : probs) p /= total;
      exact::CiDistribution d{probs};
      const auto lim = complexity::renyi_limits(d, re_floor);
      nlohmann::ordered_json out = nlohmann::ordered_json::array();
      for (const auto& r : complexity::renyi_curve(d, re_alpha))
        out.push_back({{"alpha", r.alpha}, {"value", r.value}, {"n_nonzero", lim.n_nonzero}, {"floor", re_floor}});
      if (re_limits) {
        const std::pair<const char*, double> named[] = {
            {"hartley", lim.hartley}, {"shannon", lim.shannon}, {"collision", lim.collision}, {"min", lim.min}};
        for (const auto& [name, v] : named)
          out.push_back({{"alpha", name}, {"value", v}, {"n_nonzero", lim.n_nonzero}, {"floor", re_floor}});
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*fit) {
      const auto cols = read_columns(fit_file);
      const auto base = parse_base(fit_base);
      const auto& x = column(cols, fit_x);
      const auto& y = column(cols, fit_y);
      const auto f = base == analysis::LogBase::none ? analysis::fit_linear(x, y) : analysis::fit_loglinear(x, y, base);
      auto j = fit_json(f);
      if (!fit_at.empty()) {
        auto preds = nlohmann::ordered_json::array();
        for (double at : fit_at) {
          const auto p = base == analysis::LogBase::none ? analysis::predict_linear(f, at)
                                                         : analysis::predict_n_adapt(f, at);
          nlohmann::ordered_json pj{{"x", at},
                                    {"confidence", interval_json(p.confidence)},
                                    {"prediction", interval_json(p.prediction)},
                                    {"extrapolated", p.extrapolated}};
          if (fit_bootstrap)
            pj["bootstrap"] = interval_json(analysis::bootstrap_mean_response(x, y, base, at, 10000, base_seed));
          preds.push_back(pj);
        }
        j["predictions"] = preds;
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*su) {
      std::vector<analysis::BenchmarkPoint> points;
      for (const auto& de : fs::directory_iterator(su_dir)) {
        const std::string name = de.path().filename().string();
        const std::string suffix = ".ref.json";
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix))
          continue;
        const auto ref = cli::read_reference_json(de.path());
        const fs::path trace_path = fs::path(su_dir) / (ref.label + ".trace.csv");
        if (!fs::exists(trace_path)) continue;
        std::vector<double> probs = ref.probabilities;
        double total = 0.0;
        for (double p : probs) total += p;
        for (auto& p : probs) p /= total;
        points.push_back({ref.label, probs, cli::read_trace_csv_file(trace_path).points()});
      }
      std::sort(points.begin(), points.end(),
                [](const auto& a, const auto& b) { return a.molecule_label < b.molecule_label; });
      const auto s = analysis::r2_surface(points, su_alpha, su_eps, su_last);
      std::cout << "alpha";
      for (double e : s.epsilon_grid) std::cout << ",r2_eps_" << g(e, 4);
      std::cout << "\n";
      for (std::size_t i = 0; i < s.alpha_grid.size(); ++i) {
        std::cout << g(s.alpha_grid[i], 6);
        for (std::size_t j = 0; j < s.epsilon_grid.size(); ++j)
          std::cout << "," << (std::isnan(s.r_squared(i, j)) ? std::string("nan") : g(s.r_squared(i, j), 6));
        std::cout << "\n";
      }
      for (std::size_t j = 0; j < s.epsilon_grid.size(); ++j)
        std::cout << "# best_alpha eps=" << g(s.epsilon_grid[j], 4) << " "
                  << (s.best_alpha[j] ? g(*s.best_alpha[j], 6) : std::string("none")) << "\n";
      for (const auto& e : s.exclusions) std::cout << "# excluded " << e << "\n";
      return 0;
    }

    if (*ex) {
      analysis::ScalingFit f;
      nlohmann::ordered_json j;
      if (!ex_trace.empty()) {
        const auto pts = cli::read_trace_csv_file(ex_trace).points();
        std::size_t lo = 1, hi = pts.size();
        if (!ex_window.empty()) {
          const auto colon = ex_window.find(':');
          if (colon == std::string::npos) throw Error("--fit-window expects LO:HI");
          lo = std::stoul(ex_window.substr(0, colon));
          hi = std::stoul(ex_window.substr(colon + 1));
        }
        f = analysis::fit_error_decay(pts, lo, hi);
        j["fit"] = fit_json(f);
        j["window"] = {lo, hi};
      } else {
        f = analysis::fit_from_coefficients(ex_slope, ex_intercept, ex_slope_se, ex_intercept_se,
                                            parse_base(ex_base));
        j["fit"] = fit_json(f);
      }
      const auto sol = analysis::solve_for_threshold(f, ex_eps, ex_level);
      j["epsilon"] = ex_eps;
      j["level"] = ex_level;
      j["n_adapt"] = sol.n;
      j["standard_error"] = sol.standard_error;
      j["half_width"] = sol.half_width;
      j["interval"] = interval_json(sol.interval);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*bu) {
      const auto est = analysis::resource_budget(parse_interval(bu_n, "--n-adapt"),
                                                 parse_interval(bu_p, "--params-per-iter"),
                                                 parse_interval(bu_c, "--cnots-per-iter"));
      nlohmann::ordered_json j;
      j["n_adapt"] = interval_json(est.n_adapt);
      j["params_per_iter"] = interval_json(est.params_per_iter);
      j["cnots_per_iter"] = interval_json(est.cnots_per_iter);
      j["total_parameters"] = interval_json(est.total_parameters);
      j["total_cnots"] = interval_json(est.total_cnots);
      j["warnings"] = est.warnings;
      std::cout << j.dump(2) << "\n";
      for (const auto& w : est.warnings) std::cerr << "warning: " << w << "\n";
      return 0;
    }

    if (*sw) {
      auto manifest = cli::read_manifest(sw_file);
      if (!manifest.cost_table && config.cost_table) manifest.cost_table = config.cost_table;
      cli::RunOptions opt;
      opt.force = sw_force;
      opt.jobs = n_jobs;
      opt.memory_budget_bytes = config.memory_budget_bytes;
      opt.log = sw_quiet ? nullptr : &std::cerr;
      const auto summary = cli::run_manifest(manifest, opt);
      std::cout << cli::summary_csv(summary);
      if (!summary.all_ok()) {
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& r : summary.rows)
          if (!r.ok) failures.push_back({{"label", r.label}, {"error", r.error}});
        std::cerr << failures.dump() << "\n";
        return 2;
      }
      return 0;
    }

    if (*cd) {
      exact::SectorSpec s;
      s.n_orbitals = cd_n;
      s.n_alpha = cd_a;
      s.n_beta = cd_b;
      s.validate();
      std::cout << exact::determinant_count(s) << "\n";
      return 0;
    }

    if (*dh) {
      const auto h = pauli::jordan_wigner(load_problem(dh_file, 0));
      if (dh_out.empty()) {
        std::cout << pauli::dump(h);
      } else {
        std::ofstream out(dh_out);
        out << pauli::dump(h);
        if (!out) throw Error("cannot write " + dh_out);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
