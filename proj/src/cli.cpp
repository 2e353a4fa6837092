#include "floquet/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "floquet/analysis.hpp"
#include "floquet/error.hpp"
#include "floquet/io.hpp"
#include "floquet/oracle.hpp"
#include "floquet/variational.hpp"

namespace floquet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A gate violation carries the offending table rows into the error file.
struct GateFailure : Error {
  GateFailure(const std::string& what, json rows) : Error(ErrorKind::gate, what), rows(std::move(rows)) {}
  json rows;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty()) throw ConfigError("--param " + key + ": '" + text + "' is not a number");
    if (out.count(key)) throw ConfigError("--param " + key + " given twice");
    out[key] = value;
  }
  return out;
}

std::optional<int> parse_harmonics(const std::string& text) {
  if (text == "auto") return std::nullopt;
  std::size_t used = 0;
  int m = -1;
  try {
    m = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || m < 1) throw ConfigError("--harmonics expects a positive integer or 'auto', got '" + text + "'");
  return m;
}

FourierHamiltonian load(const RunConfig& c) {
  if (c.model_path.empty() == c.builtin.empty()) throw ConfigError("give exactly one of --model or --builtin");
  if (!c.model_path.empty()) {
    if (!c.params.empty()) throw ConfigError("--param applies to --builtin models only");
    return io::load_model(c.model_path);
  }
  return builtin_model({c.builtin, c.params});
}

sambe::SolveOptions solve_options(const RunConfig& c) {
  sambe::SolveOptions o;
  o.truncation = c.harmonics;
  o.tol_deg = c.tol_deg;
  return o;
}

std::string fmt(double x, int precision = 9) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << x;
  return s.str();
}

void print_spectrum(std::ostream& out, const Spectrum& s) {
  out << "M = " << s.meta.truncation << ", omega = " << s.meta.omega << "\n";
  out << "state  eps            ebar\n";
  for (std::size_t i = 0; i < s.triplets.size(); ++i)
    out << i << "      " << fmt(s.triplets[i].quasi_energy) << "    " << fmt(s.triplets[i].avg_energy) << "\n";
}

void write_spectrum(const fs::path& dir, Spectrum s) {
  s.meta.timestamp = utc_timestamp();
  io::write_json(dir / "spectrum.json", io::spectrum_to_json(s));
  std::ostringstream csv;
  io::write_spectrum_csv(csv, s);
  io::write_text(dir / "spectrum.csv", csv.str());
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const auto h = load(c);
  const Spectrum s = sambe::solve(h, solve_options(c));
  write_spectrum(c.out, s);
  print_spectrum(out, s);
  return ok;
}

int cmd_compare(const RunConfig& c, std::ostream& out) {
  const auto h = load(c);
  Spectrum a, b;
  try {
    a = sambe::solve(h, solve_options(c));
    b = oracle::oracle_spectrum(h, a.meta.truncation, {}, a.meta.tol_deg);
  } catch (const TruncationError& e) {
    throw GateFailure(std::string("truncation too small for comparison: ") + e.what(), json::array());
  }

  // Match by largest aligned overlap, globally greedy.
  const Eigen::MatrixXd o = analysis::overlap_matrix(a, b);
  const auto n = static_cast<int>(o.rows());
  std::vector<int> partner(n, -1);
  std::vector<char> used(n, 0);
  for (int step = 0; step < n; ++step) {
    int bi = -1, bj = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (partner[i] < 0 && !used[j] && o(i, j) > best) best = o(i, j), bi = i, bj = j;
    partner[bi] = bj;
    used[bj] = 1;
  }

  std::ostringstream csv;
  csv << "state,eps_sambe,eps_oracle,d_eps,ebar_sambe,ebar_oracle,d_ebar,overlap,pass\n";
  json offending = json::array();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& ta = a.triplets[i];
    const auto& tb = b.triplets[partner[i]];
    const double de = circular_distance(ta.quasi_energy, tb.quasi_energy, h.omega());
    const double db = std::abs(ta.avg_energy - tb.avg_energy);
    const double ov = o(i, partner[i]);
    const bool pass = de <= c.gate && db <= c.gate && 1.0 - ov <= c.gate;
    worst = std::max({worst, de, db, 1.0 - ov});
    csv << i << ',' << io::number(ta.quasi_energy) << ',' << io::number(tb.quasi_energy) << ',' << io::number(de) << ','
        << io::number(ta.avg_energy) << ',' << io::number(tb.avg_energy) << ',' << io::number(db) << ','
        << io::number(ov) << ',' << (pass ? 1 : 0) << '\n';
    if (!pass) offending.push_back({{"state", i}, {"d_eps", de}, {"d_ebar", db}, {"overlap", ov}});
  }
  io::write_text(fs::path(c.out) / "compare.csv", csv.str());
  out << "M = " << a.meta.truncation << ", worst deviation " << worst << " (gate " << c.gate << ")\n";
  if (!offending.empty()) {
    const std::string msg = std::to_string(offending.size()) + " state(s) exceed the gate " + io::number(c.gate);
    throw GateFailure(msg, std::move(offending));
  }
  return ok;
}

int cmd_variational(const RunConfig& c, std::ostream& out) {
  const auto h = load(c);
  if (c.states < 1 || c.states > h.dim()) throw ConfigError("--states must lie in [1, dim]");
  const int m = c.harmonics ? *c.harmonics : sambe::solve(h, solve_options(c)).meta.truncation;

  variational::VariationalConfig vc;
  vc.seed = c.seed;
  if (c.max_iters) vc.max_iterations = *c.max_iters;
  if (c.restarts) vc.restarts = *c.restarts;

  Spectrum s;
  s.meta.dim = h.dim();
  s.meta.omega = h.omega();
  s.meta.truncation = m;
  s.meta.tol_deg = c.tol_deg.value_or(1e-8 * h.omega());
  s.meta.solver = "augmented-Lagrangian conjugate gradients";
  s.meta.model_hash = model_hash(h);

  std::vector<variational::VariationalResult> results;
  std::vector<FloquetMode> found;
  for (int k = 0; k < c.states; ++k) {
    auto r = k == 0 ? variational::minimize_ground(h, m, vc) : variational::minimize_excited(h, m, vc, found);
    found.push_back(r.mode);
    EigenTriplet t;
    t.mode = r.mode;
    t.quasi_energy = r.quasi_energy;
    t.avg_energy = r.avg_energy;
    t.replica = r.replica;
    t.residual = r.residual;
    t.group = k;
    s.triplets.push_back(t);
    s.meta.max_residual = std::max(s.meta.max_residual, r.residual);
    const bool converged = r.converged;
    results.push_back(std::move(r));
    if (!converged) break;
  }

  s.meta.timestamp = utc_timestamp();
  json j = io::spectrum_to_json(s);
  std::ostringstream csv;
  csv << "state,eps,ebar,residual,centroid,converged\n";
  bool all = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    all = all && r.converged;
    json trace = json::array();
    for (const auto& it : r.trace)
      trace.push_back({{"outer", it.outer}, {"iterations", it.iterations}, {"objective", it.objective},
                       {"residual", it.residual}, {"norm_error", it.norm_error}, {"mu_res", it.mu_res}});
    j["triplets"][i]["converged"] = r.converged;
    j["triplets"][i]["seed"] = r.seed;
    j["triplets"][i]["restart"] = r.restart;
    j["triplets"][i]["trace"] = std::move(trace);
    csv << i << ',' << io::number(r.quasi_energy) << ',' << io::number(r.avg_energy) << ',' << io::number(r.residual)
        << ',' << io::number(r.mode.centroid()) << ',' << (r.converged ? 1 : 0) << '\n';
  }
  io::write_json(fs::path(c.out) / "variational.json", j);
  io::write_text(fs::path(c.out) / "variational.csv", csv.str());
  print_spectrum(out, s);
  if (!all)
    throw ConvergenceError("variational minimization did not reach residual " + io::number(vc.residual_tol) +
                           " (state " + std::to_string(results.size() - 1) + ", residual " +
                           io::number(results.back().residual) + ")");
  return ok;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  if (c.builtin.empty() || !c.model_path.empty()) throw ConfigError("sweep needs a --builtin model");
  if (c.axis.empty()) throw ConfigError("sweep needs --axis");
  const auto defaults = builtin_defaults(c.builtin);
  if (!defaults.count(c.axis) && !c.params.count(c.axis))
    throw ConfigError("sweep axis '" + c.axis + "' is not a parameter of '" + c.builtin + "'");
  // Validate the base model once so that bad parameters fail up front.
  (void)load(c);

  const int count = c.from == c.to ? 1 : c.count;
  const auto values = analysis::linspace(c.from, c.to, count);
  auto make = [&](double lambda) {
    auto params = c.params;
    params[c.axis] = lambda;
    return builtin_model({c.builtin, params});
  };
  const auto points = analysis::sweep(make, values, solve_options(c));

  std::ostringstream csv;
  io::write_sweep_csv(csv, points);
  io::write_text(fs::path(c.out) / "sweep.csv", csv.str());
  json failures = json::array();
  for (const auto& p : points)
    if (!p.spectrum) failures.push_back({{"lambda", p.lambda}, {"error", p.error}});
  io::write_json(fs::path(c.out) / "sweep_failures.json", failures);
  out << points.size() << " point(s), " << failures.size() << " failed\n";
  return ok;
}

int cmd_perturb(const RunConfig& c, std::ostream& out) {
  std::optional<FourierHamiltonian> h, v;
  double strength = 0.0;
  std::string description;
  if (!c.fixture.empty()) {
    if (!c.model_path.empty() || !c.builtin.empty() || !c.perturbation_path.empty())
      throw ConfigError("--fixture replaces the model and perturbation sources");
    auto f = analysis::fixture(c.fixture);
    h = f.h;
    v = f.v;
    strength = c.strength.value_or(f.strength);
    description = "fixture " + f.name;
  } else {
    if (c.perturbation_path.empty()) throw ConfigError("perturb needs --fixture or --perturbation <model file>");
    h = load(c);
    v = io::load_model(c.perturbation_path);
    strength = c.strength.value_or(1e-6 * h->omega());
    description = c.perturbation_path;
  }
  const auto report = analysis::perturb_and_track(*h, *v, strength, solve_options(c), description);
  std::ostringstream csv;
  io::write_tracking_csv(csv, report);
  io::write_text(fs::path(c.out) / "tracking.csv", csv.str());
  out << description << ", strength " << strength << "\n"
      << "quasi-energy pairing: min overlap " << fmt(report.min_overlap(analysis::Pairing::quasi_energy))
      << ", max " << fmt(report.max_overlap(analysis::Pairing::quasi_energy)) << "\n"
      << "label pairing:        min overlap " << fmt(report.min_overlap(analysis::Pairing::label)) << ", max "
      << fmt(report.max_overlap(analysis::Pairing::label)) << "\n";
  return ok;
}

int report_error(const RunConfig& c, std::ostream& err, const char* kind, const std::string& message, int code,
                 const json& rows = nullptr) {
  json j = {{"kind", kind}, {"message", message}};
  if (!rows.is_null()) j["rows"] = rows;
  err << j.dump() << "\n";
  try {
    io::write_json(fs::path(c.out) / "error.json", j);
  } catch (const std::exception&) {
    // the stderr copy is authoritative
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  std::vector<std::string> params;
  std::string harmonics = "auto";
  double tol_deg = 0.0;
  int max_iters = 0, restarts = 0;
  double strength = 0.0;

  CLI::App app{"Floquet eigentriplets: quasi-energy and average energy of periodically driven systems", "floquet"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    auto* model = sub->add_option("--model", c.model_path, "model JSON file");
    auto* builtin = sub->add_option("--builtin", c.builtin, "built-in model name");
    model->excludes(builtin);
    sub->add_option("--param", params, "built-in parameter, key=value (repeatable)");
    sub->add_option("--harmonics", harmonics, "harmonic cutoff M, or 'auto'");
    sub->add_option("--tol-deg", tol_deg, "absolute quasi-energy degeneracy tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "output directory");
  };

  auto* solve = app.add_subcommand("solve", "eigentriplets by Floquet-matrix diagonalization");
  common(solve);

  auto* compare = app.add_subcommand("compare", "diagonalization against one-period propagation");
  common(compare);
  compare->add_option("--gate", c.gate, "largest tolerated |d eps|, |d Ebar| and 1 - overlap")->check(CLI::PositiveNumber);

  auto* var = app.add_subcommand("variational", "average-energy minimization");
  common(var);
  var->add_option("--seed", c.seed, "random seed for restarts");
  var->add_option("--states", c.states, "number of states (ground first)");
  var->add_option("--max-iters", max_iters, "iteration budget per restart")->check(CLI::PositiveNumber);
  var->add_option("--restarts", restarts, "random restarts")->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep", "eigentriplets along a parameter axis");
  common(sweep);
  sweep->add_option("--axis", c.axis, "parameter to vary")->required();
  sweep->add_option("--from", c.from, "first value")->required();
  sweep->add_option("--to", c.to, "last value")->required();
  sweep->add_option("--count", c.count, "number of points")->check(CLI::PositiveNumber);

  auto* perturb = app.add_subcommand("perturb", "state tracking under a small perturbation");
  common(perturb);
  perturb->add_option("--fixture", c.fixture, "shipped experiment (degenerate_pair)");
  perturb->add_option("--perturbation", c.perturbation_path, "perturbation model JSON file");
  perturb->add_option("--strength", strength, "perturbation strength (default 1e-6 omega)")->check(CLI::NonNegativeNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    // Parsing stopped early, so --out may not have been read yet.
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out" && i + 1 < args.size()) c.out = args[i + 1];
      else if (args[i].rfind("--out=", 0) == 0) c.out = args[i].substr(6);
    }
    return report_error(c, err, "config", e.what(), config);
  }

  for (auto* sub : app.get_subcommands()) {
    c.command = sub->get_name();
    auto given = [sub](const char* name) {
      const auto* opt = sub->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (given("--tol-deg")) c.tol_deg = tol_deg;
    if (given("--max-iters")) c.max_iters = max_iters;
    if (given("--restarts")) c.restarts = restarts;
    if (given("--strength")) c.strength = strength;
  }

  try {
    c.params = parse_params(params);
    c.harmonics = parse_harmonics(harmonics);
    if (c.command == "solve") return cmd_solve(c, out);
    if (c.command == "compare") return cmd_compare(c, out);
    if (c.command == "variational") return cmd_variational(c, out);
    if (c.command == "sweep") return cmd_sweep(c, out);
    return cmd_perturb(c, out);
  } catch (const GateFailure& e) {
    return report_error(c, err, "gate", e.what(), gate, e.rows);
  } catch (const Error& e) {
    int code = internal;
    switch (e.kind()) {
      case ErrorKind::config: code = config; break;
      case ErrorKind::gate: code = gate; break;
      case ErrorKind::convergence:
      case ErrorKind::truncation: code = nonconvergence; break;
    }
    return report_error(c, err, to_string(e.kind()), e.what(), code);
  } catch (const std::exception& e) {
    return report_error(c, err, "internal", e.what(), internal);
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace floquet::cli
