// spherevortex command-line tool.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spherevortex/dynamics.hpp"
#include "spherevortex/equilibria.hpp"
#include "spherevortex/experiments.hpp"
#include "spherevortex/io.hpp"
#include "spherevortex/manifest.hpp"
#include "spherevortex/stability.hpp"
#include "spherevortex/verify.hpp"

namespace fs = std::filesystem;
using namespace spherevortex;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

/// "start:stop:count", "v1,v2,..." or a single number.
std::vector<double> parse_grid(const std::string& text, const std::string& field) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(field + ": '" + s + "' is not a number");
    }
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ValidationError(field + ": range must be start:stop:count");
    const double a = number(parts[0]), b = number(parts[1]);
    const double c = number(parts[2]);
    if (!(c >= 1.0) || c != std::floor(c)) throw ValidationError(field + ": count must be a positive integer");
    const int n = static_cast<int>(c);
    for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
    return out;
  }
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  if (out.empty()) throw ValidationError(field + ": empty list");
  return out;
}

std::vector<int> to_ints(const std::vector<double>& v, const std::string& field) {
  std::vector<int> out;
  for (double x : v) {
    if (x != std::floor(x)) throw ValidationError(field + ": expected integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

VortexConfig build_family(const std::string& name, double a, double gamma, std::optional<double> kappa, int n) {
  switch (parse_family(name)) {
    case Family::polar_pair: return polar_pair(1.0, gamma);
    case Family::four_vortex: return four_vortex(a, gamma);
    case Family::vortex_crystal:
      if (!kappa) throw ValidationError("kappa: required for vortex-crystal");
      return vortex_crystal(n, a, *kappa, gamma);
  }
  throw ValidationError("family: unknown");
}

/// Reads a config file, letting --strict-gauss override the document's value before validation.
io::RunConfig load_config(const std::string& path, std::optional<bool> strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (strict) {
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("config: not a valid JSON document (") + e.what() + ")");
    }
    if (doc.is_object()) {
      doc["strict_gauss"] = *strict;
      text = doc.dump();
    }
  }
  io::RunConfig rc = io::parse_config(text);
  for (const auto& w : rc.warnings) std::cerr << "warning: " << w << '\n';
  return rc;
}

ordered_json config_json(const VortexConfig& cfg) { return ordered_json::parse(io::config_to_json(cfg)); }

struct Outputs {
  fs::path dir;
  std::vector<std::string> files;

  fs::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

class Runner {
 public:
  explicit Runner(std::vector<std::string> argv) : argv_(std::move(argv)) {}

  int run();

 private:
  void finish(const std::string& command, const ordered_json& params, const Outputs& out) {
    io::RunManifest m;
    m.command = command;
    m.argv = argv_;
    m.params = params;
    m.master_seed = common_.seed;
    m.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_manifest(out.dir, m, out.files);
    std::cout << "wrote " << (out.dir / "manifest.json").string() << '\n';
  }

  Outputs outputs() {
    Outputs o;
    o.dir = common_.out_dir;
    std::error_code ec;
    fs::create_directories(o.dir, ec);
    if (ec || !fs::is_directory(o.dir)) throw ValidationError("out-dir: cannot create " + common_.out_dir);
    return o;
  }

  int simulate();
  int stability();
  int sweep();
  int montecarlo();
  int blob();
  int verify();

  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
  Common common_;

  // Shared flag storage.
  std::string config_path_;
  std::string family_ = "four-vortex";
  double a_ = 1.0;
  double gamma_ = 0.0;
  std::optional<double> kappa_;
  int n_ = 8;
  std::optional<double> eps_;
  std::optional<double> beta_;
  std::optional<int> particles_;
  double dt_ = 1e-3;
  double t_end_ = 1.0;
  int record_every_ = 1;
  std::optional<bool> strict_;
  std::string a_grid_ = "1", gamma_grid_ = "0", kappa_grid_, n_grid_ = "8";
  std::string strengths_ = "1,1,-2", eps_grid_ = "0.05,0.02,0.01";
  double tau_ = 5.0;
  int trials_ = 500;
  int diagnostic_every_ = 10;
  bool stop_at_exit_ = false;
  std::string layout_ = "uniform";
  bool skip_slow_ = false;
  std::vector<int> only_;
  std::string manifest_path_, replay_path_;
};

int Runner::simulate() {
  const io::RunConfig rc = load_config(config_path_, strict_);
  IntegrationOptions opt;
  opt.dt = dt_;
  opt.t_end = t_end_;
  opt.record_every = record_every_;
  opt.eps = eps_;
  const Trajectory traj = integrate(rc.config, opt);
  Outputs out = outputs();
  io::write_trajectory(out.add("trajectory.csv"), rc.config, traj, eps_);
  io::write_invariants(out.add("invariants.csv"), traj);
  io::write_drift(out.add("drift.csv"), traj);
  ordered_json p;
  p["config"] = config_json(rc.config);
  p["dt"] = dt_;
  p["t_end"] = t_end_;
  p["record_every"] = record_every_;
  p["eps"] = eps_ ? ordered_json(*eps_) : ordered_json(nullptr);
  finish("simulate", p, out);
  if (traj.aborted) throw NumericalError("integration aborted: " + traj.abort_reason);
  return kExitOk;
}

int Runner::stability() {
  const VortexConfig cfg = config_path_.empty() ? build_family(family_, a_, gamma_, kappa_, n_)
                                                : load_config(config_path_, strict_).config;
  const RelativeEquilibrium re = relative_equilibrium_residual(cfg);
  VortexConfig co_rotating = cfg;
  co_rotating.gamma = cfg.gamma - re.omega;
  const TangentMap tm = jacobian(co_rotating);
  const SpectrumReport rep = spectrum(tm.assembled);
  Outputs out = outputs();
  io::write_equilibrium(out.add("equilibrium.csv"), re, max_speed(vortex_rhs(co_rotating)));
  io::write_jacobian(out.add("jacobian.csv"), tm);
  io::write_spectrum(out.add("spectrum.csv"), rep, re.omega);
  ordered_json p;
  if (config_path_.empty()) {
    p["family"] = family_;
    p["a"] = a_;
    p["gamma"] = gamma_;
    p["kappa"] = kappa_ ? ordered_json(*kappa_) : ordered_json(nullptr);
    p["n"] = n_;
  }
  p["config"] = config_json(cfg);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", rep.max_real_part);
  std::cout << "max_real_part=" << buf << " Omega=" << re.omega << " eq_residual=" << re.residual << '\n';
  finish("stability", p, out);
  return kExitOk;
}

int Runner::sweep() {
  SweepGrid grid;
  grid.family = parse_family(family_);
  grid.a_values = parse_grid(a_grid_, "a");
  grid.gamma_values = parse_grid(gamma_grid_, "gamma");
  if (!kappa_grid_.empty()) grid.kappa_values = parse_grid(kappa_grid_, "kappa");
  grid.n_values = to_ints(parse_grid(n_grid_, "n"), "n");
  const auto rows = stability_sweep(grid);
  Outputs out = outputs();
  io::write_sweep(out.add("sweep.csv"), rows);
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "warning: row N=" << r.N << " a=" << r.a << " kappa=" << r.kappa << " gamma=" << r.gamma << ": " << r.error
                << '\n';
    }
  }
  ordered_json p;
  p["family"] = family_name(grid.family);
  p["a"] = grid.a_values;
  p["gamma"] = grid.gamma_values;
  p["kappa"] = grid.kappa_values;
  p["n"] = grid.n_values;
  std::cout << rows.size() << " rows, " << failed << " failed\n";
  finish("sweep", p, out);
  return kExitOk;
}

int Runner::montecarlo() {
  MonteCarloSpec spec;
  spec.strengths = parse_grid(strengths_, "strengths");
  spec.gamma = gamma_;
  spec.eps_grid = parse_grid(eps_grid_, "eps");
  spec.tau = tau_;
  spec.trials = trials_;
  spec.dt = dt_;
  spec.master_seed = common_.seed;
  const CollisionStats st = montecarlo_collisions(spec);
  Outputs out = outputs();
  io::write_collisions(out.add("collisions.csv"), st);
  for (std::size_t k = 0; k < st.eps_grid.size(); ++k) {
    std::cout << "eps=" << st.eps_grid[k] << " collided=" << st.collided[k] << "/" << st.trials << '\n';
  }
  ordered_json p;
  p["strengths"] = spec.strengths;
  p["gamma"] = spec.gamma;
  p["eps"] = spec.eps_grid;
  p["tau"] = spec.tau;
  p["trials"] = spec.trials;
  p["dt"] = spec.dt;
  finish("montecarlo", p, out);
  return kExitOk;
}

int Runner::blob() {
  VortexConfig ref;
  io::BlobRequest req;
  if (config_path_.empty()) {
    ref = build_family(family_, a_, gamma_, kappa_, n_);
  } else {
    const io::RunConfig rc = load_config(config_path_, strict_);
    ref = rc.config;
    if (rc.blob) req = *rc.blob;
  }
  if (eps_) req.eps = *eps_;
  if (beta_) req.beta = *beta_;
  if (particles_) req.particles_per_blob = *particles_;
  if (layout_ != "uniform" && layout_ != "fibonacci") throw ValidationError("layout: expected uniform or fibonacci");
  RngStream rng = substream(common_.seed, {1});
  const BlobCloud cloud = blob_initialize(ref, req.eps, req.particles_per_blob, req.beta, rng,
                                          layout_ == "uniform" ? BlobLayout::uniform : BlobLayout::fibonacci);
  BlobEvolveOptions eo;
  eo.dt = dt_;
  eo.t_end = t_end_;
  eo.diagnostic_every = diagnostic_every_;
  eo.stop_at_exit = stop_at_exit_;
  const MomentReport rep = blob_evolve(cloud, eo);
  Outputs out = outputs();
  io::write_moments(out.add("moments.csv"), rep);
  io::write_exit(out.add("exit.csv"), rep);
  if (rep.exit_time) {
    std::cout << "exit_time=" << *rep.exit_time << '\n';
  } else {
    std::cout << "no exit up to t=" << rep.samples.back().t << '\n';
  }
  if (rep.underflow_events > 0) std::cerr << "warning: " << rep.underflow_events << " particle pairs below the distance floor\n";
  ordered_json p;
  if (config_path_.empty()) {
    p["family"] = family_;
    p["a"] = a_;
    p["gamma"] = gamma_;
  }
  p["config"] = config_json(ref);
  p["eps"] = req.eps;
  p["beta"] = req.beta;
  p["particles_per_blob"] = req.particles_per_blob;
  p["layout"] = layout_;
  p["dt"] = dt_;
  p["t_end"] = t_end_;
  p["diagnostic_every"] = diagnostic_every_;
  p["stop_at_exit"] = stop_at_exit_;
  finish("blob", p, out);
  return kExitOk;
}

int Runner::verify() {
  if (!manifest_path_.empty()) {
    const auto bad = io::check_manifest(manifest_path_);
    const auto m = io::read_manifest(manifest_path_);
    for (const auto& o : m.outputs) {
      const auto it = std::find_if(bad.begin(), bad.end(), [&](const auto& b) { return b.path == o.path; });
      std::cout << (it == bad.end() ? "[PASS] " : "[FAIL] ") << o.path;
      if (it != bad.end()) std::cout << (it->actual.empty() ? " missing" : " digest " + it->actual);
      std::cout << '\n';
    }
    if (!bad.empty()) throw ValidationError("manifest: " + std::to_string(bad.size()) + " output(s) do not match their digests");
    return kExitOk;
  }
  if (!replay_path_.empty()) {
    const io::RunManifest m = io::read_manifest(replay_path_);
    const fs::path scratch = fs::path(common_.out_dir) / "replay";
    std::vector<std::string> args = m.argv;
    auto it = std::find(args.begin(), args.end(), "--out-dir");
    if (it != args.end() && it + 1 != args.end()) {
      *(it + 1) = scratch.string();
    } else {
      args.push_back("--out-dir");
      args.push_back(scratch.string());
    }
    std::cout << "replaying " << m.command << " into " << scratch.string() << '\n';
    const int code = Runner(args).run();
    if (code != kExitOk) return code;
    int bad = 0;
    for (const auto& o : m.outputs) {
      const fs::path p = scratch / o.path;
      const bool same = fs::exists(p) && io::sha256_file(p) == o.sha256;
      bad += same ? 0 : 1;
      std::cout << (same ? "[PASS] " : "[FAIL] ") << o.path << '\n';
    }
    if (bad > 0) throw ValidationError("replay: " + std::to_string(bad) + " output(s) differ from the manifest");
    return kExitOk;
  }
  verify::VerifyOptions opt;
  opt.skip_slow = skip_slow_;
  opt.only = only_;
  opt.seed = common_.seed;
  const auto results = verify::run_all(opt, [](const verify::CheckResult& r) {
    std::cout << verify::format_line(r) << std::endl;
  });
  Outputs out = outputs();
  {
    io::CsvWriter w(out.add("verify.csv"), {"id", "name", "status", "seconds", "detail"});
    for (const auto& r : results) {
      std::string detail = r.detail;
      std::replace(detail.begin(), detail.end(), ',', ';');
      w.row({std::to_string(r.id), r.name, r.skipped ? "skip" : (r.pass ? "pass" : "fail"), io::fmt(r.seconds), detail});
    }
  }
  ordered_json p;
  p["skip_slow"] = skip_slow_;
  p["only"] = only_;
  finish("verify", p, out);
  if (!verify::all_passed(results)) {
    std::cerr << "verify: some checks failed\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int Runner::run() {
  CLI::App app{"Point-vortex dynamics on the rotating unit sphere"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPHEREVORTEX_VERSION);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", common_.out_dir, "Directory for output files")->capture_default_str();
    sub->add_option("--seed", common_.seed, "Master seed")->capture_default_str();
  };
  auto family_flags = [&](CLI::App* sub) {
    sub->add_option("--family", family_, "polar-pair, four-vortex or vortex-crystal")->capture_default_str();
    sub->add_option("--a", a_, "Ring radius")->capture_default_str();
    sub->add_option("--gamma", gamma_, "Rotation rate")->capture_default_str();
    sub->add_option("--kappa", kappa_, "Pole strength ratio (vortex-crystal)");
    sub->add_option("--n", n_, "Number of vortices (vortex-crystal)")->capture_default_str();
  };

  auto* sim = app.add_subcommand("simulate", "Integrate a configuration file");
  sim->add_option("--config", config_path_, "Configuration document")->required();
  sim->add_option("--dt", dt_, "Time step")->capture_default_str();
  sim->add_option("--t-end", t_end_, "Final time")->capture_default_str();
  sim->add_option("--record-every", record_every_, "Steps between recorded samples")->capture_default_str();
  sim->add_option("--eps", eps_, "Regularization cutoff (exact kernel when absent)");
  sim->add_option("--strict-gauss", strict_, "Override the document's strict_gauss");
  common(sim);

  auto* stab = app.add_subcommand("stability", "Linear stability of an equilibrium");
  family_flags(stab);
  stab->add_option("--config", config_path_, "Configuration document (instead of --family)");
  stab->add_option("--strict-gauss", strict_, "Override the document's strict_gauss");
  common(stab);

  auto* sw = app.add_subcommand("sweep", "Stability over a parameter grid");
  sw->add_option("--family", family_, "polar-pair, four-vortex or vortex-crystal")->capture_default_str();
  sw->add_option("--a", a_grid_, "Grid start:stop:count or list")->capture_default_str();
  sw->add_option("--gamma", gamma_grid_, "Grid start:stop:count or list")->capture_default_str();
  sw->add_option("--kappa", kappa_grid_, "Grid start:stop:count or list (vortex-crystal)");
  sw->add_option("--n", n_grid_, "Grid of N (vortex-crystal)")->capture_default_str();
  common(sw);

  auto* mc = app.add_subcommand("montecarlo", "Collision statistics of random initial data");
  mc->add_option("--strengths", strengths_, "Comma-separated strengths")->capture_default_str();
  mc->add_option("--gamma", gamma_, "Rotation rate")->capture_default_str();
  mc->add_option("--eps", eps_grid_, "Decreasing cutoff list")->capture_default_str();
  mc->add_option("--tau", tau_, "Time horizon")->capture_default_str();
  mc->add_option("--trials", trials_, "Trials per cutoff")->capture_default_str();
  mc->add_option("--dt", dt_, "Time step")->capture_default_str();
  common(mc);

  auto* bl = app.add_subcommand("blob", "Evolve a vortex-blob cloud");
  family_flags(bl);
  bl->add_option("--config", config_path_, "Configuration document (instead of --family)");
  bl->add_option("--strict-gauss", strict_, "Override the document's strict_gauss");
  bl->add_option("--eps", eps_, "Blob radius");
  bl->add_option("--beta", beta_, "Exit exponent");
  bl->add_option("--particles", particles_, "Particles per blob");
  bl->add_option("--layout", layout_, "uniform or fibonacci")->capture_default_str();
  bl->add_option("--dt", dt_, "Time step")->capture_default_str();
  bl->add_option("--t-end", t_end_, "Final time")->capture_default_str();
  bl->add_option("--diagnostic-every", diagnostic_every_, "Steps between diagnostics")->capture_default_str();
  bl->add_flag("--stop-at-exit", stop_at_exit_, "Stop at the first exit");
  common(bl);

  auto* ver = app.add_subcommand("verify", "Run the reproduction suite, or check a run's digests");
  ver->add_flag("--skip-slow", skip_slow_, "Skip the long statistical checks");
  ver->add_option("--only", only_, "Criterion numbers to run")->delimiter(',');
  ver->add_option("--manifest", manifest_path_, "Recompute the digests listed in a manifest");
  ver->add_option("--replay", replay_path_, "Rerun the command recorded in a manifest and compare digests");
  common(ver);

  std::vector<std::string> reversed(argv_.rbegin(), argv_.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (!ver->parsed() || (manifest_path_.empty() && replay_path_.empty())) std::cout << "master_seed=" << common_.seed << '\n';
  if (sim->parsed()) return simulate();
  if (stab->parsed()) return stability();
  if (sw->parsed()) return sweep();
  if (mc->parsed()) return montecarlo();
  if (bl->parsed()) {
    if (bl->count("--dt") == 0) dt_ = 2e-3;
    return blob();
  }
  return verify();
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return Runner(args).run();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
