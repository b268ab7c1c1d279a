#ifndef SPHEREVORTEX_VERIFY_HPP
#define SPHEREVORTEX_VERIFY_HPP

// Built-in reproduction suite. Each criterion returns one pass/fail record;
// the runtime budget is part of the verdict.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spherevortex/dynamics.hpp"
#include "spherevortex/equilibria.hpp"
#include "spherevortex/experiments.hpp"
#include "spherevortex/geometry.hpp"
#include "spherevortex/random.hpp"
#include "spherevortex/reference.hpp"
#include "spherevortex/stability.hpp"

namespace spherevortex::verify {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

struct VerifyOptions {
  bool skip_slow = false;     // criteria 9 and 10
  std::uint64_t seed = 0;     // master seed of every randomized criterion
  std::vector<int> only;      // empty: all criteria
};

namespace detail {

/// Collects named sub-checks; the first failures are kept for the report.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok) {
      ++failed_;
      if (failed_ <= 3) failures_ += (failures_.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(count_ - failed_) + "/" + std::to_string(count_) + " checks";
    if (!notes_.empty()) s += ", " + notes_;
    if (!failures_.empty()) s += "; failed: " + failures_;
    return s;
  }

 private:
  int count_ = 0;
  int failed_ = 0;
  std::string failures_;
  std::string notes_;
};

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline CheckResult polar_pair_stationarity(const VerifyOptions&) {
  detail::Checker c;
  double worst = 0.0;
  for (double g : {-2.0, -1.0, 0.5, 1.0, 3.0}) {
    for (double gamma : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const double v = max_speed(vortex_rhs(polar_pair(g, gamma)));
      worst = std::max(worst, v);
      c.expect(v <= 1e-12, "speed " + detail::num(v) + " at G=" + detail::num(g) + " gamma=" + detail::num(gamma));
    }
  }
  c.note("max speed " + detail::num(worst));
  return {1, "polar-pair stationarity", c.ok(), false, c.summary(), 0.0, 1.0};
}

inline CheckResult kappa_reproduction(const VerifyOptions&) {
  detail::Checker c;
  const double k = kappa_stationary(1.0, 0.5, 1.0);
  c.expect(std::abs(k - (kPi - 1.0)) <= 1e-12, "kappa(1, 1/2) = " + detail::num(k));
  for (double g : {0.0, 0.5, 1.0}) {
    const double ks = kappa_stationary(1e-4, g, 1.0);
    c.expect(std::abs(ks + 0.5) <= 1e-3, "kappa(1e-4, " + detail::num(g) + ") = " + detail::num(ks));
  }
  double worst = 0.0;
  for (int ia = 1; ia <= 10; ++ia) {
    for (int ig = -4; ig <= 4; ++ig) {
      const double a = 0.1 * ia, g = 0.25 * ig;
      const double r = max_speed(vortex_rhs(four_vortex(a, g)));
      worst = std::max(worst, r);
      c.expect(r <= 1e-10, "four-vortex residual " + detail::num(r) + " at a=" + detail::num(a) + " gamma=" + detail::num(g));
    }
  }
  c.note("max four-vortex residual " + detail::num(worst));
  return {2, "kappa and four-vortex stationarity", c.ok(), false, c.summary(), 0.0, 1.0};
}

inline CheckResult spectrum_reproduction(const VerifyOptions&) {
  detail::Checker c;
  const Matrix a = jacobian(four_vortex(1.0, 0.5)).assembled;
  const SpectrumReport rep = spectrum(a);
  c.expect(rep.certified(), "eigenpair residual " + detail::num(rep.max_residual()));
  c.expect(rep.count_near({0.0, 0.0}, 1e-9) == 2, "zero eigenvalue multiplicity " + std::to_string(rep.count_near({0.0, 0.0}, 1e-9)));
  c.expect(rep.count_near({0.0, 0.5}, 1e-9) == 1, "eigenvalue i/2");
  c.expect(rep.count_near({0.0, -0.5}, 1e-9) == 1, "eigenvalue -i/2");
  c.expect(std::abs(rep.max_real_part - 0.0491) <= 1e-3, "max_real_part " + detail::num(rep.max_real_part));
  // Against the eigenvalues of the independently assembled hand-derived matrix.
  const Matrix printed = reference::four_vortex_reference_matrix();
  const double d = reference::multiset_distance(reference::sorted_eigenvalues(a), reference::sorted_eigenvalues(printed));
  c.expect(d <= 1e-9, "spectrum vs hand-derived matrix " + detail::num(d));
  const double printed_max = spectrum(printed).max_real_part;
  c.expect(std::abs(printed_max - 0.0491) <= 1e-3, "hand-derived max_real_part " + detail::num(printed_max));
  for (const auto& v : char_poly_check(a, {0.25, 0.5, 1.0, 2.0})) {
    const double rel = std::abs(v.determinant - v.formula) / std::abs(v.formula);
    c.expect(rel <= 1e-8, "det vs chi at " + detail::num(v.lambda) + ": rel " + detail::num(rel));
  }
  const double chi1 = four_vortex_char_poly(1.0);
  c.expect(std::abs(chi1 - 1.36284) <= 1e-4 * 1.36284, "chi(1) = " + detail::num(chi1));
  char buf[64];
  std::snprintf(buf, sizeof buf, "max_real_part %.6f, chi(1) %.7f", rep.max_real_part, chi1);
  c.note(buf);
  return {3, "four-vortex spectrum", c.ok(), false, c.summary(), 0.0, 1.0};
}

inline CheckResult polar_pair_jacobian(const VerifyOptions&) {
  detail::Checker c;
  double worst_entry = 0.0;
  for (double g : {1.0, -0.5, 3.0}) {
    for (double gamma : {0.0, 0.5, -1.0}) {
      const VortexConfig cfg = polar_pair(g, gamma);
      const std::string at = " at G=" + detail::num(g) + " gamma=" + detail::num(gamma);
      // The hand-derived matrix uses the frame (-e1, e2) at the south pole.
      const BasisSearchResult bs = basis_search(cfg, reference::polar_pair_reference_matrix(g, gamma), {0});
      worst_entry = std::max(worst_entry, bs.max_entry_error);
      c.expect(bs.max_entry_error <= 1e-12, "entrywise " + detail::num(bs.max_entry_error) + at);
      const TangentMap tm = jacobian(cfg);
      const double fd = (tm.assembled - reference::fd_jacobian(cfg, tm.bases)).cwiseAbs().maxCoeff();
      c.expect(fd <= 1e-8, "finite differences " + detail::num(fd) + at);
      for (const auto& z : spectrum(tm.assembled).eigenvalues) c.expect(std::abs(z.real()) <= 1e-10, "Re lambda " + detail::num(z.real()) + at);
      for (double r : check_supstable(cfg, 1e-12).residuals) c.expect(r <= 1e-12, "supstable residual " + detail::num(r) + at);
    }
  }
  c.note("max entry error " + detail::num(worst_entry));
  return {4, "polar-pair Jacobian", c.ok(), false, c.summary(), 0.0, 1.0};
}

inline CheckResult differential_vs_numeric(const VerifyOptions& opt) {
  detail::Checker c;
  RngStream rng = substream(opt.seed, {5});
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_fd = 0.0, worst_inv = 0.0;
  for (int k = 0; k < 20; ++k) {
    const VortexConfig cfg = random_gauss_config(rng, 3 + k % 3, k % 2 == 0 ? 0.0 : 0.5, 0.2);
    const TangentMap tm = jacobian(cfg);
    const Matrix fd = reference::fd_jacobian(cfg, tm.bases);
    Eigen::VectorXd h(tm.assembled.rows());
    for (Eigen::Index q = 0; q < h.size(); ++q) h[q] = normal(rng);
    const Eigen::VectorXd an = tm.assembled * h, nu = fd * h;
    const double rel = (an - nu).norm() / nu.norm();
    worst_fd = std::max(worst_fd, rel);
    c.expect(rel < 1e-5, "config " + std::to_string(k) + " relative error " + detail::num(rel));
    std::vector<double> angles(cfg.size());
    for (auto& a : angles) a = ang(rng);
    const double d = reference::multiset_distance(reference::sorted_eigenvalues(tm.assembled),
                                                  reference::sorted_eigenvalues(jacobian(cfg, rotate_bases(tm.bases, angles)).assembled));
    worst_inv = std::max(worst_inv, d);
    c.expect(d <= 1e-9, "config " + std::to_string(k) + " basis change moved spectrum by " + detail::num(d));
  }
  c.note("max FD rel error " + detail::num(worst_fd) + ", max spectrum shift " + detail::num(worst_inv));
  return {5, "Jacobian vs finite differences", c.ok(), false, c.summary(), 0.0, 5.0};
}

inline CheckResult conservation(const VerifyOptions& opt) {
  detail::Checker c;
  RngStream rng = substream(opt.seed, {6});
  double worst_h = 0.0, worst_m3 = 0.0, worst_m = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double gamma = k % 2 == 0 ? 0.0 : 0.5;
    const VortexConfig cfg = random_gauss_config(rng, 3 + k % 3, gamma, 0.2);
    const Trajectory tr = integrate(cfg, 1e-3, 10.0, 100);
    c.expect(!tr.aborted, "config " + std::to_string(k) + " aborted: " + tr.abort_reason);
    const auto& a = tr.invariants.front();
    for (const auto& b : tr.invariants) {
      const double dh = std::abs(b.energy - a.energy) / (1.0 + std::abs(a.energy));
      const double dm3 = std::abs(b.vertical_moment - a.vertical_moment);
      worst_h = std::max(worst_h, dh);
      worst_m3 = std::max(worst_m3, dm3);
      c.expect(dh <= 1e-6, "config " + std::to_string(k) + " energy drift " + detail::num(dh));
      c.expect(dm3 <= 1e-8, "config " + std::to_string(k) + " e3-moment drift " + detail::num(dm3));
      if (gamma == 0.0) {
        const double dm = (b.moment - a.moment).norm();
        worst_m = std::max(worst_m, dm);
        c.expect(dm <= 1e-8, "config " + std::to_string(k) + " moment drift " + detail::num(dm));
      }
    }
  }
  const VortexConfig pair = make_config({UnitVector3(e1()), UnitVector3(-e1())}, {1.0, -1.0}, 1.0);
  const Vec3 exact = reference::antipodal_pair_position(e1(), 1.0, kPi);
  std::vector<double> err;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const Trajectory tr = integrate(pair, dt, kPi, 1000000);
    err.push_back((tr.states.back()[0].vec() - exact).norm());
  }
  std::string ratios;
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double r = err[k - 1] / err[k];
    ratios += (ratios.empty() ? "" : "/") + detail::num(r);
    c.expect(r >= 8.0 && r <= 32.0, "halving ratio " + detail::num(r));
  }
  c.note("max dH " + detail::num(worst_h) + ", max dM3 " + detail::num(worst_m3) + ", max dM " + detail::num(worst_m) +
         ", order ratios " + ratios);
  return {6, "conservation and RK4 order", c.ok(), false, c.summary(), 0.0, 30.0};
}

inline CheckResult geometry_oracles(const VerifyOptions& opt) {
  detail::Checker c;
  RngStream rng = substream(opt.seed, {7});
  int bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const Vec3 x = sample_uniform(rng).vec(), y = sample_uniform(rng).vec();
    if (x.cross(y).norm() > (x - y).norm() * (1.0 + 1e-15)) ++bad;
  }
  c.expect(bad == 0, std::to_string(bad) + " pairs with |x^y| > |x-y|");
  const int samples = 100000;
  for (double r : {0.5, 1.0, 1.5}) {
    const Vec3 center = sample_uniform(rng).vec();
    int in = 0;
    for (int k = 0; k < samples; ++k) in += (sample_uniform(rng).vec() - center).norm() <= r ? 1 : 0;
    const double p = kPi * r * r / (4.0 * kPi);
    const double sigma = std::sqrt(p * (1.0 - p) / samples);
    const double phat = static_cast<double>(in) / samples;
    c.expect(std::abs(phat - p) <= 3.0 * sigma, "cap r=" + detail::num(r) + " fraction " + detail::num(phat) + " vs " + detail::num(p));
    c.expect(std::abs(cap_area(r) - kPi * r * r) <= 1e-14, "cap_area(" + detail::num(r) + ")");
  }
  for (double alpha : {0.25, 0.5, 1.0, 1.5}) {
    const double d = std::abs(singular_moment_integral(alpha) - reference::singular_moment_quadrature(alpha));
    c.expect(d <= 1e-8, "singular integral at alpha=" + detail::num(alpha) + " off by " + detail::num(d));
  }
  for (double alpha : {0.0, 1.0}) {
    c.expect(std::abs(singular_moment_integral(alpha) - 4.0 * kPi) <= 1e-12, "singular integral at alpha=" + detail::num(alpha) + " is not 4 pi");
  }
  return {7, "geometry oracles", c.ok(), false, c.summary(), 0.0, 10.0};
}

inline CheckResult blob_initial_lemma(const VerifyOptions& opt) {
  detail::Checker c;
  double worst_center = 0.0, worst_i = 0.0;
  for (double eps : {0.1, 0.05}) {
    for (int k = 0; k < 100; ++k) {
      RngStream rng = substream(opt.seed, {8, static_cast<std::uint64_t>(eps == 0.1 ? 0 : 1), static_cast<std::uint64_t>(k)});
      const VortexConfig ref = k % 2 == 0 ? polar_pair(1.0, 0.0) : four_vortex(1.0, 0.5);
      const BlobCloud cloud = blob_initialize(ref, eps, 100, 0.4, rng);
      const auto diag = blob_diagnostics(cloud, {1, 2, 3}, {eps});
      for (std::size_t b = 0; b < diag.size(); ++b) {
        const double dc = (diag[b].center - ref.points[b].vec()).norm();
        worst_center = std::max(worst_center, dc / eps);
        worst_i = std::max(worst_i, diag[b].second_moment / (eps * eps));
        c.expect(dc <= eps, "center offset " + detail::num(dc) + " at eps=" + detail::num(eps));
        c.expect(diag[b].second_moment <= 4.0 * eps * eps, "I(0) " + detail::num(diag[b].second_moment));
        for (int n = 1; n <= 3; ++n) {
          const double bound = std::pow(16.0, n) * std::pow(eps, 4.0 * n);
          c.expect(diag[b].moments[n - 1] <= bound, "m_" + std::to_string(n) + "(0) " + detail::num(diag[b].moments[n - 1]));
        }
      }
    }
  }
  c.note("max |c-x|/eps " + detail::num(worst_center) + ", max I/eps^2 " + detail::num(worst_i));
  return {8, "blob initial moments", c.ok(), false, c.summary(), 0.0, 5.0};
}

inline CheckResult confinement_contrast(const VerifyOptions& opt) {
  detail::Checker c;
  const double beta = 0.4;
  const double window = 2.0 * std::log(20.0) / std::log(10.0);
  int polar_ok = 0, four_ok = 0;
  std::string polar_log, four_log;
  for (std::uint64_t s = 0; s < 3; ++s) {
    RngStream rng = substream(opt.seed + 1 + s, {1});
    const BlobCloud cloud = blob_initialize(polar_pair(1.0, 0.0), 0.1, 200, beta, rng);
    BlobEvolveOptions eo;
    eo.dt = 2e-3;
    eo.t_end = 50.0;
    eo.orders = {};
    const MomentReport rep = blob_evolve(cloud, eo);
    double max_r = 0.0;
    for (const auto& smp : rep.samples)
      for (const auto& b : smp.blobs) max_r = std::max(max_r, b.support_radius);
    const bool ok = !rep.exit_time && max_r < 0.2;
    polar_ok += ok ? 1 : 0;
    polar_log += (polar_log.empty() ? "" : " ") + std::string(rep.exit_time ? "exit" : "R=" + detail::num(max_r));
  }
  for (std::uint64_t s = 0; s < 3; ++s) {
    std::optional<double> exits[2];
    int e = 0;
    for (double eps : {0.1, 0.05}) {
      RngStream rng = substream(opt.seed + 1 + s, {1});
      const BlobCloud cloud = blob_initialize(four_vortex(1.0, 0.5), eps, 100, beta, rng);
      BlobEvolveOptions eo;
      eo.dt = 5e-3;
      eo.t_end = 400.0;
      eo.orders = {};
      eo.stop_at_exit = true;
      exits[e++] = blob_evolve(cloud, eo).exit_time;
    }
    bool ok = exits[0] && exits[1];
    std::string entry = "none";
    if (ok) {
      const double ratio = *exits[1] / *exits[0];
      ok = ratio >= 1.0 && ratio <= window;
      entry = detail::num(*exits[0]) + "/" + detail::num(*exits[1]);
    }
    four_ok += ok ? 1 : 0;
    four_log += (four_log.empty() ? "" : " ") + entry;
  }
  c.expect(polar_ok >= 2, "polar confinement held for " + std::to_string(polar_ok) + "/3 seeds");
  c.expect(four_ok >= 2, "four-vortex exit ordering held for " + std::to_string(four_ok) + "/3 seeds");
  c.note("polar " + polar_log + "; four-vortex exits(0.1/0.05) " + four_log);
  return {9, "confinement contrast", c.ok(), false, c.summary(), 0.0, 600.0};
}

inline CheckResult collision_trend(const VerifyOptions& opt) {
  detail::Checker c;
  MonteCarloSpec spec;
  spec.strengths = {1.0, 1.0, -2.0};
  spec.gamma = 0.0;
  spec.eps_grid = {0.05, 0.02, 0.01};
  spec.tau = 5.0;
  spec.trials = 500;
  spec.master_seed = opt.seed;
  const CollisionStats a = montecarlo_collisions(spec);
  for (std::size_t k = 1; k < a.fraction.size(); ++k) {
    const double slack = 3.0 * std::hypot(a.std_error[k - 1], a.std_error[k]);
    c.expect(a.fraction[k] <= a.fraction[k - 1] + slack,
             "fraction rose from " + detail::num(a.fraction[k - 1]) + " to " + detail::num(a.fraction[k]));
  }
  const CollisionStats b = montecarlo_collisions(spec);
  c.expect(a.collided == b.collided && a.fraction == b.fraction && a.std_error == b.std_error, "replay differs");
  std::string fr;
  for (double p : a.fraction) fr += (fr.empty() ? "" : "/") + detail::num(p);
  c.note("fractions " + fr);
  return {10, "collision trend and replay", c.ok(), false, c.summary(), 0.0, 600.0};
}

struct Criterion {
  int id;
  const char* name;
  bool slow;
  std::function<CheckResult(const VerifyOptions&)> run;
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "polar-pair stationarity", false, polar_pair_stationarity},
      {2, "kappa and four-vortex stationarity", false, kappa_reproduction},
      {3, "four-vortex spectrum", false, spectrum_reproduction},
      {4, "polar-pair Jacobian", false, polar_pair_jacobian},
      {5, "Jacobian vs finite differences", false, differential_vs_numeric},
      {6, "conservation and RK4 order", false, conservation},
      {7, "geometry oracles", false, geometry_oracles},
      {8, "blob initial moments", false, blob_initial_lemma},
      {9, "confinement contrast", true, confinement_contrast},
      {10, "collision trend and replay", true, collision_trend},
  };
  return all;
}

/// Runs one criterion, timing it; exceptions count as failures.
inline CheckResult run_criterion(const Criterion& cr, const VerifyOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = cr.run(opt);
  } catch (const std::exception& e) {
    r = {cr.id, cr.name, false, false, std::string("exception: ") + e.what(), 0.0, 0.0};
  }
  r.seconds = detail::seconds_since(t0);
  if (r.budget_seconds > 0.0 && r.seconds > r.budget_seconds) {
    r.pass = false;
    r.detail += "; over budget (" + detail::num(r.seconds) + " s > " + detail::num(r.budget_seconds) + " s)";
  }
  return r;
}

inline std::string format_line(const CheckResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] %2d %-36s %8.2fs  ", r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL"), r.id,
                r.name.c_str(), r.seconds);
  return head + r.detail;
}

/// Runs the selected criteria in order; `on_result` sees each result as it completes.
inline std::vector<CheckResult> run_all(const VerifyOptions& opt,
                                        const std::function<void(const CheckResult&)>& on_result = {}) {
  std::vector<CheckResult> out;
  for (const auto& cr : criteria()) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), cr.id) == opt.only.end()) continue;
    CheckResult r;
    if (opt.skip_slow && cr.slow) {
      r = {cr.id, cr.name, true, true, "skipped", 0.0, 0.0};
    } else {
      r = run_criterion(cr, opt);
    }
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& rs) {
  for (const auto& r : rs)
    if (!r.pass) return false;
  return true;
}

}  // namespace spherevortex::verify

#endif
