#ifndef SPHEREVORTEX_DYNAMICS_HPP
#define SPHEREVORTEX_DYNAMICS_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spherevortex/geometry.hpp"

namespace spherevortex {

/// Kernel evaluations below this chordal distance are refused (exact dynamics)
/// or dropped (regularized dynamics, particle clouds).
inline constexpr double kDistFloor = 1e-14;
inline constexpr double kGaussTol = 1e-12;

/**
 * N point vortices on the unit sphere rotating at angular speed gamma.
 *
 * With `strict_gauss` set the circulations must sum to zero (to `gauss_tol`);
 * otherwise the sum is kept as a diagnostic only. Points must be pairwise
 * distinct. Use make_config() to get a validated instance.
 */
struct VortexConfig {
  std::vector<UnitVector3> points;
  std::vector<double> strengths;
  double gamma = 0.0;
  bool strict_gauss = true;
  double gauss_tol = kGaussTol;

  std::size_t size() const noexcept { return points.size(); }

  double gauss_sum() const {
    double s = 0.0;
    for (double g : strengths) s += g;
    return s;
  }

  std::vector<Vec3> positions() const {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.vec());
    return out;
  }

  /// Copy with the same strengths and gamma at new positions.
  VortexConfig with_positions(const std::vector<Vec3>& pos) const {
    VortexConfig c = *this;
    for (std::size_t i = 0; i < pos.size(); ++i) c.points[i] = UnitVector3(pos[i]);
    return c;
  }
};

struct PairDistance {
  double distance = std::numeric_limits<double>::infinity();
  int i = -1;
  int j = -1;
};

inline PairDistance min_pairwise_distance(const std::vector<Vec3>& pts) {
  PairDistance best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = (pts[i] - pts[j]).norm();
      if (d < best.distance) best = {d, static_cast<int>(i), static_cast<int>(j)};
    }
  }
  return best;
}

inline PairDistance min_pairwise_distance(const VortexConfig& cfg) {
  return min_pairwise_distance(cfg.positions());
}

/// Throws ValidationError naming the violated field.
inline void validate(const VortexConfig& cfg) {
  if (cfg.points.size() < 2) {
    throw ValidationError("vortices: need at least 2 points, got " + std::to_string(cfg.points.size()));
  }
  if (cfg.strengths.size() != cfg.points.size()) {
    throw ValidationError("strengths: expected " + std::to_string(cfg.points.size()) + " entries, got " +
                          std::to_string(cfg.strengths.size()));
  }
  for (std::size_t i = 0; i < cfg.strengths.size(); ++i) {
    if (!(cfg.strengths[i] != 0.0) || !std::isfinite(cfg.strengths[i])) {
      throw ValidationError("vortices[" + std::to_string(i) + "].strength: must be finite and nonzero");
    }
  }
  if (!std::isfinite(cfg.gamma)) throw ValidationError("gamma: must be finite");
  for (std::size_t i = 0; i < cfg.points.size(); ++i) {
    if (std::abs(cfg.points[i].vec().squaredNorm() - 1.0) > 1e-12) {
      throw ValidationError("vortices[" + std::to_string(i) + "].position: not on the unit sphere");
    }
  }
  const PairDistance md = min_pairwise_distance(cfg);
  if (!(md.distance > 0.0)) {
    throw ValidationError("vortices[" + std::to_string(md.i) + "], vortices[" + std::to_string(md.j) +
                          "].position: coincident points");
  }
  if (cfg.strict_gauss && std::abs(cfg.gauss_sum()) > cfg.gauss_tol) {
    std::ostringstream os;
    os.precision(17);
    os << "strengths: Gauss constraint violated, sum of strengths = " << cfg.gauss_sum();
    throw ValidationError(os.str());
  }
}

inline VortexConfig make_config(std::vector<UnitVector3> points, std::vector<double> strengths, double gamma,
                                bool strict_gauss = true) {
  VortexConfig cfg{std::move(points), std::move(strengths), gamma, strict_gauss, kGaussTol};
  validate(cfg);
  return cfg;
}

/// K(x, y) = x ^ y / |x - y|^2, the velocity induced at x by a unit vortex at y.
inline Vec3 biot_savart_kernel(const Vec3& x, const Vec3& y, double dist_floor = kDistFloor) {
  const Vec3 d = x - y;
  const double d2 = d.squaredNorm();
  if (d2 < dist_floor * dist_floor) {
    throw DistanceUnderflow("biot_savart_kernel: points closer than distance floor", std::sqrt(d2));
  }
  return x.cross(y) / d2;
}

/**
 * Regularized logarithm: ln r for r >= eps, and the C^1 linear continuation
 * ln(eps) - (1 - r/eps) below eps. Returns (value, derivative).
 *
 * Non-decreasing with derivative <= 1/r; |value| <= |ln r| holds for eps < 1.
 * Cutoffs up to the sphere diameter 2 are accepted for saturation experiments.
 */
inline std::pair<double, double> regularized_log(double r, double eps) {
  if (!(eps > 0.0 && eps < 2.0)) throw ValidationError("regularized_log: eps must lie in (0, 2)");
  if (!(r >= 0.0)) throw ValidationError("regularized_log: r must be >= 0");
  if (r >= eps) return {std::log(r), 1.0 / r};
  return {std::log(eps) - (1.0 - r / eps), 1.0 / eps};
}

namespace detail {

/// Velocities of all points. With `eps` set the regularized kernel is used and
/// sub-floor pairs contribute nothing; otherwise sub-floor pairs throw.
inline void velocities(const std::vector<Vec3>& pts, const std::vector<double>& strengths, double gamma,
                       std::optional<double> eps, std::vector<Vec3>& out) {
  const std::size_t n = pts.size();
  out.assign(n, Vec3::Zero());
  const double floor2 = kDistFloor * kDistFloor;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 v = Vec3::Zero();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 diff = pts[i] - pts[j];
      const double d2 = diff.squaredNorm();
      double factor;
      if (d2 < floor2) {
        if (!eps) {
          throw DistanceUnderflow("vortices " + std::to_string(i) + " and " + std::to_string(j) +
                                      " closer than distance floor",
                                  std::sqrt(d2));
        }
        continue;
      }
      if (eps && d2 < (*eps) * (*eps)) {
        factor = 1.0 / (*eps * std::sqrt(d2));
      } else {
        factor = 1.0 / d2;
      }
      v += (strengths[j] / (2.0 * kPi) * factor) * pts[i].cross(pts[j]);
    }
    v += gamma * e3().cross(pts[i]);
    out[i] = v;
  }
}

inline std::vector<TangentVector> as_tangent(const VortexConfig& cfg, const std::vector<Vec3>& v) {
  std::vector<TangentVector> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back({cfg.points[i], v[i]});
  return out;
}

}  // namespace detail

/// Point-vortex velocity field: sum_j (G_j / 2pi) K(x_i, x_j) + gamma e3 ^ x_i.
inline std::vector<TangentVector> vortex_rhs(const VortexConfig& cfg) {
  std::vector<Vec3> v;
  detail::velocities(cfg.positions(), cfg.strengths, cfg.gamma, std::nullopt, v);
  return detail::as_tangent(cfg, v);
}

/// Velocity field of the energy built on regularized_log; bounded, defined everywhere.
inline std::vector<TangentVector> regularized_rhs(const VortexConfig& cfg, double eps) {
  if (!(eps > 0.0 && eps < 2.0)) throw ValidationError("eps: must lie in (0, 2)");
  std::vector<Vec3> v;
  detail::velocities(cfg.positions(), cfg.strengths, cfg.gamma, eps, v);
  return detail::as_tangent(cfg, v);
}

inline double max_speed(const std::vector<TangentVector>& v) {
  double m = 0.0;
  for (const auto& t : v) m = std::max(m, t.vec.norm());
  return m;
}

inline double vertical_moment(const VortexConfig& cfg) {
  double m = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) m += cfg.strengths[i] * cfg.points[i].z();
  return m;
}

/// sum_i G_i x_i, conserved as a vector when gamma = 0.
inline Vec3 circulation_moment(const VortexConfig& cfg) {
  Vec3 m = Vec3::Zero();
  for (std::size_t i = 0; i < cfg.size(); ++i) m += cfg.strengths[i] * cfg.points[i].vec();
  return m;
}

/// H = sum_{i != j} G_i G_j / (4pi) ln|x_i - x_j| + gamma e3 . sum_i G_i x_i.
inline double hamiltonian(const VortexConfig& cfg) {
  double h = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      const double d = chordal_distance(cfg.points[i], cfg.points[j]);
      if (d < kDistFloor) throw DistanceUnderflow("hamiltonian: points closer than distance floor", d);
      h += 2.0 * cfg.strengths[i] * cfg.strengths[j] / (4.0 * kPi) * std::log(d);
    }
  }
  return h + cfg.gamma * vertical_moment(cfg);
}

/// Energy of the regularized dynamics (ln replaced by regularized_log).
inline double regularized_hamiltonian(const VortexConfig& cfg, double eps) {
  double h = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      const double d = chordal_distance(cfg.points[i], cfg.points[j]);
      h += 2.0 * cfg.strengths[i] * cfg.strengths[j] / (4.0 * kPi) * regularized_log(d, eps).first;
    }
  }
  return h + cfg.gamma * vertical_moment(cfg);
}

/// sum_{i != j} exp(-eta ln_eps |x_i - x_j|).
inline double phi_eps(const VortexConfig& cfg, double eps, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("eta: must lie in (0, 1)");
  double s = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      const double d = chordal_distance(cfg.points[i], cfg.points[j]);
      s += 2.0 * std::exp(-eta * regularized_log(d, eps).first);
    }
  }
  return s;
}

struct InvariantSample {
  double energy = 0.0;           // H, or the regularized energy for regularized runs
  double vertical_moment = 0.0;  // e3 . sum G_i x_i
  Vec3 moment = Vec3::Zero();    // sum G_i x_i
  double gauss_sum = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<UnitVector3>> states;
  std::vector<InvariantSample> invariants;
  bool aborted = false;
  std::string abort_reason;

  std::size_t size() const noexcept { return times.size(); }
};

/// Stepping options shared by the exact and regularized integrations.
struct IntegrationOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  int record_every = 1;
  std::optional<double> eps;  // regularized dynamics when set
  /// Called at every recorded sample; returning true ends the run after that sample.
  std::function<bool(double, const std::vector<Vec3>&)> stop;
};

namespace detail {

inline void renormalize(std::vector<Vec3>& pts) {
  for (auto& p : pts) p.normalize();
}

inline InvariantSample invariants_of(const VortexConfig& cfg, std::optional<double> eps) {
  InvariantSample s;
  s.energy = eps ? regularized_hamiltonian(cfg, *eps) : hamiltonian(cfg);
  s.vertical_moment = vertical_moment(cfg);
  s.moment = circulation_moment(cfg);
  s.gauss_sum = cfg.gauss_sum();
  return s;
}

}  // namespace detail

/**
 * Classical RK4 in R^3 with every stage point and every step result
 * renormalized onto the sphere. The last step is shortened to land on t_end.
 * Records t = 0, every `record_every` steps, and the final time.
 *
 * A DistanceUnderflow in the exact dynamics ends the run: the trajectory
 * keeps the samples recorded so far and `aborted` is set.
 */
inline Trajectory integrate(const VortexConfig& cfg, const IntegrationOptions& opt) {
  if (!(opt.dt > 0.0)) throw ValidationError("dt: must be > 0");
  if (!(opt.t_end >= 0.0)) throw ValidationError("t_end: must be >= 0");
  if (opt.record_every < 1) throw ValidationError("record_every: must be >= 1");
  if (opt.eps && !(*opt.eps > 0.0 && *opt.eps < 2.0)) throw ValidationError("eps: must lie in (0, 2)");

  Trajectory traj;
  std::vector<Vec3> x = cfg.positions();
  const std::size_t n = x.size();

  auto record = [&](double t) -> bool {
    VortexConfig snap = cfg.with_positions(x);
    traj.times.push_back(t);
    traj.states.push_back(snap.points);
    traj.invariants.push_back(detail::invariants_of(snap, opt.eps));
    return opt.stop && opt.stop(t, x);
  };

  try {
    if (record(0.0)) return traj;
    std::vector<Vec3> k1, k2, k3, k4, stage(n);
    auto field = [&](const std::vector<Vec3>& p, std::vector<Vec3>& out) {
      detail::velocities(p, cfg.strengths, cfg.gamma, opt.eps, out);
    };
    auto make_stage = [&](const std::vector<Vec3>& k, double h) {
      for (std::size_t i = 0; i < n; ++i) stage[i] = (x[i] + h * k[i]).normalized();
    };

    const auto full_steps = static_cast<long long>(std::floor(opt.t_end / opt.dt * (1.0 + 1e-12)));
    const double remainder = opt.t_end - static_cast<double>(full_steps) * opt.dt;
    const bool partial = remainder > 1e-12 * std::max(1.0, opt.t_end);
    const long long total = full_steps + (partial ? 1 : 0);

    for (long long step = 1; step <= total; ++step) {
      const double h = (step > full_steps) ? remainder : opt.dt;
      field(x, k1);
      make_stage(k1, 0.5 * h);
      field(stage, k2);
      make_stage(k2, 0.5 * h);
      field(stage, k3);
      make_stage(k3, h);
      field(stage, k4);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      detail::renormalize(x);
      const double t = (step > full_steps) ? opt.t_end : static_cast<double>(step) * opt.dt;
      if (step % opt.record_every == 0 || step == total) {
        if (record(t)) break;
      }
    }
  } catch (const DistanceUnderflow& e) {
    traj.aborted = true;
    traj.abort_reason = e.what();
  }
  return traj;
}

inline Trajectory integrate(const VortexConfig& cfg, double dt, double t_end, int record_every = 1) {
  IntegrationOptions opt;
  opt.dt = dt;
  opt.t_end = t_end;
  opt.record_every = record_every;
  return integrate(cfg, opt);
}

inline Trajectory integrate_regularized(const VortexConfig& cfg, double eps, double dt, double t_end,
                                        int record_every = 1) {
  IntegrationOptions opt;
  opt.dt = dt;
  opt.t_end = t_end;
  opt.record_every = record_every;
  opt.eps = eps;
  return integrate(cfg, opt);
}

struct CollisionReport {
  std::optional<double> first_collision_time;
  std::optional<std::pair<int, int>> colliding_pair;
  std::vector<double> min_distance_series;

  bool collided() const noexcept { return first_collision_time.has_value(); }
};

/**
 * First sampled time at which two vortices come within chordal distance eps.
 * Between samples the crossing time is interpolated linearly in the sampled
 * minimum-distance series.
 */
inline CollisionReport first_eps_collision(const Trajectory& traj, double eps) {
  if (traj.times.empty()) throw ValidationError("trajectory: must contain at least one sample");
  CollisionReport rep;
  rep.min_distance_series.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<Vec3> pts;
    pts.reserve(traj.states[k].size());
    for (const auto& p : traj.states[k]) pts.push_back(p.vec());
    const PairDistance md = min_pairwise_distance(pts);
    rep.min_distance_series.push_back(md.distance);
    if (!rep.first_collision_time && md.distance <= eps) {
      double t = traj.times[k];
      if (k > 0) {
        const double d0 = rep.min_distance_series[k - 1];
        const double d1 = md.distance;
        const double w = (d0 - eps) / (d0 - d1);
        t = traj.times[k - 1] + w * (traj.times[k] - traj.times[k - 1]);
      }
      rep.first_collision_time = t;
      rep.colliding_pair = std::make_pair(md.i, md.j);
    }
  }
  return rep;
}

}  // namespace spherevortex

#endif
