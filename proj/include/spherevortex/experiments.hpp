#ifndef SPHEREVORTEX_EXPERIMENTS_HPP
#define SPHEREVORTEX_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spherevortex/dynamics.hpp"
#include "spherevortex/equilibria.hpp"
#include "spherevortex/geometry.hpp"
#include "spherevortex/parallel.hpp"
#include "spherevortex/random.hpp"
#include "spherevortex/stability.hpp"

namespace spherevortex {

// ---------------------------------------------------------------------------
// Stability sweeps
// ---------------------------------------------------------------------------

enum class Family { polar_pair, four_vortex, vortex_crystal };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::polar_pair: return "polar-pair";
    case Family::four_vortex: return "four-vortex";
    case Family::vortex_crystal: return "vortex-crystal";
  }
  return "unknown";
}

inline Family parse_family(const std::string& s) {
  if (s == "polar-pair" || s == "polar_pair") return Family::polar_pair;
  if (s == "four-vortex" || s == "four_vortex") return Family::four_vortex;
  if (s == "vortex-crystal" || s == "vortex_crystal") return Family::vortex_crystal;
  throw ValidationError("family: unknown family '" + s + "' (expected polar-pair, four-vortex or vortex-crystal)");
}

struct SweepGrid {
  Family family = Family::four_vortex;
  std::vector<double> a_values{1.0};
  std::vector<double> gamma_values{0.0};
  std::vector<double> kappa_values;  // vortex-crystal only
  std::vector<int> n_values{8};      // vortex-crystal only
};

struct SweepRow {
  Family family = Family::four_vortex;
  int N = 0;
  double a = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double gamma = 0.0;
  double eq_residual = std::numeric_limits<double>::quiet_NaN();
  double max_real_part = std::numeric_limits<double>::quiet_NaN();
  double omega = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // empty when the row succeeded
};

/**
 * Linearization about a relative equilibrium: the configuration is steady in
 * the frame rotating at Omega, whose field is the original one with gamma
 * replaced by gamma - Omega.
 */
inline SweepRow analyze_equilibrium(const VortexConfig& cfg, SweepRow row) {
  const RelativeEquilibrium re = relative_equilibrium_residual(cfg);
  row.eq_residual = re.residual;
  row.omega = re.omega;
  VortexConfig co_rotating = cfg;
  co_rotating.gamma = cfg.gamma - re.omega;
  row.max_real_part = spectrum(jacobian(co_rotating).assembled).max_real_part;
  return row;
}

/// One row per parameter tuple, in grid order (a, then N, then kappa, then gamma innermost).
inline std::vector<SweepRow> stability_sweep(const SweepGrid& grid) {
  if (grid.gamma_values.empty()) throw ValidationError("gamma: sweep grid is empty");
  std::vector<SweepRow> rows;
  switch (grid.family) {
    case Family::polar_pair:
      for (double g : grid.gamma_values) {
        SweepRow r;
        r.family = grid.family;
        r.N = 2;
        r.gamma = g;
        rows.push_back(r);
      }
      break;
    case Family::four_vortex:
      if (grid.a_values.empty()) throw ValidationError("a: sweep grid is empty");
      for (double a : grid.a_values) {
        for (double g : grid.gamma_values) {
          SweepRow r;
          r.family = grid.family;
          r.N = 4;
          r.a = a;
          r.gamma = g;
          rows.push_back(r);
        }
      }
      break;
    case Family::vortex_crystal:
      if (grid.a_values.empty()) throw ValidationError("a: sweep grid is empty");
      if (grid.kappa_values.empty()) throw ValidationError("kappa: sweep grid is empty for vortex-crystal");
      if (grid.n_values.empty()) throw ValidationError("n: sweep grid is empty for vortex-crystal");
      for (double a : grid.a_values) {
        for (int n : grid.n_values) {
          for (double k : grid.kappa_values) {
            for (double g : grid.gamma_values) {
              SweepRow r;
              r.family = grid.family;
              r.N = n;
              r.a = a;
              r.kappa = k;
              r.gamma = g;
              rows.push_back(r);
            }
          }
        }
      }
      break;
  }

  parallel_for(rows.size(), [&](std::size_t k) {
    SweepRow& r = rows[k];
    try {
      VortexConfig cfg;
      switch (r.family) {
        case Family::polar_pair: cfg = polar_pair(1.0, r.gamma); break;
        case Family::four_vortex:
          cfg = four_vortex(r.a, r.gamma);
          r.kappa = cfg.strengths[0];
          break;
        case Family::vortex_crystal: cfg = vortex_crystal(r.N, r.a, r.kappa, r.gamma); break;
      }
      r = analyze_equilibrium(cfg, r);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Monte Carlo collision statistics
// ---------------------------------------------------------------------------

struct CollisionStats {
  std::vector<double> eps_grid;
  int trials = 0;
  double tau = 0.0;
  double dt = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<int> collided;
  std::vector<double> fraction;
  std::vector<double> std_error;  // binomial sqrt(p (1 - p) / trials)
};

struct MonteCarloSpec {
  std::vector<double> strengths{1.0, 1.0, -2.0};
  double gamma = 0.0;
  std::vector<double> eps_grid{0.05, 0.02, 0.01};
  double tau = 5.0;
  int trials = 500;
  double dt = 1e-3;
  std::uint64_t master_seed = 0;
};

/// Whether one trial (uniform initial positions, regularized flow up to tau) meets an eps-collision.
inline bool collision_trial(const MonteCarloSpec& spec, std::size_t eps_index, std::size_t trial) {
  const double eps = spec.eps_grid[eps_index];
  RngStream rng = substream(spec.master_seed, {static_cast<std::uint64_t>(eps_index), static_cast<std::uint64_t>(trial)});
  std::vector<UnitVector3> pts;
  for (std::size_t i = 0; i < spec.strengths.size(); ++i) pts.push_back(sample_uniform(rng));
  VortexConfig cfg{pts, spec.strengths, spec.gamma, true, kGaussTol};
  IntegrationOptions opt;
  opt.dt = spec.dt;
  opt.t_end = spec.tau;
  opt.record_every = 1;
  opt.eps = eps;
  opt.stop = [eps](double, const std::vector<Vec3>& x) { return min_pairwise_distance(x).distance <= eps; };
  const Trajectory traj = integrate(cfg, opt);
  return first_eps_collision(traj, eps).collided();
}

inline CollisionStats montecarlo_collisions(const MonteCarloSpec& spec) {
  if (spec.trials < 1) throw ValidationError("trials: must be >= 1");
  if (spec.strengths.size() < 2) throw ValidationError("strengths: need at least 2 vortices");
  if (spec.eps_grid.empty()) throw ValidationError("eps: grid is empty");
  for (std::size_t k = 0; k < spec.eps_grid.size(); ++k) {
    if (!(spec.eps_grid[k] > 0.0 && spec.eps_grid[k] < 2.0)) {
      throw ValidationError("eps[" + std::to_string(k) + "]: must lie in (0, 2)");
    }
    if (k > 0 && !(spec.eps_grid[k] < spec.eps_grid[k - 1])) throw ValidationError("eps: grid must be decreasing");
  }
  double sum = 0.0;
  for (double g : spec.strengths) {
    if (!(g != 0.0)) throw ValidationError("strengths: must be nonzero");
    sum += g;
  }
  if (std::abs(sum) > kGaussTol) throw ValidationError("strengths: Gauss constraint violated, sum = " + std::to_string(sum));
  if (!(spec.tau >= 0.0)) throw ValidationError("tau: must be >= 0");
  if (!(spec.dt > 0.0)) throw ValidationError("dt: must be > 0");

  const std::size_t n_eps = spec.eps_grid.size();
  const auto n_trials = static_cast<std::size_t>(spec.trials);
  std::vector<char> hit(n_eps * n_trials, 0);
  parallel_for(hit.size(), [&](std::size_t k) {
    hit[k] = collision_trial(spec, k / n_trials, k % n_trials) ? 1 : 0;
  });

  CollisionStats st;
  st.eps_grid = spec.eps_grid;
  st.trials = spec.trials;
  st.tau = spec.tau;
  st.dt = spec.dt;
  st.master_seed = spec.master_seed;
  for (std::size_t e = 0; e < n_eps; ++e) {
    int c = 0;
    for (std::size_t t = 0; t < n_trials; ++t) c += hit[e * n_trials + t];
    const double p = static_cast<double>(c) / spec.trials;
    st.collided.push_back(c);
    st.fraction.push_back(p);
    st.std_error.push_back(std::sqrt(p * (1.0 - p) / spec.trials));
  }
  return st;
}

// ---------------------------------------------------------------------------
// Vortex blobs
// ---------------------------------------------------------------------------

enum class BlobLayout { uniform, fibonacci };

/**
 * Particle discretization of N vortex blobs. Particle k belongs to blob
 * blob_id[k] (0-based) and carries circulation circulation[k], of the sign of
 * the reference strength; the circulations of a blob sum to that strength.
 */
struct BlobCloud {
  std::vector<UnitVector3> positions;
  std::vector<double> circulation;
  std::vector<int> blob_id;
  double eps = 0.0;
  double beta = 0.5;
  VortexConfig reference;

  std::size_t size() const noexcept { return positions.size(); }
  std::size_t blobs() const noexcept { return reference.size(); }
};

/// Throws OverlappingCaps when two caps C(x_i, eps) intersect.
inline void check_disjoint_caps(const VortexConfig& ref, double eps) {
  const double cap_angle = geodesic_from_chord(eps);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    for (std::size_t j = i + 1; j < ref.size(); ++j) {
      const double sep = geodesic_from_chord(chordal_distance(ref.points[i], ref.points[j]));
      if (sep <= 2.0 * cap_angle) {
        throw OverlappingCaps("eps: caps of vortices " + std::to_string(i) + " and " + std::to_string(j) + " intersect",
                              static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
}

/**
 * m particles per vortex on the cap C(x_i, eps), each with circulation G_i / m.
 * `uniform` samples the cap area uniformly; `fibonacci` uses a stratified
 * golden-angle layout with a random azimuthal offset per blob.
 */
template <class Rng>
BlobCloud blob_initialize(const VortexConfig& reference, double eps, int m, double beta, Rng& rng,
                          BlobLayout layout = BlobLayout::uniform) {
  if (m < 1) throw ValidationError("particles_per_blob: must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps: must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta: must lie in (0, 1)");
  check_disjoint_caps(reference, eps);
  BlobCloud cloud;
  cloud.eps = eps;
  cloud.beta = beta;
  cloud.reference = reference;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const TangentBasis frame = tangent_basis(reference.points[i]);
    const double offset = layout == BlobLayout::fibonacci ? 2.0 * kPi * unit(rng) : 0.0;
    for (int k = 0; k < m; ++k) {
      UnitVector3 p;
      if (layout == BlobLayout::uniform) {
        p = sample_cap(reference.points[i], eps, rng);
      } else {
        p = cap_point(frame, eps, (k + 0.5) / m, offset + golden * k);
      }
      cloud.positions.push_back(p);
      cloud.circulation.push_back(reference.strengths[i] / m);
      cloud.blob_id.push_back(static_cast<int>(i));
    }
  }
  return cloud;
}

namespace detail {
/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};
}  // namespace detail

struct BlobDiagnostics {
  Vec3 center = Vec3::Zero();          // circulation-weighted mean position (inside the unit ball)
  double second_moment = 0.0;          // I: weighted mean of |x - c|^2
  std::vector<double> moments;         // m_n: weighted mean of |x - c|^(4n), per requested n
  double support_radius = 0.0;         // R: max |x - c|
  std::vector<double> mass_outside;    // circulation outside C(c, r), per requested r
  double reference_distance = 0.0;     // max |x - x_i(t)| over the blob's particles
};

/**
 * Diagnostics of every blob for particle positions `pos`. `reference` holds the
 * point-vortex positions x_i(t); `orders` the n of the 4n-th moments and
 * `radii` the radii of the mass-outside function.
 */
inline std::vector<BlobDiagnostics> blob_diagnostics(const std::vector<Vec3>& pos, const std::vector<double>& circ,
                                                     const std::vector<int>& blob_id, const std::vector<Vec3>& reference,
                                                     const std::vector<int>& orders, const std::vector<double>& radii) {
  const std::size_t nb = reference.size();
  std::vector<BlobDiagnostics> out(nb);
  std::vector<detail::CompensatedSum> cx(nb), cy(nb), cz(nb), mass(nb);
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const auto b = static_cast<std::size_t>(blob_id[k]);
    cx[b].add(circ[k] * pos[k].x());
    cy[b].add(circ[k] * pos[k].y());
    cz[b].add(circ[k] * pos[k].z());
    mass[b].add(circ[k]);
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const double g = mass[b].value();
    out[b].center = Vec3(cx[b].value(), cy[b].value(), cz[b].value()) / g;
    out[b].moments.assign(orders.size(), 0.0);
    out[b].mass_outside.assign(radii.size(), 0.0);
  }
  std::vector<detail::CompensatedSum> second(nb);
  std::vector<std::vector<detail::CompensatedSum>> higher(nb, std::vector<detail::CompensatedSum>(orders.size()));
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const auto b = static_cast<std::size_t>(blob_id[k]);
    BlobDiagnostics& d = out[b];
    const double r2 = (pos[k] - d.center).squaredNorm();
    const double r = std::sqrt(r2);
    const double w = circ[k] / mass[b].value();
    second[b].add(w * r2);
    for (std::size_t q = 0; q < orders.size(); ++q) higher[b][q].add(w * std::pow(r2, 2.0 * orders[q]));
    d.support_radius = std::max(d.support_radius, r);
    for (std::size_t q = 0; q < radii.size(); ++q) {
      if (r > radii[q]) d.mass_outside[q] += circ[k];
    }
    d.reference_distance = std::max(d.reference_distance, (pos[k] - reference[b]).norm());
  }
  for (std::size_t b = 0; b < nb; ++b) {
    out[b].second_moment = second[b].value();
    for (std::size_t q = 0; q < orders.size(); ++q) out[b].moments[q] = higher[b][q].value();
  }
  return out;
}

inline std::vector<BlobDiagnostics> blob_diagnostics(const BlobCloud& cloud, const std::vector<int>& orders,
                                                     const std::vector<double>& radii) {
  std::vector<Vec3> pos;
  for (const auto& p : cloud.positions) pos.push_back(p.vec());
  return blob_diagnostics(pos, cloud.circulation, cloud.blob_id, cloud.reference.positions(), orders, radii);
}

struct MomentSample {
  double t = 0.0;
  std::vector<BlobDiagnostics> blobs;
};

struct MomentReport {
  std::vector<int> orders;
  std::vector<double> radii;
  double exit_radius = 0.0;  // eps^beta
  std::vector<MomentSample> samples;
  std::vector<std::optional<double>> blob_exit_times;
  std::optional<double> exit_time;  // earliest exit over blobs
  long long underflow_events = 0;   // particle pairs dropped below the distance floor
  double total_circulation_initial = 0.0;
  double total_circulation_final = 0.0;
  std::vector<Vec3> final_positions;  // particle positions at the last sample
};

struct BlobEvolveOptions {
  double dt = 2e-3;
  double t_end = 1.0;
  int diagnostic_every = 10;  // steps between diagnostics
  std::vector<int> orders{1, 2, 3};
  std::vector<double> radii;  // defaults to {eps, eps^beta}
  bool stop_at_exit = false;
};

namespace detail {

/// Particle field with exact kernel; pairs under the distance floor are dropped and counted.
class ParticleField {
 public:
  ParticleField(const std::vector<double>& circ, double gamma) : circ_(circ), gamma_(gamma) {}

  void operator()(const std::vector<Vec3>& p, std::vector<Vec3>& v) {
    const std::size_t n = p.size();
    xs_.resize(n);
    ys_.resize(n);
    zs_.resize(n);
    vx_.assign(n, 0.0);
    vy_.assign(n, 0.0);
    vz_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      xs_[i] = p[i].x();
      ys_[i] = p[i].y();
      zs_[i] = p[i].z();
    }
    const double floor2 = kDistFloor * kDistFloor;
    const double inv2pi = 1.0 / (2.0 * kPi);
    const double* __restrict x = xs_.data();
    const double* __restrict y = ys_.data();
    const double* __restrict z = zs_.data();
    const double* __restrict g = circ_.data();
    double* __restrict vx = vx_.data();
    double* __restrict vy = vy_.data();
    double* __restrict vz = vz_.data();
    long long dropped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i], yi = y[i], zi = z[i], gi = g[i];
      double ax = 0.0, ay = 0.0, az = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = xi - x[j], dy = yi - y[j], dz = zi - z[j];
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < floor2) {
          ++dropped;
          continue;
        }
        const double inv = inv2pi / d2;
        // x_i ^ x_j; the velocity at j from i uses x_j ^ x_i = -(x_i ^ x_j)
        const double wx = yi * z[j] - zi * y[j];
        const double wy = zi * x[j] - xi * z[j];
        const double wz = xi * y[j] - yi * x[j];
        const double fi = g[j] * inv;
        const double fj = gi * inv;
        ax += fi * wx;
        ay += fi * wy;
        az += fi * wz;
        vx[j] -= fj * wx;
        vy[j] -= fj * wy;
        vz[j] -= fj * wz;
      }
      vx[i] += ax;
      vy[i] += ay;
      vz[i] += az;
    }
    underflows_ += dropped;
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = Vec3(vx[i] - gamma_ * y[i], vy[i] + gamma_ * x[i], vz[i]);
  }

  long long underflows() const noexcept { return underflows_; }

 private:
  const std::vector<double>& circ_;
  double gamma_;
  long long underflows_ = 0;
  std::vector<double> xs_, ys_, zs_, vx_, vy_, vz_;
};

template <class Field>
void rk4_sphere_step(std::vector<Vec3>& x, double h, Field& field, std::vector<Vec3> (&k)[4], std::vector<Vec3>& stage) {
  const std::size_t n = x.size();
  stage.resize(n);
  field(x, k[0]);
  for (std::size_t i = 0; i < n; ++i) stage[i] = (x[i] + 0.5 * h * k[0][i]).normalized();
  field(stage, k[1]);
  for (std::size_t i = 0; i < n; ++i) stage[i] = (x[i] + 0.5 * h * k[1][i]).normalized();
  field(stage, k[2]);
  for (std::size_t i = 0; i < n; ++i) stage[i] = (x[i] + h * k[2][i]).normalized();
  field(stage, k[3]);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] += (h / 6.0) * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    x[i].normalize();
  }
}

}  // namespace detail

/**
 * Integrates every particle under the exact kernel (all pairs interact) next
 * to the reference point-vortex solution, with the same RK4 scheme. Every
 * `diagnostic_every` steps the blob diagnostics are recorded, and blob i is
 * declared exited at the first diagnostic time one of its particles is
 * farther than eps^beta from x_i(t).
 */
inline MomentReport blob_evolve(const BlobCloud& cloud, const BlobEvolveOptions& opt) {
  if (!(opt.dt > 0.0)) throw ValidationError("dt: must be > 0");
  if (!(opt.t_end >= 0.0)) throw ValidationError("t_end: must be >= 0");
  if (opt.diagnostic_every < 1) throw ValidationError("diagnostic_every: must be >= 1");
  if (cloud.positions.empty()) throw ValidationError("cloud: no particles");

  MomentReport rep;
  rep.orders = opt.orders;
  rep.radii = opt.radii.empty() ? std::vector<double>{cloud.eps, std::pow(cloud.eps, cloud.beta)} : opt.radii;
  rep.exit_radius = std::pow(cloud.eps, cloud.beta);
  rep.blob_exit_times.assign(cloud.blobs(), std::nullopt);

  std::vector<Vec3> x;
  x.reserve(cloud.size());
  for (const auto& p : cloud.positions) x.push_back(p.vec());
  std::vector<Vec3> ref = cloud.reference.positions();

  detail::ParticleField particles(cloud.circulation, cloud.reference.gamma);
  auto ref_field = [&](const std::vector<Vec3>& p, std::vector<Vec3>& v) {
    detail::velocities(p, cloud.reference.strengths, cloud.reference.gamma, std::nullopt, v);
  };

  for (double c : cloud.circulation) rep.total_circulation_initial += c;
  rep.total_circulation_final = rep.total_circulation_initial;

  auto diagnose = [&](double t) {
    MomentSample s;
    s.t = t;
    s.blobs = blob_diagnostics(x, cloud.circulation, cloud.blob_id, ref, rep.orders, rep.radii);
    for (std::size_t b = 0; b < s.blobs.size(); ++b) {
      if (!rep.blob_exit_times[b] && s.blobs[b].reference_distance > rep.exit_radius) {
        rep.blob_exit_times[b] = t;
        if (!rep.exit_time) rep.exit_time = t;
      }
    }
    rep.samples.push_back(std::move(s));
  };

  diagnose(0.0);
  if (opt.stop_at_exit && rep.exit_time) {
    rep.final_positions = x;
    return rep;
  }

  const auto full_steps = static_cast<long long>(std::floor(opt.t_end / opt.dt * (1.0 + 1e-12)));
  const double remainder = opt.t_end - static_cast<double>(full_steps) * opt.dt;
  const bool partial = remainder > 1e-12 * std::max(1.0, opt.t_end);
  const long long total = full_steps + (partial ? 1 : 0);

  std::vector<Vec3> kp[4], kr[4], stage_p, stage_r;
  for (long long step = 1; step <= total; ++step) {
    const double h = (step > full_steps) ? remainder : opt.dt;
    detail::rk4_sphere_step(x, h, particles, kp, stage_p);
    detail::rk4_sphere_step(ref, h, ref_field, kr, stage_r);
    const double t = (step > full_steps) ? opt.t_end : static_cast<double>(step) * opt.dt;
    if (step % opt.diagnostic_every == 0 || step == total) {
      diagnose(t);
      if (opt.stop_at_exit && rep.exit_time) break;
    }
  }
  rep.underflow_events = particles.underflows();
  rep.final_positions = x;
  return rep;
}

}  // namespace spherevortex

#endif
