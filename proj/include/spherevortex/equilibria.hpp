#ifndef SPHEREVORTEX_EQUILIBRIA_HPP
#define SPHEREVORTEX_EQUILIBRIA_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spherevortex/dynamics.hpp"
#include "spherevortex/geometry.hpp"

namespace spherevortex {

/// Counter-rotating pair at the poles: (e3, -e3) with strengths (G, -G).
inline VortexConfig polar_pair(double Gamma, double gamma) {
  if (!(Gamma != 0.0)) throw ValidationError("Gamma: must be nonzero");
  return make_config({UnitVector3(e3()), UnitVector3(-e3())}, {Gamma, -Gamma}, gamma);
}

/**
 * Parameters of the four-vortex equilibrium: poles e3 and -e3 plus two ring
 * vortices (+-a, 0, s) of strength Gamma, with s = sqrt(1 - a^2).
 */
struct FourVortexParams {
  double a = 1.0;
  double gamma = 0.0;
  double Gamma = 1.0;
  double kappa = 0.0;        // north pole strength is kappa * Gamma
  double s = 0.0;            // sqrt(1 - a^2)
  double alpha_minus = 0.0;  // 1 / |x3 - e3|^2
  double alpha_plus = 0.0;   // 1 / |x3 + e3|^2
  double upsilon = 0.0;      // 1 / |x3 - x4|^2
};

inline FourVortexParams four_vortex_params(double a, double gamma, double Gamma = 1.0) {
  if (!(a > 0.0 && a <= 1.0)) throw ValidationError("a: must lie in (0, 1], got " + std::to_string(a));
  if (!(Gamma != 0.0)) throw ValidationError("Gamma: must be nonzero");
  FourVortexParams p;
  p.a = a;
  p.gamma = gamma;
  p.Gamma = Gamma;
  p.s = std::sqrt(1.0 - a * a);
  p.alpha_minus = 1.0 / (2.0 * (1.0 - p.s));
  p.alpha_plus = 1.0 / (2.0 * (1.0 + p.s));
  p.upsilon = 1.0 / (4.0 * a * a);
  // kappa (alpha_- + alpha_+) = -2 s Upsilon - 2 alpha_+ + 2 pi gamma / Gamma
  p.kappa = (-2.0 * p.s * p.upsilon - 2.0 * p.alpha_plus + 2.0 * kPi * gamma / Gamma) /
            (p.alpha_minus + p.alpha_plus);
  return p;
}

/// Unique pole strength ratio making the four-vortex configuration stationary.
inline double kappa_stationary(double a, double gamma, double Gamma = 1.0) {
  return four_vortex_params(a, gamma, Gamma).kappa;
}

/**
 * Stationary four-vortex configuration with ring strength Gamma:
 * points (e3, -e3, (a,0,s), (-a,0,s)), strengths Gamma * (kappa, -(2+kappa), 1, 1).
 */
inline VortexConfig four_vortex(double a, double gamma, double Gamma = 1.0) {
  const FourVortexParams p = four_vortex_params(a, gamma, Gamma);
  return make_config({UnitVector3(e3()), UnitVector3(-e3()), UnitVector3(a, 0.0, p.s), UnitVector3(-a, 0.0, p.s)},
                     {Gamma * p.kappa, -Gamma * (2.0 + p.kappa), Gamma, Gamma}, gamma);
}

/**
 * Polar vortex crystal: N-2 unit vortices at R(2 pi i / (N-2)) (a, 0, s),
 * i = 1..N-2, then kappa at e3 and -(N-2)-kappa at -e3.
 */
inline VortexConfig vortex_crystal(int N, double a, double kappa, double gamma) {
  if (N < 4) throw ValidationError("N: must be >= 4, got " + std::to_string(N));
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("a: must lie in (0, 1), got " + std::to_string(a));
  const int ring = N - 2;
  const Vec3 seed(a, 0.0, std::sqrt(1.0 - a * a));
  std::vector<UnitVector3> pts;
  std::vector<double> g;
  for (int i = 1; i <= ring; ++i) {
    pts.emplace_back(rotation_z(2.0 * kPi * i / ring) * seed);
    g.push_back(1.0);
  }
  pts.emplace_back(e3());
  g.push_back(kappa);
  pts.emplace_back(-e3());
  g.push_back(-static_cast<double>(ring) - kappa);
  return make_config(std::move(pts), std::move(g), gamma);
}

/// Moves every vortex a tangent step of length delta in a random direction (chord < delta).
template <class Rng>
VortexConfig perturb(const VortexConfig& cfg, double delta, Rng& rng) {
  if (!(delta >= 0.0)) throw ValidationError("delta: must be >= 0");
  if (delta == 0.0) return cfg;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VortexConfig out = cfg;
  for (auto& p : out.points) {
    const TangentBasis b = tangent_basis(p);
    const double phi = 2.0 * kPi * unit(rng);
    p = UnitVector3(p.vec() + delta * (std::cos(phi) * b.b1 + std::sin(phi) * b.b2));
  }
  validate(out);
  return out;
}

/**
 * Random Gauss-consistent configuration: n uniform points, strengths of
 * alternating sign with magnitudes uniform in [0.5, 2], the last one closing
 * the sum to zero. Whole draws are repeated until every pair is farther apart
 * than `min_separation`.
 */
template <class Rng>
VortexConfig random_gauss_config(Rng& rng, int n, double gamma, double min_separation = 0.0) {
  if (n < 2) throw ValidationError("N: must be >= 2");
  if (!(min_separation >= 0.0 && min_separation < 1.0)) throw ValidationError("min_separation: must lie in [0, 1)");
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  for (;;) {
    std::vector<UnitVector3> pts;
    std::vector<double> g;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      pts.push_back(sample_uniform(rng));
      if (i + 1 < n) {
        g.push_back(i % 2 == 0 ? mag(rng) : -mag(rng));
        sum += g.back();
      }
    }
    g.push_back(-sum);
    VortexConfig cfg{std::move(pts), std::move(g), gamma, true, kGaussTol};
    if (min_pairwise_distance(cfg).distance > min_separation) {
      validate(cfg);
      return cfg;
    }
  }
}

}  // namespace spherevortex

#endif
