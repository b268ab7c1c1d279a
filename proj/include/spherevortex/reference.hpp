#ifndef SPHEREVORTEX_REFERENCE_HPP
#define SPHEREVORTEX_REFERENCE_HPP

// Independent reference computations used by the verification suite and the
// tests: finite differences, quadrature and closed-form solutions. Nothing
// here shares code paths with the closed-form Jacobian.

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include "spherevortex/dynamics.hpp"
#include "spherevortex/geometry.hpp"
#include "spherevortex/stability.hpp"

namespace spherevortex::reference {

/// Point on the great circle through x with unit tangent direction u, at arc length t.
inline Vec3 great_circle(const Vec3& x, const Vec3& u, double t) { return std::cos(t) * x + std::sin(t) * u; }

/// Direct velocity sum, written without the library field routine.
inline std::vector<Vec3> direct_velocities(const std::vector<Vec3>& x, const std::vector<double>& g, double gamma) {
  std::vector<Vec3> v(x.size(), Vec3::Zero());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (i == j) continue;
      v[i] += g[j] / (2.0 * kPi) * x[i].cross(x[j]) / (x[i] - x[j]).squaredNorm();
    }
    v[i] += gamma * Vec3(-x[i].y(), x[i].x(), 0.0);
  }
  return v;
}

/**
 * Finite-difference Jacobian in the given tangent bases: column (j, c) moves
 * vortex j along the great circle in direction b_c(x_j), and the central
 * difference of every velocity is read off in the bases at the unperturbed points.
 */
inline Matrix fd_jacobian(const VortexConfig& cfg, const std::vector<TangentBasis>& bases, double step = 1e-5) {
  const std::size_t n = cfg.size();
  const std::vector<Vec3> x0 = cfg.positions();
  Matrix a = Matrix::Zero(2 * n, 2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (int c = 0; c < 2; ++c) {
      const Vec3 u = c == 0 ? bases[j].b1 : bases[j].b2;
      std::vector<Vec3> xp = x0, xm = x0;
      xp[j] = great_circle(x0[j], u, step);
      xm[j] = great_circle(x0[j], u, -step);
      const auto vp = direct_velocities(xp, cfg.strengths, cfg.gamma);
      const auto vm = direct_velocities(xm, cfg.strengths, cfg.gamma);
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 dv = (vp[i] - vm[i]) / (2.0 * step);
        a(2 * i, 2 * j + c) = bases[i].b1.dot(dv);
        a(2 * i + 1, 2 * j + c) = bases[i].b2.dot(dv);
      }
    }
  }
  return a;
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature of f on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                               int max_depth = 50) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/**
 * Integral over the sphere of |x - y|^-alpha as a polar-angle quadrature:
 * 2^(3-alpha) pi * int_0^(pi/2) cos(phi) sin(phi)^(1-alpha) dphi, with
 * phi = v^q, q = 2 / (2 - alpha), which makes the integrand vanish linearly at 0.
 */
inline double singular_moment_quadrature(double alpha) {
  const double q = 2.0 / (2.0 - alpha);
  auto integrand = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double phi = std::pow(v, q);
    return std::cos(phi) * std::pow(std::sin(phi), 1.0 - alpha) * q * std::pow(v, q - 1.0);
  };
  const double upper = std::pow(kPi / 2.0, 1.0 / q);
  return std::pow(2.0, 3.0 - alpha) * kPi * adaptive_simpson(integrand, 0.0, upper, 1e-14);
}

/**
 * Hand-derived Jacobian of four_vortex(1, 1/2) in a fixed set of tangent
 * bases (the one at x_4 is the default basis turned by pi).
 */
inline Matrix four_vortex_reference_matrix() {
  const double p = kPi, a = 1.0 / (8.0 * p), b = 1.0 / (4.0 * p);
  Matrix m(8, 8);
  m << 0, (1 - 3 * p) * a, 0, -(p + 1) * a, -b, 0, -b, 0,  //
      3 * (p + 1) * a, 0, -(p + 1) * a, 0, 0, b, 0, b,     //
      0, (p - 1) * a, 0, (3 * p + 1) * a, b, 0, b, 0,      //
      (p - 1) * a, 0, 3 * (1 - p) * a, 0, 0, -b, 0, -b,    //
      (1 - p) * b, 0, -(p + 1) * b, 0, 0, 3 * a, 0, a,     //
      0, (p - 1) * b, 0, (p + 1) * b, a, 0, a, 0,          //
      (1 - p) * b, 0, -(p + 1) * b, 0, 0, a, 0, 3 * a,     //
      0, (p - 1) * b, 0, (p + 1) * b, a, 0, a, 0;
  return m;
}

/// Polar pair Jacobian in the bases ((e1, e2), (e1, -e2)): [[cJ, -gS], [gS, -cJ]], g = G/8pi, c = gamma - g.
inline Matrix polar_pair_reference_matrix(double Gamma, double gamma) {
  const double g = Gamma / (8.0 * kPi), c = gamma - g;
  Matrix m(4, 4);
  m << 0, -c, 0, g,  //
      c, 0, g, 0,    //
      0, -g, 0, c,   //
      -g, 0, -c, 0;
  return m;
}

/// Antipodal pair under rotation gamma: x(t) = R_z(gamma t) x(0).
inline Vec3 antipodal_pair_position(const Vec3& x0, double gamma, double t) { return rotation_z(gamma * t) * x0; }

/// Eigenvalues sorted by real part then imaginary part, descending.
inline std::vector<Complex> sorted_eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  std::vector<Complex> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return v;
}

/// Largest distance under greedy nearest matching; adequate for well-separated spectra.
inline double multiset_distance(const std::vector<Complex>& a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& z : a) {
    auto it = std::min_element(b.begin(), b.end(), [&](Complex p, Complex q) { return std::abs(p - z) < std::abs(q - z); });
    worst = std::max(worst, std::abs(*it - z));
    b.erase(it);
  }
  return worst;
}

}  // namespace spherevortex::reference

#endif
