#ifndef SPHEREVORTEX_STABILITY_HPP
#define SPHEREVORTEX_STABILITY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spherevortex/dynamics.hpp"
#include "spherevortex/geometry.hpp"

namespace spherevortex {

using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

/// Matrix of the quarter turn h -> x ^ h in any direct basis of T_x S^2.
inline Mat2 quarter_turn() {
  Mat2 j;
  j << 0.0, -1.0,
       1.0, 0.0;
  return j;
}

namespace detail {
inline double checked_dist2(const Vec3& x, const Vec3& y, const char* who) {
  const double d2 = (x - y).squaredNorm();
  if (d2 < kDistFloor * kDistFloor) {
    throw DistanceUnderflow(std::string(who) + ": points closer than distance floor", std::sqrt(d2));
  }
  return d2;
}
}  // namespace detail

/// Differential of K in its first argument applied to h (valid for any h in R^3).
inline Vec3 d1k(const Vec3& x, const Vec3& y, const Vec3& h) {
  const double d2 = detail::checked_dist2(x, y, "d1k");
  return h.cross(y) / d2 - 2.0 * h.dot(x - y) * x.cross(y) / (d2 * d2);
}

/// Differential of K in its second argument applied to k.
inline Vec3 d2k(const Vec3& x, const Vec3& y, const Vec3& k) {
  const double d2 = detail::checked_dist2(x, y, "d2k");
  return x.cross(k) / d2 + 2.0 * k.dot(x - y) * x.cross(y) / (d2 * d2);
}

/// Ambient 3x3 matrix of h -> d1k(x, y, h).
inline Mat3 d1k_matrix(const Vec3& x, const Vec3& y) {
  const double d2 = detail::checked_dist2(x, y, "d1k_matrix");
  Mat3 cross_y;  // h -> h ^ y
  cross_y << 0.0, y.z(), -y.y(),
             -y.z(), 0.0, y.x(),
             y.y(), -y.x(), 0.0;
  return cross_y / d2 - 2.0 * x.cross(y) * (x - y).transpose() / (d2 * d2);
}

/**
 * Linearization of the vortex field in tangent coordinates.
 *
 * blocks[i][j] is the 2x2 matrix of A_ij : T_{x_j} -> T_{x_i} in the bases
 * (bases[j], bases[i]); `assembled` is the 2N x 2N block matrix.
 */
struct TangentMap {
  std::vector<TangentBasis> bases;
  std::vector<std::vector<Mat2>> blocks;
  Matrix assembled;

  std::size_t size() const noexcept { return bases.size(); }
};

inline std::vector<TangentBasis> default_bases(const VortexConfig& cfg) {
  std::vector<TangentBasis> b;
  b.reserve(cfg.size());
  for (const auto& p : cfg.points) b.push_back(tangent_basis(p));
  return b;
}

/// Matrix of u -> 2 (u . (x_i - x_k)) (x_i ^ x_k) / |x_i - x_k|^2 from `from` to `to`.
inline Mat2 rank_one_map_matrix(const Vec3& xi, const Vec3& xk, const TangentBasis& from,
                                const TangentBasis& to) {
  const Vec3 diff = xi - xk;
  const Vec3 w = 2.0 * xi.cross(xk) / diff.squaredNorm();
  Mat2 m;
  const Vec3* cols[2] = {&from.b1, &from.b2};
  for (int c = 0; c < 2; ++c) {
    const Vec3 img = cols[c]->dot(diff) * w;
    m(0, c) = to.b1.dot(img);
    m(1, c) = to.b2.dot(img);
  }
  return m;
}

/// Matrix of the tangent projection T_{x_j} -> T_{x_i}.
inline Mat2 projection_matrix(const TangentBasis& from, const TangentBasis& to) {
  Mat2 p;
  p << to.b1.dot(from.b1), to.b1.dot(from.b2),
       to.b2.dot(from.b1), to.b2.dot(from.b2);
  return p;
}

/**
 * Closed-form Jacobian blocks:
 *   A_ii = sum_{k != i} -G_k / (2pi |x_i - x_k|^2) ((x_i . x_k) J + M_ik) + gamma (e3 . x_i) J
 *   A_ij = G_j / (2pi |x_i - x_j|^2) (J P_ij + N_ij)
 * with M_ik, N_ij the rank-one maps and P_ij the projection between tangent planes.
 */
inline TangentMap jacobian(const VortexConfig& cfg, std::optional<std::vector<TangentBasis>> bases = std::nullopt) {
  const std::size_t n = cfg.size();
  TangentMap tm;
  tm.bases = bases ? std::move(*bases) : default_bases(cfg);
  if (tm.bases.size() != n) throw ValidationError("bases: expected one basis per vortex");
  for (std::size_t i = 0; i < n; ++i) {
    if (tm.bases[i].orthonormality_defect() > 1e-10) {
      throw ValidationError("bases[" + std::to_string(i) + "]: not a direct orthonormal tangent basis");
    }
    if ((tm.bases[i].base.vec() - cfg.points[i].vec()).norm() > 1e-12) {
      throw ValidationError("bases[" + std::to_string(i) + "]: base point differs from the vortex position");
    }
  }
  const Mat2 J = quarter_turn();
  tm.blocks.assign(n, std::vector<Mat2>(n, Mat2::Zero()));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& xi = cfg.points[i];
    Mat2 diag = cfg.gamma * xi.z() * J;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const Vec3& xk = cfg.points[k];
      const double d2 = detail::checked_dist2(xi, xk, "jacobian");
      const Mat2 M = rank_one_map_matrix(xi, xk, tm.bases[i], tm.bases[i]);
      diag += (-cfg.strengths[k] / (2.0 * kPi * d2)) * (xi.dot(xk) * J + M);
    }
    tm.blocks[i][i] = diag;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3& xj = cfg.points[j];
      const double d2 = detail::checked_dist2(xi, xj, "jacobian");
      const Mat2 N = rank_one_map_matrix(xi, xj, tm.bases[j], tm.bases[i]);
      const Mat2 P = projection_matrix(tm.bases[j], tm.bases[i]);
      tm.blocks[i][j] = (cfg.strengths[j] / (2.0 * kPi * d2)) * (J * P + N);
    }
  }
  tm.assembled = Matrix::Zero(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      tm.assembled.block<2, 2>(2 * i, 2 * j) = tm.blocks[i][j];
    }
  }
  return tm;
}

/// Bases turned by per-vortex angles.
inline std::vector<TangentBasis> rotate_bases(const std::vector<TangentBasis>& bases,
                                              const std::vector<double>& angles) {
  std::vector<TangentBasis> out;
  out.reserve(bases.size());
  for (std::size_t i = 0; i < bases.size(); ++i) out.push_back(bases[i].rotated(angles.at(i)));
  return out;
}

struct BasisSearchResult {
  std::vector<TangentBasis> bases;
  std::vector<int> quarter_turns;  // per vortex, multiples of pi/2 applied to the default basis
  double max_entry_error = 0.0;
};

/**
 * Searches quarter-turn re-choices of the default bases (4^N candidates,
 * N <= 8) for the one whose assembled Jacobian best matches `target`
 * entrywise. Vortices listed in `fixed` keep their default basis.
 */
inline BasisSearchResult basis_search(const VortexConfig& cfg, const Matrix& target,
                                      const std::vector<int>& fixed = {}) {
  const std::size_t n = cfg.size();
  if (n > 8) throw ValidationError("basis_search: at most 8 vortices");
  if (target.rows() != static_cast<Eigen::Index>(2 * n) || target.cols() != target.rows()) {
    throw ValidationError("basis_search: target must be 2N x 2N");
  }
  const auto base = default_bases(cfg);
  BasisSearchResult best;
  best.max_entry_error = std::numeric_limits<double>::infinity();
  std::vector<int> turns(n, 0);
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= 4;
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    bool skip = false;
    for (std::size_t i = 0; i < n; ++i) {
      turns[i] = static_cast<int>(c % 4);
      c /= 4;
      if (turns[i] != 0 && std::find(fixed.begin(), fixed.end(), static_cast<int>(i)) != fixed.end()) skip = true;
    }
    if (skip) continue;
    std::vector<double> angles(n);
    for (std::size_t i = 0; i < n; ++i) angles[i] = turns[i] * kPi / 2.0;
    auto bases = rotate_bases(base, angles);
    const Matrix a = jacobian(cfg, bases).assembled;
    const double err = (a - target).cwiseAbs().maxCoeff();
    if (err < best.max_entry_error) best = {bases, turns, err};
  }
  return best;
}

/**
 * Eigenvalues of a real square matrix with residual certificates.
 * Sorted by real part then imaginary part, both descending.
 */
struct SpectrumReport {
  std::vector<Complex> eigenvalues;
  std::vector<double> residuals;  // |A v - lambda v| for unit v
  double max_real_part = -std::numeric_limits<double>::infinity();
  double matrix_norm = 0.0;

  double max_residual() const {
    double r = 0.0;
    for (double x : residuals) r = std::max(r, x);
    return r;
  }

  /// Residual bound tol_factor * ||A|| (Frobenius) satisfied by every eigenpair.
  bool certified(double tol_factor = 1e-9) const {
    return max_residual() <= tol_factor * std::max(matrix_norm, 1.0);
  }

  /// Every non-real eigenvalue has its conjugate in the list within tol.
  bool conjugate_paired(double tol) const {
    for (const auto& z : eigenvalues) {
      if (std::abs(z.imag()) <= tol) continue;
      bool found = false;
      for (const auto& w : eigenvalues) {
        if (std::abs(w - std::conj(z)) <= tol) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
    return true;
  }

  /// Number of eigenvalues within tol of z.
  int count_near(Complex z, double tol) const {
    int c = 0;
    for (const auto& w : eigenvalues) c += std::abs(w - z) <= tol ? 1 : 0;
    return c;
  }
};

inline SpectrumReport spectrum(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw ValidationError("spectrum: matrix must be square and nonempty");
  if (a.rows() > 64) throw ValidationError("spectrum: dimension must be <= 64");
  if (!a.allFinite()) throw ValidationError("spectrum: matrix has non-finite entries");
  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success) throw NoConvergence("spectrum: QR iteration did not converge");
  const Eigen::VectorXcd vals = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();
  const Eigen::MatrixXcd ac = a.cast<Complex>();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  for (Eigen::Index k = 0; k < vals.size(); ++k) order[static_cast<std::size_t>(k)] = k;
  std::sort(order.begin(), order.end(), [&](Eigen::Index p, Eigen::Index q) {
    if (vals[p].real() != vals[q].real()) return vals[p].real() > vals[q].real();
    return vals[p].imag() > vals[q].imag();
  });

  SpectrumReport rep;
  rep.matrix_norm = a.norm();
  for (Eigen::Index k : order) {
    const Complex lambda = vals[k];
    Eigen::VectorXcd v = vecs.col(k);
    const double vn = v.norm();
    if (vn > 0.0) v /= vn;
    rep.eigenvalues.push_back(lambda);
    rep.residuals.push_back((ac * v - lambda * v).norm());
    rep.max_real_part = std::max(rep.max_real_part, lambda.real());
  }
  return rep;
}

/// Closed-form det(lambda I - A) for the four-vortex equilibrium at a = 1, gamma = 1/2, Gamma = 1.
inline double four_vortex_char_poly(double lambda) {
  const double l2 = lambda * lambda;
  const double pi2 = kPi * kPi;
  return l2 * (4.0 * l2 + 1.0) * (128.0 * pi2 * l2 * l2 + (32.0 + 8.0 * pi2) * l2 + 3.0) / (512.0 * pi2);
}

struct CharPolyValue {
  double lambda = 0.0;
  double determinant = 0.0;
  double formula = 0.0;
};

/// det(lambda I - A) by LU next to the closed-form characteristic polynomial.
inline std::vector<CharPolyValue> char_poly_check(const Matrix& a, const std::vector<double>& lambdas) {
  if (a.rows() != 8 || a.cols() != 8) throw ValidationError("char_poly_check: expects the 8x8 four-vortex matrix");
  std::vector<CharPolyValue> out;
  for (double l : lambdas) {
    const Matrix m = l * Matrix::Identity(8, 8) - a;
    out.push_back({l, Eigen::PartialPivLU<Matrix>(m).determinant(), four_vortex_char_poly(l)});
  }
  return out;
}

struct SupstableReport {
  std::vector<double> residuals;  // Frobenius norm of the symmetric part, per vortex
  bool pass = false;
};

/**
 * Tests whether h -> sum_{j != i} G_j D1K(x_i, x_j)[h] . h vanishes on R^3
 * for every i, via the symmetric part of the ambient 3x3 matrix.
 */
inline SupstableReport check_supstable(const VortexConfig& cfg, double tol) {
  SupstableReport rep;
  rep.pass = true;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    Mat3 m = Mat3::Zero();
    for (std::size_t j = 0; j < cfg.size(); ++j) {
      if (j != i) m += cfg.strengths[j] * d1k_matrix(cfg.points[i], cfg.points[j]);
    }
    const double r = (0.5 * (m + m.transpose())).norm();
    rep.residuals.push_back(r);
    rep.pass = rep.pass && r <= tol;
  }
  return rep;
}

struct DissipativeReport {
  bool pass = false;
  double max_symmetric_eigenvalue = 0.0;
  double min_symmetric_eigenvalue = 0.0;
};

/// Quadratic form H . A H <= tol |H|^2 for all H, i.e. max eig((A + A^T)/2) <= tol.
inline DissipativeReport check_dissipative(const Matrix& a, double tol) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  DissipativeReport rep;
  rep.max_symmetric_eigenvalue = es.eigenvalues().maxCoeff();
  rep.min_symmetric_eigenvalue = es.eigenvalues().minCoeff();
  rep.pass = rep.max_symmetric_eigenvalue <= tol;
  return rep;
}

inline DissipativeReport check_dissipative(const TangentMap& map, double tol) {
  return check_dissipative(map.assembled, tol);
}

struct RelativeEquilibrium {
  double omega = 0.0;
  double residual = 0.0;  // root mean square over vortices
  bool degenerate = false;  // all vortices polar, omega reported as gamma
};

/**
 * Least-squares rotation speed Omega for a rigid rotation about e3:
 * (Omega - gamma) e3 ^ x_i = sum_{j != i} (G_j / 2pi) (x_i ^ x_j) / |x_i - x_j|^2.
 */
inline RelativeEquilibrium relative_equilibrium_residual(const VortexConfig& cfg) {
  const std::size_t n = cfg.size();
  std::vector<Vec3> induced(n), axis(n);
  double uu = 0.0;
  double ur = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 r = Vec3::Zero();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) r += cfg.strengths[j] / (2.0 * kPi) * biot_savart_kernel(cfg.points[i], cfg.points[j]);
    }
    induced[i] = r;
    axis[i] = e3().cross(cfg.points[i].vec());
    uu += axis[i].squaredNorm();
    ur += axis[i].dot(r);
  }
  RelativeEquilibrium out;
  double w = 0.0;
  if (uu <= 1e-24) {
    out.degenerate = true;
    out.omega = cfg.gamma;
  } else {
    w = ur / uu;
    out.omega = cfg.gamma + w;
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) sq += (w * axis[i] - induced[i]).squaredNorm();
  out.residual = std::sqrt(sq / static_cast<double>(n));
  return out;
}

}  // namespace spherevortex

#endif
