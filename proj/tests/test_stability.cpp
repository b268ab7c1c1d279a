#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "spherevortex/equilibria.hpp"
#include "spherevortex/random.hpp"
#include "spherevortex/reference.hpp"
#include "spherevortex/stability.hpp"

using namespace spherevortex;

namespace {

Vec3 fd_kernel_x(const Vec3& x, const Vec3& y, const Vec3& h, double s) {
  return ((x + s * h).cross(y) / (x + s * h - y).squaredNorm() - (x - s * h).cross(y) / (x - s * h - y).squaredNorm()) /
         (2.0 * s);
}

}  // namespace

TEST(D1K, PolarValues) {
  RngStream rng = make_stream(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vec3 h(n(rng), n(rng), n(rng));
    const Vec3 v = d1k(e3(), -e3(), h);
    EXPECT_NEAR((v + h.cross(e3()) / 4.0).norm(), 0.0, 1e-15);
    EXPECT_NEAR(v.dot(h), 0.0, 1e-14);
  }
}

TEST(D1K, MatchesFiniteDifferences) {
  RngStream rng = make_stream(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vec3 x = sample_uniform(rng).vec(), y = sample_uniform(rng).vec();
    const Vec3 h(n(rng), n(rng), n(rng));
    const Vec3 an = d1k(x, y, h), fd = fd_kernel_x(x, y, h, 1e-6);
    EXPECT_LE((an - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
    EXPECT_LE((d1k_matrix(x, y) * h - an).norm(), 1e-12 * std::max(1.0, an.norm()));
  }
}

TEST(D2K, DirectValueAndFiniteDifferences) {
  EXPECT_NEAR((d2k(e1(), e2(), e3()) + 0.5 * e2()).norm(), 0.0, 1e-15);
  RngStream rng = make_stream(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vec3 x = sample_uniform(rng).vec(), y = sample_uniform(rng).vec();
    const Vec3 kv(n(rng), n(rng), n(rng));
    const double s = 1e-6;
    const Vec3 fd = (x.cross(y + s * kv) / (x - y - s * kv).squaredNorm() -
                     x.cross(y - s * kv) / (x - y + s * kv).squaredNorm()) /
                    (2.0 * s);
    const Vec3 an = d2k(x, y, kv);
    EXPECT_LE((an - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
    // K(x, y) = -K(y, x): the second-slot derivative is minus the first-slot derivative of the swapped kernel.
    EXPECT_LE((an + d1k(y, x, kv)).norm(), 1e-12 * std::max(1.0, an.norm()));
  }
}

TEST(D1K, UnderflowRaises) { EXPECT_THROW(d1k(e1(), e1(), e2()), DistanceUnderflow); }

TEST(Jacobian, PolarPairMatchesFiniteDifferencesAndIsSkew) {
  for (double g : {1.0, -0.5, 3.0}) {
    for (double gamma : {0.0, 0.5, -1.0}) {
      const VortexConfig cfg = polar_pair(g, gamma);
      const TangentMap tm = jacobian(cfg);
      EXPECT_LE((tm.assembled - reference::fd_jacobian(cfg, tm.bases)).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LE((tm.assembled + tm.assembled.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(Jacobian, PolarPairReferenceMatrixAfterHalfTurnAtSouthPole) {
  // The hand-derived block matrix holds with the basis at -e3 turned by pi.
  for (double g : {1.0, -0.5, 3.0}) {
    for (double gamma : {0.0, 0.5, -1.0}) {
      const VortexConfig cfg = polar_pair(g, gamma);
      const BasisSearchResult res = basis_search(cfg, reference::polar_pair_reference_matrix(g, gamma), {0});
      EXPECT_LE(res.max_entry_error, 1e-12);
      EXPECT_EQ(res.quarter_turns, (std::vector<int>{0, 2}));
      const Matrix a = jacobian(cfg, rotate_bases(default_bases(cfg), {0.0, kPi})).assembled;
      EXPECT_LE((a - reference::polar_pair_reference_matrix(g, gamma)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Jacobian, AssembledIsBlockConcatenation) {
  RngStream rng = make_stream(4);
  const TangentMap tm = jacobian(random_gauss_config(rng, 4, 0.2));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(Mat2(tm.assembled.block<2, 2>(2 * i, 2 * j)), tm.blocks[i][j]);
}

TEST(Jacobian, FourVortexSpectrumMatchesReferenceMatrix) {
  const TangentMap tm = jacobian(four_vortex(1.0, 0.5));
  const auto mine = reference::sorted_eigenvalues(tm.assembled);
  const auto ref = reference::sorted_eigenvalues(reference::four_vortex_reference_matrix());
  EXPECT_LE(reference::multiset_distance(mine, ref), 1e-9);
}

TEST(Jacobian, BasisSearchRecoversReferenceMatrixEntrywise) {
  const VortexConfig cfg = four_vortex(1.0, 0.5);
  const BasisSearchResult res = basis_search(cfg, reference::four_vortex_reference_matrix(), {0, 1});
  EXPECT_LE(res.max_entry_error, 1e-12);
  EXPECT_EQ(res.quarter_turns, (std::vector<int>{0, 0, 0, 2}));
}

TEST(Jacobian, MatchesGreatCircleFiniteDifferences) {
  RngStream rng = make_stream(5);
  for (int k = 0; k < 20; ++k) {
    const VortexConfig cfg = random_gauss_config(rng, 3 + k % 3, 0.5 * (k % 3) - 0.5);
    const TangentMap tm = jacobian(cfg);
    const Matrix fd = reference::fd_jacobian(cfg, tm.bases);
    Eigen::VectorXd h = Eigen::VectorXd::Random(tm.assembled.rows());
    const Eigen::VectorXd an = tm.assembled * h, num = fd * h;
    EXPECT_LE((an - num).norm(), 1e-5 * std::max(1.0, num.norm())) << "config " << k;
  }
}

TEST(Jacobian, SpectrumInvariantUnderBasisChange) {
  RngStream rng = make_stream(6);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  for (int k = 0; k < 20; ++k) {
    const VortexConfig cfg = random_gauss_config(rng, 3 + k % 3, 0.3);
    std::vector<double> angles(cfg.size());
    for (auto& a : angles) a = ang(rng);
    const auto e0 = reference::sorted_eigenvalues(jacobian(cfg).assembled);
    const auto e1 = reference::sorted_eigenvalues(jacobian(cfg, rotate_bases(default_bases(cfg), angles)).assembled);
    EXPECT_LE(reference::multiset_distance(e0, e1), 1e-9);
  }
}

TEST(Jacobian, RejectsInvalidBases) {
  const VortexConfig cfg = polar_pair(1.0, 0.0);
  auto b = default_bases(cfg);
  b[0].b2 = -b[0].b2;
  EXPECT_THROW(jacobian(cfg, b), ValidationError);
  EXPECT_THROW(jacobian(cfg, std::vector<TangentBasis>{b[1]}), ValidationError);
}

TEST(Spectrum, QuarterTurn) {
  const SpectrumReport r = spectrum(quarter_turn());
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_NEAR(std::abs(r.eigenvalues[0] - Complex(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(r.eigenvalues[1] - Complex(0, -1)), 0.0, 1e-15);
  EXPECT_TRUE(r.certified());
}

TEST(Spectrum, PolarPairIsImaginary) {
  for (double g : {1.0, 2.5})
    for (double gamma : {0.0, 1.0}) {
      const SpectrumReport r = spectrum(jacobian(polar_pair(g, gamma)).assembled);
      for (const auto& z : r.eigenvalues) EXPECT_LE(std::abs(z.real()), 1e-10);
    }
}

TEST(Spectrum, FourVortexReproduction) {
  const SpectrumReport r = spectrum(jacobian(four_vortex(1.0, 0.5)).assembled);
  EXPECT_EQ(r.count_near(Complex(0, 0), 1e-9), 2);
  EXPECT_EQ(r.count_near(Complex(0, 0.5), 1e-9), 1);
  EXPECT_EQ(r.count_near(Complex(0, -0.5), 1e-9), 1);
  EXPECT_NEAR(r.max_real_part, 0.0491, 1e-3);
  EXPECT_TRUE(r.certified());
  EXPECT_TRUE(r.conjugate_paired(1e-9));
  for (std::size_t k = 1; k < r.eigenvalues.size(); ++k) {
    const auto& p = r.eigenvalues[k - 1];
    const auto& q = r.eigenvalues[k];
    EXPECT_TRUE(p.real() > q.real() || (p.real() == q.real() && p.imag() >= q.imag()));
  }
}

TEST(Spectrum, LargestRealPartAgreesWithClosedFormRoots) {
  // Roots of the quadratic factor in lambda^2 of the characteristic polynomial.
  const double pi2 = kPi * kPi;
  const Complex disc = std::sqrt(Complex((32.0 + 8.0 * pi2) * (32.0 + 8.0 * pi2) - 4.0 * 128.0 * pi2 * 3.0, 0.0));
  const Complex mu = (-(32.0 + 8.0 * pi2) + disc) / (2.0 * 128.0 * pi2);
  const double expected = std::abs(std::sqrt(mu).real());
  const SpectrumReport r = spectrum(jacobian(four_vortex(1.0, 0.5)).assembled);
  EXPECT_NEAR(r.max_real_part, expected, 1e-9);
}

TEST(Spectrum, RejectsBadInput) {
  EXPECT_THROW(spectrum(Matrix::Zero(2, 3)), ValidationError);
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = NAN;
  EXPECT_THROW(spectrum(m), ValidationError);
  EXPECT_THROW(spectrum(Matrix::Identity(66, 66)), ValidationError);
}

TEST(CharPoly, MatchesDeterminant) {
  const Matrix a = jacobian(four_vortex(1.0, 0.5)).assembled;
  const auto vals = char_poly_check(a, {0.0, 0.25, 0.5, 1.0, 2.0});
  EXPECT_NEAR(vals[0].determinant, 0.0, 1e-12);
  EXPECT_EQ(vals[0].formula, 0.0);
  for (std::size_t k = 1; k < vals.size(); ++k) {
    EXPECT_LE(std::abs(vals[k].determinant - vals[k].formula), 1e-8 * std::abs(vals[k].formula)) << vals[k].lambda;
  }
  const double pi2 = kPi * kPi;
  EXPECT_NEAR(vals[3].formula, 5.0 * (136.0 * pi2 + 35.0) / (512.0 * pi2), 1e-15);
  // At lambda = 1/2 the factor 4 lambda^2 + 1 equals 2.
  EXPECT_NEAR(vals[2].formula, 0.25 * 2.0 * (128.0 * pi2 / 16.0 + (32.0 + 8.0 * pi2) / 4.0 + 3.0) / (512.0 * pi2), 1e-15);
}

TEST(Supstable, PolarPairPassesRandomFails) {
  const SupstableReport p = check_supstable(polar_pair(1.0, 0.3), 1e-12);
  EXPECT_TRUE(p.pass);
  for (double r : p.residuals) EXPECT_LE(r, 1e-14);
  RngStream rng = make_stream(7);
  for (int k = 0; k < 10; ++k) {
    const SupstableReport q = check_supstable(random_gauss_config(rng, 3, 0.0), 1e-12);
    EXPECT_FALSE(q.pass);
    EXPECT_GT(*std::max_element(q.residuals.begin(), q.residuals.end()), 1e-3);
  }
}

TEST(Supstable, ResidualComparableToSampledQuadraticForm) {
  RngStream rng = make_stream(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const VortexConfig cfg = random_gauss_config(rng, 4, 0.0);
    const SupstableReport rep = check_supstable(cfg, 0.0);
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      double sampled = 0.0;
      for (int s = 0; s < 4000; ++s) {
        const Vec3 h = Vec3(n(rng), n(rng), n(rng)).normalized();
        Vec3 v = Vec3::Zero();
        for (std::size_t j = 0; j < cfg.size(); ++j)
          if (j != i) v += cfg.strengths[j] * d1k(cfg.points[i], cfg.points[j], h);
        sampled = std::max(sampled, std::abs(v.dot(h)));
      }
      // Spectral norm <= Frobenius norm <= sqrt(3) spectral norm; sampling slightly underestimates.
      EXPECT_LE(sampled, rep.residuals[i] * (1.0 + 1e-12));
      EXPECT_GE(std::sqrt(3.0) * sampled * 1.05, rep.residuals[i]);
    }
  }
}

TEST(Dissipative, Cases) {
  const DissipativeReport p = check_dissipative(jacobian(polar_pair(1.0, 0.5)), 1e-12);
  EXPECT_TRUE(p.pass);
  EXPECT_NEAR(p.max_symmetric_eigenvalue, 0.0, 1e-12);
  const DissipativeReport f = check_dissipative(jacobian(four_vortex(1.0, 0.5)), 1e-12);
  EXPECT_FALSE(f.pass);
  EXPECT_GT(f.max_symmetric_eigenvalue, 0.0);
  Matrix skew = Matrix::Random(6, 6);
  skew = (skew - skew.transpose()).eval();
  EXPECT_LE(std::abs(check_dissipative(skew, 1e-14).max_symmetric_eigenvalue), 1e-14);
}

TEST(RelativeEquilibrium, KnownCases) {
  const RelativeEquilibrium p = relative_equilibrium_residual(polar_pair(1.0, 0.4));
  EXPECT_TRUE(p.degenerate);
  EXPECT_EQ(p.omega, 0.4);
  EXPECT_LE(p.residual, 1e-15);
  const RelativeEquilibrium f = relative_equilibrium_residual(four_vortex(0.6, 0.3));
  EXPECT_NEAR(f.omega, 0.0, 1e-10);
  EXPECT_LE(f.residual, 1e-10);
  const RelativeEquilibrium c = relative_equilibrium_residual(vortex_crystal(8, 0.5, 1.0, 0.3));
  EXPECT_LE(c.residual, 1e-10);
  EXPECT_FALSE(c.degenerate);
}

TEST(RelativeEquilibrium, CrystalRotatesAtFittedRate) {
  const VortexConfig cfg = vortex_crystal(6, 0.5, 1.0, 0.3);
  const RelativeEquilibrium re = relative_equilibrium_residual(cfg);
  const Trajectory tr = integrate(cfg, 1e-3, 1.0, 1000);
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Vec3 expected = rotation_z(re.omega) * cfg.points[i].vec();
    EXPECT_LE((tr.states.back()[i].vec() - expected).norm(), 1e-9);
  }
}

TEST(RelativeEquilibrium, RandomConfigHasLargeResidual) {
  RngStream rng = make_stream(9);
  EXPECT_GT(relative_equilibrium_residual(random_gauss_config(rng, 4, 0.0)).residual, 1e-3);
}
