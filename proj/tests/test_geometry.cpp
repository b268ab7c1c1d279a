#include <gtest/gtest.h>

#include <cmath>

#include "spherevortex/geometry.hpp"
#include "spherevortex/random.hpp"
#include "spherevortex/reference.hpp"

using namespace spherevortex;

TEST(UnitVector3, NormalizesOnConstruction) {
  const UnitVector3 x(Vec3(3.0, 0.0, 4.0));
  EXPECT_NEAR(x.vec().norm(), 1.0, 1e-15);
  EXPECT_NEAR(x.x(), 0.6, 1e-15);
  EXPECT_NEAR(x.z(), 0.8, 1e-15);
}

TEST(UnitVector3, RejectsZeroAndNonFinite) {
  EXPECT_THROW(UnitVector3(Vec3::Zero()), ValidationError);
  EXPECT_THROW(UnitVector3(Vec3(NAN, 0.0, 1.0)), ValidationError);
}

TEST(Rotation, QuarterTurnMapsE1ToE2) {
  const Vec3 r = rotation_z(kPi / 2.0) * e1();
  EXPECT_NEAR((r - e2()).norm(), 0.0, 1e-15);
}

TEST(Rotation, IsOrthogonalWithUnitDeterminant) {
  for (double th : {-2.0, 0.3, 1.0, 4.0}) {
    const Mat3 r = rotation_z(th);
    EXPECT_NEAR((r.transpose() * r - Mat3::Identity()).norm(), 0.0, 1e-15);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-15);
  }
}

TEST(ProjectTangent, RemovesNormalComponent) {
  const Vec3 x = UnitVector3(1.0, 2.0, 2.0).vec();
  const Vec3 p = project_tangent(x, Vec3(0.5, -1.0, 3.0));
  EXPECT_NEAR(p.dot(x), 0.0, 1e-15);
  EXPECT_NEAR(project_tangent(e3(), e3()).norm(), 0.0, 1e-15);
}

TEST(TangentBasis, PolesUseFixedOrientation) {
  const TangentBasis n = tangent_basis(UnitVector3(e3()));
  EXPECT_EQ(n.b1, e1());
  EXPECT_EQ(n.b2, e2());
  const TangentBasis s = tangent_basis(UnitVector3(-e3()));
  EXPECT_EQ(s.b1, e1());
  EXPECT_EQ(s.b2, -e2());
}

TEST(TangentBasis, OrthonormalAndOriented) {
  RngStream rng = make_stream(11);
  for (int k = 0; k < 1000; ++k) {
    const UnitVector3 x = sample_uniform(rng);
    const TangentBasis b = tangent_basis(x);
    EXPECT_LE(b.orthonormality_defect(), 1e-14);
    EXPECT_NEAR(b.b1.cross(b.b2).dot(x.vec()), 1.0, 1e-14);
  }
  const TangentBasis near_pole = tangent_basis(UnitVector3(1e-12, 0.0, 1.0));
  EXPECT_LE(near_pole.orthonormality_defect(), 1e-14);
}

TEST(TangentBasis, RotationKeepsOrientation) {
  const TangentBasis b = tangent_basis(UnitVector3(0.3, -0.4, 0.5)).rotated(0.7);
  EXPECT_LE(b.orthonormality_defect(), 1e-14);
  EXPECT_NEAR(b.b1.cross(b.b2).dot(b.base.vec()), 1.0, 1e-14);
}

TEST(Chord, IdentityWithDotProduct) {
  RngStream rng = make_stream(3);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 x = sample_uniform(rng).vec(), y = sample_uniform(rng).vec();
    EXPECT_NEAR((x - y).squaredNorm(), 2.0 * (1.0 - x.dot(y)), 1e-14);
    EXPECT_LE(x.cross(y).norm(), (x - y).norm() + 1e-15);
  }
}

TEST(Chord, GeodesicRoundTrip) {
  for (double a : {0.0, 0.1, 1.0, 2.5, kPi}) EXPECT_NEAR(geodesic_from_chord(chord_from_geodesic(a)), a, 1e-7);
}

TEST(CapArea, Values) {
  EXPECT_DOUBLE_EQ(cap_area(0.0), 0.0);
  EXPECT_NEAR(cap_area(2.0), 4.0 * kPi, 1e-14);
  EXPECT_NEAR(cap_area(1.0), kPi, 1e-15);
  EXPECT_THROW(cap_area(-0.1), ValidationError);
  EXPECT_THROW(cap_area(2.1), ValidationError);
}

TEST(CapArea, MatchesMonteCarloFraction) {
  RngStream rng = make_stream(5);
  const int n = 200000;
  for (double r : {0.5, 1.0, 1.5}) {
    int inside = 0;
    for (int k = 0; k < n; ++k) inside += (sample_uniform(rng).vec() - e3()).norm() <= r;
    const double p = cap_area(r) / (4.0 * kPi);
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    EXPECT_NEAR(static_cast<double>(inside) / n, p, 3.0 * sigma) << "r = " << r;
  }
}

TEST(SampleUniform, FirstMomentsVanish) {
  RngStream rng = make_stream(8);
  const int n = 100000;
  Vec3 mean = Vec3::Zero();
  double zz = 0.0;
  for (int k = 0; k < n; ++k) {
    const Vec3 x = sample_uniform(rng).vec();
    EXPECT_NEAR(x.norm(), 1.0, 1e-15);
    mean += x;
    zz += x.z() * x.z();
  }
  mean /= n;
  EXPECT_LT(mean.norm(), 5.0 * std::sqrt(1.0 / n));
  EXPECT_NEAR(zz / n, 1.0 / 3.0, 5.0 * std::sqrt(4.0 / 45.0 / n));
}

TEST(SampleCap, StaysInCap) {
  RngStream rng = make_stream(9);
  const UnitVector3 c(0.2, 0.5, -0.7);
  for (int k = 0; k < 5000; ++k) EXPECT_LE((sample_cap(c, 0.3, rng).vec() - c.vec()).norm(), 0.3 + 1e-14);
}

TEST(SingularMomentIntegral, MatchesQuadrature) {
  for (double alpha : {0.0, 0.25, 0.5, 1.0, 1.5}) {
    EXPECT_NEAR(singular_moment_integral(alpha), reference::singular_moment_quadrature(alpha), 1e-8) << alpha;
  }
  EXPECT_NEAR(singular_moment_integral(0.0), 4.0 * kPi, 1e-14);
  EXPECT_NEAR(singular_moment_integral(1.0), 4.0 * kPi, 1e-14);
}

TEST(SingularMomentIntegral, RejectsNonIntegrableExponents) {
  EXPECT_THROW(singular_moment_integral(2.0), ValidationError);
  EXPECT_THROW(singular_moment_integral(3.0), ValidationError);
  EXPECT_THROW(singular_moment_integral(-0.5), ValidationError);
}

TEST(Random, SubstreamsAreReproducibleAndDistinct) {
  RngStream a = substream(42, {1, 2}), b = substream(42, {1, 2}), c = substream(42, {2, 1});
  const auto va = a(), vb = b(), vc = c();
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(make_stream(0)(), make_stream(1)());
}
