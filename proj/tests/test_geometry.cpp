#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "ddpecann/geometry.hpp"

using namespace ddpecann;

namespace {

constexpr double kPi = std::numbers::pi;

int count_owners(const Partition& part, const Vec2& p) {
  int n = 0;
  for (const auto& s : part.subdomains) n += s.interior(p) ? 1 : 0;
  return n;
}

}  // namespace

TEST(Cartesian, FourStripsAlongX) {
  const Partition part = make_cartesian_partition(Box{}, 4, 1);
  ASSERT_EQ(part.size(), 4u);
  ASSERT_EQ(part.interfaces.size(), 3u);
  const double cuts[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(part.subdomains[k].bounds.x0, cuts[k]);
    EXPECT_DOUBLE_EQ(part.subdomains[k].bounds.x1, cuts[k + 1]);
    EXPECT_EQ(part.subdomains[k].bounds.y0, -1.0);
    EXPECT_EQ(part.subdomains[k].bounds.y1, 1.0);
  }
  // end strips have three physical edges, middle strips two
  EXPECT_EQ(part.subdomains[0].boundary.size(), 3u);
  EXPECT_EQ(part.subdomains[1].boundary.size(), 2u);
  EXPECT_EQ(part.subdomains[2].boundary.size(), 2u);
  EXPECT_EQ(part.subdomains[3].boundary.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(part.interfaces[i].first, i);
    EXPECT_EQ(part.interfaces[i].second, i + 1);
    const auto& seg = std::get<LineSegment>(part.interfaces[i].piece.shape);
    EXPECT_DOUBLE_EQ(seg.a.x(), cuts[i + 1]);
    EXPECT_EQ(seg.normal, Vec2(1, 0));
  }
  EXPECT_EQ(part.interfaces_of(0), std::vector<int>{0});
  EXPECT_EQ(part.interfaces_of(1), (std::vector<int>{0, 1}));
}

TEST(Cartesian, TwoByTwoNumbering) {
  const Partition part = make_cartesian_partition(Box{}, 2, 2);
  ASSERT_EQ(part.size(), 4u);
  ASSERT_EQ(part.interfaces.size(), 4u);
  EXPECT_TRUE(part.subdomains[0].interior(Vec2(-0.5, -0.5)));  // bottom-left
  EXPECT_TRUE(part.subdomains[1].interior(Vec2(0.5, -0.5)));   // bottom-right
  EXPECT_TRUE(part.subdomains[2].interior(Vec2(-0.5, 0.5)));   // top-left
  EXPECT_TRUE(part.subdomains[3].interior(Vec2(0.5, 0.5)));    // top-right
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(part.interfaces_of(k).size(), 2u);
    EXPECT_EQ(part.subdomains[k].boundary.size(), 2u);
  }
}

TEST(Cartesian, RejectsEmptyGrid) {
  EXPECT_THROW(make_cartesian_partition(Box{}, 0, 1), ConfigError);
  EXPECT_THROW(make_cartesian_partition(Box{}, 2, -1), ConfigError);
}

TEST(Cartesian, OpenRegionsAreDisjointAndCoverTheDomain) {
  const Partition part = make_cartesian_partition(Box{}, 3, 2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p(u(rng), u(rng));
    EXPECT_EQ(count_owners(part, p), 1);
  }
  // interface points belong to no open region but to both closed ones
  const Vec2 on_cut(-1.0 + 2.0 / 3.0, -0.3);
  EXPECT_EQ(count_owners(part, on_cut), 0);
  EXPECT_TRUE(part.subdomains[0].contains(on_cut));
  EXPECT_TRUE(part.subdomains[1].contains(on_cut));
}

TEST(Polar, CurveValuesAndDerivatives) {
  const PolarCurve outer = PolarCurve::complex_outer(), inner = PolarCurve::complex_interface();
  EXPECT_DOUBLE_EQ(outer.rho(0.0), 2.0);
  EXPECT_NEAR(outer.rho(kPi / 8), 2.5, 1e-15);
  EXPECT_DOUBLE_EQ(inner.rho(0.0), 1.0);
  EXPECT_NEAR(inner.rho(kPi / 12), 1.0 + 0.5 * std::cos(kPi / 3), 1e-15);
  const double h = 1e-6;
  for (double t : {0.1, 0.7, 1.9, 3.3, 5.8}) {
    EXPECT_NEAR(outer.drho(t), (outer.rho(t + h) - outer.rho(t - h)) / (2 * h), 1e-8);
    EXPECT_NEAR(inner.drho(t), (inner.rho(t + h) - inner.rho(t - h)) / (2 * h), 1e-8);
  }
}

TEST(Polar, NormalIsUnitPerpendicularAndOutward) {
  for (const PolarCurve& c : {PolarCurve::complex_outer(), PolarCurve::complex_interface()}) {
    for (int i = 0; i < 64; ++i) {
      const double t = 2 * kPi * i / 64 + 0.01;
      const Vec2 n = c.outward_normal(t);
      EXPECT_NEAR(n.norm(), 1.0, 1e-14);
      const double h = 1e-6;
      const Vec2 tangent = (c.point(t + h) - c.point(t - h)) / (2 * h);
      EXPECT_NEAR(n.dot(tangent.normalized()), 0.0, 1e-8);
      // stepping along the normal leaves the enclosed region
      EXPECT_GT(c.radial_offset(c.point(t) + 1e-4 * n), 0.0);
      EXPECT_LT(c.radial_offset(c.point(t) - 1e-4 * n), 0.0);
    }
  }
  const Vec2 n = PolarCurve::circle(1.0).outward_normal(0.0);
  EXPECT_NEAR(n.x(), 1.0, 1e-15);
  EXPECT_NEAR(n.y(), 0.0, 1e-15);
}

TEST(Polar, PartitionLayout) {
  const Partition part =
      make_polar_partition(PolarCurve::complex_outer(), PolarCurve::complex_interface());
  ASSERT_EQ(part.size(), 2u);
  ASSERT_EQ(part.interfaces.size(), 1u);
  EXPECT_EQ(part.interfaces[0].first, 1);
  EXPECT_EQ(part.interfaces[0].second, 0);
  EXPECT_TRUE(part.subdomains[1].interior(Vec2(0, 0)));
  EXPECT_TRUE(part.subdomains[0].interior(Vec2(1.8, 0)));
  EXPECT_FALSE(part.subdomains[0].interior(Vec2(2.2, 0)));
  EXPECT_TRUE(part.subdomains[1].boundary.empty());
  EXPECT_EQ(part.subdomains[0].boundary.size(), 1u);
}

TEST(Polar, RejectsIntersectingOrDegenerateCurves) {
  EXPECT_THROW(make_polar_partition(PolarCurve::circle(1.0), PolarCurve::circle(1.5)), GeometryError);
  EXPECT_THROW(make_polar_partition(PolarCurve::complex_outer(), PolarCurve::circle(2.2)),
               GeometryError);
  EXPECT_THROW(make_polar_partition(PolarCurve::circle(1.0), PolarCurve::circle(-0.5)),
               GeometryError);
}

TEST(Sampling, CountsRolesAndContainment) {
  const Partition part = make_cartesian_partition(Box{}, 2, 2);
  const PointCounts counts{200, 16, 24};
  const auto pts = sample_points(part, counts, 7);
  for (const auto& s : part.subdomains) {
    const auto& sp = pts[s.id];
    ASSERT_EQ(sp.interior.size(), 200);
    EXPECT_EQ(sp.boundary.size(), 2 * 16);
    ASSERT_EQ(sp.interfaces.size(), 2u);
    for (Eigen::Index j = 0; j < sp.interior.size(); ++j) EXPECT_TRUE(s.interior(sp.interior.coords.col(j)));
    for (Eigen::Index j = 0; j < sp.boundary.size(); ++j) {
      const Vec2 p = sp.boundary.coords.col(j);
      EXPECT_TRUE(s.contains(p));
      EXPECT_NEAR(std::max(std::abs(p.x()), std::abs(p.y())), 1.0, 1e-15);
    }
    for (const auto& f : sp.interfaces) EXPECT_EQ(f.size(), 24);
  }
}

TEST(Sampling, SegmentsIncludeEndpoints) {
  const Partition part = make_cartesian_partition(Box{}, 2, 2);
  const auto pts = sample_points(part, {10, 8, 8}, 1);
  // the cross point sits on every interface of the 2x2 split
  for (const auto& sp : pts)
    for (const auto& f : sp.interfaces) {
      bool found = false;
      for (Eigen::Index j = 0; j < f.size(); ++j) found |= f.coords.col(j).norm() == 0.0;
      EXPECT_TRUE(found) << "interface " << f.interface_id;
    }
}

TEST(Sampling, InterfaceCoordinatesSharedAndNormalsOpposite) {
  for (const Partition& part :
       {make_cartesian_partition(Box{}, 4, 1), make_cartesian_partition(Box{}, 2, 2),
        make_polar_partition(PolarCurve::complex_outer(), PolarCurve::complex_interface())}) {
    const auto pts = sample_points(part, {50, 20, 30}, 11);
    for (const auto& f : part.interfaces) {
      const PointSet* a = nullptr;
      const PointSet* b = nullptr;
      for (const auto& ps : pts[f.first].interfaces)
        if (ps.interface_id == f.id) a = &ps;
      for (const auto& ps : pts[f.second].interfaces)
        if (ps.interface_id == f.id) b = &ps;
      ASSERT_TRUE(a && b);
      EXPECT_EQ(a->neighbor, f.second);
      EXPECT_EQ(b->neighbor, f.first);
      EXPECT_EQ(a->coords, b->coords);
      EXPECT_EQ(a->normals, Points(-b->normals));
      for (Eigen::Index j = 0; j < a->size(); ++j) {
        EXPECT_LT(f.piece.residual(a->coords.col(j)), 1e-12);
        EXPECT_NEAR(a->normals.col(j).norm(), 1.0, 1e-14);
        // first's normal points into second
        const Vec2 inside = a->coords.col(j) + 1e-6 * a->normals.col(j);
        EXPECT_TRUE(part.subdomains[f.second].contains(inside));
      }
    }
  }
}

TEST(Sampling, PolarPointsOnCurvesAndInsideRegions) {
  const Partition part =
      make_polar_partition(PolarCurve::complex_outer(), PolarCurve::complex_interface());
  const auto pts = sample_points(part, {300, 64, 64}, 3);
  const auto outer = PolarCurve::complex_outer();
  for (Eigen::Index j = 0; j < pts[0].boundary.size(); ++j)
    EXPECT_LT(std::abs(outer.radial_offset(pts[0].boundary.coords.col(j))), 1e-12);
  for (int k = 0; k < 2; ++k)
    for (Eigen::Index j = 0; j < pts[k].interior.size(); ++j)
      EXPECT_TRUE(part.subdomains[k].interior(pts[k].interior.coords.col(j)));
  EXPECT_EQ(pts[1].boundary.size(), 0);
}

TEST(Sampling, DeterministicPerSeed) {
  const Partition part = make_cartesian_partition(Box{}, 2, 2);
  const auto a = sample_points(part, {64, 16, 16}, 99);
  const auto b = sample_points(part, {64, 16, 16}, 99);
  const auto c = sample_points(part, {64, 16, 16}, 100);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].interior.coords, b[k].interior.coords);
    EXPECT_EQ(a[k].boundary.coords, b[k].boundary.coords);
    EXPECT_NE(a[k].interior.coords, c[k].interior.coords);
  }
}

TEST(Sampling, DegenerateRegionIsAnError) {
  Subdomain sliver;
  sliver.bounds = {-1, 1, -1, 1};
  sliver.interior = [](const Vec2&) { return false; };
  sliver.contains = sliver.interior;
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_interior(sliver, 10, rng), GeometryError);
}
