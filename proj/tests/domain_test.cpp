#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cyclecraft/domain.hpp"

using namespace cyclecraft;

TEST_CASE("box gauge is the scaled Chebyshev distance") {
  OffsetDomain d = OffsetDomain::box(Vec{rat(0), rat(0)}, Vec{rat(2), rat(2)});
  CHECK(d.gauge(Vec{rat(1), rat(1)}) == rat(0));          // center
  CHECK(d.gauge(Vec{rat(2), rat(1)}) == rat(1));          // face
  CHECK(d.gauge(Vec{rat(0), rat(0)}) == rat(1));          // corner
  CHECK(d.gauge(Vec{rat(3), rat(1)}) == rat(2));          // outside
  CHECK(d.contains(Vec{rat(1, 2), rat(3, 2)}));
  CHECK(d.on_boundary(Vec{rat(2), rat(1, 3)}));
  CHECK(d.rho0 == rat(1));
}

TEST_CASE("gauge scales linearly along rays") {
  OffsetDomain d = OffsetDomain::box(Vec{rat(0), rat(0)}, Vec{rat(1), rat(1)});
  Vec p{rat(7, 8), rat(3, 4)};
  Rat g = d.gauge(p);
  Vec half = vlerp(d.center, p, rat(1, 2));
  CHECK(d.gauge(half) == g / 2);
  Vec scaled = d.scale_to_gauge(p, rat(1, 3));
  CHECK(d.gauge(scaled) == rat(1, 3));
}

TEST_CASE("polygon disc gauge hits one at its vertices") {
  OffsetDomain d = OffsetDomain::ngon_disc(32, rat(1), Vec{rat(0), rat(0)});
  REQUIRE(d.loop.size() == 32);
  for (const Vec& v : d.loop) CHECK(d.gauge(v) == rat(1));
  CHECK(d.gauge(Vec{rat(0), rat(0)}) == rat(0));
  // inradius of a 32-gon is within 0.5% of the circumradius
  CHECK(to_double(d.rho0) > 0.99);
  CHECK(to_double(d.rho0) <= 1.0);
}

TEST_CASE("unit disc offset by 0.25 is the 0.75 disc") {
  OffsetDomain d = OffsetDomain::ngon_disc(32, rat(1), Vec{rat(0), rat(0)});
  Vec dir = d.loop[0];  // unit-length direction (vertex on the circle)
  CHECK(d.in_offset(vscale(rat(74, 100), dir), rat(1, 4)));
  CHECK_FALSE(d.in_offset(vscale(rat(76, 100), dir), rat(1, 4)));
}

TEST_CASE("PL ball vertices lie exactly on the sphere") {
  OffsetDomain d = OffsetDomain::pl_ball(rat(1), Vec{rat(0), rat(0), rat(0)}, 1);
  REQUIRE(!d.tris.empty());
  for (const Simplex& t : d.tris)
    for (const Vec& v : t) CHECK(vnorm2(v) == rat(1));
  CHECK(d.contains(Vec{rat(0), rat(0), rat(0)}));
  CHECK(d.gauge(d.tris[0][0]) == rat(1));
  CHECK(to_double(d.rho0) > 0.8);
}

TEST_CASE("boundary chains close up") {
  OffsetDomain box = OffsetDomain::box(Vec{rat(0), rat(0), rat(0)}, Vec{rat(1), rat(1), rat(1)});
  CHECK(box.boundary_chain().boundary().empty());
  CHECK(box.boundary_mass() == doctest::Approx(6.0));

  OffsetDomain disc = OffsetDomain::ngon_disc(16, rat(1), Vec{rat(0), rat(0)});
  CHECK(disc.boundary_chain().boundary().empty());
  CHECK(disc.boundary_mass() == doctest::Approx(2 * 3.14159265).epsilon(0.01));

  OffsetDomain ball = OffsetDomain::pl_ball(rat(1), Vec{rat(0), rat(0), rat(0)}, 2);
  CHECK(ball.boundary_chain().boundary().empty());
  CHECK(ball.boundary_mass() == doctest::Approx(4 * 3.14159265).epsilon(0.06));

  // scaled copies keep closing
  CHECK(box.boundary_chain(rat(1, 4)).boundary().empty());
  CHECK(disc.boundary_chain(rat(1, 8)).boundary().empty());
}

TEST_CASE("collar is the identity at depth zero and contracts inward") {
  OffsetDomain d = OffsetDomain::box(Vec{rat(0), rat(0)}, Vec{rat(2), rat(2)});
  Vec b{rat(2), rat(1, 2)};
  CHECK(d.collar_point(b, rat(0)) == b);
  Vec in = d.collar_point(b, rat(1, 4));
  CHECK(d.depth(in) == rat(1, 4));
  CHECK(d.collar_project(b, rat(1, 4)) == in);
}

TEST_CASE("collar stretch stays within the reported factor") {
  OffsetDomain d = OffsetDomain::box(Vec{rat(0), rat(0)}, Vec{rat(1), rat(1)});
  double lip = 1.0 + d.eps_lip() + 1e-9;
  std::uint64_t st = 7;
  for (int trial = 0; trial < 50; ++trial) {
    Vec p = d.sample_interior(st);
    Vec q = d.sample_interior(st);
    if (p == d.center || q == d.center) continue;
    Vec pb = d.scale_to_gauge(p, rat(1));
    Vec qb = d.scale_to_gauge(q, rat(1));
    for (Rat t : {rat(1, 8), rat(1, 4), rat(2, 5)}) {
      // tangential motion at fixed depth contracts
      CHECK(dist(d.collar_point(pb, t), d.collar_point(qb, t)) <= dist(pb, qb) + 1e-9);
      // radial motion stretches at most by the collar factor
      CHECK(dist(d.collar_point(pb, rat(0)), d.collar_point(pb, t)) <=
            lip * to_double(t) + 1e-9);
    }
  }
}

TEST_CASE("offsets are nested") {
  OffsetDomain d = OffsetDomain::ngon_disc(12, rat(2), Vec{rat(0), rat(0)});
  std::uint64_t st = 99;
  for (int trial = 0; trial < 100; ++trial) {
    Vec p = d.sample_interior(st);
    if (d.in_offset(p, rat(1, 2))) CHECK(d.in_offset(p, rat(1, 4)));
    if (d.in_offset(p, rat(1, 4))) CHECK(d.in_offset(p, rat(0)));
  }
}

TEST_CASE("cube offset volume matches the Monte Carlo oracle") {
  OffsetDomain d = OffsetDomain::box(Vec{rat(0), rat(0), rat(0)}, Vec{rat(1), rat(1), rat(1)});
  // radial offset r=0.1 with rho0=1/2 shrinks the cube by factor 0.8 about
  // its center: volume 0.512
  std::uint64_t st = 2024;
  int inside = 0, total = 100000;
  for (int i = 0; i < total; ++i) {
    Vec p{unit_rat(st), unit_rat(st), unit_rat(st)};
    if (d.in_offset(p, rat(1, 10))) ++inside;
  }
  double vol = double(inside) / total;
  CHECK(vol == doctest::Approx(0.512).epsilon(0.01));
}

TEST_CASE("segment domain gauge") {
  OffsetDomain d = OffsetDomain::segment(Vec{rat(0), rat(0)}, Vec{rat(4), rat(0)});
  CHECK(d.gauge(Vec{rat(2), rat(0)}) == rat(0));
  CHECK(d.gauge(Vec{rat(0), rat(0)}) == rat(1));
  CHECK(d.gauge(Vec{rat(4), rat(0)}) == rat(1));
  CHECK(d.gauge(Vec{rat(3), rat(0)}) == rat(1, 2));
}

TEST_CASE("boundary squared distance is exact") {
  OffsetDomain d = OffsetDomain::box(Vec{rat(0), rat(0)}, Vec{rat(2), rat(2)});
  CHECK(d.boundary_dist2(Vec{rat(1), rat(1)}) == rat(1));
  CHECK(d.boundary_dist2(Vec{rat(1, 2), rat(1)}) == rat(1, 4));

  OffsetDomain disc = OffsetDomain::ngon_disc(8, rat(1), Vec{rat(0), rat(0)});
  Rat d2 = disc.boundary_dist2(Vec{rat(0), rat(0)});
  // center-to-edge distance of the octagon: cos(pi/8) ~ 0.924
  CHECK(std::sqrt(to_double(d2)) == doctest::Approx(0.9238795).epsilon(1e-4));
}

TEST_CASE("point to segment and triangle distances") {
  CHECK(point_seg_dist2(Vec{rat(0), rat(1)}, Vec{rat(-1), rat(0)}, Vec{rat(1), rat(0)}) == rat(1));
  CHECK(point_seg_dist2(Vec{rat(3), rat(0)}, Vec{rat(-1), rat(0)}, Vec{rat(1), rat(0)}) == rat(4));
  Simplex tri{Vec{rat(0), rat(0), rat(0)}, Vec{rat(2), rat(0), rat(0)}, Vec{rat(0), rat(2), rat(0)}};
  CHECK(point_tri_dist2(Vec{rat(1, 2), rat(1, 2), rat(3)}, tri) == rat(9));
  CHECK(point_tri_dist2(Vec{rat(-1), rat(0), rat(0)}, tri) == rat(1));
}

TEST_CASE("rat_sqrt_lower is a valid lower bound") {
  for (long v : {2L, 3L, 5L, 10L, 101L}) {
    Rat r = rat_sqrt_lower(rat(v));
    CHECK(r * r <= rat(v));
    CHECK(to_double(r) == doctest::Approx(std::sqrt(double(v))).epsilon(1e-6));
  }
  CHECK(rat_sqrt_lower(rat(4)) * rat_sqrt_lower(rat(4)) <= rat(4));
}

TEST_CASE("sphere_point_near lands exactly on the sphere") {
  Vec c{rat(1), rat(2), rat(3)};
  for (auto dir : {std::array<double, 3>{1, 0, 0}, {0.3, -0.5, 0.8}, {-1, -1, 1}}) {
    Vec q = sphere_point_near(c, rat(5, 2), dir);
    CHECK(dist2(q, c) == rat(25, 4));
  }
}

TEST_CASE("interior samples are inside and deterministic") {
  OffsetDomain d = OffsetDomain::ngon_disc(12, rat(1), Vec{rat(0), rat(0)});
  std::uint64_t s1 = 42, s2 = 42;
  for (int i = 0; i < 30; ++i) {
    Vec p = d.sample_interior(s1);
    CHECK(d.contains(p));
    CHECK(p == d.sample_interior(s2));
  }
}
