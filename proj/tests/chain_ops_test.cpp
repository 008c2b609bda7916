#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cyclecraft/chain_ops.hpp"

using namespace cyclecraft;

namespace {

Vec pt2(const Rat& x, const Rat& y) { return Vec{x, y}; }

// zigzag polyline confined to the collar band of the unit-square domain
PolyChain collar_zigzag(double target_mass) {
  // runs along the right edge with x alternating 0.95 / 0.97 and strictly
  // increasing y, so no two segments coincide and nothing cancels mod 2
  PolyChain c;
  c.dim = 1;
  double len = 0;
  int i = 0;
  Vec prev = pt2(rat(95, 100), rat(3, 10));
  while (len < target_mass) {
    Rat x = (i % 2 == 0) ? rat(97, 100) : rat(95, 100);
    Rat y = rat(3, 10) + Rat(i + 1, 2000);
    Vec next = pt2(x, y);
    c.simplices.push_back({prev, next});
    len += dist(prev, next);
    prev = next;
    ++i;
  }
  return c;
}

}  // namespace

TEST_CASE("offset restriction keeps the inner part") {
  OffsetDomain d = OffsetDomain::box(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)));
  PolyChain c;
  c.dim = 1;
  c.simplices = {{pt2(rat(45, 100), rat(1, 2)), pt2(rat(55, 100), rat(1, 2))},   // center
                 {pt2(rat(98, 100), rat(1, 2)), pt2(rat(99, 100), rat(1, 2))}};  // near edge
  PolyChain inner = offset_restrict(c, d, rat(1, 10));
  CHECK(inner.size() == 1);
  CHECK(inner.simplices[0][0][0] == rat(45, 100));
}

TEST_CASE("gauge crossings of a straight segment are exact") {
  OffsetDomain d = OffsetDomain::box(pt2(rat(0), rat(0)), pt2(rat(2), rat(2)));
  // horizontal segment from the center to the right edge crosses gauge 1/2
  // (the box scaled by 1/2 about (1,1)) exactly once, at x = 3/2
  auto params = gauge_crossings(pt2(rat(1), rat(1)), pt2(rat(2), rat(1)), d, rat(1, 2));
  REQUIRE(params.size() == 1);
  CHECK(params[0] == rat(1, 2));

  // a chord passing through the scaled box crosses twice
  auto twice = gauge_crossings(pt2(rat(1, 4), rat(1)), pt2(rat(7, 4), rat(1)), d, rat(1, 2));
  CHECK(twice.size() == 2);
}

TEST_CASE("split_at_gauge produces non-straddling exact pieces") {
  OffsetDomain d = OffsetDomain::ngon_disc(16, rat(1), pt2(rat(0), rat(0)));
  PolyChain seg = PolyChain::segment(pt2(rat(-9, 10), rat(1, 100)), pt2(rat(9, 10), rat(1, 100)));
  Rat s = rat(1, 2);
  PolyChain split = split_at_gauge(seg, d, s);
  CHECK(split.size() == 3);
  CHECK(split.mass() == doctest::Approx(seg.mass()));
  CHECK(split.boundary().equals(seg.boundary()));
  int inside = 0;
  for (const auto& piece : split.simplices) {
    // endpoints may touch the surface but interiors must not cross it
    Rat g = d.gauge(simplex_barycenter(piece));
    CHECK(g != s);
    if (g < s) ++inside;
  }
  CHECK(inside == 1);
}

TEST_CASE("slice of a chain already inside the offset has zero new boundary") {
  OffsetDomain d = OffsetDomain::box(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)));
  PolyChain c = PolyChain::segment(pt2(rat(40, 100), rat(1, 2)), pt2(rat(60, 100), rat(1, 2)));
  Config cfg;
  SliceResult res = coarea_slice(c, d, rat(1, 5), cfg);
  CHECK(res.new_boundary_mass == 0.0);
  CHECK(res.within_bound);
  CHECK(res.inside.mass() == doctest::Approx(c.mass()));
}

TEST_CASE("single collar crossing yields one boundary point within the bound") {
  OffsetDomain d = OffsetDomain::ngon_disc(32, rat(1), pt2(rat(0), rat(0)));
  // segment from deep inside to the boundary vertex: crosses every slice once
  Vec b = d.loop[3];
  PolyChain seg = PolyChain::segment(vscale(rat(1, 10), b), b);
  Config cfg;
  SliceResult res = coarea_slice(seg, d, rat(1, 5), cfg);
  CHECK(res.new_boundary.size() == 1);
  CHECK(res.new_boundary_mass == doctest::Approx(1.0));
  // collar length of the segment is ~0.2, so the certified bound is ~2
  CHECK(res.within_bound);
  CHECK(res.certified_bound >= 1.0);
  CHECK(res.certified_bound <= 3.0);
  // the inside part ends exactly on the slice surface
  PolyChain bd = res.inside.boundary();
  bool on_surface = false;
  Rat s = 1 - res.r / d.rho0;
  for (const auto& p : bd.simplices)
    if (d.gauge(p[0]) == s) on_surface = true;
  CHECK(on_surface);
}

TEST_CASE("pigeonhole bound on a mass-heavy collar chain") {
  OffsetDomain d = OffsetDomain::box(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)));
  PolyChain zig = collar_zigzag(10.0);
  // a radial strand spanning the whole collar band, so every candidate depth
  // cuts the chain at least once and the chosen slice is a genuine minimum
  zig.simplices.push_back({pt2(rat(9, 10), rat(3, 4)), pt2(rat(1), rat(3, 4))});
  double zmass = zig.mass();
  CHECK(zmass >= 10.0);
  Config cfg;
  cfg.slice_candidate_cap = 100;
  SliceResult res = coarea_slice(zig, d, rat(1, 10), cfg);
  CHECK(res.candidates == 100);
  CHECK(res.new_boundary_mass >= 1.0);
  // certified scale: 2 * collar-mass / eps = 200-ish
  CHECK(res.within_bound);
  CHECK(res.new_boundary_mass <= 2.0 * zmass / 0.1 + 1e-9);
  CHECK(res.candidates >= 8);

  // oracle: recompute the boundary created at the chosen depth independently
  Rat s = 1 - res.r / d.rho0;
  PolyChain split = split_at_gauge(zig, d, s, cfg.subdivide_depth);
  PolyChain inside = split.restrict_to([&](const Vec& b) { return d.gauge(b) <= s; });
  PolyChain created = inside.boundary().restrict_to([&](const Vec& b) { return d.gauge(b) == s; });
  CHECK(created.mass() == doctest::Approx(res.new_boundary_mass));
}

TEST_CASE("forbidden intervals shift the slice and can exhaust it") {
  OffsetDomain d = OffsetDomain::box(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)));
  PolyChain seg = PolyChain::segment(pt2(rat(1, 2), rat(1, 2)), pt2(rat(1), rat(1, 2)));
  Config cfg;
  SliceResult free = coarea_slice(seg, d, rat(1, 5), cfg);
  std::vector<std::pair<Rat, Rat>> block{{free.r - rat(1, 1000), free.r + rat(1, 1000)}};
  SliceResult moved = coarea_slice(seg, d, rat(1, 5), cfg, block);
  CHECK(moved.r != free.r);
  CHECK_THROWS(coarea_slice(seg, d, rat(1, 5), cfg, {{rat(0), rat(1)}}));
  CHECK_THROWS(coarea_slice(seg, d, rat(0), cfg));
  CHECK_THROWS(coarea_slice(seg, d, rat(2), cfg));
}

TEST_CASE("offset nesting of restricted supports") {
  OffsetDomain d = OffsetDomain::ngon_disc(12, rat(1), pt2(rat(0), rat(0)));
  PolyChain c;
  c.dim = 1;
  std::uint64_t st = 5;
  for (int i = 0; i < 20; ++i) {
    Vec a = d.sample_interior(st), b = d.sample_interior(st);
    if (a != b) c.simplices.push_back({a, b});
  }
  PolyChain shallow = offset_restrict(c, d, rat(1, 10));
  PolyChain deep = offset_restrict(c, d, rat(1, 4));
  // deeper offsets keep a subset of the simplices
  for (const auto& s : deep.simplices) {
    bool found = false;
    for (const auto& t : shallow.simplices)
      if (t == s) found = true;
    CHECK(found);
  }
}

TEST_CASE("relative mass ignores boundary-supported pieces") {
  OffsetDomain d = OffsetDomain::box(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)));
  PolyChain c;
  c.dim = 1;
  c.simplices = {{pt2(rat(0), rat(1, 4)), pt2(rat(0), rat(3, 4))},       // on the left edge
                 {pt2(rat(1, 4), rat(1, 2)), pt2(rat(3, 4), rat(1, 2))}};  // interior
  CHECK(mass_relative(c, d) == doctest::Approx(0.5));
  CHECK(c.mass() == doctest::Approx(1.0));
}
