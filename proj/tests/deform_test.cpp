#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cyclecraft/deform.hpp"

using namespace cyclecraft;

namespace {

Vec pt2(const Rat& x, const Rat& y) { return Vec{x, y}; }
Vec pt3(const Rat& x, const Rat& y, const Rat& z) { return Vec{x, y, z}; }

}  // namespace

TEST_CASE("chains already in the skeleton are fixed points") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(3), rat(3)), {3, 3});
  // an L of two grid edges
  PolyChain z;
  z.dim = 1;
  z.simplices = {{pt2(rat(1), rat(1)), pt2(rat(2), rat(1))},
                 {pt2(rat(2), rat(1)), pt2(rat(2), rat(2))}};
  Config cfg;
  DeformResult res = federer_fleming_deform(z, g, cfg, 1);
  CHECK(res.deformation.empty());
  CHECK(res.residual.empty());
  CHECK(res.cellular.support_size() == 2);
  CHECK(res.cellular.to_poly().equals(z.reduced()));
  CHECK(res.cellular_mass == doctest::Approx(2.0));
}

TEST_CASE("diagonal of one cell becomes a two-edge staircase") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)), {1, 1});
  PolyChain z = PolyChain::segment(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)));
  Config cfg;
  DeformResult res = federer_fleming_deform(z, g, cfg, 7);
  CHECK(res.cellular_mass == doctest::Approx(2.0));
  CHECK(res.cellular.support_size() == 2);
  // tau sweeps one of the two triangles cut off by the diagonal
  CHECK(res.deformation_mass == doctest::Approx(0.5));
  CHECK(res.residual.empty());
  // exact combinatorial identity: boundary(tau) = z + P(z)
  CHECK(res.deformation.boundary().equals(z.plus(res.cellular.to_poly())));
}

TEST_CASE("fractional loop deforms to a cellular cycle with empty residual") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(4), rat(4)), {4, 4});
  PolyChain z;
  z.dim = 1;
  std::vector<Vec> v{pt2(rat(1, 2), rat(3, 4)), pt2(rat(13, 4), rat(5, 4)),
                     pt2(rat(7, 2), rat(10, 3)), pt2(rat(5, 4), rat(11, 4))};
  for (size_t i = 0; i < v.size(); ++i) z.simplices.push_back({v[i], v[(i + 1) % v.size()]});
  Config cfg;
  DeformResult res = federer_fleming_deform(z, g, cfg, 3);
  CHECK(res.residual.empty());
  CHECK(res.cellular.boundary().empty());  // image of a cycle is a cycle
  CHECK(res.cellular.dim == 1);
  CHECK(res.deformation.boundary().equals(z.plus(res.cellular.to_poly())));
}

TEST_CASE("open curves keep their boundary on lattice points") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(2), rat(2)), {2, 2});
  // endpoints at lattice vertices, interior off-lattice
  PolyChain z;
  z.dim = 1;
  z.simplices = {{pt2(rat(0), rat(0)), pt2(rat(3, 4), rat(5, 4))},
                 {pt2(rat(3, 4), rat(5, 4)), pt2(rat(2), rat(1))}};
  Config cfg;
  DeformResult res = federer_fleming_deform(z, g, cfg, 11);
  CHECK(res.residual.empty());
  CHECK(res.cellular.boundary().to_poly().equals(z.boundary()));
}

TEST_CASE("point chains round to lattice vertices") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(2), rat(2)), {2, 2});
  PolyChain z = PolyChain::points({pt2(rat(1, 3), rat(1, 5)), pt2(rat(3, 2), rat(7, 4))});
  Config cfg;
  DeformResult res = federer_fleming_deform(z, g, cfg, 5);
  CHECK(res.residual.empty());
  CHECK(res.cellular.support_size() == 2);
  CHECK(res.cellular.dim == 0);
  CHECK(res.deformation.dim == 1);
  // parity of points is preserved
  CHECK(res.cellular.to_poly().size() == 2);
}

TEST_CASE("1-cycles in the 3-cube deform exactly") {
  auto g = GridComplex::box(pt3(rat(0), rat(0), rat(0)), pt3(rat(3), rat(3), rat(3)), {3, 3, 3});
  PolyChain z;
  z.dim = 1;
  std::vector<Vec> v{pt3(rat(1, 2), rat(1, 2), rat(1, 2)), pt3(rat(5, 2), rat(3, 4), rat(4, 3)),
                     pt3(rat(2), rat(5, 2), rat(5, 2)), pt3(rat(2, 3), rat(2), rat(3, 2))};
  for (size_t i = 0; i < v.size(); ++i) z.simplices.push_back({v[i], v[(i + 1) % v.size()]});
  Config cfg;
  DeformResult res = federer_fleming_deform(z, g, cfg, 21);
  CHECK(res.residual.empty());
  CHECK(res.cellular.boundary().empty());
  CHECK(res.deformation.boundary().equals(z.plus(res.cellular.to_poly())));
  CHECK(res.cellular_mass > 0.0);
}

TEST_CASE("mass accounting matches the returned chains") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(2), rat(2)), {2, 2});
  PolyChain z = PolyChain::segment(pt2(rat(1, 4), rat(1, 3)), pt2(rat(7, 4), rat(5, 3)));
  Config cfg;
  DeformResult res = federer_fleming_deform(z, g, cfg, 2);
  CHECK(res.input_mass == doctest::Approx(z.mass()));
  CHECK(res.cellular_mass == doctest::Approx(res.cellular.mass()));
  CHECK(res.deformation_mass == doctest::Approx(res.deformation.mass()));
}

TEST_CASE("chains outside the box are rejected") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(1), rat(1)), {2, 2});
  PolyChain z = PolyChain::segment(pt2(rat(0), rat(0)), pt2(rat(3), rat(3)));
  Config cfg;
  CHECK_THROWS_WITH_AS(federer_fleming_deform(z, g, cfg, 1), "chain leaves the grid box",
                       std::invalid_argument);
}

TEST_CASE("deterministic for a fixed seed") {
  auto g = GridComplex::box(pt2(rat(0), rat(0)), pt2(rat(4), rat(4)), {4, 4});
  PolyChain z;
  z.dim = 1;
  std::vector<Vec> v{pt2(rat(1, 2), rat(3, 4)), pt2(rat(13, 4), rat(5, 4)), pt2(rat(2), rat(3))};
  for (size_t i = 0; i < v.size(); ++i) z.simplices.push_back({v[i], v[(i + 1) % v.size()]});
  Config cfg;
  DeformResult a = federer_fleming_deform(z, g, cfg, 9);
  DeformResult b = federer_fleming_deform(z, g, cfg, 9);
  CHECK(a.cellular.bits == b.cellular.bits);
  CHECK(a.deformation.equals(b.deformation));
}
