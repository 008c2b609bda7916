#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cyclecraft/rational.hpp"

using namespace cyclecraft;

TEST_CASE("vector arithmetic is exact") {
  Vec a{rat(1, 3), rat(2, 7)};
  Vec b{rat(1, 6), rat(3, 14)};
  CHECK(vadd(a, b) == Vec{rat(1, 2), rat(1, 2)});
  CHECK(vsub(a, b) == Vec{rat(1, 6), rat(1, 14)});
  CHECK(vscale(rat(6), a) == Vec{rat(2), rat(12, 7)});
  CHECK(vlerp(a, b, rat(0)) == a);
  CHECK(vlerp(a, b, rat(1)) == b);
  CHECK(vdot(Vec{rat(3), rat(4)}, Vec{rat(3), rat(4)}) == rat(25));
  CHECK(vnorm2(Vec{rat(3), rat(4)}) == rat(25));
  CHECK(dist2(Vec{rat(0), rat(0)}, Vec{rat(3), rat(4)}) == rat(25));
  CHECK(vnorm(Vec{rat(3), rat(4)}) == doctest::Approx(5.0));
}

TEST_CASE("rational string round trip") {
  CHECK(rat_to_string(rat(-7, 3)) == "-7/3");
  CHECK(rat_to_string(rat(4, 2)) == "2");
  CHECK(rat_from_string("22/7") == rat(22, 7));
  CHECK(rat_from_string("-5") == rat(-5));
  CHECK(rat_from_string("0.125") == rat(1, 8));
  for (long n = -20; n <= 20; ++n)
    for (long d = 1; d <= 9; ++d) {
      Rat r(n, d);
      CHECK(rat_from_string(rat_to_string(r)) == r);
    }
}

TEST_CASE("rat_approx recovers simple fractions and stays close") {
  CHECK(rat_approx(0.5) == rat(1, 2));
  CHECK(rat_approx(1.0 / 3.0) == rat(1, 3));
  double x = std::sqrt(2.0);
  Rat r = rat_approx(x, 1 << 20);
  CHECK(std::abs(to_double(r) - x) < 1e-5);
  CHECK(denominator(r) <= (1 << 20));
}

TEST_CASE("row reduction, rank, determinant") {
  Mat m{{rat(1), rat(2)}, {rat(2), rat(4)}};
  CHECK(rank(m) == 1);
  CHECK(det(m) == rat(0));
  Mat id{{rat(1), rat(0)}, {rat(0), rat(1)}};
  CHECK(rank(id) == 2);
  CHECK(det(id) == rat(1));
  Mat m3{{rat(2), rat(0), rat(1)}, {rat(0), rat(3), rat(0)}, {rat(0), rat(0), rat(5)}};
  CHECK(det(m3) == rat(30));
}

TEST_CASE("solve returns exact solutions and detects inconsistency") {
  Mat a{{rat(2), rat(1)}, {rat(1), rat(3)}};
  auto x = solve(a, {rat(5), rat(10)});
  REQUIRE(x.has_value());
  CHECK((*x)[0] == rat(1));
  CHECK((*x)[1] == rat(3));

  Mat sing{{rat(1), rat(1)}, {rat(2), rat(2)}};
  CHECK_FALSE(solve(sing, {rat(1), rat(3)}).has_value());
  auto y = solve(sing, {rat(1), rat(2)});  // consistent underdetermined
  REQUIRE(y.has_value());
  CHECK((*y)[0] + (*y)[1] == rat(1));
}

TEST_CASE("nullspace vectors annihilate the matrix") {
  Mat a{{rat(1), rat(2), rat(3)}, {rat(2), rat(4), rat(6)}};
  auto ns = nullspace(a);
  CHECK(ns.size() == 2);
  for (const auto& v : ns) {
    for (const auto& row : a) {
      Rat s = 0;
      for (size_t i = 0; i < row.size(); ++i) s += row[i] * v[i];
      CHECK(s == rat(0));
    }
  }
}

TEST_CASE("gram determinant gives exact squared simplex volumes") {
  // oracle: area of the (0,0),(3,0),(0,4) triangle is 6, so gram = (2! * 6)^2
  std::vector<Vec> tri{{rat(0), rat(0)}, {rat(3), rat(0)}, {rat(0), rat(4)}};
  CHECK(gram_det(tri) == rat(144));
  CHECK(simplex_volume(tri) == doctest::Approx(6.0));

  // a segment: gram = squared length
  std::vector<Vec> seg{{rat(0), rat(0)}, {rat(3), rat(4)}};
  CHECK(gram_det(seg) == rat(25));
  CHECK(simplex_volume(seg) == doctest::Approx(5.0));

  // unit right tetrahedron: volume 1/6
  std::vector<Vec> tet{{rat(0), rat(0), rat(0)},
                       {rat(1), rat(0), rat(0)},
                       {rat(0), rat(1), rat(0)},
                       {rat(0), rat(0), rat(1)}};
  CHECK(simplex_volume(tet) == doctest::Approx(1.0 / 6.0));

  // degenerate: collinear points
  std::vector<Vec> degen{{rat(0), rat(0)}, {rat(1), rat(1)}, {rat(2), rat(2)}};
  CHECK(gram_det(degen) == rat(0));
}

TEST_CASE("gram determinant is embedding invariant") {
  // same triangle embedded in 3-D, translated: area unchanged
  std::vector<Vec> tri{{rat(1), rat(1), rat(2)}, {rat(4), rat(1), rat(2)}, {rat(1), rat(5), rat(2)}};
  CHECK(gram_det(tri) == rat(144));
}

TEST_CASE("factorial_sq") {
  CHECK(factorial_sq(0) == rat(1));
  CHECK(factorial_sq(1) == rat(1));
  CHECK(factorial_sq(2) == rat(4));
  CHECK(factorial_sq(3) == rat(36));
}
