#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>

#include "cyclecraft/param.hpp"

using namespace cyclecraft;

namespace {

std::uint64_t rng_state = 7;
std::uint64_t next_u64() {
  std::uint64_t z = (rng_state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// strictly interior rationals that can never hit an exact third
Rat rand_unit() { return Rat(long(next_u64() % 999) + 1, 1001); }

ParamCell cell2(AxisCell a, AxisCell b) {
  ParamCell c;
  c.axes = {a, b};
  return c;
}

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

}  // namespace

TEST_CASE("full complex has the predicted face counts and closure") {
  for (int m = 1; m <= 4; ++m) {
    for (int p = 0; p <= std::min(m, 3); ++p) {
      CubicalParamComplex X = CubicalParamComplex::full(m, 0, p);
      CHECK(X.closed_under_faces());
      CHECK(X.top_dim() == p);
      for (int q = 0; q <= p; ++q) {
        // choose q interval axes, the rest are one of the 2 vertices
        long long expect = binom(m, q) * (1LL << (m - q));
        CHECK(X.count(q) == expect);
      }
    }
  }
}

TEST_CASE("each cell has two faces per interval axis") {
  ParamCell sq = cell2({true, 0}, {true, 0});
  CHECK(cell_faces(sq).size() == 4);
  ParamCell edge = cell2({true, 0}, {false, 1});
  CHECK(cell_faces(edge).size() == 2);
  ParamCell v = cell2({false, 0}, {false, 1});
  CHECK(cell_faces(v).empty());
  CHECK(sq.dim() == 2);
  CHECK(edge.dim() == 1);
  CHECK(v.dim() == 0);
}

TEST_CASE("refining to the same level is the identity") {
  CubicalParamComplex X = CubicalParamComplex::full(2, 1, 2);
  CubicalParamComplex Y = refine(X, 1);
  CHECK(Y.cells == X.cells);
  CHECK(Y.j == X.j);
  CHECK_THROWS(refine(X, 0));
}

TEST_CASE("the unit interval refines into 3 edges and 4 vertices") {
  CubicalParamComplex I10 = CubicalParamComplex::full(1, 0, 1);
  CHECK(I10.count(1) == 1);
  CHECK(I10.count(0) == 2);
  CubicalParamComplex I11 = refine(I10, 1);
  CHECK(I11.count(1) == 3);
  CHECK(I11.count(0) == 4);
  CHECK(I11.closed_under_faces());
}

TEST_CASE("one square cell refines into 9 squares, 24 edges, 16 vertices") {
  CubicalParamComplex X = CubicalParamComplex::empty(2, 0);
  X.add_cell(cell2({true, 0}, {true, 0}));
  CHECK(X.count(2) == 1);
  CHECK(X.count(1) == 4);
  CHECK(X.count(0) == 4);
  CubicalParamComplex Y = refine(X, 1);
  CHECK(Y.count(2) == 9);
  CHECK(Y.count(1) == 24);
  CHECK(Y.count(0) == 16);
  CHECK(Y.closed_under_faces());
}

TEST_CASE("refinement puts exactly 3^(q(i-j)) sub-q-cells in every q-cell") {
  for (int m = 1; m <= 4; ++m) {
    for (int p = 1; p <= std::min(m, 3); ++p) {
      CubicalParamComplex X = CubicalParamComplex::full(m, 0, p);
      for (int i = 1; i <= (m <= 2 ? 2 : 1); ++i) {
        CubicalParamComplex Y = refine(X, i);
        CHECK(Y.closed_under_faces());
        for (const auto& c : X.cells) {
          int q = c.dim();
          long long found = 0;
          for (const auto& f : Y.cells)
            if (f.dim() == q && cell_inside(f, i, c, 0)) ++found;
          long long expect = 1;
          for (int t = 0; t < q * i; ++t) expect *= 3;
          CHECK(found == expect);
        }
        // vertex set of the refinement contains the original vertex set
        for (const auto& v : X.cells_of_dim(0)) {
          ParamCell fine = v;
          for (auto& a : fine.axes) a.index *= (long long)pow3(i);
          CHECK(Y.has(fine));
        }
      }
    }
  }
}

TEST_CASE("base vertex is the coordinatewise-minimal corner") {
  ParamCell v = cell2({false, 2}, {false, 1});
  CHECK(base_vertex(v) == v);
  ParamCell edge = cell2({true, 0}, {false, 0});
  CHECK(base_vertex(edge) == cell2({false, 0}, {false, 0}));
  ParamCell sq = cell2({true, 1}, {true, 2});
  CHECK(base_vertex(sq) == cell2({false, 1}, {false, 2}));
}

TEST_CASE("scalar ramps take their stated values") {
  CHECK(phi_map(Rat(1, 2)) == Rat(1, 2));
  CHECK(phi_map(Rat(1, 5)) == 0);
  CHECK(psi_map(Rat(1, 5)) == Rat(1, 3));
  CHECK(phi_map(0) == 0);
  CHECK(phi_map(1) == 1);
  CHECK(phi_map(Rat(1, 3)) == 0);
  CHECK(phi_map(Rat(2, 3)) == 1);
  CHECK(psi_map(Rat(1, 2)) == Rat(1, 2));
  CHECK(psi_map(1) == Rat(2, 3));
  // phi is monotone and continuous at the knots; psi clamps into the middle
  CHECK(phi_map(psi_map(Rat(9, 10))) == phi_map(Rat(9, 10)));
  CHECK(phi_map(psi_map(Rat(1, 10))) == phi_map(Rat(1, 10)));
}

TEST_CASE("xi fixes every lattice vertex of the refined complex") {
  CubicalParamComplex X = refine(CubicalParamComplex::full(2, 0, 2), 1);
  for (const auto& v : X.cells_of_dim(0)) {
    Vec x = X.vertex_point(v);
    CHECK(xi_map(x, 1) == x);
    // the chart of a lattice vertex is the vertex itself, so theta fixes it
    CHECK(theta_map(x, 1) == x);
  }
}

TEST_CASE("xi maps the center of a cell onto the cell") {
  // level-0 edge [0,1] x {0}: center is [1/3, 2/3], xi stretches it back
  Vec lo{Rat(1, 3), Rat(0)};
  Vec hi{Rat(2, 3), Rat(0)};
  CHECK(xi_map(lo, 0) == Vec{Rat(0), Rat(0)});
  CHECK(xi_map(hi, 0) == Vec{Rat(1), Rat(0)});
  Vec mid{Rat(1, 2), Rat(1, 2)};
  CHECK(xi_map(mid, 0) == mid);
}

TEST_CASE("theta is the identity exactly on the center region") {
  ParamCell sq = cell2({true, 0}, {true, 0});
  for (int t = 0; t < 100; ++t) {
    Vec x{rand_unit(), rand_unit()};
    bool inside = center_contains(sq, 0, x);
    bool fixed = theta_map(x, 0) == x;
    CHECK(inside == fixed);
  }
}

TEST_CASE("xi after theta equals xi on a 100-point sample") {
  for (int t = 0; t < 100; ++t) {
    Vec x{rand_unit(), rand_unit(), rand_unit()};
    for (int q = 0; q <= 2; ++q)
      CHECK(xi_map(theta_map(x, q), q) == xi_map(x, q));
  }
}

TEST_CASE("center membership is the closed Chebyshev condition") {
  ParamCell sq = cell2({true, 0}, {true, 0});
  CHECK(center_contains(sq, 0, Vec{Rat(1, 2), Rat(1, 2)}));
  CHECK_FALSE(center_contains(sq, 0, Vec{Rat(0), Rat(1, 2)}));
  // distance exactly 3^-(q+1) from the boundary is inside (>= is closed)
  CHECK(center_contains(sq, 0, Vec{Rat(1, 3), Rat(1, 2)}));
  CHECK_FALSE(center_contains(sq, 0, Vec{Rat(1, 3) - Rat(1, 100), Rat(1, 2)}));
  // at level 1 the margin shrinks to 1/9
  ParamCell sq1 = cell2({true, 0}, {true, 0});
  CHECK(center_contains(sq1, 1, Vec{Rat(1, 9), Rat(1, 6)}));
  CHECK_FALSE(center_contains(sq1, 1, Vec{Rat(1, 10), Rat(1, 6)}));
  // a vertex cell is its own center
  ParamCell v = cell2({false, 1}, {false, 0});
  CHECK(center_contains(v, 0, Vec{Rat(1), Rat(0)}));
  CHECK_FALSE(center_contains(v, 0, Vec{Rat(1, 2), Rat(0)}));
}

TEST_CASE("carrier finds the smallest containing cell") {
  CubicalParamComplex X = CubicalParamComplex::full(2, 0, 2);
  auto c = carrier(X, Vec{Rat(1, 2), Rat(1, 2)});
  REQUIRE(c.has_value());
  CHECK(c->dim() == 2);
  auto e = carrier(X, Vec{Rat(1, 2), Rat(0)});
  REQUIRE(e.has_value());
  CHECK(e->dim() == 1);
  auto v = carrier(X, Vec{Rat(1), Rat(1)});
  REQUIRE(v.has_value());
  CHECK(v->dim() == 0);
  CHECK_FALSE(carrier(X, Vec{Rat(2), Rat(0)}).has_value());
}

TEST_CASE("json roundtrip preserves the complex") {
  CubicalParamComplex X = refine(CubicalParamComplex::full(2, 0, 2), 1);
  CubicalParamComplex Y = CubicalParamComplex::from_json(X.to_json());
  CHECK(Y.m == X.m);
  CHECK(Y.j == X.j);
  CHECK(Y.cells == X.cells);
}
