#pragma once
// Cubical parameter complexes on the unit m-cube with power-of-3 refinement,
// plus the interpolation-support maps used to push parametrized families from
// one refinement level to another:
//  * phi/psi    -- scalar ramps that collapse the outer thirds of a unit
//                  interval onto its endpoints / clamp into the middle third
//  * xi/theta   -- their per-axis extensions at a given level
//  * center     -- the middle region of a cell that xi stretches onto the
//                  whole cell
// Everything is exact rational / integer arithmetic.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cyclecraft/rational.hpp"

namespace cyclecraft {

// One axis factor of a product cell at a fixed level: either the lattice
// vertex [index] or the interval [index, index + 1], in units of 3^-level.
struct AxisCell {
  bool interval = false;
  long long index = 0;

  bool operator==(const AxisCell& o) const {
    return interval == o.interval && index == o.index;
  }
  bool operator<(const AxisCell& o) const {
    if (interval != o.interval) return interval < o.interval;
    return index < o.index;
  }
};

struct ParamCell {
  std::vector<AxisCell> axes;

  int dim() const;
  bool operator==(const ParamCell& o) const { return axes == o.axes; }
  bool operator<(const ParamCell& o) const { return axes < o.axes; }
};

// 3^e as an exact integer / 3^-e as an exact rational
Int pow3(int e);
Rat unit3(int e);

struct CubicalParamComplex {
  int m = 0;  // ambient cube dimension
  int j = 0;  // subdivision level: axis units are 3^-j
  std::set<ParamCell> cells;

  static CubicalParamComplex empty(int m, int j);
  // every cell of the level-j complex on the unit cube with dim <= p
  static CubicalParamComplex full(int m, int j, int p);

  void add_cell(const ParamCell& c);  // inserts c together with all its faces
  bool has(const ParamCell& c) const { return cells.count(c) > 0; }
  int count(int q) const;
  int top_dim() const;  // maximal cell dimension present (-1 when empty)
  std::vector<ParamCell> cells_of_dim(int q) const;
  bool closed_under_faces() const;

  Rat side() const { return unit3(j); }
  // exact coordinates of a vertex cell
  Vec vertex_point(const ParamCell& v) const;

  std::string to_json() const;
  static CubicalParamComplex from_json(const std::string& s);
};

// codimension-1 faces (two per interval axis)
std::vector<ParamCell> cell_faces(const ParamCell& c);
// the coordinatewise-minimal vertex of a cell
ParamCell base_vertex(const ParamCell& c);
// support membership / containment, exact at mixed levels
bool cell_contains_point(const ParamCell& c, int level, const Vec& x);
bool cell_inside(const ParamCell& fine, int fine_level, const ParamCell& coarse,
                 int coarse_level);
// smallest cell of X whose support contains x, if any
std::optional<ParamCell> carrier(const CubicalParamComplex& X, const Vec& x);

// subcomplex of the level-i complex covering exactly the support of X
CubicalParamComplex refine(const CubicalParamComplex& X, int i);

// scalar ramps on [0,1]
Rat phi_map(const Rat& t);
Rat psi_map(const Rat& t);
// per-axis extensions at level q: lattice vertices stay fixed, each cell is
// mapped onto itself through its unit chart
Vec xi_map(const Vec& x, int q);
Vec theta_map(const Vec& x, int q);

// membership in the center region of a level-q cell: Chebyshev distance to
// the relative boundary of the cell is >= 3^-(q+1).  xi maps this region onto
// the whole cell and theta fixes it pointwise.
bool center_contains(const ParamCell& c, int level, const Vec& x);

}  // namespace cyclecraft
