#pragma once

// Axis-aligned grid complexes on a box (optionally periodic per axis, which
// gives flat tori) with bitset chains.  Cells are addressed by an extent
// mask (which axes the cell spans) plus per-axis lattice positions.

#include <boost/dynamic_bitset.hpp>
#include <cstdint>
#include <memory>
#include <vector>

#include "cyclecraft/geometry.hpp"
#include "cyclecraft/rational.hpp"

namespace cyclecraft {

struct GridCell {
  unsigned mask = 0;          // bit i set: cell spans axis i
  std::vector<int> pos;       // anchor lattice position per axis
};

struct GridComplex {
  int n = 0;
  std::vector<int> res;        // cells per axis
  Vec lo, hi;                  // box corners
  std::vector<char> periodic;  // wrap flag per axis

  static std::shared_ptr<GridComplex> box(const Vec& lo, const Vec& hi,
                                          const std::vector<int>& res);
  static std::shared_ptr<GridComplex> torus(const Vec& lo, const Vec& hi,
                                            const std::vector<int>& res);

  Rat spacing(int axis) const;
  int dim_count(int k) const;             // number of k-cells
  int cell_id(int k, const GridCell& c) const;
  GridCell cell_of(int k, int id) const;

  // faces of a k-cell as (k-1)-cell ids; each extent axis contributes two
  std::vector<int> cell_faces(int k, int id) const;
  Rat cell_measure_sq_free(int k, int id) const;  // product of extent spacings (exact)
  double cell_measure(int k, int id) const;
  Vec cell_barycenter(int k, int id) const;
  std::vector<Vec> cell_corners(int k, int id) const;  // 2^k corners, lexicographic

  // Kuhn (staircase) triangulation of one k-cell: k! simplices, globally
  // consistent across shared faces.
  std::vector<Simplex> triangulate_cell(int k, int id) const;

  // wrap a lattice position on a periodic axis into range
  int wrap(int axis, int p) const;

 private:
  void build_index();
  std::vector<std::vector<unsigned>> masks_;   // masks_[k] ascending
  std::vector<std::vector<int>> mask_offset_;  // id offset of each mask block
  std::vector<int> totals_;
  friend struct GridChain;
};

using GridPtr = std::shared_ptr<GridComplex>;

struct GridChain {
  GridPtr grid;
  int dim = 0;
  boost::dynamic_bitset<> bits;

  static GridChain zero(GridPtr g, int dim);
  void set(int id, bool v = true) { bits.set(id, v); }
  bool get(int id) const { return bits.test(id); }
  size_t support_size() const { return bits.count(); }
  bool empty() const { return bits.none(); }

  GridChain plus(const GridChain& other) const;
  GridChain boundary() const;
  double mass() const;
  GridChain restrict_to(const std::function<bool(const Vec&)>& barycenter_pred) const;

  PolyChain to_poly() const;  // Kuhn triangulation of every set cell
};

// Parity of the chain's covering multiplicity at each cell barycenter.
// Exact when the chain is supported in the grid's k-skeleton; `subdiv`
// rounds of edgewise subdivision are applied first for robustness.
GridChain rasterize(const PolyChain& chain, GridPtr grid, int subdiv = 0);

}  // namespace cyclecraft
