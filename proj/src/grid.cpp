#include "cyclecraft/grid.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace cyclecraft {

std::shared_ptr<GridComplex> GridComplex::box(const Vec& lo, const Vec& hi,
                                              const std::vector<int>& res) {
  auto g = std::make_shared<GridComplex>();
  g->n = (int)res.size();
  g->res = res;
  g->lo = lo;
  g->hi = hi;
  g->periodic.assign(g->n, 0);
  g->build_index();
  return g;
}

std::shared_ptr<GridComplex> GridComplex::torus(const Vec& lo, const Vec& hi,
                                                const std::vector<int>& res) {
  auto g = box(lo, hi, res);
  g->periodic.assign(g->n, 1);
  g->build_index();
  return g;
}

Rat GridComplex::spacing(int axis) const { return (hi[axis] - lo[axis]) / res[axis]; }

int GridComplex::wrap(int axis, int p) const {
  if (!periodic[axis]) return p;
  int m = res[axis];
  return ((p % m) + m) % m;
}

void GridComplex::build_index() {
  masks_.assign(n + 1, {});
  mask_offset_.assign(n + 1, {});
  totals_.assign(n + 1, 0);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    int k = __builtin_popcount(mask);
    masks_[k].push_back(mask);
  }
  for (int k = 0; k <= n; ++k) {
    std::sort(masks_[k].begin(), masks_[k].end());
    int off = 0;
    for (unsigned mask : masks_[k]) {
      mask_offset_[k].push_back(off);
      int block = 1;
      for (int a = 0; a < n; ++a) {
        bool extent = mask & (1u << a);
        int positions = (periodic[a] || extent) ? res[a] : res[a] + 1;
        block *= positions;
      }
      off += block;
    }
    totals_[k] = off;
  }
}

int GridComplex::dim_count(int k) const {
  return (k < 0 || k > n) ? 0 : totals_[k];
}

int GridComplex::cell_id(int k, const GridCell& c) const {
  const auto& masks = masks_[k];
  auto it = std::lower_bound(masks.begin(), masks.end(), c.mask);
  if (it == masks.end() || *it != c.mask) throw std::invalid_argument("bad cell mask");
  int mi = (int)(it - masks.begin());
  int id = mask_offset_[k][mi];
  int stride = 1;
  int acc = 0;
  for (int a = 0; a < n; ++a) {
    bool extent = c.mask & (1u << a);
    int positions = (periodic[a] || extent) ? res[a] : res[a] + 1;
    int p = periodic[a] ? wrap(a, c.pos[a]) : c.pos[a];
    if (p < 0 || p >= positions) throw std::invalid_argument("cell position out of range");
    acc += p * stride;
    stride *= positions;
  }
  return id + acc;
}

GridCell GridComplex::cell_of(int k, int id) const {
  const auto& masks = masks_[k];
  int mi = (int)masks.size() - 1;
  while (mi > 0 && mask_offset_[k][mi] > id) --mi;
  GridCell c;
  c.mask = masks[mi];
  c.pos.assign(n, 0);
  int rem = id - mask_offset_[k][mi];
  for (int a = 0; a < n; ++a) {
    bool extent = c.mask & (1u << a);
    int positions = (periodic[a] || extent) ? res[a] : res[a] + 1;
    c.pos[a] = rem % positions;
    rem /= positions;
  }
  return c;
}

std::vector<int> GridComplex::cell_faces(int k, int id) const {
  GridCell c = cell_of(k, id);
  std::vector<int> out;
  for (int a = 0; a < n; ++a) {
    if (!(c.mask & (1u << a))) continue;
    GridCell f = c;
    f.mask &= ~(1u << a);
    out.push_back(cell_id(k - 1, f));
    f.pos[a] = c.pos[a] + 1;
    if (periodic[a]) f.pos[a] = wrap(a, f.pos[a]);
    out.push_back(cell_id(k - 1, f));
  }
  return out;
}

Rat GridComplex::cell_measure_sq_free(int k, int id) const {
  GridCell c = cell_of(k, id);
  Rat m = 1;
  for (int a = 0; a < n; ++a)
    if (c.mask & (1u << a)) m *= spacing(a);
  return m;
}

double GridComplex::cell_measure(int k, int id) const {
  return to_double(cell_measure_sq_free(k, id));
}

Vec GridComplex::cell_barycenter(int k, int id) const {
  GridCell c = cell_of(k, id);
  Vec b(n);
  for (int a = 0; a < n; ++a) {
    Rat base = lo[a] + spacing(a) * c.pos[a];
    b[a] = (c.mask & (1u << a)) ? base + spacing(a) / 2 : base;
  }
  return b;
}

std::vector<Vec> GridComplex::cell_corners(int k, int id) const {
  GridCell c = cell_of(k, id);
  std::vector<int> axes;
  for (int a = 0; a < n; ++a)
    if (c.mask & (1u << a)) axes.push_back(a);
  std::vector<Vec> out;
  for (unsigned bits = 0; bits < (1u << axes.size()); ++bits) {
    Vec v(n);
    for (int a = 0; a < n; ++a) v[a] = lo[a] + spacing(a) * c.pos[a];
    for (size_t i = 0; i < axes.size(); ++i)
      if (bits & (1u << i)) v[axes[i]] += spacing(axes[i]);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Simplex> GridComplex::triangulate_cell(int k, int id) const {
  GridCell c = cell_of(k, id);
  std::vector<int> axes;
  for (int a = 0; a < n; ++a)
    if (c.mask & (1u << a)) axes.push_back(a);
  Vec anchor(n);
  for (int a = 0; a < n; ++a) anchor[a] = lo[a] + spacing(a) * c.pos[a];
  std::vector<Simplex> out;
  std::vector<int> perm(axes.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    Simplex s;
    Vec v = anchor;
    s.push_back(v);
    for (int pi : perm) {
      v[axes[pi]] += spacing(axes[pi]);
      s.push_back(v);
    }
    out.push_back(std::move(s));
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (out.empty()) out.push_back({anchor});
  return out;
}

GridChain GridChain::zero(GridPtr g, int dim) {
  GridChain c;
  c.grid = std::move(g);
  c.dim = dim;
  c.bits.resize(c.grid->dim_count(dim));
  return c;
}

GridChain GridChain::plus(const GridChain& other) const {
  if (grid != other.grid || dim != other.dim)
    throw std::invalid_argument("grid chain sum across incompatible chains");
  GridChain out = *this;
  out.bits ^= other.bits;
  return out;
}

GridChain GridChain::boundary() const {
  if (dim == 0) return zero(grid, 0);
  GridChain out = zero(grid, dim - 1);
  for (size_t id = bits.find_first(); id != boost::dynamic_bitset<>::npos;
       id = bits.find_next(id)) {
    for (int f : grid->cell_faces(dim, (int)id)) out.bits.flip(f);
  }
  return out;
}

double GridChain::mass() const {
  double m = 0;
  for (size_t id = bits.find_first(); id != boost::dynamic_bitset<>::npos;
       id = bits.find_next(id))
    m += grid->cell_measure(dim, (int)id);
  return m;
}

GridChain GridChain::restrict_to(const std::function<bool(const Vec&)>& pred) const {
  GridChain out = zero(grid, dim);
  for (size_t id = bits.find_first(); id != boost::dynamic_bitset<>::npos;
       id = bits.find_next(id))
    if (pred(grid->cell_barycenter(dim, (int)id))) out.bits.set(id);
  return out;
}

PolyChain GridChain::to_poly() const {
  PolyChain p;
  p.dim = dim;
  for (size_t id = bits.find_first(); id != boost::dynamic_bitset<>::npos;
       id = bits.find_next(id)) {
    auto tris = grid->triangulate_cell(dim, (int)id);
    for (auto& s : tris) p.simplices.push_back(std::move(s));
  }
  return p;
}

GridChain rasterize(const PolyChain& chain, GridPtr grid, int subdiv) {
  if (chain.dim > grid->n) throw std::invalid_argument("rasterize: chain dim exceeds grid dim");
  PolyChain c = subdiv > 0 ? chain.subdivide(subdiv) : chain;
  GridChain out = GridChain::zero(grid, chain.dim);
  int total = grid->dim_count(chain.dim);
  // Probe each cell at a fixed interior point with pairwise distinct local
  // coordinates, so the point avoids every cut plane of the cell triangulation
  // (those planes are x_a = x_b in cell-local coordinates) as well as faces.
  static const Rat frac[3] = {Rat(3, 7), Rat(2, 5), Rat(5, 11)};
  for (int id = 0; id < total; ++id) {
    GridCell cc = grid->cell_of(chain.dim, id);
    Vec b(grid->n);
    int ord = 0;
    for (int a = 0; a < grid->n; ++a) {
      Rat base = grid->lo[a] + grid->spacing(a) * cc.pos[a];
      b[a] = (cc.mask & (1u << a)) ? base + grid->spacing(a) * frac[ord++] : base;
    }
    if (c.multiplicity_at(b) % 2) out.bits.set(id);
  }
  return out;
}

}  // namespace cyclecraft
