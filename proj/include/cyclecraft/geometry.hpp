#pragma once

// Simplicial chains with exact rational vertices, in two flavors:
//
//  * PolyChain      -- "free" mod-2 soup of simplices (arbitrary coordinates,
//                      no ambient complex).  This is the working currency of
//                      the geometric constructions: cones, projections,
//                      restrictions, deformations.  0- and 1-dimensional
//                      soups have a canonical reduced form (exact mod-2
//                      cancellation of overlaps), so chain equality and ∂
//                      identities are decidable.
//  * SimplicialGeometry / SimplicialChain -- a shared-vertex complex with
//                      listed simplices and id-based chains.  This is the
//                      currency of the linear-algebra side (flat norms,
//                      homology) and of the JSON interchange format.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cyclecraft/rational.hpp"

namespace cyclecraft {

// ---------------------------------------------------------------- PolyChain

using Simplex = std::vector<Vec>;  // k+1 vertex coordinates

struct PolyChain {
  int dim = 0;
  std::vector<Simplex> simplices;

  static PolyChain points(std::vector<Vec> pts);
  static PolyChain segment(const Vec& a, const Vec& b);

  bool empty() const { return simplices.empty(); }
  size_t size() const { return simplices.size(); }
  void append(const PolyChain& other);

  // mod-2 sum (concatenate + canonical reduce)
  PolyChain plus(const PolyChain& other) const;
  // canonical reduced form: exact overlap cancellation for dim<=1, sorted
  // exact-duplicate cancellation for dim>=2.  Also drops degenerate simplices.
  PolyChain reduced() const;

  PolyChain boundary() const;  // dim-1 soup, canonically reduced; dim 0 -> point set
  double mass() const;         // canonical mass for dim<=1, per-simplex sum otherwise
  Rat mass_sq_single(size_t i) const;  // exact squared volume * (k!)^2 of one simplex

  PolyChain restrict_to(const std::function<bool(const Vec&)>& barycenter_pred) const;
  PolyChain map(const std::function<Vec(const Vec&)>& vertex_map) const;
  PolyChain cone(const Vec& apex) const;

  // split every simplex by the hyperplane n.x = b so no piece straddles it
  PolyChain split_by_hyperplane(const Vec& normal, const Rat& offset) const;
  // edgewise subdivision, `rounds` times (each round halves edges)
  PolyChain subdivide(int rounds) const;

  // mod-2 covering multiplicity at a point (generic points of the support)
  int multiplicity_at(const Vec& p) const;

  Vec barycenter_of(size_t i) const;
  bool is_zero() const { return reduced().simplices.empty(); }
  bool equals(const PolyChain& other) const;
};

Vec simplex_barycenter(const Simplex& s);

// --------------------------------------------- shared-vertex complex flavor

struct SimplicialGeometry {
  int ambient_dim = 0;
  std::vector<Vec> vertices;
  // simplices[d] = sorted vertex-id tuples, deduplicated, in insertion order
  std::map<int, std::vector<std::vector<int>>> simplices;
  // simplices tagged as lying in the ambient boundary, as (dim, index) pairs
  std::vector<std::pair<int, int>> boundary_facets;

  int add_vertex(const Vec& v);                    // dedup by exact coordinates
  int add_simplex(int d, std::vector<int> verts);  // dedup by sorted tuple; adds faces
  std::optional<int> find_vertex(const Vec& v) const;
  std::optional<int> find_simplex(int d, std::vector<int> verts) const;
  int count(int d) const;

  bool is_boundary_tagged(int d, int idx) const;
  void tag_boundary(int d, int idx);

  Vec barycenter(int d, int idx) const;
  double simplex_mass(int d, int idx) const;
  std::vector<Vec> corners(int d, int idx) const;

  // faces (dim d-1) of a simplex, as ids (must already exist; add_simplex adds them)
  std::vector<int> faces_of(int d, int idx) const;

  std::string to_json() const;
  static std::shared_ptr<SimplicialGeometry> from_json(const std::string& text);

 private:
  std::map<Vec, int> vmap_;
  std::map<int, std::map<std::vector<int>, int>> smap_;
  std::map<int, std::vector<char>> btag_;
};

using GeometryPtr = std::shared_ptr<SimplicialGeometry>;

struct SimplicialChain {
  GeometryPtr geom;
  int dim = 0;
  bool z2 = true;                 // false = integer coefficients
  std::map<int, int> coeffs;      // simplex id -> coefficient (1 for Z2)

  static SimplicialChain zero(GeometryPtr g, int dim, bool z2 = true);
  void toggle(int id);            // Z2 flip
  void add(int id, int c);        // integer accumulate (erases zeros)
  bool has(int id) const { return coeffs.count(id) > 0; }
  bool empty() const { return coeffs.empty(); }
  size_t support_size() const { return coeffs.size(); }

  SimplicialChain plus(const SimplicialChain& other) const;  // same geometry required
  double mass() const;
  PolyChain to_poly() const;

  std::string to_json() const;
  static SimplicialChain from_json(const std::string& text);
};

// boundary over the listed complex (ids); dim 0 returns the chain itself
SimplicialChain complex_boundary(const SimplicialChain& c);

// Append a PolyChain's simplices into a geometry (dedup) and return the
// id-based chain.  The geometry is extended in place ("derived geometry").
SimplicialChain ingest(GeometryPtr g, const PolyChain& p);

}  // namespace cyclecraft
