#pragma once

// Filling norms over fixed complexes.  flat_norm computes the minimal-mass
// filling tau with boundary(tau) = z over GF(2) (spec semantics: the flat
// distance between cycles is the filling mass of their difference).
// Solvers: exact kernel-coset branch-and-bound, exhaustive Gray-code brute
// force (oracle), and a greedy heuristic upper bound.  Relative mode treats
// boundary-tagged cells as free.

#include <boost/dynamic_bitset.hpp>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cyclecraft/config.hpp"
#include "cyclecraft/geometry.hpp"
#include "cyclecraft/grid.hpp"

namespace cyclecraft {

using Bits = boost::dynamic_bitset<>;

// boundary structure of one chain degree: columns are (k+1)-cells, rows k-cells
struct ComplexView {
  int k = 0;
  int n_rows = 0, n_cols = 0;
  std::vector<std::vector<int>> col_faces;         // mod-2 face rows per column
  std::vector<std::vector<std::pair<int, int>>> col_faces_signed;  // (row, sign)
  std::vector<double> row_mass, col_mass;
  std::vector<char> row_tag, col_tag;              // boundary-supported flags
};

ComplexView view_of_grid(const GridPtr& g, int k, bool tag_box_boundary = true);
ComplexView view_of_geometry(const GeometryPtr& g, int k);

enum class FlatMode { Exact, Brute, Heuristic };

struct FillingCertificate {
  bool feasible = false;
  double value = 0;            // filling mass (tagged cells free in relative mode)
  Bits filling;                // (k+1)-cell selection
  std::string solver;
  bool exact = false;          // certified optimal
  int kernel_rank = 0;
  std::uint64_t nodes = 0;
  bool relative = false;
};

FillingCertificate flat_norm(const ComplexView& view, const Bits& z, FlatMode mode,
                             const Config& cfg, bool relative = false);

FillingCertificate flat_norm_grid(const GridChain& z, FlatMode mode, const Config& cfg,
                                  bool relative = false);
FillingCertificate flat_norm_simplicial(const SimplicialChain& z, FlatMode mode,
                                        const Config& cfg, bool relative = false);

// filling distance between two cycles on the same complex
FillingCertificate flat_distance_grid(const GridChain& a, const GridChain& b, FlatMode mode,
                                      const Config& cfg, bool relative = false);

// ----- integer filling search (bounded coefficients) -----

struct IntFilling {
  bool feasible = false;
  std::vector<int> coeffs;  // per column
  double value = 0;
  int kernel_rank = 0;
  std::uint64_t nodes = 0;
  bool exhausted_budget = false;
};

// minimize sum |c_j| mass_j over integer solutions of D c = z with
// |c_j| <= coeff_bound; enumerates the integer kernel lattice exactly
IntFilling min_filling_integer(const ComplexView& view, const std::vector<int>& z,
                               int coeff_bound, const Config& cfg);

// enumerate all integer fillings within the coefficient bound (visitor)
void for_each_integer_filling(const ComplexView& view, const std::vector<int>& z,
                              int coeff_bound, const Config& cfg,
                              const std::function<void(const std::vector<int>&)>& visit);

// ----- 0-cycle matching distance (free geometry) -----

struct PointMatch {
  double value = 0;
  bool exact = false;
  // matched index pairs; second = -1 means escaped to the boundary
  std::vector<std::pair<int, int>> pairs;
};

PointMatch match_points(const std::vector<Vec>& pts,
                        const std::function<double(const Vec&, const Vec&)>& metric,
                        const std::function<double(const Vec&)>* boundary_cost,
                        int exact_limit = 16);

}  // namespace cyclecraft
