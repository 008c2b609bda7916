#pragma once

// Domain-aware chain operations: offset restriction, exact slicing at a
// gauge level (the coarea slice selection), and boundary-supported mass.

#include <utility>
#include <vector>

#include "cyclecraft/config.hpp"
#include "cyclecraft/domain.hpp"
#include "cyclecraft/geometry.hpp"

namespace cyclecraft {

// chain restricted to the offset domain M_r (barycenter membership)
PolyChain offset_restrict(const PolyChain& c, const OffsetDomain& dom, const Rat& r);

// split 1-chains exactly at the gauge-s surface (higher dims: edgewise
// subdivision to `subdiv` rounds, then left as-is; restriction still uses
// barycenters)
PolyChain split_at_gauge(const PolyChain& c, const OffsetDomain& dom, const Rat& s,
                         int subdiv = 2);

struct SliceResult {
  Rat r;                    // chosen slice depth
  PolyChain inside;         // tau restricted to M_r, split at the slice surface
  PolyChain new_boundary;   // boundary created on the slice surface
  double new_boundary_mass = 0;
  double certified_bound = 0;  // c_slice * M(tau) / eps
  bool within_bound = false;
  int candidates = 0;
};

// choose r in (0, eps) minimizing the created boundary mass among the
// candidate depths; forbidden depth intervals are skipped
SliceResult coarea_slice(const PolyChain& tau, const OffsetDomain& dom, const Rat& eps,
                         const Config& cfg,
                         const std::vector<std::pair<Rat, Rat>>& forbidden = {});

// mass ignoring simplices supported in the domain boundary (relative mode)
double mass_relative(const PolyChain& c, const OffsetDomain& dom);

// gauge-s crossing parameters of the segment [a,b] (sorted, interior only)
std::vector<Rat> gauge_crossings(const Vec& a, const Vec& b, const OffsetDomain& dom,
                                 const Rat& s);

}  // namespace cyclecraft
