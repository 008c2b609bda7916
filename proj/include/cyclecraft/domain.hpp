#pragma once

// Compact star-shaped polyhedral domains with the nested-offset collar
// structure.  Every model domain (box, polygonal disc, PL ball, interface
// segment) is a rational polytope, so gauge evaluation, offset membership,
// collar projection and slicing are all exact.
//
// The collar is the radial one: E(b,t) = c + (b-c)(1 - t/rho0) for b on the
// boundary, where rho0 is a rational lower bound on the center-to-boundary
// distance.  M_r = {gauge <= 1 - r/rho0} is again a rational polytope and
// "depth" rho0*(1-gauge) is comparable to euclidean boundary distance with
// stretch factor rho_max/rho0 (reported as eps_lip).

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cyclecraft/geometry.hpp"
#include "cyclecraft/rational.hpp"

namespace cyclecraft {

struct OffsetDomain {
  enum class Kind { Box, Poly2, Poly3, Segment };
  Kind kind = Kind::Box;
  int n = 0;
  Vec center;
  Rat rho0;          // rational lower bound of inradius from center
  double rho_max = 0;  // outer radius (stretch reporting)

  // Box
  Vec lo, hi;
  // Poly2: boundary vertex loop (counterclockwise)
  std::vector<Vec> loop;
  std::vector<Rat> loop_len;  // rational pseudo-length per edge (chart metric)
  // Poly3: boundary triangles
  std::vector<Simplex> tris;
  // Segment: endpoints
  Vec seg_a, seg_b;

  static OffsetDomain box(const Vec& lo, const Vec& hi);
  static OffsetDomain ngon_disc(int nsides, const Rat& radius, const Vec& center);
  static OffsetDomain pl_ball(const Rat& radius, const Vec& center, int subdiv = 1);
  static OffsetDomain segment(const Vec& a, const Vec& b);

  // 0 at center, 1 on the boundary, >1 outside; exact
  Rat gauge(const Vec& p) const;
  bool contains(const Vec& p) const { return gauge(p) <= 1; }
  bool on_boundary(const Vec& p) const { return gauge(p) == 1; }
  Rat depth(const Vec& p) const { return rho0 * (1 - gauge(p)); }
  bool in_offset(const Vec& p, const Rat& r) const { return depth(p) >= r; }

  // radial map to the gauge-s surface; p must differ from center
  Vec scale_to_gauge(const Vec& p, const Rat& s) const;
  // collar projection onto the boundary of M_r
  Vec collar_project(const Vec& p, const Rat& r) const { return scale_to_gauge(p, 1 - r / rho0); }
  // E(b, t) for b with gauge 1
  Vec collar_point(const Vec& b, const Rat& t) const;

  // boundary of M_r as a (n-1)-soup (r = 0 gives the domain boundary)
  PolyChain boundary_chain(const Rat& r = Rat(0)) const;
  double boundary_mass() const;

  // squared euclidean distance from p to the boundary (exact rational)
  Rat boundary_dist2(const Vec& p) const;
  // collar stretch factor minus one
  double eps_lip() const { return rho_max / to_double(rho0) - 1.0; }

  // random rational point of the interior (uniform over a rational lattice,
  // rejection sampled); deterministic in the generator state
  Vec sample_interior(std::uint64_t& rng_state) const;
};

// exact squared distance from a point to a segment / triangle
Rat point_seg_dist2(const Vec& p, const Vec& a, const Vec& b);
Rat point_tri_dist2(const Vec& p, const Simplex& tri);

// largest rational r with r^2 <= x (up to ~1e-12 slack), used for exact-safe
// lower bounds of square roots
Rat rat_sqrt_lower(const Rat& x);

// rational point exactly on the sphere |q - c| = R, near direction d
Vec sphere_point_near(const Vec& c, const Rat& R, const std::array<double, 3>& dir,
                      std::int64_t max_den = 1 << 14);

std::uint64_t splitmix64(std::uint64_t& state);
// uniform rational in [0,1) with denominator 2^20, advancing state
Rat unit_rat(std::uint64_t& state);

}  // namespace cyclecraft
