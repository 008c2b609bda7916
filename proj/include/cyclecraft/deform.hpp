#pragma once

// Federer-Fleming deformation of k-chains (k <= 1) onto a grid complex:
// round-by-round exact radial projection from sampled cell centers, with
// per-cell mass-blowup retry.  Returns the cellular chain, the swept
// deformation chain and the exact residual z - P(z) - boundary(tau).

#include <cstdint>

#include "cyclecraft/config.hpp"
#include "cyclecraft/geometry.hpp"
#include "cyclecraft/grid.hpp"

namespace cyclecraft {

struct DeformResult {
  GridChain cellular;     // P(z)
  PolyChain deformation;  // tau, dimension k+1
  PolyChain residual;     // z + P(z) + boundary(tau), canonically reduced
  int retries = 0;
  double input_mass = 0, cellular_mass = 0, deformation_mass = 0;
};

DeformResult federer_fleming_deform(const PolyChain& z, GridPtr grid, const Config& cfg,
                                    std::uint64_t seed);

// split all simplices at the grid's lattice hyperplanes (dim <= 2)
PolyChain split_at_lattice(const PolyChain& c, const GridComplex& grid);

}  // namespace cyclecraft
