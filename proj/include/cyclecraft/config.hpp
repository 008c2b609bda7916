#pragma once

// Runtime configuration.  Every tunable named in the module contracts lives
// here with its default, so certificates can pin the values they ran under.

#include <cstdint>
#include <string>

namespace cyclecraft {

struct Config {
  std::uint64_t seed = 1;

  // mass comparisons: |a-b| <= mass_rel_tol * max(1, |a|, |b|)
  double mass_rel_tol = 1e-9;

  // federer-fleming deformation
  int ff_retry_budget = 32;          // center resamples per cell
  double ff_blowup_base = 2.0;       // per-cell mass factor is ff_blowup_base * 4^n

  // slice selection (coarea_slice, cut_d, choose_slice)
  double c_slice = 2.0;              // acceptance constant c(eps) ~ c_slice/eps
  int slice_candidate_factor = 10;   // candidates = ceil(factor * M(tau)/eps)
  int slice_candidate_cap = 10000;
  int subdivide_depth = 2;           // pre-refinement rounds before barycenter restriction

  // exact flat norm
  int kernel_bits_budget = 26;       // enumerate coset only up to this kernel rank
  std::uint64_t bb_node_budget = 200000000;  // branch-and-bound node cap

  // integer filling search
  int ilp_coeff_bound = 4;
  std::uint64_t ilp_node_budget = 50000000;

  // parametric family caps (desk scale)
  int max_family_dim = 3;            // localize/extend/homotopy
  int max_coarea_dim = 2;            // full inductive coarea path

  // boundary triangulation of Sigma
  double c_regions = 24.0;           // N' <= c_regions * p * M(boundary)
  // localization
  double eps0_factor = 1.0;          // near-minimal filling slack multiplier
  // isoperimetric
  double iso_apex_cap = 10.0;        // external apex distance cap, in units of radius

  // parametric families
  double family_c = 64.0;            // c(M,p) in localization / homotopy bounds
  double family_eps0 = 0.5;          // fineness threshold for localization input
  double family_delta0 = 2.0;        // localization-scale threshold (desk scale)
  int cover_cap = 4096;              // max ball-cover size N
  int family_exact_limit = 16;       // point-matching exact-solver size cap
  int witness_extra = 1;             // witness refinement beyond the output level

  int threads = 1;
  double budget_seconds = 0.0;       // 0 = unlimited

  // Loads overrides from a JSON file; unknown keys are an error (spec: invalid
  // input exits with code 1 from the CLI).
  static Config load(const std::string& path);
  // Resolution order: explicit path > CYCLECRAFT_CONFIG env > defaults.
  static Config resolve(const std::string& explicit_path = "");
  std::string to_json() const;
};

// Deterministic RNG stream for a given purpose tag; same (seed, tag) always
// yields the same stream regardless of call order elsewhere.
std::uint64_t stream_seed(std::uint64_t seed, const std::string& tag);

}  // namespace cyclecraft
