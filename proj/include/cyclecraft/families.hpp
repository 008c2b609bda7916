#pragma once

// Discrete parametric families of relative cycles over cubical parameter
// complexes: fineness certification, admissible-collection algebra, cutting
// schedules over ball covers, localization at a refined level, continuous
// extension evaluators, discrete homotopies, the exact 0-cycle evaluator,
// and the no-concentration sampling path.
//
// Ambient geometry comes in two flavors sharing one wrapper: a star-shaped
// offset domain (boundary present, values are relative cycles) or a periodic
// box (flat torus, no boundary).  Every "ball" is a sup-norm ball -- an axis
// cube -- so membership, disjointness, merging, cut surfaces, and radial
// contractions all stay exact rational.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cyclecraft/config.hpp"
#include "cyclecraft/domain.hpp"
#include "cyclecraft/flatnorm.hpp"
#include "cyclecraft/geometry.hpp"
#include "cyclecraft/grid.hpp"
#include "cyclecraft/param.hpp"

namespace cyclecraft {

// ------------------------------------------------------------------ ambient

struct Ambient {
  std::shared_ptr<OffsetDomain> dom;  // null for a torus
  Vec lo, hi;                         // fundamental box
  std::vector<char> periodic;         // per-axis wrap flags

  static Ambient domain(std::shared_ptr<OffsetDomain> d);
  static Ambient torus(const Vec& lo, const Vec& hi);

  int n() const { return static_cast<int>(lo.size()); }
  bool has_boundary() const { return dom != nullptr; }
  Rat side(int a) const { return hi[a] - lo[a]; }
  // wrapped per-axis difference to - from, reduced into (-side/2, side/2]
  Rat axis_delta(int a, const Rat& from, const Rat& to) const;
  Rat chebyshev(const Vec& a, const Vec& b) const;  // sup-norm distance, wrapped
  // wrap a point back into the fundamental box on periodic axes
  Vec normalize(const Vec& p) const;
  // exact closest boundary point in the euclidean metric (domains only)
  Vec boundary_closest(const Vec& p) const;
  // half the largest wrapped reach: a ball of this radius sees everything
  Rat max_reach() const;
};

// ----------------------------------------------------- admissible collections

// Interior set: open sup-ball around center.  Boundary set: the collar
// E(beta x [0, radius]) over the sup-ball beta of the same radius around a
// boundary point (radial collar of the ambient domain).
struct AdmissibleSet {
  bool collar = false;
  Vec center;
  Rat radius;
};

AdmissibleSet interior_ball(const Vec& center, const Rat& radius);
AdmissibleSet boundary_collar(const Vec& boundary_point, const Rat& radius);

bool set_contains(const AdmissibleSet& s, const Ambient& amb, const Vec& x);

struct AdmissibleCollection {
  std::vector<AdmissibleSet> sets;

  Rat budget() const;  // sum of radii
  bool contains(const Ambient& amb, const Vec& x) const;
  // conservative exact pairwise disjointness certificate
  bool disjoint(const Ambient& amb) const;
  // support of `diff` lies in the union (after splitting at set surfaces)
  bool supports(const Ambient& amb, const PolyChain& diff, int subdiv = 2) const;
};

struct CollectionResult {
  AdmissibleCollection collection;
  Rat achieved;          // final budget
  Rat bound;             // quoted budget bound for the inputs
  bool bound_ok = false;
  bool covers_ok = false;  // sampled coverage certificate
  int merges = 0;          // (*) steps
  int replacements = 0;    // (**) steps
};

// Merge boundary collars and absorb interior balls into an admissible
// collection: intersecting collars merge, interior balls touching a collar
// or the boundary get absorbed/replaced; bound: sum rad(beta) + 3 sum rad(B).
CollectionResult absorb_balls(const std::vector<AdmissibleSet>& boundary_collars,
                              const std::vector<AdmissibleSet>& interior_balls,
                              const Ambient& amb, const Config& cfg);

// Union of two admissible collections re-certified admissible;
// set count <= v1 + v2 and budget bound 3 (r1 + r2).
CollectionResult merge_admissible(const AdmissibleCollection& a,
                                  const AdmissibleCollection& b, const Ambient& amb,
                                  const Config& cfg);

// ------------------------------------------------------------- flat metrics

struct FlatDist {
  double value = 0;
  bool exact = false;
};

class FlatBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using FlatMetric = std::function<FlatDist(const PolyChain&, const PolyChain&)>;
// minimal filling with relative boundary a - b (best effort; exact for points)
using FillOracle = std::function<PolyChain(const PolyChain&, const PolyChain&)>;

// exact matching distance for mod-2 point chains (boundary escapes allowed)
FlatMetric point_flat_metric(const Ambient& amb, int exact_limit = 16);
FillOracle point_fill_oracle(const Ambient& amb, int exact_limit = 16);
// cellular chains on a fixed grid, via the grid filling norm
FlatMetric grid_flat_metric(GridPtr grid, FlatMode mode, const Config& cfg,
                            bool relative = false);
FillOracle grid_fill_oracle(GridPtr grid, FlatMode mode, const Config& cfg,
                            bool relative = false);

// ---------------------------------------------------------- discrete family

using ChainPtr = std::shared_ptr<const PolyChain>;

struct DiscreteFamily {
  CubicalParamComplex param;  // level-q complex
  int k = 0;                  // cycle dimension
  Ambient amb;
  std::map<ParamCell, ChainPtr> values;  // vertex cell -> value

  // certification metadata (present when certified, re-verifiable)
  std::optional<double> eps_fine;
  std::optional<Rat> delta_localized;
  std::map<ParamCell, AdmissibleCollection> collections;  // per cell

  const PolyChain& value(const ParamCell& v) const;
  void set_value(const ParamCell& v, PolyChain c);
  void share_value(const ParamCell& v, ChainPtr c);
  double sup_mass() const;

  std::string to_json() const;
  static DiscreteFamily from_json(const std::string& text, const Ambient& amb);
};

// corner vertices of a cell (2^dim of them)
std::vector<ParamCell> cell_vertices(const ParamCell& c);

struct FinenessReport {
  bool fine = false;
  bool indeterminate = false;
  double eps = 0;
  double worst = 0;
  ParamCell worst_cell, worst_a, worst_b;
  int pairs = 0;
};

FinenessReport check_fine(const DiscreteFamily& f, double eps, const FlatMetric& metric);

struct LocalizedReport {
  bool ok = false;
  Rat delta;
  ParamCell bad_cell;
  std::string reason;
  int cells = 0;
};

LocalizedReport check_localized(const DiscreteFamily& f);

// ------------------------------------------------------------- ball covers

struct BallCover {
  std::vector<Vec> centers;
  Rat r0;
  int size() const { return static_cast<int>(centers.size()); }
};

// lattice cover of the ambient by sup-balls of radius r0 (spacing 2 r0)
BallCover make_cover(const Ambient& amb, const Rat& r0, const Config& cfg);

// ---------------------------------------------------------- cutting schedules

PolyChain split_at_ball(const PolyChain& c, const Ambient& amb, const Vec& center,
                        const Rat& rho, int subdiv = 2);
PolyChain ball_restrict(const PolyChain& c, const Ambient& amb, const Vec& center,
                        const Rat& rho, bool inside);
// the part of boundary(inside-restriction) created on the cut sphere
PolyChain sphere_part(const PolyChain& bd, const Ambient& amb, const Vec& center,
                      const Rat& rho);

struct CutStep {
  int index = 0;       // ball i
  Rat rho;             // chosen radius in (r0, 2 r0)
  double cut_mass = 0;     // boundary created on the sphere
  double inside_mass = 0;  // mass removed
  double bound = 0;        // M(tau | 2B_i) / r0
  bool within = false;
};

struct CutSchedule {
  std::vector<PolyChain> d;    // d[0] = tau .. d[N]
  std::vector<CutStep> steps;  // one per ball
  const PolyChain& at(int i) const;  // d_i; empty beyond the last ball
};

// d_i(tau) = d_{i-1}(tau) - d_{i-1}(tau) | B'_i with certified slice choice
CutSchedule cut_d(const PolyChain& tau, const BallCover& cover, const Ambient& amb,
                  const Config& cfg);

struct CutCycleSchedule {
  std::vector<PolyChain> b;  // b[0] = z .. b[N]; cycles
  PolyChain w;               // the filling used
  double fill_mass = 0;
  const PolyChain& at(int i) const;
};

// b_i(z) = boundary(d_i(w)) for a heuristic filling w of z
CutCycleSchedule cut_b(const PolyChain& z, const BallCover& cover, const Ambient& amb,
                       const Config& cfg);

// near-minimal representative: mass <= best-found + eps among candidates at
// flat distance <= eps from v
struct NearMinimal {
  PolyChain z;
  double mass = 0;
  double dist = 0;  // flat distance to v
};
NearMinimal near_minimal_rep(const PolyChain& v, double eps, const Ambient& amb,
                             const FlatMetric& metric, const Config& cfg);

// ------------------------------------------------------------- localization

struct StageLog {
  int stage = 0;
  int q_level = 0;
  std::string note;
  double sup_mass = 0;
  double max_adjacent_dist = 0;
};

struct LocalizeResult {
  DiscreteFamily out;  // level q_tilde, delta-localized with per-cell collections
  BallCover cover;
  int q_prime = 0;
  int q_tilde = 0;
  std::vector<StageLog> log;
  double drift_bound = 0;   // C eps / delta^{4 n p}
  double growth_bound = 0;  // C eps / delta^{6 n p}
  double worst_drift = 0;   // max flat distance from input value at coarse vertices
  double worst_growth = 0;  // max mass increase over input sup
  bool bounds_ok = false;
};

LocalizeResult localize(const DiscreteFamily& f, const Rat& delta,
                        const FlatMetric& metric, const FillOracle& fill,
                        const Config& cfg);

// ---------------------------------------------------------------- evaluators

struct FamilyEvaluator {
  std::function<PolyChain(const Vec&)> eval;  // closed-form rule
  CubicalParamComplex witness;                // level-q_tilde witness grid
  int q_tilde = 0;
  DiscreteFamily base;

  PolyChain operator()(const Vec& x) const { return eval(x); }
};

// continuous extension of a delta-localized family (radial contraction in the
// per-cell admissible sets)
FamilyEvaluator extend(const DiscreteFamily& f, const Config& cfg);

// exact 0-cycle extension: parity trick, mass never exceeds the vertex sup
FamilyEvaluator extend_zero_cycles(const DiscreteFamily& f, const Config& cfg);

// homotopy between eps-close delta-localized families, as an evaluator on
// X x [0,1]: the last coordinate of the evaluation point is time
struct HomotopyResult {
  FamilyEvaluator map;  // eval takes (x, t) with t appended
  int time_steps = 0;   // 3^{q_tilde}
  double sup_mass = 0;  // over witness samples
  double mass_bound = 0;  // c (m + eps/delta^{6 n p})
  bool bounds_ok = false;
};

HomotopyResult homotopy(const DiscreteFamily& f0, const DiscreteFamily& f1,
                        double eps, const FillOracle& fill, const Config& cfg);

// ------------------------------------------------------- no-concentration

struct ConcentrationReport {
  double modulus = 0;  // sup over samples/centers of mass in a radius-r ball
  Rat scale;
  int samples = 0;
};

ConcentrationReport concentration_modulus(const FamilyEvaluator& f, const Rat& r,
                                          int param_samples, const Config& cfg);

// sample the evaluator to a discrete family, certify no concentration at the
// required scale, and localize; throws "mass concentrates" otherwise
LocalizeResult perturb_no_concentration(const FamilyEvaluator& f, double eps,
                                        const Rat& delta, const FlatMetric& metric,
                                        const FillOracle& fill, const Config& cfg);

// chain serialization shared by family JSON and the CLI
std::string poly_to_json(const PolyChain& c);
PolyChain poly_from_json(const std::string& text);

}  // namespace cyclecraft
