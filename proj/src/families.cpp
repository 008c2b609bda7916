#include "cyclecraft/families.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cyclecraft/chain_ops.hpp"
#include "cyclecraft/flatnorm.hpp"

namespace cyclecraft {

using nlohmann::json;

// ------------------------------------------------------------------ helpers

namespace {

Int rat_floor(const Rat& x) {
  Int num = numerator(x), den = denominator(x);
  Int q = num / den;
  if (num % den != 0 && num < 0) q -= 1;
  return q;
}

long long to_ll(const Int& v) { return v.convert_to<long long>(); }

Rat rat_abs(const Rat& x) { return x < 0 ? Rat(-x) : x; }

std::string rat_str(const Rat& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

Rat rat_parse(const std::string& s) { return Rat(s); }

// plain sup-norm distance (parameter space; never wrapped)
Rat sup_dist(const Vec& a, const Vec& b) {
  Rat m(0);
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, rat_abs(Rat(a[i] - b[i])));
  return m;
}

// boundary of a chain, modulo pieces supported in the domain boundary
PolyChain rel_boundary(const PolyChain& c, const Ambient& amb) {
  PolyChain bd = c.boundary();
  if (!amb.has_boundary()) return bd;
  const OffsetDomain& dom = *amb.dom;
  PolyChain out;
  out.dim = bd.dim;
  for (const auto& s : bd.simplices) {
    bool on_bd = true;
    for (const auto& v : s)
      if (dom.gauge(v) != 1) { on_bd = false; break; }
    if (!on_bd) out.simplices.push_back(s);
  }
  return out.reduced();
}

// drop 0-chain points lying in the domain boundary (relative reduction)
PolyChain rel_reduce(const PolyChain& c, const Ambient& amb) {
  if (!amb.has_boundary() || c.dim != 0) return c.reduced();
  const OffsetDomain& dom = *amb.dom;
  PolyChain out;
  out.dim = 0;
  for (const auto& s : c.simplices)
    if (dom.gauge(s[0]) != 1) out.simplices.push_back(s);
  return out.reduced();
}

double euclid(const Ambient& amb, const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < amb.n(); ++i) {
    double d = to_double(amb.axis_delta(i, a[i], b[i]));
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

// ------------------------------------------------------------------ ambient

Ambient Ambient::domain(std::shared_ptr<OffsetDomain> d) {
  Ambient a;
  a.dom = d;
  a.periodic.assign(d->n, 0);
  switch (d->kind) {
    case OffsetDomain::Kind::Box:
      a.lo = d->lo, a.hi = d->hi;
      break;
    case OffsetDomain::Kind::Segment: {
      a.lo = d->seg_a, a.hi = d->seg_b;
      for (int i = 0; i < d->n; ++i)
        if (a.lo[i] > a.hi[i]) std::swap(a.lo[i], a.hi[i]);
      break;
    }
    default: {
      // bounding box of the boundary vertices
      const std::vector<Vec>* vs = nullptr;
      std::vector<Vec> tmp;
      if (d->kind == OffsetDomain::Kind::Poly2) vs = &d->loop;
      else {
        for (const auto& t : d->tris)
          for (const auto& v : t) tmp.push_back(v);
        vs = &tmp;
      }
      a.lo = a.hi = (*vs)[0];
      for (const auto& v : *vs)
        for (int i = 0; i < d->n; ++i) {
          a.lo[i] = std::min(a.lo[i], v[i]);
          a.hi[i] = std::max(a.hi[i], v[i]);
        }
      break;
    }
  }
  return a;
}

Ambient Ambient::torus(const Vec& lo, const Vec& hi) {
  Ambient a;
  a.lo = lo, a.hi = hi;
  a.periodic.assign(lo.size(), 1);
  return a;
}

Rat Ambient::axis_delta(int a, const Rat& from, const Rat& to) const {
  Rat d = to - from;
  if (!periodic[a]) return d;
  Rat s = side(a);
  // reduce into (-s/2, s/2]
  Rat t = d / s + Rat(1, 2);
  Int k = rat_floor(t);
  if (Rat(t - Rat(k)) == 0) k -= 1;  // land exactly on s/2, not -s/2
  return d - s * Rat(k);
}

Rat Ambient::chebyshev(const Vec& a, const Vec& b) const {
  Rat m(0);
  for (int i = 0; i < n(); ++i) m = std::max(m, rat_abs(axis_delta(i, a[i], b[i])));
  return m;
}

Vec Ambient::normalize(const Vec& p) const {
  Vec q = p;
  for (int a = 0; a < n(); ++a) {
    if (!periodic[a]) continue;
    Rat s = side(a);
    Rat t = (q[a] - lo[a]) / s;
    q[a] = q[a] - s * Rat(rat_floor(t));
  }
  return q;
}

Vec Ambient::boundary_closest(const Vec& p) const {
  if (!has_boundary()) throw std::logic_error("boundary_closest: no boundary");
  PolyChain bd = dom->boundary_chain();
  bool have = false;
  Rat best_d2(0);
  Vec best;
  auto consider = [&](const Vec& q) {
    Rat d2(0);
    for (int i = 0; i < n(); ++i) d2 += Rat(q[i] - p[i]) * Rat(q[i] - p[i]);
    if (!have || d2 < best_d2) { have = true; best_d2 = d2; best = q; }
  };
  for (const auto& s : bd.simplices) {
    if (s.size() == 1) consider(s[0]);
    else if (s.size() == 2) {
      // closest point on the segment
      Rat len2(0), dot(0);
      for (int i = 0; i < n(); ++i) {
        Rat e = s[1][i] - s[0][i];
        len2 += e * e;
        dot += e * Rat(p[i] - s[0][i]);
      }
      Rat t = len2 == 0 ? Rat(0) : dot / len2;
      if (t < 0) t = 0;
      if (t > 1) t = 1;
      Vec q(n());
      for (int i = 0; i < n(); ++i) q[i] = s[0][i] + t * Rat(s[1][i] - s[0][i]);
      consider(q);
    } else {
      // triangle: plane projection if inside, else edges
      Vec e1(n()), e2(n()), r(n());
      for (int i = 0; i < n(); ++i) {
        e1[i] = s[1][i] - s[0][i];
        e2[i] = s[2][i] - s[0][i];
        r[i] = p[i] - s[0][i];
      }
      Rat a11(0), a12(0), a22(0), b1(0), b2(0);
      for (int i = 0; i < n(); ++i) {
        a11 += e1[i] * e1[i];
        a12 += e1[i] * e2[i];
        a22 += e2[i] * e2[i];
        b1 += e1[i] * r[i];
        b2 += e2[i] * r[i];
      }
      Rat det = a11 * a22 - a12 * a12;
      if (det != 0) {
        Rat u = (b1 * a22 - b2 * a12) / det;
        Rat v = (a11 * b2 - a12 * b1) / det;
        if (u >= 0 && v >= 0 && u + v <= 1) {
          Vec q(n());
          for (int i = 0; i < n(); ++i) q[i] = s[0][i] + u * e1[i] + v * e2[i];
          consider(q);
        }
      }
      for (int e = 0; e < 3; ++e) {
        const Vec& A = s[e];
        const Vec& B = s[(e + 1) % 3];
        Rat len2(0), dot(0);
        for (int i = 0; i < n(); ++i) {
          Rat d = B[i] - A[i];
          len2 += d * d;
          dot += d * Rat(p[i] - A[i]);
        }
        Rat t = len2 == 0 ? Rat(0) : dot / len2;
        if (t < 0) t = 0;
        if (t > 1) t = 1;
        Vec q(n());
        for (int i = 0; i < n(); ++i) q[i] = A[i] + t * Rat(B[i] - A[i]);
        consider(q);
      }
    }
  }
  return best;
}

Rat Ambient::max_reach() const {
  Rat m(0);
  for (int a = 0; a < n(); ++a) {
    Rat s = side(a);
    m = std::max(m, periodic[a] ? Rat(s / 2) : s);
  }
  return m;
}

// ----------------------------------------------------- admissible collections

AdmissibleSet interior_ball(const Vec& center, const Rat& radius) {
  return AdmissibleSet{false, center, radius};
}

AdmissibleSet boundary_collar(const Vec& boundary_point, const Rat& radius) {
  return AdmissibleSet{true, boundary_point, radius};
}

bool set_contains(const AdmissibleSet& s, const Ambient& amb, const Vec& x) {
  if (!s.collar) return amb.chebyshev(x, s.center) < s.radius;
  if (!amb.has_boundary()) return false;
  const OffsetDomain& dom = *amb.dom;
  if (dom.depth(x) >= s.radius) return false;
  bool at_center = true;
  for (int i = 0; i < amb.n(); ++i)
    if (x[i] != dom.center[i]) { at_center = false; break; }
  if (at_center) return false;
  Vec proj = dom.scale_to_gauge(x, Rat(1));
  return amb.chebyshev(proj, s.center) < s.radius;
}

Rat AdmissibleCollection::budget() const {
  Rat b(0);
  for (const auto& s : sets) b += s.radius;
  return b;
}

bool AdmissibleCollection::contains(const Ambient& amb, const Vec& x) const {
  for (const auto& s : sets)
    if (set_contains(s, amb, x)) return true;
  return false;
}

namespace {

// sup-norm circumradius bound of the domain boundary around its center
Rat boundary_reach(const Ambient& amb) {
  const OffsetDomain& dom = *amb.dom;
  Rat m(0);
  auto consider = [&](const Vec& v) {
    for (int i = 0; i < amb.n(); ++i)
      m = std::max(m, rat_abs(Rat(v[i] - dom.center[i])));
  };
  PolyChain bd = dom.boundary_chain();
  for (const auto& s : bd.simplices)
    for (const auto& v : s) consider(v);
  return m;
}

std::vector<Vec> cube_corners(const Ambient& amb, const Vec& c, const Rat& r) {
  int nn = amb.n();
  std::vector<Vec> out;
  for (int m = 0; m < (1 << nn); ++m) {
    Vec v = c;
    for (int a = 0; a < nn; ++a) v[a] += (m & (1 << a)) ? r : Rat(-r);
    out.push_back(v);
  }
  return out;
}

// conservative exact disjointness of one pair
bool pair_disjoint(const AdmissibleSet& s1, const AdmissibleSet& s2, const Ambient& amb) {
  if (!s1.collar && !s2.collar)
    return amb.chebyshev(s1.center, s2.center) >= s1.radius + s2.radius;
  if (s1.collar && s2.collar)
    return amb.chebyshev(s1.center, s2.center) >= s1.radius + s2.radius;
  const AdmissibleSet& ball = s1.collar ? s2 : s1;
  const AdmissibleSet& col = s1.collar ? s1 : s2;
  if (!amb.has_boundary()) return true;  // collar is empty without a boundary
  const OffsetDomain& dom = *amb.dom;
  // certificate 1: the whole ball is deeper than the collar (depth is concave,
  // so the minimum over the cube is at a corner)
  bool deeper = true;
  for (const auto& v : cube_corners(amb, ball.center, ball.radius))
    if (dom.depth(v) < col.radius) { deeper = false; break; }
  if (deeper) return true;
  // certificate 2: sup-norm separation; every collar point lies within
  // r (1 + reach/rho0) of the collar center
  Rat spread = col.radius * (1 + boundary_reach(amb) / dom.rho0);
  return amb.chebyshev(ball.center, col.center) >= ball.radius + spread;
}

}  // namespace

bool AdmissibleCollection::disjoint(const Ambient& amb) const {
  for (size_t i = 0; i < sets.size(); ++i)
    for (size_t j = i + 1; j < sets.size(); ++j)
      if (!pair_disjoint(sets[i], sets[j], amb)) return false;
  return true;
}

bool AdmissibleCollection::supports(const Ambient& amb, const PolyChain& diff,
                                    int subdiv) const {
  PolyChain c = diff.reduced();
  if (c.empty()) return true;
  if (c.dim >= 1 && subdiv > 0) c = c.subdivide(subdiv);
  for (const auto& s : c.simplices) {
    Vec bc = simplex_barycenter(s);
    bool ok = false;
    for (const auto& u : sets) {
      if (!set_contains(u, amb, bc)) continue;
      bool all = true;
      for (const auto& v : s)
        if (!set_contains(u, amb, v)) { all = false; break; }
      if (all) { ok = true; break; }
    }
    if (!ok) return false;
  }
  return true;
}

namespace {

// smallest sup-ball containing two sup-balls (exact, per-axis interval hull)
AdmissibleSet enclosing_ball(const AdmissibleSet& a, const AdmissibleSet& b,
                             const Ambient& amb) {
  int nn = amb.n();
  Vec c(nn);
  Rat r(0);
  for (int i = 0; i < nn; ++i) {
    Rat d = amb.axis_delta(i, a.center[i], b.center[i]);  // b relative to a
    Rat loe = std::min(Rat(-a.radius), Rat(d - b.radius));
    Rat hie = std::max(Rat(a.radius), Rat(d + b.radius));
    c[i] = a.center[i] + (loe + hie) / 2;
    r = std::max(r, Rat((hie - loe) / 2));
  }
  return interior_ball(amb.normalize(c), r);
}

// merge two boundary collars: enclosing footprint re-centered on the boundary
AdmissibleSet merge_collars(const AdmissibleSet& a, const AdmissibleSet& b,
                            const Ambient& amb) {
  AdmissibleSet hull = enclosing_ball(a, b, amb);
  Vec bc = amb.boundary_closest(hull.center);
  Rat r = std::max(Rat(amb.chebyshev(bc, a.center) + a.radius),
                   Rat(amb.chebyshev(bc, b.center) + b.radius));
  return boundary_collar(bc, r);
}

// replace an interior ball touching a collar (or the boundary) by a collar
AdmissibleSet absorb_into_collar(const AdmissibleSet* col, const AdmissibleSet& ball,
                                 const Ambient& amb) {
  Vec pb = amb.boundary_closest(ball.center);
  if (!col) return boundary_collar(pb, 3 * ball.radius);
  // footprint center between the collar center and the ball projection
  Vec mid(amb.n());
  for (int i = 0; i < amb.n(); ++i)
    mid[i] = col->center[i] + amb.axis_delta(i, col->center[i], pb[i]) / 2;
  Vec bc = amb.boundary_closest(mid);
  Rat grown = col->radius + 3 * ball.radius;
  Rat needed = std::max(Rat(amb.chebyshev(bc, col->center) + col->radius),
                        Rat(amb.chebyshev(bc, pb) + 2 * ball.radius));
  return boundary_collar(bc, std::max(grown, needed));
}

bool ball_hits_boundary(const AdmissibleSet& ball, const Ambient& amb) {
  if (!amb.has_boundary()) return false;
  const OffsetDomain& dom = *amb.dom;
  for (const auto& v : cube_corners(amb, ball.center, ball.radius))
    if (dom.gauge(v) >= 1) return true;
  return false;
}

// sampled points of a set for coverage certificates
std::vector<Vec> sample_set(const AdmissibleSet& s, const Ambient& amb) {
  std::vector<Vec> out;
  if (!s.collar) {
    out.push_back(s.center);
    for (const auto& v : cube_corners(amb, s.center, Rat(s.radius / 2)))
      out.push_back(v);
    if (amb.has_boundary()) {
      std::vector<Vec> keep;
      for (const auto& v : out)
        if (amb.dom->gauge(v) < 1) keep.push_back(v);
      return keep;
    }
    return out;
  }
  if (!amb.has_boundary()) return out;
  const OffsetDomain& dom = *amb.dom;
  // collar footprint samples pushed to a few depths
  std::vector<Vec> foot{s.center};
  PolyChain bd = dom.boundary_chain();
  for (const auto& sx : bd.simplices)
    for (const auto& v : sx)
      if (amb.chebyshev(v, s.center) < s.radius) foot.push_back(v);
  for (const auto& b : foot)
    for (int di = 0; di < 3; ++di) {
      Rat t = s.radius * Rat(2 * di + 1, 8);
      out.push_back(dom.collar_point(b, t));
    }
  return out;
}

struct MergeOutcome {
  std::vector<AdmissibleSet> sets;
  int merges = 0, replacements = 0;
};

// (*) and (**) loops shared by absorb_balls and merge_admissible
MergeOutcome run_merge_loops(std::vector<AdmissibleSet> sets, const Ambient& amb) {
  MergeOutcome out;
  bool changed = true;
  while (changed) {
    changed = false;
    // interior balls that reach the boundary become collars
    for (auto& s : sets) {
      if (!s.collar && ball_hits_boundary(s, amb)) {
        s = absorb_into_collar(nullptr, s, amb);
        out.replacements++;
        changed = true;
      }
    }
    for (size_t i = 0; i < sets.size() && !changed; ++i)
      for (size_t j = i + 1; j < sets.size() && !changed; ++j) {
        if (pair_disjoint(sets[i], sets[j], amb)) continue;
        AdmissibleSet merged;
        bool repl = false;
        if (!sets[i].collar && !sets[j].collar) {
          merged = enclosing_ball(sets[i], sets[j], amb);
        } else if (sets[i].collar && sets[j].collar) {
          merged = merge_collars(sets[i], sets[j], amb);
        } else {
          const AdmissibleSet& col = sets[i].collar ? sets[i] : sets[j];
          const AdmissibleSet& ball = sets[i].collar ? sets[j] : sets[i];
          merged = absorb_into_collar(&col, ball, amb);
          repl = true;
        }
        sets.erase(sets.begin() + j);
        sets[i] = merged;
        (repl ? out.replacements : out.merges)++;
        changed = true;
      }
  }
  out.sets = std::move(sets);
  return out;
}

bool covers_samples(const AdmissibleCollection& col, const Ambient& amb,
                    const std::vector<AdmissibleSet>& inputs) {
  for (const auto& s : inputs)
    for (const auto& p : sample_set(s, amb))
      if (!col.contains(amb, p)) return false;
  return true;
}

}  // namespace

CollectionResult absorb_balls(const std::vector<AdmissibleSet>& boundary_collars,
                              const std::vector<AdmissibleSet>& interior_balls,
                              const Ambient& amb, const Config& cfg) {
  (void)cfg;
  std::vector<AdmissibleSet> all;
  Rat bound(0);
  for (const auto& s : boundary_collars) {
    all.push_back(s);
    all.back().collar = true;
    bound += s.radius;
  }
  for (const auto& s : interior_balls) {
    all.push_back(s);
    all.back().collar = false;
    bound += 3 * s.radius;
  }
  MergeOutcome mo = run_merge_loops(all, amb);
  CollectionResult res;
  res.collection.sets = mo.sets;
  res.merges = mo.merges;
  res.replacements = mo.replacements;
  res.achieved = res.collection.budget();
  res.bound = bound;
  res.bound_ok = res.achieved <= bound;
  std::vector<AdmissibleSet> inputs = boundary_collars;
  for (const auto& s : interior_balls) inputs.push_back(s);
  res.covers_ok = covers_samples(res.collection, amb, inputs);
  return res;
}

CollectionResult merge_admissible(const AdmissibleCollection& a,
                                  const AdmissibleCollection& b, const Ambient& amb,
                                  const Config& cfg) {
  (void)cfg;
  std::vector<AdmissibleSet> all = a.sets;
  all.insert(all.end(), b.sets.begin(), b.sets.end());
  size_t v12 = all.size();
  MergeOutcome mo = run_merge_loops(all, amb);
  CollectionResult res;
  res.collection.sets = mo.sets;
  res.merges = mo.merges;
  res.replacements = mo.replacements;
  res.achieved = res.collection.budget();
  res.bound = 3 * (a.budget() + b.budget());
  res.bound_ok = res.achieved <= res.bound && res.collection.sets.size() <= v12;
  std::vector<AdmissibleSet> inputs = a.sets;
  inputs.insert(inputs.end(), b.sets.begin(), b.sets.end());
  res.covers_ok = covers_samples(res.collection, amb, inputs);
  return res;
}

// ------------------------------------------------------------- flat metrics

FlatMetric point_flat_metric(const Ambient& amb, int exact_limit) {
  Ambient a = amb;
  return [a, exact_limit](const PolyChain& x, const PolyChain& y) -> FlatDist {
    PolyChain diff = rel_reduce(x.plus(y), a);
    if (diff.empty()) return FlatDist{0.0, true};
    if (diff.dim != 0)
      throw FlatBudgetExceeded("point metric: not a 0-chain");
    std::vector<Vec> pts;
    for (const auto& s : diff.simplices) pts.push_back(s[0]);
    if ((int)pts.size() > 4 * exact_limit)
      throw FlatBudgetExceeded("point metric: matching too large");
    auto metric = [&a](const Vec& p, const Vec& q) { return euclid(a, p, q); };
    std::function<double(const Vec&)> bcost;
    PointMatch m;
    if (a.has_boundary()) {
      auto dom = a.dom;
      bcost = [dom](const Vec& p) { return std::sqrt(to_double(dom->boundary_dist2(p))); };
      m = match_points(pts, metric, &bcost, exact_limit);
    } else {
      m = match_points(pts, metric, nullptr, exact_limit);
    }
    return FlatDist{m.value, m.exact};
  };
}

FillOracle point_fill_oracle(const Ambient& amb, int exact_limit) {
  Ambient a = amb;
  return [a, exact_limit](const PolyChain& x, const PolyChain& y) -> PolyChain {
    PolyChain diff = rel_reduce(x.plus(y), a);
    PolyChain out;
    out.dim = 1;
    if (diff.empty()) return out;
    if (diff.dim != 0) throw FlatBudgetExceeded("point fill: not a 0-chain");
    std::vector<Vec> pts;
    for (const auto& s : diff.simplices) pts.push_back(s[0]);
    // plain euclidean matching; straight segments are valid fillings in both
    // ambient flavors (wrap shortcuts are not taken)
    auto metric = [](const Vec& p, const Vec& q) {
      double s = 0;
      for (size_t i = 0; i < p.size(); ++i) {
        double d = to_double(Rat(q[i] - p[i]));
        s += d * d;
      }
      return std::sqrt(s);
    };
    std::function<double(const Vec&)> bcost;
    PointMatch m;
    if (a.has_boundary()) {
      auto dom = a.dom;
      bcost = [dom](const Vec& p) { return std::sqrt(to_double(dom->boundary_dist2(p))); };
      m = match_points(pts, metric, &bcost, exact_limit);
    } else {
      m = match_points(pts, metric, nullptr, exact_limit);
    }
    for (const auto& pr : m.pairs) {
      Vec from = pts[pr.first];
      Vec to = pr.second >= 0 ? pts[pr.second] : a.boundary_closest(from);
      if (from != to) out.simplices.push_back({from, to});
    }
    return out.reduced();
  };
}

FlatMetric grid_flat_metric(GridPtr grid, FlatMode mode, const Config& cfg,
                            bool relative) {
  return [grid, mode, cfg, relative](const PolyChain& x, const PolyChain& y) -> FlatDist {
    PolyChain diff = x.plus(y);
    if (diff.empty()) return FlatDist{0.0, true};
    GridChain z = rasterize(diff, grid, 2);
    FillingCertificate cert = flat_norm_grid(z, mode, cfg, relative);
    if (!cert.feasible) throw FlatBudgetExceeded("grid metric: filling infeasible");
    return FlatDist{cert.value, cert.exact};
  };
}

FillOracle grid_fill_oracle(GridPtr grid, FlatMode mode, const Config& cfg,
                            bool relative) {
  return [grid, mode, cfg, relative](const PolyChain& x, const PolyChain& y) -> PolyChain {
    PolyChain diff = x.plus(y);
    PolyChain out;
    out.dim = diff.dim + 1;
    if (diff.empty()) return out;
    GridChain z = rasterize(diff, grid, 2);
    if (z.empty()) return out;
    FillingCertificate cert = flat_norm_grid(z, mode, cfg, relative);
    if (!cert.feasible) throw FlatBudgetExceeded("grid fill: filling infeasible");
    GridChain fill = GridChain::zero(grid, z.dim + 1);
    fill.bits = cert.filling;
    return fill.to_poly();
  };
}

// ---------------------------------------------------------- discrete family

const PolyChain& DiscreteFamily::value(const ParamCell& v) const {
  auto it = values.find(v);
  if (it == values.end()) throw std::invalid_argument("family: missing vertex value");
  return *it->second;
}

void DiscreteFamily::set_value(const ParamCell& v, PolyChain c) {
  values[v] = std::make_shared<const PolyChain>(std::move(c));
}

void DiscreteFamily::share_value(const ParamCell& v, ChainPtr c) { values[v] = std::move(c); }

double DiscreteFamily::sup_mass() const {
  double m = 0;
  for (const auto& [v, c] : values) m = std::max(m, c->mass());
  return m;
}

std::vector<ParamCell> cell_vertices(const ParamCell& c) {
  std::vector<ParamCell> out;
  int d = c.dim();
  for (int m = 0; m < (1 << d); ++m) {
    ParamCell v = c;
    int bit = 0;
    for (auto& ax : v.axes)
      if (ax.interval) {
        ax.interval = false;
        ax.index += (m >> bit++) & 1;
      }
    out.push_back(v);
  }
  return out;
}

FinenessReport check_fine(const DiscreteFamily& f, double eps, const FlatMetric& metric) {
  FinenessReport rep;
  rep.eps = eps;
  rep.fine = true;
  for (const auto& cell : f.param.cells) {
    if (cell.dim() == 0) continue;
    auto vs = cell_vertices(cell);
    for (size_t i = 0; i < vs.size(); ++i)
      for (size_t j = i + 1; j < vs.size(); ++j) {
        const PolyChain& a = f.value(vs[i]);
        const PolyChain& b = f.value(vs[j]);
        rep.pairs++;
        double d;
        try {
          d = metric(a, b).value;
        } catch (const FlatBudgetExceeded&) {
          rep.indeterminate = true;
          rep.fine = false;
          rep.worst_cell = cell;
          rep.worst_a = vs[i];
          rep.worst_b = vs[j];
          return rep;
        }
        if (d > rep.worst) {
          rep.worst = d;
          rep.worst_cell = cell;
          rep.worst_a = vs[i];
          rep.worst_b = vs[j];
        }
      }
  }
  rep.fine = rep.worst <= eps;
  return rep;
}

LocalizedReport check_localized(const DiscreteFamily& f) {
  LocalizedReport rep;
  if (!f.delta_localized) {
    rep.reason = "no localization metadata";
    return rep;
  }
  rep.delta = *f.delta_localized;
  int top = f.param.top_dim();
  for (const auto& cell : f.param.cells) {
    if (cell.dim() == 0 || cell.dim() < top) continue;
    rep.cells++;
    auto vs = cell_vertices(cell);
    bool constant = true;
    for (size_t i = 1; i < vs.size() && constant; ++i) {
      PolyChain d = f.value(vs[0]).plus(f.value(vs[i]));
      constant = rel_reduce(d, f.amb).empty();
    }
    auto it = f.collections.find(cell);
    if (it == f.collections.end()) {
      if (constant) continue;
      rep.bad_cell = cell;
      rep.reason = "missing collection";
      return rep;
    }
    const AdmissibleCollection& col = it->second;
    if (!(col.budget() < rep.delta)) {
      rep.bad_cell = cell;
      rep.reason = "budget not below delta";
      return rep;
    }
    if (!col.disjoint(f.amb)) {
      rep.bad_cell = cell;
      rep.reason = "sets not certified disjoint";
      return rep;
    }
    for (size_t i = 0; i < vs.size(); ++i)
      for (size_t j = i + 1; j < vs.size(); ++j) {
        PolyChain d = rel_reduce(f.value(vs[i]).plus(f.value(vs[j])), f.amb);
        if (d.empty()) continue;
        if (!col.supports(f.amb, d)) {
          rep.bad_cell = cell;
          rep.reason = "difference escapes the collection";
          return rep;
        }
      }
  }
  rep.ok = true;
  return rep;
}

// ------------------------------------------------------------- ball covers

BallCover make_cover(const Ambient& amb, const Rat& r0, const Config& cfg) {
  if (r0 <= 0) throw std::invalid_argument("make_cover: r0 must be positive");
  BallCover cover;
  cover.r0 = r0;
  int nn = amb.n();
  std::vector<long long> counts(nn);
  long long total = 1;
  for (int a = 0; a < nn; ++a) {
    Rat need = amb.side(a) / (2 * r0);
    Int c = rat_floor(need);
    if (Rat(c) < need) c += 1;
    if (c < 1) c = 1;
    counts[a] = to_ll(c);
    total *= counts[a];
    if (total > cfg.cover_cap)
      throw std::invalid_argument("make_cover: cover exceeds the configured cap");
  }
  std::vector<long long> idx(nn, 0);
  while (true) {
    Vec c(nn);
    for (int a = 0; a < nn; ++a) {
      if (amb.periodic[a]) {
        Rat sp = amb.side(a) / Rat(counts[a]);
        c[a] = amb.lo[a] + sp * Rat(2 * idx[a] + 1, 2);
      } else {
        c[a] = amb.lo[a] + r0 * Rat(2 * idx[a] + 1);
      }
    }
    cover.centers.push_back(c);
    int a = 0;
    for (; a < nn; ++a) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
    if (a == nn) break;
  }
  return cover;
}

// ---------------------------------------------------------- cutting schedules

namespace {

// crossing parameters of one segment with the sup-sphere of radius rho
std::vector<Rat> cheb_crossings(const Ambient& amb, const Vec& p, const Vec& q,
                                const Vec& center, const Rat& rho) {
  std::vector<Rat> ts;
  int nn = amb.n();
  for (int a = 0; a < nn; ++a) {
    if (amb.periodic[a] && rho >= amb.side(a) / 2) continue;  // unconstraining
    // path representative of the axis offset (midpoint patch)
    Rat mid = (p[a] + q[a]) / 2;
    Rat dm = amb.axis_delta(a, center[a], mid);
    Rat d0 = dm - (mid - p[a]);
    Rat dir = q[a] - p[a];
    if (dir == 0) continue;
    for (int sgn = -1; sgn <= 1; sgn += 2) {
      Rat t = (Rat(sgn) * rho - d0) / dir;
      if (t <= 0 || t >= 1) continue;
      // crossing must be a true sphere point: all axes within rho there
      Vec x(nn);
      for (int b = 0; b < nn; ++b) x[b] = p[b] + t * Rat(q[b] - p[b]);
      if (amb.chebyshev(x, center) == rho) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

// pre-split segments of a 1-chain at periodic antipodal planes of `center`
PolyChain split_antipodal(const PolyChain& c, const Ambient& amb, const Vec& center) {
  PolyChain out = c;
  for (int a = 0; a < amb.n(); ++a) {
    if (!amb.periodic[a]) continue;
    Rat s = amb.side(a);
    Rat plane = center[a] + s / 2;
    // wrap the plane coordinate into [lo, hi]
    Rat t = (plane - amb.lo[a]) / s;
    plane = plane - s * Rat(rat_floor(t));
    Vec normal(amb.n(), Rat(0));
    normal[a] = 1;
    out = out.split_by_hyperplane(normal, plane);
  }
  return out;
}

}  // namespace

PolyChain split_at_ball(const PolyChain& c, const Ambient& amb, const Vec& center,
                        const Rat& rho, int subdiv) {
  if (c.dim == 0) return c;
  if (c.dim >= 2) return subdiv > 0 ? c.subdivide(subdiv) : c;
  PolyChain base = split_antipodal(c, amb, center);
  PolyChain out;
  out.dim = 1;
  for (const auto& s : base.simplices) {
    auto ts = cheb_crossings(amb, s[0], s[1], center, rho);
    std::vector<Rat> knots{Rat(0)};
    for (const auto& t : ts) knots.push_back(t);
    knots.push_back(Rat(1));
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
      Vec a(amb.n()), b(amb.n());
      for (int d = 0; d < amb.n(); ++d) {
        a[d] = s[0][d] + knots[i] * Rat(s[1][d] - s[0][d]);
        b[d] = s[0][d] + knots[i + 1] * Rat(s[1][d] - s[0][d]);
      }
      if (a != b) out.simplices.push_back({a, b});
    }
  }
  return out;
}

PolyChain ball_restrict(const PolyChain& c, const Ambient& amb, const Vec& center,
                        const Rat& rho, bool inside) {
  return c.restrict_to([&amb, &center, &rho, inside](const Vec& bc) {
    return (amb.chebyshev(bc, center) < rho) == inside;
  });
}

PolyChain sphere_part(const PolyChain& bd, const Ambient& amb, const Vec& center,
                      const Rat& rho) {
  PolyChain out;
  out.dim = bd.dim;
  for (const auto& s : bd.simplices) {
    bool on = amb.chebyshev(simplex_barycenter(s), center) == rho;
    for (const auto& v : s)
      if (on && amb.chebyshev(v, center) != rho) on = false;
    if (on) out.simplices.push_back(s);
  }
  return out.reduced();
}

namespace {

// mass of the boundary created by restricting a split 1-chain to the sup-ball
// (closed-form parity count; used for the candidate scan)
double cut_mass_1d(const PolyChain& tau, const Ambient& amb, const Vec& center,
                   const Rat& rho) {
  std::map<Vec, int> parity;
  PolyChain base = split_antipodal(tau, amb, center);
  for (const auto& s : base.simplices) {
    auto ts = cheb_crossings(amb, s[0], s[1], center, rho);
    std::vector<Rat> knots{Rat(0)};
    for (const auto& t : ts) knots.push_back(t);
    knots.push_back(Rat(1));
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
      Rat tm = (knots[i] + knots[i + 1]) / 2;
      Vec mid(amb.n());
      for (int d = 0; d < amb.n(); ++d) mid[d] = s[0][d] + tm * Rat(s[1][d] - s[0][d]);
      if (amb.chebyshev(mid, center) >= rho) continue;  // piece outside
      for (const Rat& t : {knots[i], knots[i + 1]}) {
        Vec x(amb.n());
        for (int d = 0; d < amb.n(); ++d) x[d] = s[0][d] + t * Rat(s[1][d] - s[0][d]);
        if (amb.chebyshev(x, center) == rho) parity[x] ^= 1;
      }
    }
  }
  int cnt = 0;
  for (const auto& [p, v] : parity) cnt += v;
  return cnt;
}

CutStep choose_ball_slice(const PolyChain& tau, const Ambient& amb, const Vec& center,
                          const Rat& r0, const Config& cfg) {
  CutStep step;
  PolyChain twoB = ball_restrict(split_at_ball(tau, amb, center, 2 * r0,
                                               cfg.subdivide_depth),
                                 amb, center, 2 * r0, true);
  double m2 = twoB.mass();
  step.bound = m2 / to_double(r0);
  if (twoB.empty()) {
    step.rho = r0 * Rat(3, 2);
    step.within = true;
    return step;
  }
  int K = (int)std::ceil(cfg.slice_candidate_factor * m2 / to_double(r0));
  K = std::min(std::max(K, 1), cfg.slice_candidate_cap);
  for (int round = 0; round < 2; ++round) {
    bool have = false;
    Rat best_rho;
    double best_mass = 0;
    for (int j = 0; j < K; ++j) {
      Rat rho = r0 * (1 + Rat(2 * j + 1, 2 * K));
      double cm;
      if (tau.dim == 1) {
        cm = cut_mass_1d(tau, amb, center, rho);
      } else {
        PolyChain in = ball_restrict(split_at_ball(tau, amb, center, rho,
                                                   cfg.subdivide_depth),
                                     amb, center, rho, true);
        cm = sphere_part(rel_boundary(in, amb), amb, center, rho).mass();
      }
      if (!have || cm < best_mass) {
        have = true;
        best_mass = cm;
        best_rho = rho;
      }
    }
    if (have && best_mass <= step.bound * (1 + cfg.mass_rel_tol) + 1e-12) {
      step.rho = best_rho;
      step.cut_mass = best_mass;
      step.within = true;
      return step;
    }
    K = std::min(K * 4, cfg.slice_candidate_cap);
  }
  throw std::runtime_error("cut_d: no valid slice after refinement");
}

}  // namespace

const PolyChain& CutSchedule::at(int i) const {
  static const PolyChain empty0{};
  if (i < 0) throw std::invalid_argument("cut schedule index");
  if (i >= (int)d.size()) return empty0;
  return d[i];
}

const PolyChain& CutCycleSchedule::at(int i) const {
  static const PolyChain empty0{};
  if (i < 0) throw std::invalid_argument("cut schedule index");
  if (i >= (int)b.size()) return empty0;
  return b[i];
}

CutSchedule cut_d(const PolyChain& tau, const BallCover& cover, const Ambient& amb,
                  const Config& cfg) {
  CutSchedule sched;
  sched.d.push_back(tau.reduced());
  sched.d.back().dim = tau.dim;
  for (int i = 0; i < cover.size(); ++i) {
    const PolyChain& prev = sched.d.back();
    CutStep step = choose_ball_slice(prev, amb, cover.centers[i], cover.r0, cfg);
    step.index = i + 1;
    PolyChain split = split_at_ball(prev, amb, cover.centers[i], step.rho,
                                    cfg.subdivide_depth);
    PolyChain inside = ball_restrict(split, amb, cover.centers[i], step.rho, true);
    PolyChain next = ball_restrict(split, amb, cover.centers[i], step.rho, false);
    step.inside_mass = inside.mass();
    next.dim = tau.dim;
    sched.d.push_back(next.reduced());
    sched.d.back().dim = tau.dim;
    sched.steps.push_back(step);
  }
  return sched;
}

CutCycleSchedule cut_b(const PolyChain& z, const BallCover& cover, const Ambient& amb,
                       const Config& cfg) {
  CutCycleSchedule out;
  PolyChain zr = rel_reduce(z, amb);
  zr.dim = z.dim;
  if (zr.empty()) {
    out.w.dim = z.dim + 1;
    for (int i = 0; i <= cover.size(); ++i) {
      PolyChain e;
      e.dim = z.dim;
      out.b.push_back(e);
    }
    return out;
  }
  if (!rel_boundary(zr, amb).empty())
    throw std::runtime_error("cut_b: no filling within heuristic budget (not a cycle)");
  Vec apex(amb.n());
  if (amb.has_boundary()) apex = amb.dom->center;
  else
    for (int a = 0; a < amb.n(); ++a) apex[a] = (amb.lo[a] + amb.hi[a]) / 2;
  out.w = zr.cone(apex);
  PolyChain check = rel_reduce(rel_boundary(out.w, amb).plus(zr), amb);
  if (!check.empty())
    throw std::runtime_error("cut_b: no filling within heuristic budget");
  out.fill_mass = out.w.mass();
  CutSchedule ds = cut_d(out.w, cover, amb, cfg);
  for (int i = 0; i < (int)ds.d.size(); ++i) {
    PolyChain bi = rel_reduce(rel_boundary(ds.d[i], amb), amb);
    bi.dim = z.dim;
    out.b.push_back(bi);
  }
  return out;
}

NearMinimal near_minimal_rep(const PolyChain& v, double eps, const Ambient& amb,
                             const FlatMetric& metric, const Config& cfg) {
  (void)cfg;
  NearMinimal best;
  best.z = v.reduced();
  best.z.dim = v.dim;
  best.mass = best.z.mass();
  best.dist = 0;
  std::vector<PolyChain> cands;
  {
    PolyChain empty0;
    empty0.dim = v.dim;
    cands.push_back(empty0);
  }
  if (v.dim == 0) {
    // greedily drop the cheapest pair / boundary escape while within budget
    std::vector<Vec> pts;
    for (const auto& s : best.z.simplices) pts.push_back(s[0]);
    std::vector<char> alive(pts.size(), 1);
    double spent = 0;
    PolyChain cur = best.z;
    while (true) {
      double cheapest = -1;
      int bi = -1, bj = -1;
      for (size_t i = 0; i < pts.size(); ++i) {
        if (!alive[i]) continue;
        if (amb.has_boundary()) {
          double d = std::sqrt(to_double(amb.dom->boundary_dist2(pts[i])));
          if (cheapest < 0 || d < cheapest) { cheapest = d; bi = (int)i; bj = -1; }
        }
        for (size_t j = i + 1; j < pts.size(); ++j) {
          if (!alive[j]) continue;
          double d = euclid(amb, pts[i], pts[j]);
          if (cheapest < 0 || d < cheapest) { cheapest = d; bi = (int)i; bj = (int)j; }
        }
      }
      if (bi < 0 || spent + cheapest > eps) break;
      spent += cheapest;
      alive[bi] = 0;
      if (bj >= 0) alive[bj] = 0;
      PolyChain z;
      z.dim = 0;
      for (size_t i = 0; i < pts.size(); ++i)
        if (alive[i]) z.simplices.push_back({pts[i]});
      cands.push_back(z);
      cur = z;
    }
  }
  for (const auto& z : cands) {
    FlatDist d;
    try {
      d = metric(v, z);
    } catch (const FlatBudgetExceeded&) {
      continue;
    }
    if (d.value > eps) continue;
    double m = z.mass();
    if (m < best.mass) {
      best.z = z;
      best.mass = m;
      best.dist = d.value;
    }
  }
  // prefer the input when it is within the slack of the best found
  double vm = v.mass();
  if (vm <= best.mass + eps) {
    best.z = v.reduced();
    best.z.dim = v.dim;
    best.mass = vm;
    best.dist = 0;
  }
  return best;
}

// ------------------------------------------------------------- localization

namespace {

int floor_log3(long long n) {
  int e = 0;
  long long p = 1;
  while (p * 3 <= n) { p *= 3; ++e; }
  return e;
}

ParamCell vertex_cell_from_indices(const std::vector<long long>& idx) {
  ParamCell v;
  for (long long i : idx) v.axes.push_back(AxisCell{false, i});
  return v;
}

// exact lattice indices of a parameter point at the given level; throws if
// the point is off-lattice
std::vector<long long> lattice_indices(const Vec& x, int level) {
  Int den = pow3(level);
  std::vector<long long> idx;
  for (const auto& c : x) {
    Rat t = c * Rat(den);
    if (denominator(t) != 1)
      throw std::logic_error("localize: point off the expected lattice");
    idx.push_back(to_ll(numerator(t)));
  }
  return idx;
}

Vec point_from_indices(const std::vector<long long>& idx, int level) {
  Rat u = unit3(level);
  Vec x;
  for (long long i : idx) x.push_back(u * Rat(i));
  return x;
}

std::string chain_key(const PolyChain& c) {
  PolyChain r = c.reduced();
  std::ostringstream os;
  os << r.dim << '#';
  std::vector<std::string> parts;
  for (const auto& s : r.simplices) {
    std::ostringstream ps;
    for (const auto& v : s) {
      for (const auto& coord : v) ps << coord << ',';
      ps << ';';
    }
    parts.push_back(ps.str());
  }
  std::sort(parts.begin(), parts.end());
  for (const auto& p : parts) os << p << '|';
  return os.str();
}

struct SigmaContext {
  const DiscreteFamily* f = nullptr;
  const BallCover* cover = nullptr;
  const Config* cfg = nullptr;
  const FillOracle* fill = nullptr;
  const FlatMetric* metric = nullptr;
  double eps = 0;
  int q = 0;
  std::vector<int> qlev;  // qlev[i] = q + q' + 2i, index 0 unused
  int N = 0;

  std::map<std::string, CutSchedule> d_sched;
  std::map<std::string, CutCycleSchedule> b_sched;
  std::map<std::string, PolyChain> fill_cache;
  long long schedules_built = 0, b_corrections = 0;

  const CutSchedule& dsched(const PolyChain& tau) {
    std::string key = chain_key(tau);
    auto it = d_sched.find(key);
    if (it != d_sched.end()) return it->second;
    schedules_built++;
    return d_sched.emplace(key, cut_d(tau, *cover, f->amb, *cfg)).first->second;
  }
  const CutCycleSchedule& bsched(const PolyChain& z) {
    std::string key = chain_key(z);
    auto it = b_sched.find(key);
    if (it != b_sched.end()) return it->second;
    return b_sched.emplace(key, cut_b(z, *cover, f->amb, *cfg)).first->second;
  }
  PolyChain filled(const PolyChain& a, const PolyChain& b) {
    std::string key = chain_key(a) + "/" + chain_key(b);
    auto it = fill_cache.find(key);
    if (it != fill_cache.end()) return it->second;
    PolyChain q0 = (*fill)(a, b);
    fill_cache.emplace(key, q0);
    return q0;
  }
};

// per-cell sigma evaluator; built stage by stage and kept for later stages
struct SigmaCell {
  SigmaContext* ctx = nullptr;
  ParamCell cell;            // coarse cell (level q)
  int level = 0;             // q_l for l = dim(cell)
  ParamCell base;            // x(C)
  PolyChain F_C;             // value at x(C)
  PolyChain z, Qz;           // near-minimal representative and its filling
  ParamCell far_vertex;      // edges only: the endpoint y
  std::map<std::string, PolyChain> memo;

  // towers need access to lower-dimensional SigmaCells
  std::map<ParamCell, std::shared_ptr<SigmaCell>>* store = nullptr;

  PolyChain eval(const Vec& x);       // sigma_C(x) for x in C
  PolyChain tower(int j, const Vec& x);  // sigma_C^j(x) for x in the j-skeleton
};

PolyChain SigmaCell::tower(int j, const Vec& x) {
  SigmaContext& c = *ctx;
  std::ostringstream ks;
  ks << 'T' << j << ':';
  for (const auto& v : x) ks << v << ',';
  std::string key = ks.str();
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  PolyChain res;
  if (j == 0) {
    auto idx = lattice_indices(x, c.q);
    res = c.filled(F_C, c.f->value(vertex_cell_from_indices(idx)));
  } else {
    Vec tx = theta_map(x, c.q);
    if (tx == x) {
      // theta-fixed: center of the carrier face (or a coarse vertex)
      auto carr = carrier(c.f->param, x);
      if (!carr) throw std::logic_error("localize: point escapes the complex");
      if (carr->dim() == 0) {
        res = c.filled(F_C, c.f->value(*carr));
      } else {
        auto sit = store->find(*carr);
        if (sit == store->end()) throw std::logic_error("localize: missing face data");
        PolyChain q1 = c.filled(F_C, c.f->value(sit->second->base));
        res = q1.plus(sit->second->eval(xi_map(x, c.q)));
        res.dim = q1.dim;
      }
    } else {
      PolyChain A = tower(j, tx);
      Vec xx = xi_map(xi_map(x, c.q), c.q);
      PolyChain B = tower(j - 1, xx);
      PolyChain cyc = B.plus(A);
      cyc.dim = A.dim;
      Rat njq = Rat(pow3(c.qlev[j] + 1)) * sup_dist(x, xi_map(x, c.q));
      long long nj3 = to_ll(rat_floor(njq));
      PolyChain corr = c.bsched(cyc).at((int)nj3);
      c.b_corrections++;
      res = A.plus(corr);
      res.dim = A.dim;
    }
  }
  memo.emplace(key, res);
  return res;
}

PolyChain SigmaCell::eval(const Vec& x) {
  SigmaContext& c = *ctx;
  std::ostringstream ks;
  ks << 'E' << ':';
  for (const auto& v : x) ks << v << ',';
  std::string key = ks.str();
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  int l = cell.dim();
  PolyChain res;
  res.dim = F_C.dim + 1;
  // points on the relative boundary of the cell route through the towers
  bool on_boundary = false;
  {
    auto carr = carrier(c.f->param, x);
    if (carr && carr->dim() < l) on_boundary = true;
  }
  if (center_contains(cell, c.q, x)) {
    // empty sigma
  } else if (l == 1) {
    Vec y = c.f->param.vertex_point(far_vertex);
    Rat n1r = Rat(pow3(c.qlev[1])) * sup_dist(x, y);
    long long n1 = to_ll(rat_floor(n1r));
    if (n1 <= c.N) {
      PolyChain QE = c.filled(F_C, c.f->value(far_vertex));
      PolyChain arg = QE.plus(Qz);
      arg.dim = Qz.dim;
      res = Qz.plus(c.dsched(arg).at((int)n1));
      res.dim = Qz.dim;
    } else {
      res = c.dsched(Qz).at((int)(n1 - c.N));
      res.dim = Qz.dim;
    }
  } else if (on_boundary) {
    res = tower(l - 1, xi_map(x, c.q));
  } else {
    Rat nlr = Rat(pow3(c.qlev[l])) * sup_dist(x, xi_map(x, c.q));
    long long nl = to_ll(rat_floor(nlr));
    PolyChain A = tower(l - 1, xi_map(x, c.q));
    if (nl >= 1 && nl <= c.N) {
      PolyChain arg = A.plus(Qz);
      arg.dim = Qz.dim;
      res = Qz.plus(c.dsched(arg).at((int)nl));
      res.dim = Qz.dim;
    } else if (nl > c.N) {
      res = c.dsched(Qz).at((int)(nl - c.N));
      res.dim = Qz.dim;
    } else {
      res = A;  // nl == 0 outside the center: keep the tower value
    }
  }
  memo.emplace(key, res);
  return res;
}

}  // namespace

LocalizeResult localize(const DiscreteFamily& f, const Rat& delta,
                        const FlatMetric& metric, const FillOracle& fill,
                        const Config& cfg) {
  int p = f.param.top_dim();
  int m = f.param.m;
  int q = f.param.j;
  if (p > cfg.max_family_dim)
    throw std::invalid_argument("localize: parameter dimension above the cap");
  if (to_double(delta) > cfg.family_delta0)
    throw std::invalid_argument("localize: delta above delta0");

  FinenessReport fine = check_fine(f, cfg.family_eps0, metric);
  if (fine.indeterminate)
    throw std::runtime_error("localize: flat-norm budget exceeded on a vertex pair");
  if (!fine.fine) throw std::invalid_argument("localize: input family is not eps0-fine");
  double eps = std::max(fine.worst, 1e-9);

  LocalizeResult res;
  res.drift_bound = cfg.family_c * eps / std::pow(to_double(delta), 4.0 * f.amb.n() * std::max(p, 1));
  res.growth_bound = cfg.family_c * eps / std::pow(to_double(delta), 6.0 * f.amb.n() * std::max(p, 1));

  if (p <= 0) {
    res.out = f;
    res.out.delta_localized = delta;
    res.out.eps_fine = fine.worst;
    res.q_tilde = q;
    res.bounds_ok = true;
    return res;
  }

  Rat r0 = delta / Rat(Int(1) << (3 * p));
  res.cover = make_cover(f.amb, r0, cfg);
  int N = res.cover.size();
  res.q_prime = floor_log3(N) + 1;
  std::vector<int> qlev(p + 1, q);
  for (int i = 1; i <= p; ++i) qlev[i] = q + res.q_prime + 2 * i;
  res.q_tilde = qlev[p];

  // desk-scale lattice budget
  double total = std::pow(std::pow(3.0, res.q_tilde), m);
  if (total > 2.5e6)
    throw std::invalid_argument("localize: refined lattice too large at desk scale");

  SigmaContext ctx;
  ctx.f = &f;
  ctx.cover = &res.cover;
  ctx.cfg = &cfg;
  ctx.fill = &fill;
  ctx.metric = &metric;
  ctx.eps = eps;
  ctx.q = q;
  ctx.qlev = qlev;
  ctx.N = N;

  std::map<ParamCell, std::shared_ptr<SigmaCell>> store;

  // stage values: per level l, vertex values at level qlev[l] on the l-skeleton
  std::vector<std::map<std::vector<long long>, ChainPtr>> stage(p + 1);
  for (const auto& [v, c] : f.values) {
    std::vector<long long> idx;
    for (const auto& ax : v.axes) idx.push_back(ax.index);
    stage[0][idx] = c;
  }

  auto stage_lookup = [&](int l, const Vec& x) -> ChainPtr {
    auto idx = lattice_indices(x, qlev[l]);
    auto it = stage[l].find(idx);
    if (it == stage[l].end()) throw std::logic_error("localize: missing stage value");
    return it->second;
  };

  for (int l = 1; l <= p; ++l) {
    StageLog log;
    log.stage = l;
    log.q_level = qlev[l];

    // Step 1: (l-1)-skeleton at level qlev[l] via two chart contractions
    long long scale = to_ll(pow3(qlev[l] - q));
    for (const auto& cell : f.param.cells) {
      if (cell.dim() > l - 1) continue;
      // enumerate the refined lattice inside this cell
      std::vector<std::vector<long long>> ranges;
      for (const auto& ax : cell.axes) {
        std::vector<long long> r;
        if (!ax.interval) r.push_back(ax.index * scale);
        else
          for (long long t = 0; t <= scale; ++t) r.push_back(ax.index * scale + t);
        ranges.push_back(r);
      }
      std::vector<size_t> at(ranges.size(), 0);
      while (true) {
        std::vector<long long> idx(ranges.size());
        for (size_t a = 0; a < ranges.size(); ++a) idx[a] = ranges[a][at[a]];
        if (!stage[l].count(idx)) {
          Vec x = point_from_indices(idx, qlev[l]);
          Vec xx = xi_map(xi_map(x, q), q);
          stage[l][idx] = stage_lookup(l - 1, xx);
        }
        size_t a = 0;
        for (; a < ranges.size(); ++a) {
          if (++at[a] < ranges[a].size()) break;
          at[a] = 0;
        }
        if (a == ranges.size()) break;
      }
    }

    // Steps 2 and 3 per l-cell
    int cells_done = 0;
    for (const auto& cell : f.param.cells) {
      if (cell.dim() != l) continue;
      auto sc = std::make_shared<SigmaCell>();
      sc->ctx = &ctx;
      sc->cell = cell;
      sc->level = qlev[l];
      sc->base = base_vertex(cell);
      sc->F_C = f.value(sc->base);
      NearMinimal nm = near_minimal_rep(sc->F_C, eps, f.amb, metric, cfg);
      sc->z = nm.z;
      sc->Qz = ctx.filled(sc->F_C, sc->z);
      sc->store = &store;
      if (l == 1) {
        auto vs = cell_vertices(cell);
        sc->far_vertex = vs[0] == sc->base ? vs[1] : vs[0];
      }
      store[cell] = sc;

      ChainPtr fc_shared = std::make_shared<const PolyChain>(sc->F_C);
      // interior lattice points of the cell at level qlev[l]
      std::vector<int> ext_axes;
      for (size_t a = 0; a < cell.axes.size(); ++a)
        if (cell.axes[a].interval) ext_axes.push_back((int)a);
      std::vector<long long> offs(ext_axes.size(), 1);
      if (scale < 2) continue;  // no interior points
      while (true) {
        std::vector<long long> idx;
        for (const auto& ax : cell.axes) idx.push_back(ax.interval ? 0 : ax.index * scale);
        for (size_t a = 0, e = 0; a < cell.axes.size(); ++a)
          if (cell.axes[a].interval) idx[a] = cell.axes[a].index * scale + offs[e++];
        Vec x = point_from_indices(idx, qlev[l]);
        if (center_contains(cell, q, x)) {
          stage[l][idx] = fc_shared;
        } else {
          PolyChain sig = sc->eval(x);
          PolyChain val = sc->F_C.plus(rel_boundary(sig, f.amb));
          val.dim = sc->F_C.dim;
          stage[l][idx] = std::make_shared<const PolyChain>(rel_reduce(val, f.amb));
        }
        size_t e = 0;
        for (; e < offs.size(); ++e) {
          if (++offs[e] < scale) break;
          offs[e] = 1;
        }
        if (e == offs.size()) break;
      }
      cells_done++;
    }

    double sup = 0;
    for (const auto& [idx, c] : stage[l]) sup = std::max(sup, c->mass());
    log.sup_mass = sup;
    std::ostringstream note;
    note << "stage " << l << ": cells=" << cells_done
         << " lattice=" << stage[l].size() << " d-schedules=" << ctx.schedules_built
         << " b-corrections=" << ctx.b_corrections;
    log.note = note.str();
    res.log.push_back(log);
  }

  // assemble the output family at level q_tilde
  res.out.param = refine(f.param, res.q_tilde);
  res.out.k = f.k;
  res.out.amb = f.amb;
  for (const auto& [idx, c] : stage[p]) res.out.share_value(vertex_cell_from_indices(idx), c);
  for (const auto& v : res.out.param.cells_of_dim(0))
    if (!res.out.values.count(v))
      throw std::logic_error("localize: output vertex was never assigned");

  // drift at coarse vertices (exact preservation expected) + growth
  double sup_in = f.sup_mass();
  long long scale_t = to_ll(pow3(res.q_tilde - q));
  for (const auto& [v, c] : f.values) {
    std::vector<long long> idx;
    for (const auto& ax : v.axes) idx.push_back(ax.index * scale_t);
    auto it = res.out.values.find(vertex_cell_from_indices(idx));
    if (it == res.out.values.end()) continue;
    double d = metric(*c, *it->second).value;
    res.worst_drift = std::max(res.worst_drift, d);
  }
  res.worst_growth = std::max(0.0, res.out.sup_mass() - sup_in);

  // per-cell admissible collections at the output level
  Rat two_r0 = 2 * res.cover.r0;
  int top = res.out.param.top_dim();
  double worst_adj = 0;
  int metric_budget = 4000;
  for (const auto& cell : res.out.param.cells) {
    if (cell.dim() != top) continue;
    auto vs = cell_vertices(cell);
    std::set<int> needed;
    bool nonconstant = false;
    std::vector<AdmissibleSet> extra;
    for (size_t i = 0; i < vs.size(); ++i)
      for (size_t j = i + 1; j < vs.size(); ++j) {
        const auto& ca = res.out.values.at(vs[i]);
        const auto& cb = res.out.values.at(vs[j]);
        if (ca == cb) continue;
        PolyChain d = rel_reduce(ca->plus(*cb), f.amb);
        if (d.empty()) continue;
        nonconstant = true;
        if (metric_budget > 0) {
          metric_budget--;
          try {
            worst_adj = std::max(worst_adj, metric(*ca, *cb).value);
          } catch (const FlatBudgetExceeded&) {
          }
        }
        // assign each difference piece to one cover ball, subdividing
        // simplices that straddle balls
        std::vector<std::pair<Simplex, int>> work;
        for (const auto& s : d.simplices) work.push_back({s, 0});
        while (!work.empty()) {
          auto [s, depth] = work.back();
          work.pop_back();
          Vec bc = simplex_barycenter(s);
          bool found = false;
          for (int bi = 0; bi < res.cover.size(); ++bi) {
            if (f.amb.chebyshev(bc, res.cover.centers[bi]) >= two_r0) continue;
            bool inside = true;
            for (const auto& vv : s)
              if (f.amb.chebyshev(vv, res.cover.centers[bi]) >= two_r0) {
                inside = false;
                break;
              }
            if (inside) {
              needed.insert(bi);
              found = true;
              break;
            }
          }
          if (found) continue;
          if (d.dim >= 1 && depth < 4) {
            PolyChain one;
            one.dim = d.dim;
            one.simplices.push_back(s);
            for (const auto& sub : one.subdivide(1).simplices)
              work.push_back({sub, depth + 1});
            continue;
          }
          if (f.amb.has_boundary())
            extra.push_back(boundary_collar(f.amb.boundary_closest(bc), two_r0));
          // without a boundary the straddling piece stays unassigned; the
          // supports() certificate below decides whether that is fatal
        }
      }
    if (!nonconstant) continue;
    std::vector<AdmissibleSet> balls;
    for (int bi : needed) balls.push_back(interior_ball(res.cover.centers[bi], two_r0));
    CollectionResult cr = absorb_balls(extra, balls, f.amb, cfg);
    res.out.collections[cell] = cr.collection;
  }
  res.out.delta_localized = delta;
  res.out.eps_fine = worst_adj;
  res.worst_drift = std::max(res.worst_drift, 0.0);
  res.bounds_ok = res.worst_drift <= res.drift_bound + 1e-12 &&
                  res.worst_growth <= res.growth_bound + 1e-12 && worst_adj <= res.drift_bound + 1e-12;

  LocalizedReport check = check_localized(res.out);
  if (!check.ok)
    throw std::runtime_error("localize: self-certification failed: " + check.reason);
  return res;
}

// ---------------------------------------------------------------- evaluators

namespace {

// sup-norm radial contraction of a chain piece inside one admissible set
PolyChain contract_piece(const PolyChain& piece, const AdmissibleSet& u,
                         const Ambient& amb, const Rat& t) {
  if (piece.empty()) return piece;
  if (t == 1) return piece;
  PolyChain out;
  out.dim = piece.dim;
  if (!u.collar) {
    if (t == 0) {
      if (piece.dim == 0) {
        // parity of the points lands at the center
        if (piece.reduced().simplices.size() % 2) out.simplices.push_back({u.center});
        return out;
      }
      return out;  // degenerate for k >= 1
    }
    for (const auto& s : piece.simplices) {
      Simplex ns;
      for (const auto& v : s) {
        Vec w(amb.n());
        for (int a = 0; a < amb.n(); ++a)
          w[a] = u.center[a] + t * amb.axis_delta(a, u.center[a], v[a]);
        ns.push_back(amb.normalize(w));
      }
      out.simplices.push_back(ns);
    }
    return out.reduced();
  }
  // collar: E(x, r) -> E(t x, t r) in the boundary chart around the center
  const OffsetDomain& dom = *amb.dom;
  for (const auto& s : piece.simplices) {
    Simplex ns;
    bool ok = true;
    for (const auto& v : s) {
      Rat depth = dom.depth(v);
      bool at_center = true;
      for (int i = 0; i < amb.n(); ++i)
        if (v[i] != dom.center[i]) { at_center = false; break; }
      if (at_center) { ok = false; break; }
      Vec b = dom.scale_to_gauge(v, Rat(1));
      Vec bi(amb.n());
      for (int a = 0; a < amb.n(); ++a)
        bi[a] = u.center[a] + t * amb.axis_delta(a, u.center[a], b[a]);
      // re-project the contracted chart point onto the boundary
      bool at_c2 = true;
      for (int i = 0; i < amb.n(); ++i)
        if (bi[i] != dom.center[i]) { at_c2 = false; break; }
      if (at_c2) { ok = false; break; }
      Vec b2 = dom.scale_to_gauge(bi, Rat(1));
      ns.push_back(dom.collar_point(b2, Rat(t * depth)));
    }
    if (ok) out.simplices.push_back(ns);
  }
  return out.reduced();
}

struct ConeCoords {
  bool at_vertex = false;
  Rat s;   // radial position: 0 at v(C), 1 on the far boundary
  Vec exit;  // exit point on the far boundary
};

ConeCoords cone_coordinates(const CubicalParamComplex& X, const ParamCell& cell,
                            const Vec& y) {
  ConeCoords cc;
  Vec v = X.vertex_point(base_vertex(cell));
  Rat u = unit3(X.j);
  Rat s(0);
  for (size_t a = 0; a < cell.axes.size(); ++a)
    if (cell.axes[a].interval) s = std::max(s, Rat(Rat(y[a] - v[a]) / u));
  if (s == 0) {
    cc.at_vertex = true;
    return cc;
  }
  cc.s = s;
  cc.exit.resize(y.size());
  for (size_t a = 0; a < y.size(); ++a)
    cc.exit[a] = v[a] + Rat(y[a] - v[a]) / s;
  return cc;
}

PolyChain eval_localized(const DiscreteFamily& f, const Vec& y);

PolyChain eval_localized_cell(const DiscreteFamily& f, const ParamCell& cell, const Vec& y) {
  if (cell.dim() == 0) return f.value(cell);
  ConeCoords cc = cone_coordinates(f.param, cell, y);
  ParamCell vb = base_vertex(cell);
  if (cc.at_vertex) return f.value(vb);
  PolyChain G = eval_localized(f, cc.exit);
  PolyChain diff = rel_reduce(f.value(vb).plus(G), f.amb);
  if (diff.empty()) return G;
  auto it = f.collections.find(cell);
  const AdmissibleCollection* col = it != f.collections.end() ? &it->second : nullptr;
  Rat t = 1 - cc.s;
  PolyChain out = G;
  PolyChain rest = diff;
  if (col) {
    for (const auto& u : col->sets) {
      PolyChain split = u.collar ? rest
                                 : split_at_ball(rest, f.amb, u.center, u.radius, 1);
      PolyChain piece = split.restrict_to([&](const Vec& bc) {
        return set_contains(u, f.amb, bc);
      });
      if (piece.empty()) continue;
      PolyChain keep = split.restrict_to([&](const Vec& bc) {
        return !set_contains(u, f.amb, bc);
      });
      rest = keep;
      out = out.plus(contract_piece(piece, u, f.amb, t));
      out.dim = G.dim;
    }
  }
  // anything not covered by the collection rides along unchanged
  out = out.plus(rest);
  out.dim = G.dim;
  return rel_reduce(out, f.amb);
}

PolyChain eval_localized(const DiscreteFamily& f, const Vec& y) {
  auto carr = carrier(f.param, y);
  if (!carr) throw std::invalid_argument("evaluate: point outside the complex");
  return eval_localized_cell(f, *carr, y);
}

}  // namespace

FamilyEvaluator extend(const DiscreteFamily& f, const Config& cfg) {
  if (!f.delta_localized)
    throw std::invalid_argument("extend: family is not delta-localized");
  if (to_double(*f.delta_localized) >= cfg.family_delta0 * 2)
    throw std::invalid_argument("extend: delta too large");
  int top = f.param.top_dim();
  for (const auto& cell : f.param.cells) {
    if (cell.dim() != top || cell.dim() == 0) continue;
    if (f.collections.count(cell)) continue;
    auto vs = cell_vertices(cell);
    for (size_t i = 1; i < vs.size(); ++i)
      if (!rel_reduce(f.value(vs[0]).plus(f.value(vs[i])), f.amb).empty())
        throw std::invalid_argument("extend: missing collection on a varying cell");
  }
  FamilyEvaluator ev;
  DiscreteFamily copy = f;
  ev.base = f;
  ev.q_tilde = f.param.j + cfg.witness_extra;
  ev.witness = refine(f.param, ev.q_tilde);
  ev.eval = [copy](const Vec& y) { return eval_localized(copy, y); };
  return ev;
}

// ------------------------------------------------------ 0-cycle evaluator

namespace {

struct PairBall {
  Vec center;
  Rat radius;
  bool escape = false;
};

// deterministic greedy pairing of difference points; escapes to the boundary
// pair with their closest boundary point
std::vector<PairBall> pair_balls(const PolyChain& diff, const Ambient& amb) {
  std::vector<Vec> pts;
  for (const auto& s : diff.simplices) pts.push_back(s[0]);
  std::vector<char> alive(pts.size(), 1);
  std::vector<PairBall> balls;
  int remaining = (int)pts.size();
  while (remaining >= 2) {
    double bestd = 0;
    int bi = -1, bj = -1;
    for (size_t i = 0; i < pts.size(); ++i) {
      if (!alive[i]) continue;
      for (size_t j = i + 1; j < pts.size(); ++j) {
        if (!alive[j]) continue;
        double d = euclid(amb, pts[i], pts[j]);
        if (bi < 0 || d < bestd) { bestd = d; bi = (int)i; bj = (int)j; }
      }
    }
    PairBall b;
    Vec mid(amb.n());
    for (int a = 0; a < amb.n(); ++a)
      mid[a] = pts[bi][a] + amb.axis_delta(a, pts[bi][a], pts[bj][a]) / 2;
    b.center = amb.normalize(mid);
    b.radius = amb.chebyshev(pts[bi], pts[bj]) / 2 + Rat(1, 1000000);
    balls.push_back(b);
    alive[bi] = alive[bj] = 0;
    remaining -= 2;
  }
  if (remaining == 1) {
    for (size_t i = 0; i < pts.size(); ++i)
      if (alive[i]) {
        PairBall b;
        b.escape = true;
        b.center = amb.has_boundary() ? amb.boundary_closest(pts[i]) : pts[i];
        b.radius = amb.chebyshev(pts[i], b.center) + Rat(1, 1000000);
        balls.push_back(b);
      }
  }
  // merge overlapping balls so the parity sets stay disjoint
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < balls.size() && !changed; ++i)
      for (size_t j = i + 1; j < balls.size() && !changed; ++j) {
        if (amb.chebyshev(balls[i].center, balls[j].center) >=
            balls[i].radius + balls[j].radius)
          continue;
        AdmissibleSet e = enclosing_ball(interior_ball(balls[i].center, balls[i].radius),
                                         interior_ball(balls[j].center, balls[j].radius),
                                         amb);
        bool esc = balls[i].escape || balls[j].escape;
        balls.erase(balls.begin() + j);
        balls[i] = PairBall{e.center, e.radius, esc};
        if (esc && amb.has_boundary()) {
          // keep escape balls anchored on the boundary
          Vec bc = amb.boundary_closest(balls[i].center);
          balls[i].radius = balls[i].radius + amb.chebyshev(bc, balls[i].center);
          balls[i].center = bc;
        }
        changed = true;
      }
  }
  return balls;
}

PolyChain eval_zero(const DiscreteFamily& f, const Vec& y);

PolyChain eval_zero_cell(const DiscreteFamily& f, const ParamCell& cell, const Vec& y) {
  if (cell.dim() == 0) return rel_reduce(f.value(cell), f.amb);
  ConeCoords cc = cone_coordinates(f.param, cell, y);
  ParamCell vb = base_vertex(cell);
  PolyChain FV = rel_reduce(f.value(vb), f.amb);
  if (cc.at_vertex) return FV;
  PolyChain G = eval_zero(f, cc.exit);
  PolyChain diff = G.plus(FV);
  if (diff.empty()) return G;
  auto balls = pair_balls(diff, f.amb);
  Rat t = 1 - cc.s;  // 0 at the far boundary, 1 at the base vertex
  auto in_some_ball = [&](const Vec& p, size_t& which) {
    for (size_t i = 0; i < balls.size(); ++i)
      if (f.amb.chebyshev(p, balls[i].center) < balls[i].radius) { which = i; return true; }
    return false;
  };
  PolyChain out;
  out.dim = 0;
  const PolyChain& source = t <= Rat(1, 2) ? G : FV;
  // contraction factor toward each ball center: 1 at the owning endpoint,
  // 0 at the half-way parity collapse
  Rat lam = t <= Rat(1, 2) ? Rat(1 - 2 * t) : Rat(2 * t - 1);
  std::vector<int> parity(balls.size(), 0);
  for (const auto& s : source.simplices) {
    size_t w;
    if (!in_some_ball(s[0], w)) {
      out.simplices.push_back(s);
      continue;
    }
    if (lam == 0) {
      parity[w] ^= 1;
      continue;
    }
    Vec p(f.amb.n());
    for (int a = 0; a < f.amb.n(); ++a)
      p[a] = balls[w].center[a] + lam * f.amb.axis_delta(a, balls[w].center[a], s[0][a]);
    out.simplices.push_back({f.amb.normalize(p)});
  }
  for (size_t i = 0; i < balls.size(); ++i)
    if (parity[i]) out.simplices.push_back({balls[i].center});
  return rel_reduce(out, f.amb);
}

PolyChain eval_zero(const DiscreteFamily& f, const Vec& y) {
  auto carr = carrier(f.param, y);
  if (!carr) throw std::invalid_argument("evaluate: point outside the complex");
  return eval_zero_cell(f, *carr, y);
}

}  // namespace

FamilyEvaluator extend_zero_cycles(const DiscreteFamily& f, const Config& cfg) {
  if (f.k != 0) throw std::invalid_argument("extend_zero_cycles: k must be 0");
  FamilyEvaluator ev;
  DiscreteFamily copy = f;
  ev.base = f;
  ev.q_tilde = f.param.j + cfg.witness_extra;
  ev.witness = refine(f.param, ev.q_tilde);
  ev.eval = [copy](const Vec& y) { return eval_zero(copy, y); };
  return ev;
}

// ------------------------------------------------------------------ homotopy

HomotopyResult homotopy(const DiscreteFamily& f0, const DiscreteFamily& f1,
                        double eps, const FillOracle& fill, const Config& cfg) {
  if (f0.param.m != f1.param.m || f0.param.j != f1.param.j ||
      !(f0.param.cells == f1.param.cells))
    throw std::invalid_argument("homotopy: parameter complexes differ");
  if (eps > cfg.family_eps0)
    throw std::invalid_argument("homotopy: eps too large");
  if (!f0.delta_localized || !f1.delta_localized)
    throw std::invalid_argument("homotopy: inputs are not delta-localized");

  Rat delta = std::min(*f0.delta_localized, *f1.delta_localized);
  int p = std::max(f0.param.top_dim(), 0);
  int q = f0.param.j;
  int n = f0.amb.n();
  Rat r0 = delta / Rat(Int(1) << (3 * std::max(p, 1)));

  HomotopyResult hr;
  auto cover = std::make_shared<BallCover>(make_cover(f0.amb, r0, cfg));
  int N = cover->size();
  int q_prime = floor_log3(N) + 1;
  int q_tilde = q + q_prime + std::max(p, 1);
  hr.time_steps = (int)to_ll(pow3(q_tilde));

  // per-vertex tau fillings, verified against eps
  auto taus = std::make_shared<std::map<ParamCell, PolyChain>>();
  auto scheds = std::make_shared<std::map<ParamCell, CutSchedule>>();
  for (const auto& [v, c0] : f0.values) {
    const PolyChain& a = *c0;
    const PolyChain& b = f1.value(v);
    PolyChain tau = fill(a, b);
    if (tau.mass() > eps * (1 + 1e-6) + 1e-9)
      throw std::invalid_argument("homotopy: families farther apart than eps");
    (*taus)[v] = tau;
    (*scheds)[v] = cut_d(tau, *cover, f0.amb, cfg);
  }

  DiscreteFamily base0 = f0, base1 = f1;
  int steps = hr.time_steps;
  Ambient amb = f0.amb;
  auto eval = [base0, base1, taus, scheds, steps, amb](const Vec& xt) -> PolyChain {
    if (xt.empty()) throw std::invalid_argument("homotopy: empty evaluation point");
    Vec x(xt.begin(), xt.end() - 1);
    Rat t = xt.back();
    if (t < 0) t = 0;
    if (t > 1) t = 1;
    // snap x to the nearest coarse vertex of its carrier (ties downward)
    auto carr = carrier(base0.param, x);
    if (!carr) throw std::invalid_argument("homotopy: point outside the complex");
    ParamCell v = *carr;
    Rat u = unit3(base0.param.j);
    for (size_t a = 0; a < v.axes.size(); ++a)
      if (v.axes[a].interval) {
        Rat frac = x[a] / u - Rat(v.axes[a].index);
        v.axes[a].interval = false;
        if (frac > Rat(1, 2)) v.axes[a].index += 1;
      }
    // time index
    Rat ti = t * Rat(steps);
    Int i = rat_floor(ti);
    if (Rat(ti - Rat(i)) > Rat(1, 2)) i += 1;
    int ii = (int)to_ll(i);
    const PolyChain& f1v = base1.value(v);
    const CutSchedule& sc = scheds->at(v);
    PolyChain cut = sc.at(ii);
    PolyChain val = f1v.plus(rel_boundary(cut, amb));
    val.dim = f1v.dim;
    return rel_reduce(val, amb);
  };

  FamilyEvaluator ev;
  ev.base = f0;
  ev.q_tilde = q_tilde;
  ev.witness = refine(f0.param, std::min(q_tilde, q + 2));
  ev.eval = eval;
  hr.map = ev;

  double m = std::max(f0.sup_mass(), f1.sup_mass());
  hr.mass_bound = cfg.family_c *
                  (m + eps / std::pow(to_double(delta), 6.0 * n * std::max(p, 1)));
  // witness scan
  for (const auto& [v, c] : f0.values) {
    Vec x = f0.param.vertex_point(v);
    for (int s = 0; s <= 4; ++s) {
      Vec xt = x;
      xt.push_back(Rat(s, 4));
      hr.sup_mass = std::max(hr.sup_mass, ev.eval(xt).mass());
    }
  }
  hr.bounds_ok = hr.sup_mass <= hr.mass_bound + 1e-12;
  return hr;
}

// ------------------------------------------------------- no-concentration

ConcentrationReport concentration_modulus(const FamilyEvaluator& f, const Rat& r,
                                          int param_samples, const Config& cfg) {
  (void)cfg;
  ConcentrationReport rep;
  rep.scale = r;
  const Ambient& amb = f.base.amb;
  // parameter sample points: the witness lattice, capped
  std::vector<Vec> xs;
  for (const auto& v : f.witness.cells_of_dim(0)) {
    xs.push_back(f.witness.vertex_point(v));
    if ((int)xs.size() >= param_samples) break;
  }
  // ambient centers: lattice of spacing r
  std::vector<Vec> centers;
  {
    int nn = amb.n();
    std::vector<long long> counts(nn);
    long long total = 1;
    for (int a = 0; a < nn; ++a) {
      Rat need = amb.side(a) / r;
      Int c = rat_floor(need) + 1;
      counts[a] = std::min<long long>(to_ll(c), 32);
      total *= counts[a];
    }
    if (total > 100000) total = 100000;
    std::vector<long long> idx(nn, 0);
    long long made = 0;
    while (made < total) {
      Vec c(nn);
      for (int a = 0; a < nn; ++a)
        c[a] = amb.lo[a] + amb.side(a) * Rat(2 * idx[a] + 1, 2 * counts[a]);
      centers.push_back(c);
      made++;
      int a = 0;
      for (; a < nn; ++a) {
        if (++idx[a] < counts[a]) break;
        idx[a] = 0;
      }
      if (a == nn) break;
    }
  }
  for (const auto& x : xs) {
    PolyChain c = f.eval(x);
    rep.samples++;
    for (const auto& p : centers) {
      PolyChain piece = ball_restrict(split_at_ball(c, amb, p, r, 1), amb, p, r, true);
      rep.modulus = std::max(rep.modulus, piece.mass());
    }
  }
  return rep;
}

LocalizeResult perturb_no_concentration(const FamilyEvaluator& f, double eps,
                                        const Rat& delta, const FlatMetric& metric,
                                        const FillOracle& fill, const Config& cfg) {
  // required scale: c * delta0, threshold eps / (2c)
  double scale_d = cfg.family_c * cfg.family_delta0;
  Rat scale = Rat(Int((long long)std::llround(scale_d * 4096))) / Rat(4096);
  Rat reach = f.base.amb.max_reach();
  if (scale > reach) scale = reach;
  ConcentrationReport rep = concentration_modulus(f, scale, 64, cfg);
  if (rep.modulus > eps / (2 * cfg.family_c))
    throw std::runtime_error("mass concentrates");

  // sample the evaluator onto a refined lattice
  DiscreteFamily g;
  g.param = refine(f.base.param, f.base.param.j + cfg.witness_extra);
  g.k = f.base.k;
  g.amb = f.base.amb;
  for (const auto& v : g.param.cells_of_dim(0))
    g.set_value(v, f.eval(g.param.vertex_point(v)));

  LocalizeResult res = localize(g, delta, metric, fill, cfg);

  // certify pointwise closeness and mass growth on the sampled vertices
  double sup_f = 0;
  for (const auto& [v, c] : g.values) sup_f = std::max(sup_f, c->mass());
  for (const auto& [v, c] : g.values) {
    std::vector<long long> idx;
    long long sc = to_ll(pow3(res.q_tilde - g.param.j));
    for (const auto& ax : v.axes) idx.push_back(ax.index * sc);
    auto it = res.out.values.find(vertex_cell_from_indices(idx));
    if (it == res.out.values.end()) continue;
    if (metric(*c, *it->second).value > eps + 1e-9)
      throw std::runtime_error("perturb_no_concentration: drift exceeds eps");
  }
  if (res.out.sup_mass() > sup_f + eps + 1e-9)
    throw std::runtime_error("perturb_no_concentration: mass growth exceeds eps");
  return res;
}

// -------------------------------------------------------------- serialization

std::string poly_to_json(const PolyChain& c) {
  json j;
  j["dim"] = c.dim;
  json arr = json::array();
  for (const auto& s : c.simplices) {
    json sx = json::array();
    for (const auto& v : s) {
      json vx = json::array();
      for (const auto& coord : v) vx.push_back(rat_str(coord));
      sx.push_back(vx);
    }
    arr.push_back(sx);
  }
  j["simplices"] = arr;
  return j.dump();
}

PolyChain poly_from_json(const std::string& text) {
  json j = json::parse(text);
  PolyChain c;
  c.dim = j.at("dim").get<int>();
  for (const auto& sx : j.at("simplices")) {
    Simplex s;
    for (const auto& vx : sx) {
      Vec v;
      for (const auto& coord : vx) v.push_back(rat_parse(coord.get<std::string>()));
      s.push_back(v);
    }
    c.simplices.push_back(s);
  }
  return c;
}

namespace {

json cell_to_json(const ParamCell& c) {
  json arr = json::array();
  for (const auto& ax : c.axes) arr.push_back(json::array({ax.interval ? 1 : 0, ax.index}));
  return arr;
}

ParamCell cell_from_json(const json& arr) {
  ParamCell c;
  for (const auto& ax : arr)
    c.axes.push_back(AxisCell{ax.at(0).get<int>() != 0, ax.at(1).get<long long>()});
  return c;
}

}  // namespace

std::string DiscreteFamily::to_json() const {
  json j;
  j["param"] = json::parse(param.to_json());
  j["k"] = k;
  json vals = json::object();
  auto verts = param.cells_of_dim(0);
  std::map<ParamCell, int> vidx;
  for (size_t i = 0; i < verts.size(); ++i) vidx[verts[i]] = (int)i;
  for (const auto& [v, c] : values) {
    auto it = vidx.find(v);
    if (it == vidx.end()) continue;
    vals[std::to_string(it->second)] = json::parse(poly_to_json(*c));
  }
  j["values"] = vals;
  json meta = json::object();
  if (eps_fine) meta["eps_fine"] = *eps_fine;
  if (delta_localized) meta["delta_localized"] = rat_str(*delta_localized);
  if (!collections.empty()) {
    json cols = json::array();
    for (const auto& [cell, col] : collections) {
      json jc;
      jc["cell"] = cell_to_json(cell);
      json sets = json::array();
      for (const auto& s : col.sets) {
        json js;
        js["collar"] = s.collar;
        json ctr = json::array();
        for (const auto& coord : s.center) ctr.push_back(rat_str(coord));
        js["center"] = ctr;
        js["radius"] = rat_str(s.radius);
        sets.push_back(js);
      }
      jc["sets"] = sets;
      cols.push_back(jc);
    }
    meta["collections"] = cols;
  }
  j["meta"] = meta;
  return j.dump(2);
}

DiscreteFamily DiscreteFamily::from_json(const std::string& text, const Ambient& amb) {
  json j = json::parse(text);
  DiscreteFamily f;
  f.param = CubicalParamComplex::from_json(j.at("param").dump());
  f.k = j.at("k").get<int>();
  f.amb = amb;
  auto verts = f.param.cells_of_dim(0);
  for (const auto& [key, val] : j.at("values").items()) {
    int i = std::stoi(key);
    if (i < 0 || i >= (int)verts.size())
      throw std::invalid_argument("family json: vertex index out of range");
    f.set_value(verts[i], poly_from_json(val.dump()));
  }
  if (j.contains("meta")) {
    const json& meta = j.at("meta");
    if (meta.contains("eps_fine")) f.eps_fine = meta.at("eps_fine").get<double>();
    if (meta.contains("delta_localized"))
      f.delta_localized = rat_parse(meta.at("delta_localized").get<std::string>());
    if (meta.contains("collections"))
      for (const auto& jc : meta.at("collections")) {
        AdmissibleCollection col;
        for (const auto& js : jc.at("sets")) {
          AdmissibleSet s;
          s.collar = js.at("collar").get<bool>();
          for (const auto& coord : js.at("center")) s.center.push_back(rat_parse(coord.get<std::string>()));
          s.radius = rat_parse(js.at("radius").get<std::string>());
          col.sets.push_back(s);
        }
        f.collections[cell_from_json(jc.at("cell"))] = col;
      }
  }
  return f;
}

}  // namespace cyclecraft
