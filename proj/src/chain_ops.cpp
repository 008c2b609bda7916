#include "cyclecraft/chain_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cyclecraft {

PolyChain offset_restrict(const PolyChain& c, const OffsetDomain& dom, const Rat& r) {
  Rat s = 1 - r / dom.rho0;
  return c.restrict_to([&](const Vec& b) { return dom.gauge(b) <= s; });
}

namespace {

std::vector<Rat> crossings_with(const PolyChain& bd, const Vec& a, const Vec& b) {
  // intersect [a,b] with every facet of a (scaled) boundary chain
  std::vector<Rat> params;
  Vec d = vsub(b, a);
  for (const auto& f : bd.simplices) {
    if (bd.dim == 1) {
      // a + t d = f0 + u (f1 - f0), solved by Cramer's rule
      Rat e0 = f[1][0] - f[0][0], e1 = f[1][1] - f[0][1];
      Rat det = e0 * d[1] - d[0] * e1;
      if (det == 0) continue;
      Rat r0 = f[0][0] - a[0], r1 = f[0][1] - a[1];
      Rat t = (e0 * r1 - r0 * e1) / det;
      Rat u = (d[0] * r1 - r0 * d[1]) / det;
      if (t > 0 && t < 1 && u >= 0 && u <= 1) params.push_back(t);
    } else if (bd.dim == 2) {
      // a + t d = f0 + u e1 + v e2, solved by Cramer's rule
      Vec e1 = vsub(f[1], f[0]), e2 = vsub(f[2], f[0]);
      Rat n0 = e1[1] * e2[2] - e1[2] * e2[1];
      Rat n1 = e1[2] * e2[0] - e1[0] * e2[2];
      Rat n2 = e1[0] * e2[1] - e1[1] * e2[0];
      Rat det = d[0] * n0 + d[1] * n1 + d[2] * n2;
      if (det == 0) continue;
      Rat r0 = f[0][0] - a[0], r1 = f[0][1] - a[1], r2 = f[0][2] - a[2];
      Rat t = (r0 * n0 + r1 * n1 + r2 * n2) / det;
      Rat m0 = r1 * e2[2] - r2 * e2[1], m1 = r2 * e2[0] - r0 * e2[2],
          m2 = r0 * e2[1] - r1 * e2[0];
      Rat u = -(d[0] * m0 + d[1] * m1 + d[2] * m2) / det;
      Rat q0 = e1[1] * r2 - e1[2] * r1, q1 = e1[2] * r0 - e1[0] * r2,
          q2 = e1[0] * r1 - e1[1] * r0;
      Rat v = -(d[0] * q0 + d[1] * q1 + d[2] * q2) / det;
      if (t > 0 && t < 1 && u >= 0 && v >= 0 && u + v <= 1) params.push_back(t);
    } else if (bd.dim == 0) {
      // 1-D domain: crossing where a + t d equals the boundary point
      size_t piv = 0;
      while (piv < d.size() && d[piv] == 0) ++piv;
      if (piv == d.size()) continue;
      Rat t = (f[0][piv] - a[piv]) / d[piv];
      if (t > 0 && t < 1 && vlerp(a, b, t) == f[0]) params.push_back(t);
    }
  }
  std::sort(params.begin(), params.end());
  params.erase(std::unique(params.begin(), params.end()), params.end());
  return params;
}

// Exact mass of the 0-chain created on the level surface {gauge = s} when a
// 1-chain is cut there and the part with gauge <= s is kept.  Matches
// split_at_gauge + restrict + boundary + restrict without building any chain:
// a level point survives iff an odd number of kept pieces end at it.
double level_cut_mass(const PolyChain& c, const OffsetDomain& dom, const Rat& s) {
  PolyChain bd = dom.boundary_chain(dom.rho0 * (1 - s));
  std::map<Vec, int> parity;
  std::vector<Rat> ts;
  for (const auto& seg : c.simplices) {
    if (seg[0] == seg[1]) continue;
    ts.clear();
    ts.push_back(0);
    for (const Rat& t : crossings_with(bd, seg[0], seg[1])) ts.push_back(t);
    ts.push_back(1);
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
      Vec mid = vlerp(seg[0], seg[1], (ts[i] + ts[i + 1]) / 2);
      if (dom.gauge(mid) > s) continue;
      for (int e = 0; e < 2; ++e) {
        Vec p = vlerp(seg[0], seg[1], ts[i + e]);
        if (dom.gauge(p) == s) parity[p] ^= 1;
      }
    }
  }
  int n = 0;
  for (const auto& [p, odd] : parity) n += odd;
  return n;
}

}  // namespace

std::vector<Rat> gauge_crossings(const Vec& a, const Vec& b, const OffsetDomain& dom,
                                 const Rat& s) {
  return crossings_with(dom.boundary_chain(dom.rho0 * (1 - s)), a, b);
}

PolyChain split_at_gauge(const PolyChain& c, const OffsetDomain& dom, const Rat& s,
                         int subdiv) {
  if (c.dim == 0) return c;
  if (c.dim >= 2) return c.subdivide(subdiv);
  PolyChain out;
  out.dim = 1;
  for (const auto& seg : c.simplices) {
    auto params = gauge_crossings(seg[0], seg[1], dom, s);
    Vec prev = seg[0];
    for (const Rat& t : params) {
      Vec m = vlerp(seg[0], seg[1], t);
      if (m != prev) out.simplices.push_back({prev, m});
      prev = m;
    }
    if (prev != seg[1]) out.simplices.push_back({prev, seg[1]});
  }
  return out;
}

SliceResult coarea_slice(const PolyChain& tau, const OffsetDomain& dom, const Rat& eps,
                         const Config& cfg,
                         const std::vector<std::pair<Rat, Rat>>& forbidden) {
  if (eps <= 0) throw std::invalid_argument("coarea_slice: eps must be positive");
  if (eps >= dom.rho0) throw std::invalid_argument("coarea_slice: eps exceeds collar radius");
  double mtau = tau.mass();
  // the pigeonhole budget is the exact mass inside the depth-eps collar band
  Rat s_eps = 1 - eps / dom.rho0;
  PolyChain banded = split_at_gauge(tau, dom, s_eps, cfg.subdivide_depth);
  double collar_mass =
      banded.restrict_to([&](const Vec& b) { return dom.gauge(b) >= s_eps; }).mass();
  int cand = (int)std::ceil(cfg.slice_candidate_factor * mtau / to_double(eps));
  cand = std::min(std::max(cand, 1), cfg.slice_candidate_cap);

  SliceResult best;
  best.candidates = cand;
  bool have = false;
  // 1-chains admit an exact closed-form count of the points a level cut
  // creates, so the argmin scan avoids building a chain per candidate
  bool closed_form = tau.dim == 1;
  PolyChain refined;
  if (!closed_form)
    refined = tau.dim >= 2 ? tau.subdivide(cfg.subdivide_depth) : tau;
  Rat best_r;
  double best_cm = 0;
  for (int j = 0; j < cand; ++j) {
    Rat r = eps * Rat(2 * j + 1, 2 * cand);
    bool bad = false;
    for (const auto& [flo, fhi] : forbidden)
      if (r >= flo && r <= fhi) { bad = true; break; }
    if (bad) continue;
    Rat s = 1 - r / dom.rho0;
    double cm;
    if (closed_form) {
      cm = level_cut_mass(tau, dom, s);
    } else {
      PolyChain inside = refined.restrict_to([&](const Vec& b) { return dom.gauge(b) <= s; });
      cm = inside.boundary().restrict_to([&](const Vec& b) { return dom.gauge(b) == s; }).mass();
    }
    if (!have || cm < best_cm) {
      have = true;
      best_r = r;
      best_cm = cm;
    }
  }
  if (!have) throw std::runtime_error("coarea_slice: no admissible slice");
  {
    Rat s = 1 - best_r / dom.rho0;
    PolyChain split = split_at_gauge(tau, dom, s, cfg.subdivide_depth);
    PolyChain inside = split.restrict_to([&](const Vec& b) { return dom.gauge(b) <= s; });
    // boundary created on the slice surface = faces of `inside` at gauge s
    PolyChain created =
        inside.boundary().restrict_to([&](const Vec& b) { return dom.gauge(b) == s; });
    best.r = best_r;
    best.new_boundary_mass = created.mass();
    best.inside = std::move(inside);
    best.new_boundary = std::move(created);
  }
  best.certified_bound = cfg.c_slice * collar_mass / to_double(eps);
  best.within_bound =
      best.new_boundary_mass <= best.certified_bound * (1 + cfg.mass_rel_tol) + 1e-12;
  return best;
}

double mass_relative(const PolyChain& c, const OffsetDomain& dom) {
  double m = 0;
  PolyChain red = (c.dim <= 1) ? c.reduced() : c;
  for (const auto& s : red.simplices) {
    if (dom.gauge(simplex_barycenter(s)) == 1) continue;  // boundary-supported: free
    m += simplex_volume(s);
  }
  return m;
}

}  // namespace cyclecraft
