#include "cyclecraft/domain.hpp"

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cyclecraft {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Rat unit_rat(std::uint64_t& state) {
  return Rat((long)(splitmix64(state) & 0xfffffull), 1048576L);
}

Rat rat_sqrt_lower(const Rat& x) {
  if (x <= 0) return 0;
  double d = std::sqrt(to_double(x));
  Rat r = rat_approx(d * (1 - 1e-12));
  while (r * r > x) r = r * Rat(999999, 1000000);
  return r;
}

Rat point_seg_dist2(const Vec& p, const Vec& a, const Vec& b) {
  Vec ab = vsub(b, a), ap = vsub(p, a);
  Rat denom = vnorm2(ab);
  if (denom == 0) return vnorm2(ap);
  Rat t = vdot(ap, ab) / denom;
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  return dist2(p, vlerp(a, b, t));
}

Rat point_tri_dist2(const Vec& p, const Simplex& tri) {
  // project p onto the triangle plane; clamp to edges when outside
  Vec u = vsub(tri[1], tri[0]), v = vsub(tri[2], tri[0]), w = vsub(p, tri[0]);
  Rat uu = vnorm2(u), vv = vnorm2(v), uv = vdot(u, v);
  Rat denom = uu * vv - uv * uv;
  if (denom == 0) {
    Rat d = point_seg_dist2(p, tri[0], tri[1]);
    Rat e = point_seg_dist2(p, tri[0], tri[2]);
    return d < e ? d : e;
  }
  Rat wu = vdot(w, u), wv = vdot(w, v);
  Rat s = (wu * vv - wv * uv) / denom;
  Rat t = (wv * uu - wu * uv) / denom;
  if (s >= 0 && t >= 0 && s + t <= 1) {
    Vec q = vadd(tri[0], vadd(vscale(s, u), vscale(t, v)));
    return dist2(p, q);
  }
  Rat best = point_seg_dist2(p, tri[0], tri[1]);
  Rat d2 = point_seg_dist2(p, tri[1], tri[2]);
  if (d2 < best) best = d2;
  d2 = point_seg_dist2(p, tri[0], tri[2]);
  if (d2 < best) best = d2;
  return best;
}

Vec sphere_point_near(const Vec& c, const Rat& R, const std::array<double, 3>& dir,
                      std::int64_t max_den) {
  double dx = dir[0], dy = dir[1], dz = dir[2];
  double len = std::sqrt(dx * dx + dy * dy + dz * dz);
  dx /= len; dy /= len; dz /= len;
  bool south = dz >= 0;  // project from the pole opposite the point
  double denom = south ? 1 + dz : 1 - dz;
  Rat u = rat_approx(dx / denom, max_den);
  Rat w = rat_approx(dy / denom, max_den);
  Rat s = 1 + u * u + w * w;
  Rat x = 2 * u / s, y = 2 * w / s, z = (1 - u * u - w * w) / s;
  if (!south) z = -z;
  return {c[0] + R * x, c[1] + R * y, c[2] + R * z};
}

OffsetDomain OffsetDomain::box(const Vec& lo, const Vec& hi) {
  OffsetDomain d;
  d.kind = Kind::Box;
  d.n = (int)lo.size();
  d.lo = lo;
  d.hi = hi;
  d.center.resize(d.n);
  Rat min_h;
  Rat diag2 = 0;
  for (int a = 0; a < d.n; ++a) {
    if (hi[a] <= lo[a]) throw std::invalid_argument("box with empty extent");
    d.center[a] = (lo[a] + hi[a]) / 2;
    Rat h = (hi[a] - lo[a]) / 2;
    if (a == 0 || h < min_h) min_h = h;
    diag2 += h * h;
  }
  d.rho0 = min_h;
  d.rho_max = std::sqrt(to_double(diag2));
  return d;
}

OffsetDomain OffsetDomain::ngon_disc(int nsides, const Rat& radius, const Vec& center) {
  if (nsides < 3) throw std::invalid_argument("ngon needs >= 3 sides");
  OffsetDomain d;
  d.kind = Kind::Poly2;
  d.n = 2;
  d.center = center;
  double R = to_double(radius);
  for (int i = 0; i < nsides; ++i) {
    double th = 2 * M_PI * i / nsides;
    // rational point near the circle (the polygon is the exact domain)
    Rat x = rat_approx(R * std::cos(th), 1 << 14);
    Rat y = rat_approx(R * std::sin(th), 1 << 14);
    d.loop.push_back({center[0] + x, center[1] + y});
  }
  Rat min_d2;
  double rmax = 0;
  for (int i = 0; i < nsides; ++i) {
    const Vec& a = d.loop[i];
    const Vec& b = d.loop[(i + 1) % nsides];
    Rat d2 = point_seg_dist2(center, a, b);
    if (i == 0 || d2 < min_d2) min_d2 = d2;
    rmax = std::max(rmax, dist(center, a));
    d.loop_len.push_back(rat_sqrt_lower(dist2(a, b)));
  }
  d.rho0 = rat_sqrt_lower(min_d2);
  d.rho_max = rmax;
  return d;
}

OffsetDomain OffsetDomain::pl_ball(const Rat& radius, const Vec& center, int subdiv) {
  OffsetDomain d;
  d.kind = Kind::Poly3;
  d.n = 3;
  d.center = center;
  // octahedron vertices are exactly on the sphere; subdivide and re-project
  // midpoints to exact rational sphere points (stereographic snapping)
  std::vector<Vec> vs = {
      {center[0] + radius, center[1], center[2]}, {center[0] - radius, center[1], center[2]},
      {center[0], center[1] + radius, center[2]}, {center[0], center[1] - radius, center[2]},
      {center[0], center[1], center[2] + radius}, {center[0], center[1], center[2] - radius}};
  std::vector<std::array<int, 3>> fs = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                                        {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  for (int round = 0; round < subdiv; ++round) {
    std::map<std::pair<int, int>, int> midmap;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midmap.find(key);
      if (it != midmap.end()) return it->second;
      Vec m = vlerp(vs[a], vs[b], Rat(1, 2));
      std::array<double, 3> dir = {to_double(m[0] - center[0]), to_double(m[1] - center[1]),
                                   to_double(m[2] - center[2])};
      Vec q = sphere_point_near(center, radius, dir);
      int id = (int)vs.size();
      vs.push_back(q);
      midmap.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> nf;
    for (auto& f : fs) {
      int m01 = midpoint(f[0], f[1]), m12 = midpoint(f[1], f[2]), m02 = midpoint(f[0], f[2]);
      nf.push_back({f[0], m01, m02});
      nf.push_back({f[1], m12, m01});
      nf.push_back({f[2], m02, m12});
      nf.push_back({m01, m12, m02});
    }
    fs = std::move(nf);
  }
  Rat min_d2;
  bool first = true;
  for (auto& f : fs) {
    Simplex t = {vs[f[0]], vs[f[1]], vs[f[2]]};
    Rat d2 = point_tri_dist2(center, t);
    if (first || d2 < min_d2) { min_d2 = d2; first = false; }
    d.tris.push_back(std::move(t));
  }
  d.rho0 = rat_sqrt_lower(min_d2);
  d.rho_max = to_double(radius);
  return d;
}

OffsetDomain OffsetDomain::segment(const Vec& a, const Vec& b) {
  OffsetDomain d;
  d.kind = Kind::Segment;
  d.n = (int)a.size();
  d.seg_a = a;
  d.seg_b = b;
  d.center = vlerp(a, b, Rat(1, 2));
  d.rho0 = rat_sqrt_lower(dist2(a, b) / 4);
  d.rho_max = dist(a, b) / 2;
  return d;
}

Rat OffsetDomain::gauge(const Vec& p) const {
  switch (kind) {
    case Kind::Box: {
      Rat g = 0;
      for (int a = 0; a < n; ++a) {
        Rat h = (hi[a] - lo[a]) / 2;
        Rat v = (p[a] - center[a]) / h;
        if (v < 0) v = -v;
        if (v > g) g = v;
      }
      return g;
    }
    case Kind::Segment: {
      // param along the segment; gauge = |2 lambda - 1|
      Vec d = vsub(seg_b, seg_a);
      size_t piv = 0;
      while (piv < d.size() && d[piv] == 0) ++piv;
      if (piv == d.size()) throw std::invalid_argument("degenerate segment domain");
      Rat lam = (p[piv] - seg_a[piv]) / d[piv];
      Rat g = 2 * lam - 1;
      return g < 0 ? -g : g;
    }
    case Kind::Poly2: {
      Vec r = vsub(p, center);
      if (is_zero(r)) return 0;
      // ray center->p against each boundary edge
      for (size_t i = 0; i < loop.size(); ++i) {
        const Vec& a = loop[i];
        const Vec& b = loop[(i + 1) % loop.size()];
        // center + t r = a + u (b-a)
        Mat m = {{r[0], a[0] - b[0]}, {r[1], a[1] - b[1]}};
        auto sol = solve(m, {a[0] - center[0], a[1] - center[1]});
        if (!sol) continue;
        Rat t = (*sol)[0], u = (*sol)[1];
        if (t > 0 && u >= 0 && u <= 1) return 1 / t;
      }
      throw std::logic_error("gauge ray missed polygon boundary");
    }
    case Kind::Poly3: {
      Vec r = vsub(p, center);
      if (is_zero(r)) return 0;
      for (const auto& tri : tris) {
        Vec e1 = vsub(tri[1], tri[0]), e2 = vsub(tri[2], tri[0]);
        Mat m = {{r[0], -e1[0], -e2[0]}, {r[1], -e1[1], -e2[1]}, {r[2], -e1[2], -e2[2]}};
        auto sol = solve(m, {tri[0][0] - center[0], tri[0][1] - center[1], tri[0][2] - center[2]});
        if (!sol) continue;
        Rat t = (*sol)[0], u = (*sol)[1], v = (*sol)[2];
        if (t > 0 && u >= 0 && v >= 0 && u + v <= 1) return 1 / t;
      }
      throw std::logic_error("gauge ray missed PL sphere");
    }
  }
  throw std::logic_error("unreachable");
}

Vec OffsetDomain::scale_to_gauge(const Vec& p, const Rat& s) const {
  Rat g = gauge(p);
  if (g == 0) throw std::invalid_argument("cannot radially project the center");
  return vadd(center, vscale(s / g, vsub(p, center)));
}

Vec OffsetDomain::collar_point(const Vec& b, const Rat& t) const {
  return vadd(center, vscale(1 - t / rho0, vsub(b, center)));
}

PolyChain OffsetDomain::boundary_chain(const Rat& r) const {
  Rat s = 1 - r / rho0;
  PolyChain out;
  auto shrink = [&](const Vec& v) { return vadd(center, vscale(s, vsub(v, center))); };
  switch (kind) {
    case Kind::Box: {
      if (n == 2) {
        Vec a = {lo[0], lo[1]}, b = {hi[0], lo[1]}, c = {hi[0], hi[1]}, d2 = {lo[0], hi[1]};
        out.dim = 1;
        for (auto [p, q] : {std::pair{a, b}, {b, c}, {c, d2}, {d2, a}})
          out.simplices.push_back({shrink(p), shrink(q)});
      } else if (n == 3) {
        out.dim = 2;
        // each face split into two triangles
        for (int axis = 0; axis < 3; ++axis) {
          for (int side = 0; side < 2; ++side) {
            int u = (axis + 1) % 3, v = (axis + 2) % 3;
            Vec p00(3), p10(3), p01(3), p11(3);
            for (Vec* pv : {&p00, &p10, &p01, &p11}) (*pv)[axis] = side ? hi[axis] : lo[axis];
            p00[u] = lo[u]; p00[v] = lo[v];
            p10[u] = hi[u]; p10[v] = lo[v];
            p01[u] = lo[u]; p01[v] = hi[v];
            p11[u] = hi[u]; p11[v] = hi[v];
            out.simplices.push_back({shrink(p00), shrink(p10), shrink(p11)});
            out.simplices.push_back({shrink(p00), shrink(p11), shrink(p01)});
          }
        }
      } else if (n == 1) {
        out.dim = 0;
        out.simplices.push_back({shrink({lo[0]})});
        out.simplices.push_back({shrink({hi[0]})});
      }
      return out;
    }
    case Kind::Poly2: {
      out.dim = 1;
      for (size_t i = 0; i < loop.size(); ++i)
        out.simplices.push_back({shrink(loop[i]), shrink(loop[(i + 1) % loop.size()])});
      return out;
    }
    case Kind::Poly3: {
      out.dim = 2;
      for (const auto& t : tris)
        out.simplices.push_back({shrink(t[0]), shrink(t[1]), shrink(t[2])});
      return out;
    }
    case Kind::Segment: {
      out.dim = 0;
      out.simplices.push_back({shrink(seg_a)});
      out.simplices.push_back({shrink(seg_b)});
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

double OffsetDomain::boundary_mass() const { return boundary_chain().mass(); }

Rat OffsetDomain::boundary_dist2(const Vec& p) const {
  switch (kind) {
    case Kind::Box: {
      // distance to the box boundary from inside = min over faces; from
      // outside = distance to the box
      bool inside = true;
      Rat out2 = 0;
      Rat min_face;
      bool first = true;
      for (int a = 0; a < n; ++a) {
        if (p[a] < lo[a]) { inside = false; out2 += (lo[a] - p[a]) * (lo[a] - p[a]); }
        if (p[a] > hi[a]) { inside = false; out2 += (p[a] - hi[a]) * (p[a] - hi[a]); }
        Rat d1 = p[a] - lo[a], d2 = hi[a] - p[a];
        Rat m = (d1 < d2 ? d1 : d2);
        if (m < 0) m = 0;
        if (first || m * m < min_face) { min_face = m * m; first = false; }
      }
      return inside ? min_face : out2;
    }
    case Kind::Poly2: {
      Rat best;
      bool first = true;
      for (size_t i = 0; i < loop.size(); ++i) {
        Rat d2 = point_seg_dist2(p, loop[i], loop[(i + 1) % loop.size()]);
        if (first || d2 < best) { best = d2; first = false; }
      }
      return best;
    }
    case Kind::Poly3: {
      Rat best;
      bool first = true;
      for (const auto& t : tris) {
        Rat d2 = point_tri_dist2(p, t);
        if (first || d2 < best) { best = d2; first = false; }
      }
      return best;
    }
    case Kind::Segment: {
      Rat da = dist2(p, seg_a), db = dist2(p, seg_b);
      return da < db ? da : db;
    }
  }
  throw std::logic_error("unreachable");
}

Vec OffsetDomain::sample_interior(std::uint64_t& rng_state) const {
  for (int tries = 0; tries < 4096; ++tries) {
    Vec p(n);
    for (int a = 0; a < n; ++a) {
      Rat span_lo, span_hi;
      if (kind == Kind::Box) { span_lo = lo[a]; span_hi = hi[a]; }
      else {
        Rat rm = rat_approx(rho_max * 1.01);
        span_lo = center[a] - rm;
        span_hi = center[a] + rm;
      }
      p[a] = span_lo + unit_rat(rng_state) * (span_hi - span_lo);
    }
    if (kind == Kind::Segment) {
      // sample along the segment instead
      return vlerp(seg_a, seg_b, unit_rat(rng_state));
    }
    if (gauge(p) < 1) return p;
  }
  throw std::runtime_error("interior sampling failed");
}

}  // namespace cyclecraft
