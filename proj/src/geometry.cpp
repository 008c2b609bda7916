#include "cyclecraft/geometry.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace cyclecraft {

using nlohmann::json;

Vec simplex_barycenter(const Simplex& s) {
  Vec b(s[0].size(), Rat(0));
  for (const auto& v : s) b = vadd(b, v);
  Rat inv(1, (long)s.size());
  return vscale(inv, b);
}

// ---------------------------------------------------------------- PolyChain

PolyChain PolyChain::points(std::vector<Vec> pts) {
  PolyChain c;
  c.dim = 0;
  for (auto& p : pts) c.simplices.push_back({std::move(p)});
  return c;
}

PolyChain PolyChain::segment(const Vec& a, const Vec& b) {
  PolyChain c;
  c.dim = 1;
  c.simplices.push_back({a, b});
  return c;
}

void PolyChain::append(const PolyChain& other) {
  if (other.simplices.empty()) return;
  if (simplices.empty()) dim = other.dim;
  if (dim != other.dim) throw std::invalid_argument("appending chains of different dimension");
  simplices.insert(simplices.end(), other.simplices.begin(), other.simplices.end());
}

PolyChain PolyChain::plus(const PolyChain& other) const {
  PolyChain c = *this;
  c.append(other);
  return c.reduced();
}

static bool vec_less(const Vec& a, const Vec& b) {
  for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (b[i] < a[i]) return false;
  }
  return a.size() < b.size();
}

namespace {

struct LineKey {
  size_t pivot;
  Vec dir;   // pivot component normalized to 1
  Vec base;  // point on line with pivot component 0
  bool operator<(const LineKey& o) const {
    if (pivot != o.pivot) return pivot < o.pivot;
    if (dir != o.dir) return vec_less(dir, o.dir);
    return vec_less(base, o.base);
  }
  bool operator==(const LineKey& o) const {
    return pivot == o.pivot && dir == o.dir && base == o.base;
  }
};

// canonical supporting line of segment [a,b]; nullopt when degenerate
std::optional<std::pair<LineKey, std::pair<Rat, Rat>>> canon_segment(const Vec& a, const Vec& b) {
  Vec d = vsub(b, a);
  size_t pivot = d.size();
  for (size_t i = 0; i < d.size(); ++i)
    if (d[i] != 0) { pivot = i; break; }
  if (pivot == d.size()) return std::nullopt;
  Rat scale = d[pivot];
  Vec dn(d.size());
  for (size_t i = 0; i < d.size(); ++i) dn[i] = d[i] / scale;
  Vec base(d.size());
  Rat t0 = a[pivot];
  for (size_t i = 0; i < d.size(); ++i) base[i] = a[i] - t0 * dn[i];
  Rat ta = a[pivot], tb = b[pivot];
  if (tb < ta) std::swap(ta, tb);
  return std::make_pair(LineKey{pivot, std::move(dn), std::move(base)}, std::make_pair(ta, tb));
}

Vec line_point(const LineKey& k, const Rat& t) {
  Vec p(k.dir.size());
  for (size_t i = 0; i < p.size(); ++i) p[i] = k.base[i] + t * k.dir[i];
  return p;
}

}  // namespace

PolyChain PolyChain::reduced() const {
  PolyChain out;
  out.dim = dim;
  if (dim == 0) {
    std::vector<Vec> pts;
    for (const auto& s : simplices) pts.push_back(s[0]);
    std::sort(pts.begin(), pts.end(), vec_less);
    for (size_t i = 0; i < pts.size();) {
      size_t j = i;
      while (j < pts.size() && pts[j] == pts[i]) ++j;
      if ((j - i) % 2) out.simplices.push_back({pts[i]});
      i = j;
    }
    return out;
  }
  if (dim == 1) {
    // per supporting line: parity sweep over interval endpoints
    std::vector<std::pair<LineKey, std::pair<Rat, Rat>>> segs;
    for (const auto& s : simplices) {
      auto c = canon_segment(s[0], s[1]);
      if (c) segs.push_back(std::move(*c));
    }
    std::sort(segs.begin(), segs.end(), [](const auto& x, const auto& y) {
      if (!(x.first == y.first)) return x.first < y.first;
      if (x.second.first != y.second.first) return x.second.first < y.second.first;
      return x.second.second < y.second.second;
    });
    size_t i = 0;
    while (i < segs.size()) {
      size_t j = i;
      while (j < segs.size() && segs[j].first == segs[i].first) ++j;
      const LineKey& key = segs[i].first;
      std::vector<Rat> cuts;
      for (size_t t = i; t < j; ++t) {
        cuts.push_back(segs[t].second.first);
        cuts.push_back(segs[t].second.second);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      // parity of covering count on each elementary interval; emit odd runs merged
      std::optional<Rat> run_start;
      for (size_t e = 0; e + 1 < cuts.size(); ++e) {
        int cover = 0;
        for (size_t t = i; t < j; ++t)
          if (segs[t].second.first <= cuts[e] && segs[t].second.second >= cuts[e + 1]) ++cover;
        bool odd = cover % 2;
        if (odd && !run_start) run_start = cuts[e];
        if (!odd && run_start) {
          out.simplices.push_back({line_point(key, *run_start), line_point(key, cuts[e])});
          run_start.reset();
        }
      }
      if (run_start)
        out.simplices.push_back({line_point(key, *run_start), line_point(key, cuts.back())});
      i = j;
    }
    return out;
  }
  // dim >= 2: sort vertices in each simplex, drop degenerate (dim==2 only,
  // where degenerate faces cancel canonically), cancel exact duplicates
  std::vector<Simplex> ss;
  for (const auto& s : simplices) {
    Simplex t = s;
    std::sort(t.begin(), t.end(), vec_less);
    if (dim == 2 && gram_det(t) == 0) continue;
    ss.push_back(std::move(t));
  }
  auto simp_less = [](const Simplex& a, const Simplex& b) {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
      if (vec_less(a[i], b[i])) return true;
      if (vec_less(b[i], a[i])) return false;
    }
    return a.size() < b.size();
  };
  std::sort(ss.begin(), ss.end(), simp_less);
  for (size_t i = 0; i < ss.size();) {
    size_t j = i;
    while (j < ss.size() && ss[j] == ss[i]) ++j;
    if ((j - i) % 2) out.simplices.push_back(ss[i]);
    i = j;
  }
  return out;
}

PolyChain PolyChain::boundary() const {
  if (dim == 0) {
    // 0-chains have empty boundary so that boundary . boundary vanishes
    PolyChain none;
    none.dim = 0;
    return none;
  }
  PolyChain faces;
  faces.dim = dim - 1;
  for (const auto& s : simplices) {
    for (size_t omit = 0; omit < s.size(); ++omit) {
      Simplex f;
      for (size_t i = 0; i < s.size(); ++i)
        if (i != omit) f.push_back(s[i]);
      faces.simplices.push_back(std::move(f));
    }
  }
  return faces.reduced();
}

double PolyChain::mass() const {
  const PolyChain* c = this;
  PolyChain red;
  if (dim <= 1) { red = reduced(); c = &red; }
  double m = 0;
  for (const auto& s : c->simplices) m += simplex_volume(s);
  return m;
}

Rat PolyChain::mass_sq_single(size_t i) const { return gram_det(simplices[i]); }

PolyChain PolyChain::restrict_to(const std::function<bool(const Vec&)>& pred) const {
  PolyChain out;
  out.dim = dim;
  for (const auto& s : simplices)
    if (pred(simplex_barycenter(s))) out.simplices.push_back(s);
  return out;
}

PolyChain PolyChain::map(const std::function<Vec(const Vec&)>& f) const {
  PolyChain out;
  out.dim = dim;
  for (const auto& s : simplices) {
    Simplex t;
    t.reserve(s.size());
    for (const auto& v : s) t.push_back(f(v));
    out.simplices.push_back(std::move(t));
  }
  return out;
}

PolyChain PolyChain::cone(const Vec& apex) const {
  PolyChain out;
  out.dim = dim + 1;
  for (const auto& s : simplices) {
    Simplex t;
    t.reserve(s.size() + 1);
    t.push_back(apex);
    for (const auto& v : s) t.push_back(v);
    out.simplices.push_back(std::move(t));
  }
  return out;
}

namespace {

// clip a convex polygon (as vertex loop) against sign*(n.x - b) >= 0
std::vector<Vec> clip_poly(const std::vector<Vec>& poly, const Vec& n, const Rat& b, int sign) {
  std::vector<Vec> out;
  size_t m = poly.size();
  for (size_t i = 0; i < m; ++i) {
    const Vec& cur = poly[i];
    const Vec& nxt = poly[(i + 1) % m];
    Rat sc = (vdot(n, cur) - b) * sign;
    Rat sn = (vdot(n, nxt) - b) * sign;
    if (sc >= 0) out.push_back(cur);
    if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
      Rat t = sc / (sc - sn);
      out.push_back(vlerp(cur, nxt, t));
    }
  }
  return out;
}

void fan_triangulate(const std::vector<Vec>& poly, std::vector<Simplex>& into) {
  for (size_t i = 1; i + 1 < poly.size(); ++i)
    into.push_back({poly[0], poly[i], poly[i + 1]});
}

}  // namespace

PolyChain PolyChain::split_by_hyperplane(const Vec& normal, const Rat& offset) const {
  PolyChain out;
  out.dim = dim;
  for (const auto& s : simplices) {
    std::vector<Rat> side(s.size());
    bool has_pos = false, has_neg = false;
    for (size_t i = 0; i < s.size(); ++i) {
      side[i] = vdot(normal, s[i]) - offset;
      if (side[i] > 0) has_pos = true;
      if (side[i] < 0) has_neg = true;
    }
    if (!has_pos || !has_neg) { out.simplices.push_back(s); continue; }
    if (dim == 1) {
      Rat t = side[0] / (side[0] - side[1]);
      Vec m = vlerp(s[0], s[1], t);
      out.simplices.push_back({s[0], m});
      out.simplices.push_back({m, s[1]});
    } else if (dim == 2) {
      auto lo = clip_poly(s, normal, offset, -1);
      auto hi = clip_poly(s, normal, offset, +1);
      if (lo.size() >= 3) fan_triangulate(lo, out.simplices);
      if (hi.size() >= 3) fan_triangulate(hi, out.simplices);
    } else {
      throw std::logic_error("split_by_hyperplane: only dim <= 2 supported");
    }
  }
  return out;
}

PolyChain PolyChain::subdivide(int rounds) const {
  PolyChain cur = *this;
  for (int r = 0; r < rounds; ++r) {
    PolyChain nxt;
    nxt.dim = dim;
    for (const auto& s : cur.simplices) {
      if (dim == 0) {
        nxt.simplices.push_back(s);
      } else if (dim == 1) {
        Vec m = vlerp(s[0], s[1], Rat(1, 2));
        nxt.simplices.push_back({s[0], m});
        nxt.simplices.push_back({m, s[1]});
      } else if (dim == 2) {
        Vec m01 = vlerp(s[0], s[1], Rat(1, 2));
        Vec m02 = vlerp(s[0], s[2], Rat(1, 2));
        Vec m12 = vlerp(s[1], s[2], Rat(1, 2));
        nxt.simplices.push_back({s[0], m01, m02});
        nxt.simplices.push_back({s[1], m01, m12});
        nxt.simplices.push_back({s[2], m02, m12});
        nxt.simplices.push_back({m01, m02, m12});
      } else {
        throw std::logic_error("subdivide: only dim <= 2 supported");
      }
    }
    cur = std::move(nxt);
  }
  return cur;
}

int PolyChain::multiplicity_at(const Vec& p) const {
  PolyChain red = (dim <= 1) ? reduced() : *this;
  int count = 0;
  for (const auto& s : red.simplices) {
    if (dim == 0) {
      if (s[0] == p) ++count;
      continue;
    }
    // barycentric solve: sum l_i v_i = p, sum l_i = 1, l_i >= 0
    size_t amb = p.size(), k = s.size();
    Mat a(amb + 1, std::vector<Rat>(k));
    std::vector<Rat> rhs(amb + 1);
    for (size_t r = 0; r < amb; ++r) {
      for (size_t c = 0; c < k; ++c) a[r][c] = s[c][r];
      rhs[r] = p[r];
    }
    for (size_t c = 0; c < k; ++c) a[amb][c] = 1;
    rhs[amb] = 1;
    auto sol = solve(a, rhs);
    if (!sol) continue;
    bool inside = true;
    for (const auto& l : *sol)
      if (l < 0) { inside = false; break; }
    if (inside) ++count;
  }
  return count;
}

Vec PolyChain::barycenter_of(size_t i) const { return simplex_barycenter(simplices[i]); }

bool PolyChain::equals(const PolyChain& other) const {
  PolyChain a = plus(other);  // mod-2 difference
  return a.simplices.empty();
}

// --------------------------------------------------------- SimplicialGeometry

int SimplicialGeometry::add_vertex(const Vec& v) {
  if ((int)v.size() != ambient_dim)
    throw std::invalid_argument("vertex dimension mismatch");
  auto it = vmap_.find(v);
  if (it != vmap_.end()) return it->second;
  int id = (int)vertices.size();
  vertices.push_back(v);
  vmap_.emplace(v, id);
  return id;
}

int SimplicialGeometry::add_simplex(int d, std::vector<int> verts) {
  if ((int)verts.size() != d + 1) throw std::invalid_argument("simplex arity mismatch");
  std::sort(verts.begin(), verts.end());
  if (std::adjacent_find(verts.begin(), verts.end()) != verts.end())
    throw std::invalid_argument("simplex with repeated vertex");
  auto& m = smap_[d];
  auto it = m.find(verts);
  if (it != m.end()) return it->second;
  if (d > 0) {
    for (size_t omit = 0; omit < verts.size(); ++omit) {
      std::vector<int> f;
      for (size_t i = 0; i < verts.size(); ++i)
        if (i != omit) f.push_back(verts[i]);
      add_simplex(d - 1, std::move(f));
    }
  }
  int id = (int)simplices[d].size();
  simplices[d].push_back(verts);
  m.emplace(std::move(verts), id);
  return id;
}

std::optional<int> SimplicialGeometry::find_vertex(const Vec& v) const {
  auto it = vmap_.find(v);
  if (it == vmap_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> SimplicialGeometry::find_simplex(int d, std::vector<int> verts) const {
  std::sort(verts.begin(), verts.end());
  auto dit = smap_.find(d);
  if (dit == smap_.end()) return std::nullopt;
  auto it = dit->second.find(verts);
  if (it == dit->second.end()) return std::nullopt;
  return it->second;
}

int SimplicialGeometry::count(int d) const {
  auto it = simplices.find(d);
  return it == simplices.end() ? 0 : (int)it->second.size();
}

bool SimplicialGeometry::is_boundary_tagged(int d, int idx) const {
  auto it = btag_.find(d);
  if (it == btag_.end()) return false;
  return idx < (int)it->second.size() && it->second[idx];
}

void SimplicialGeometry::tag_boundary(int d, int idx) {
  auto& v = btag_[d];
  if (idx >= (int)v.size()) v.resize(idx + 1, 0);
  if (!v[idx]) {
    v[idx] = 1;
    boundary_facets.emplace_back(d, idx);
  }
}

Vec SimplicialGeometry::barycenter(int d, int idx) const {
  return simplex_barycenter(corners(d, idx));
}

double SimplicialGeometry::simplex_mass(int d, int idx) const {
  return simplex_volume(corners(d, idx));
}

std::vector<Vec> SimplicialGeometry::corners(int d, int idx) const {
  const auto& ids = simplices.at(d).at(idx);
  std::vector<Vec> c;
  c.reserve(ids.size());
  for (int id : ids) c.push_back(vertices[id]);
  return c;
}

std::vector<int> SimplicialGeometry::faces_of(int d, int idx) const {
  const auto& verts = simplices.at(d).at(idx);
  std::vector<int> out;
  for (size_t omit = 0; omit < verts.size(); ++omit) {
    std::vector<int> f;
    for (size_t i = 0; i < verts.size(); ++i)
      if (i != omit) f.push_back(verts[i]);
    auto id = find_simplex(d - 1, std::move(f));
    if (!id) throw std::logic_error("face not present in complex");
    out.push_back(*id);
  }
  return out;
}

std::string SimplicialGeometry::to_json() const {
  json j;
  j["ambient_dim"] = ambient_dim;
  json verts = json::array();
  for (const auto& v : vertices) {
    json row = json::array();
    for (const auto& x : v) row.push_back(rat_to_string(x));
    verts.push_back(row);
  }
  j["vertices"] = verts;
  json simp = json::object();
  for (const auto& [d, list] : simplices) simp[std::to_string(d)] = list;
  j["simplices"] = simp;
  json bf = json::array();
  for (const auto& [d, idx] : boundary_facets) bf.push_back(json::array({d, idx}));
  j["boundary_facets"] = bf;
  return j.dump();
}

std::shared_ptr<SimplicialGeometry> SimplicialGeometry::from_json(const std::string& text) {
  json j = json::parse(text);
  auto g = std::make_shared<SimplicialGeometry>();
  g->ambient_dim = j.at("ambient_dim").get<int>();
  for (const auto& row : j.at("vertices")) {
    Vec v;
    for (const auto& x : row) v.push_back(rat_from_string(x.get<std::string>()));
    g->add_vertex(v);
  }
  if (j.contains("simplices"))
    for (auto it = j["simplices"].begin(); it != j["simplices"].end(); ++it) {
      int d = std::stoi(it.key());
      for (const auto& tuple : it.value()) g->add_simplex(d, tuple.get<std::vector<int>>());
    }
  if (j.contains("boundary_facets"))
    for (const auto& bf : j["boundary_facets"])
      g->tag_boundary(bf.at(0).get<int>(), bf.at(1).get<int>());
  return g;
}

// ------------------------------------------------------------ SimplicialChain

SimplicialChain SimplicialChain::zero(GeometryPtr g, int dim, bool z2) {
  SimplicialChain c;
  c.geom = std::move(g);
  c.dim = dim;
  c.z2 = z2;
  return c;
}

void SimplicialChain::toggle(int id) {
  auto it = coeffs.find(id);
  if (it != coeffs.end()) coeffs.erase(it);
  else coeffs.emplace(id, 1);
}

void SimplicialChain::add(int id, int c) {
  if (c == 0) return;
  if (z2) {
    if (c % 2) toggle(id);
    return;
  }
  auto [it, fresh] = coeffs.emplace(id, c);
  if (!fresh) {
    it->second += c;
    if (it->second == 0) coeffs.erase(it);
  }
}

SimplicialChain SimplicialChain::plus(const SimplicialChain& other) const {
  if (geom != other.geom || dim != other.dim || z2 != other.z2)
    throw std::invalid_argument("chain sum across incompatible chains");
  SimplicialChain out = *this;
  for (const auto& [id, c] : other.coeffs) out.add(id, z2 ? 1 : c);
  return out;
}

double SimplicialChain::mass() const {
  double m = 0;
  for (const auto& [id, c] : coeffs) m += std::abs(c) * geom->simplex_mass(dim, id);
  return m;
}

PolyChain SimplicialChain::to_poly() const {
  PolyChain p;
  p.dim = dim;
  for (const auto& [id, c] : coeffs) {
    int reps = z2 ? 1 : std::abs(c) % 2;  // PolyChain is mod-2
    if (reps) p.simplices.push_back(geom->corners(dim, id));
  }
  return p;
}

std::string SimplicialChain::to_json() const {
  json j;
  j["geometry"] = json::parse(geom->to_json());
  j["dim"] = dim;
  j["coeff"] = z2 ? "Z2" : "Z";
  json sup = json::array();
  if (z2) {
    for (const auto& [id, c] : coeffs) sup.push_back(id);
  } else {
    for (const auto& [id, c] : coeffs) sup.push_back(json::array({id, c}));
  }
  j["support"] = sup;
  return j.dump();
}

SimplicialChain SimplicialChain::from_json(const std::string& text) {
  json j = json::parse(text);
  SimplicialChain c;
  c.geom = SimplicialGeometry::from_json(j.at("geometry").dump());
  c.dim = j.at("dim").get<int>();
  std::string coeff = j.at("coeff").get<std::string>();
  if (coeff != "Z2" && coeff != "Z") throw std::invalid_argument("coeff must be Z2 or Z");
  c.z2 = coeff == "Z2";
  for (const auto& e : j.at("support")) {
    if (c.z2) {
      int id = e.get<int>();
      if (id < 0 || id >= c.geom->count(c.dim)) throw std::invalid_argument("support id out of range");
      c.toggle(id);
    } else {
      int id = e.at(0).get<int>();
      if (id < 0 || id >= c.geom->count(c.dim)) throw std::invalid_argument("support id out of range");
      c.add(id, e.at(1).get<int>());
    }
  }
  return c;
}

SimplicialChain complex_boundary(const SimplicialChain& c) {
  if (c.dim == 0) return SimplicialChain::zero(c.geom, 0, c.z2);
  SimplicialChain out = SimplicialChain::zero(c.geom, c.dim - 1, c.z2);
  for (const auto& [id, coeff] : c.coeffs) {
    const auto& verts = c.geom->simplices.at(c.dim).at(id);
    for (size_t omit = 0; omit < verts.size(); ++omit) {
      std::vector<int> f;
      for (size_t i = 0; i < verts.size(); ++i)
        if (i != omit) f.push_back(verts[i]);
      auto fid = c.geom->find_simplex(c.dim - 1, std::move(f));
      if (!fid) throw std::logic_error("boundary face missing from complex");
      if (c.z2) {
        if (coeff % 2) out.toggle(*fid);
      } else {
        out.add(*fid, (omit % 2 ? -1 : 1) * coeff);
      }
    }
  }
  return out;
}

SimplicialChain ingest(GeometryPtr g, const PolyChain& p) {
  SimplicialChain c = SimplicialChain::zero(g, p.dim);
  for (const auto& s : p.simplices) {
    std::vector<int> ids;
    ids.reserve(s.size());
    for (const auto& v : s) ids.push_back(g->add_vertex(v));
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) continue;  // degenerate
    c.toggle(g->add_simplex(p.dim, ids));
  }
  return c;
}

}  // namespace cyclecraft
