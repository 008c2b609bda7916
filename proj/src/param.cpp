#include "cyclecraft/param.hpp"

#include <json.hpp>
#include <stdexcept>

namespace cyclecraft {

int ParamCell::dim() const {
  int d = 0;
  for (const auto& a : axes) d += a.interval ? 1 : 0;
  return d;
}

Int pow3(int e) {
  if (e < 0) throw std::invalid_argument("pow3: negative exponent");
  Int r = 1;
  for (int i = 0; i < e; ++i) r *= 3;
  return r;
}

Rat unit3(int e) { return Rat(Int(1), pow3(e)); }

CubicalParamComplex CubicalParamComplex::empty(int m, int j) {
  CubicalParamComplex X;
  X.m = m;
  X.j = j;
  return X;
}

CubicalParamComplex CubicalParamComplex::full(int m, int j, int p) {
  CubicalParamComplex X = empty(m, j);
  long long side = (long long)pow3(j);
  // enumerate cells axis by axis: per axis a vertex 0..side or interval
  // 0..side-1, keeping total dimension <= p
  std::vector<AxisCell> cur(m);
  auto rec = [&](auto&& self, int axis, int dim) -> void {
    if (dim > p) return;
    if (axis == m) {
      ParamCell c;
      c.axes = cur;
      X.cells.insert(c);
      return;
    }
    for (long long v = 0; v <= side; ++v) {
      cur[axis] = {false, v};
      self(self, axis + 1, dim);
    }
    for (long long e = 0; e < side; ++e) {
      cur[axis] = {true, e};
      self(self, axis + 1, dim + 1);
    }
  };
  rec(rec, 0, 0);
  return X;
}

void CubicalParamComplex::add_cell(const ParamCell& c) {
  if ((int)c.axes.size() != m) throw std::invalid_argument("add_cell: axis count mismatch");
  if (!cells.insert(c).second) return;
  for (const auto& f : cell_faces(c)) add_cell(f);
}

int CubicalParamComplex::count(int q) const {
  int n = 0;
  for (const auto& c : cells) n += c.dim() == q ? 1 : 0;
  return n;
}

int CubicalParamComplex::top_dim() const {
  int p = -1;
  for (const auto& c : cells) p = std::max(p, c.dim());
  return p;
}

std::vector<ParamCell> CubicalParamComplex::cells_of_dim(int q) const {
  std::vector<ParamCell> out;
  for (const auto& c : cells)
    if (c.dim() == q) out.push_back(c);
  return out;
}

bool CubicalParamComplex::closed_under_faces() const {
  for (const auto& c : cells)
    for (const auto& f : cell_faces(c))
      if (!has(f)) return false;
  return true;
}

Vec CubicalParamComplex::vertex_point(const ParamCell& v) const {
  if (v.dim() != 0) throw std::invalid_argument("vertex_point: not a vertex cell");
  Vec x(m);
  for (int a = 0; a < m; ++a) x[a] = Rat(Int(v.axes[a].index), pow3(j));
  return x;
}

std::string CubicalParamComplex::to_json() const {
  nlohmann::json out;
  out["m"] = m;
  out["j"] = j;
  auto cl = nlohmann::json::array();
  for (const auto& c : cells) {
    auto jc = nlohmann::json::array();
    for (const auto& a : c.axes) jc.push_back({a.interval ? 1 : 0, a.index});
    cl.push_back(jc);
  }
  out["cells"] = cl;
  return out.dump();
}

CubicalParamComplex CubicalParamComplex::from_json(const std::string& s) {
  auto in = nlohmann::json::parse(s);
  CubicalParamComplex X = empty(in.at("m").get<int>(), in.at("j").get<int>());
  for (const auto& jc : in.at("cells")) {
    ParamCell c;
    for (const auto& ja : jc)
      c.axes.push_back({ja.at(0).get<int>() != 0, ja.at(1).get<long long>()});
    X.add_cell(c);
  }
  return X;
}

std::vector<ParamCell> cell_faces(const ParamCell& c) {
  std::vector<ParamCell> out;
  for (size_t a = 0; a < c.axes.size(); ++a) {
    if (!c.axes[a].interval) continue;
    for (int side = 0; side < 2; ++side) {
      ParamCell f = c;
      f.axes[a] = {false, c.axes[a].index + side};
      out.push_back(f);
    }
  }
  return out;
}

ParamCell base_vertex(const ParamCell& c) {
  ParamCell v = c;
  for (auto& a : v.axes) a.interval = false;
  return v;
}

bool cell_contains_point(const ParamCell& c, int level, const Vec& x) {
  if (x.size() != c.axes.size()) return false;
  Int den = pow3(level);
  for (size_t a = 0; a < c.axes.size(); ++a) {
    Rat lo = Rat(Int(c.axes[a].index), den);
    if (!c.axes[a].interval) {
      if (x[a] != lo) return false;
    } else {
      if (x[a] < lo || x[a] > lo + Rat(Int(1), den)) return false;
    }
  }
  return true;
}

bool cell_inside(const ParamCell& fine, int fine_level, const ParamCell& coarse,
                 int coarse_level) {
  if (fine.axes.size() != coarse.axes.size()) return false;
  if (fine_level < coarse_level) return false;
  Int scale = pow3(fine_level - coarse_level);
  for (size_t a = 0; a < fine.axes.size(); ++a) {
    Int lo = Int(coarse.axes[a].index) * scale;
    Int fi = Int(fine.axes[a].index);
    if (!coarse.axes[a].interval) {
      if (fine.axes[a].interval || fi != lo) return false;
    } else if (fine.axes[a].interval) {
      if (fi < lo || fi + 1 > lo + scale) return false;
    } else {
      if (fi < lo || fi > lo + scale) return false;
    }
  }
  return true;
}

std::optional<ParamCell> carrier(const CubicalParamComplex& X, const Vec& x) {
  std::optional<ParamCell> best;
  int best_dim = 0;
  for (const auto& c : X.cells) {
    if (!cell_contains_point(c, X.j, x)) continue;
    if (!best || c.dim() < best_dim) {
      best = c;
      best_dim = c.dim();
    }
  }
  return best;
}

CubicalParamComplex refine(const CubicalParamComplex& X, int i) {
  if (i < X.j) throw std::invalid_argument("refine: coarser target level");
  CubicalParamComplex out = CubicalParamComplex::empty(X.m, i);
  if (i == X.j) {
    out.cells = X.cells;
    return out;
  }
  long long scale = (long long)pow3(i - X.j);
  // expand each cell axis by axis: a vertex maps to the scaled vertex, an
  // interval to its `scale` subintervals; faces close the rest
  std::vector<AxisCell> cur(X.m);
  for (const auto& c : X.cells) {
    auto rec = [&](auto&& self, int axis) -> void {
      if (axis == X.m) {
        ParamCell nc;
        nc.axes = cur;
        out.add_cell(nc);
        return;
      }
      const AxisCell& a = c.axes[axis];
      if (!a.interval) {
        cur[axis] = {false, a.index * scale};
        self(self, axis + 1);
      } else {
        for (long long s = 0; s < scale; ++s) {
          cur[axis] = {true, a.index * scale + s};
          self(self, axis + 1);
        }
      }
    };
    rec(rec, 0);
  }
  return out;
}

Rat phi_map(const Rat& t) {
  if (t <= Rat(1, 3)) return 0;
  if (t >= Rat(2, 3)) return 1;
  return 3 * (t - Rat(1, 3));
}

Rat psi_map(const Rat& t) {
  if (t <= Rat(1, 3)) return Rat(1, 3);
  if (t >= Rat(2, 3)) return Rat(2, 3);
  return t;
}

namespace {

Vec axiswise_at_level(const Vec& x, int q, Rat (*ramp)(const Rat&)) {
  Int den = pow3(q);
  Vec out(x.size());
  for (size_t a = 0; a < x.size(); ++a) {
    Rat t = x[a] * den;
    Int e = numerator(t) / denominator(t);  // floor for nonnegative t
    Rat frac = t - e;
    if (frac == 0) {
      out[a] = x[a];  // lattice vertex: fixed
    } else {
      out[a] = (Rat(e) + ramp(frac)) / den;
    }
  }
  return out;
}

}  // namespace

Vec xi_map(const Vec& x, int q) { return axiswise_at_level(x, q, &phi_map); }

Vec theta_map(const Vec& x, int q) { return axiswise_at_level(x, q, &psi_map); }

bool center_contains(const ParamCell& c, int level, const Vec& x) {
  if (!cell_contains_point(c, level, x)) return false;
  Int den = pow3(level);
  Rat margin = Rat(Int(1), den * 3);
  for (size_t a = 0; a < c.axes.size(); ++a) {
    if (!c.axes[a].interval) continue;
    Rat lo = Rat(Int(c.axes[a].index), den);
    Rat hi = lo + Rat(Int(1), den);
    if (x[a] - lo < margin || hi - x[a] < margin) return false;
  }
  return true;
}

}  // namespace cyclecraft
