#include "cyclecraft/flatnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cyclecraft {

namespace {

// is the k-cell of a non-periodic grid contained in the box boundary?
bool grid_cell_on_boundary(const GridComplex& g, int k, int id) {
  GridCell c = g.cell_of(k, id);
  for (int a = 0; a < g.n; ++a) {
    if (g.periodic[a]) continue;
    if (c.mask & (1u << a)) continue;
    if (c.pos[a] == 0 || c.pos[a] == g.res[a]) return true;
  }
  return false;
}

}  // namespace

ComplexView view_of_grid(const GridPtr& g, int k, bool tag_box_boundary) {
  ComplexView v;
  v.k = k;
  v.n_rows = g->dim_count(k);
  v.n_cols = g->dim_count(k + 1);
  v.row_mass.resize(v.n_rows);
  v.col_mass.resize(v.n_cols);
  v.row_tag.assign(v.n_rows, 0);
  v.col_tag.assign(v.n_cols, 0);
  for (int r = 0; r < v.n_rows; ++r) {
    v.row_mass[r] = g->cell_measure(k, r);
    if (tag_box_boundary && grid_cell_on_boundary(*g, k, r)) v.row_tag[r] = 1;
  }
  v.col_faces.resize(v.n_cols);
  v.col_faces_signed.resize(v.n_cols);
  for (int c = 0; c < v.n_cols; ++c) {
    v.col_mass[c] = g->cell_measure(k + 1, c);
    if (tag_box_boundary && grid_cell_on_boundary(*g, k + 1, c)) v.col_tag[c] = 1;
    auto faces = g->cell_faces(k + 1, c);
    // faces come in (bottom, top) pairs per extent axis, axis ascending
    std::vector<int> mod2;
    for (size_t j = 0; j < faces.size(); j += 2) {
      int sign = (j / 2) % 2 ? -1 : 1;
      v.col_faces_signed[c].push_back({faces[j], -sign});
      v.col_faces_signed[c].push_back({faces[j + 1], sign});
      mod2.push_back(faces[j]);
      mod2.push_back(faces[j + 1]);
    }
    std::sort(mod2.begin(), mod2.end());
    // cancel duplicated rows mod 2 (possible on periodic grids with res=1)
    std::vector<int> keep;
    for (size_t i = 0; i < mod2.size();) {
      size_t j = i;
      while (j < mod2.size() && mod2[j] == mod2[i]) ++j;
      if ((j - i) % 2) keep.push_back(mod2[i]);
      i = j;
    }
    v.col_faces[c] = std::move(keep);
  }
  return v;
}

ComplexView view_of_geometry(const GeometryPtr& g, int k) {
  ComplexView v;
  v.k = k;
  v.n_rows = g->count(k);
  v.n_cols = g->count(k + 1);
  v.row_mass.resize(v.n_rows);
  v.col_mass.resize(v.n_cols);
  v.row_tag.assign(v.n_rows, 0);
  v.col_tag.assign(v.n_cols, 0);
  for (int r = 0; r < v.n_rows; ++r) {
    v.row_mass[r] = g->simplex_mass(k, r);
    if (g->is_boundary_tagged(k, r)) v.row_tag[r] = 1;
  }
  v.col_faces.resize(v.n_cols);
  v.col_faces_signed.resize(v.n_cols);
  for (int c = 0; c < v.n_cols; ++c) {
    v.col_mass[c] = g->simplex_mass(k + 1, c);
    if (g->is_boundary_tagged(k + 1, c)) v.col_tag[c] = 1;
    auto faces = g->faces_of(k + 1, c);  // omit-vertex order: sign (-1)^i
    for (size_t i = 0; i < faces.size(); ++i)
      v.col_faces_signed[c].push_back({faces[i], i % 2 ? -1 : 1});
    std::sort(faces.begin(), faces.end());
    v.col_faces[c] = faces;
  }
  return v;
}

namespace {

struct Gf2System {
  // column bitsets over effective rows
  std::vector<Bits> cols;
  std::vector<int> eff_row_of;  // original row -> effective row (-1 dropped)
  int n_eff = 0;
};

Gf2System build_system(const ComplexView& v, bool relative) {
  Gf2System s;
  s.eff_row_of.assign(v.n_rows, -1);
  for (int r = 0; r < v.n_rows; ++r)
    if (!(relative && v.row_tag[r])) s.eff_row_of[r] = s.n_eff++;
  s.cols.assign(v.n_cols, Bits(s.n_eff));
  for (int c = 0; c < v.n_cols; ++c)
    for (int r : v.col_faces[c]) {
      int e = s.eff_row_of[r];
      if (e >= 0) s.cols[c].flip(e);
    }
  return s;
}

double col_cost(const ComplexView& v, bool relative, int c) {
  return (relative && v.col_tag[c]) ? 0.0 : v.col_mass[c];
}

double filling_mass(const ComplexView& v, bool relative, const Bits& tau) {
  double m = 0;
  for (size_t c = tau.find_first(); c != Bits::npos; c = tau.find_next(c))
    m += col_cost(v, relative, (int)c);
  return m;
}

// Gaussian elimination: particular solution + reduced kernel basis (over
// column space).  Returns nullopt when inconsistent.
struct Gf2Solved {
  Bits particular;          // over columns
  std::vector<Bits> kernel; // reduced: unique leading column per vector
  std::vector<int> lead;    // leading column of each kernel vector
};

std::optional<Gf2Solved> gf2_solve(const Gf2System& s, const Bits& z_eff) {
  int cols = (int)s.cols.size();
  int rows = s.n_eff;
  // augmented row-major bit matrix: rows x (cols + 1)
  std::vector<Bits> m(rows, Bits(cols + 1));
  for (int c = 0; c < cols; ++c)
    for (size_t r = s.cols[c].find_first(); r != Bits::npos; r = s.cols[c].find_next(r))
      m[r].set(c);
  for (size_t r = z_eff.find_first(); r != Bits::npos; r = z_eff.find_next(r)) m[r].set(cols);

  std::vector<int> pivot_col;
  int rr = 0;
  for (int c = 0; c < cols && rr < rows; ++c) {
    int p = -1;
    for (int r = rr; r < rows; ++r)
      if (m[r].test(c)) { p = r; break; }
    if (p < 0) continue;
    std::swap(m[rr], m[p]);
    for (int r = 0; r < rows; ++r)
      if (r != rr && m[r].test(c)) m[r] ^= m[rr];
    pivot_col.push_back(c);
    ++rr;
  }
  for (int r = rr; r < rows; ++r)
    if (m[r].test(cols)) return std::nullopt;  // inconsistent
  Gf2Solved out;
  out.particular.resize(cols);
  for (int i = 0; i < (int)pivot_col.size(); ++i)
    if (m[i].test(cols)) out.particular.set(pivot_col[i]);
  std::vector<char> is_pivot(cols, 0);
  for (int c : pivot_col) is_pivot[c] = 1;
  for (int c = 0; c < cols; ++c) {
    if (is_pivot[c]) continue;
    Bits v(cols);
    v.set(c);
    for (int i = 0; i < (int)pivot_col.size(); ++i)
      if (m[i].test(c)) v.set(pivot_col[i]);
    out.kernel.push_back(std::move(v));
    out.lead.push_back(c);
  }
  return out;
}

}  // namespace

FillingCertificate flat_norm(const ComplexView& view, const Bits& z, FlatMode mode,
                             const Config& cfg, bool relative) {
  FillingCertificate cert;
  cert.relative = relative;
  Gf2System sys = build_system(view, relative);
  Bits z_eff(sys.n_eff);
  for (size_t r = z.find_first(); r != Bits::npos; r = z.find_next(r)) {
    int e = sys.eff_row_of[r];
    if (e >= 0) z_eff.set(e);
  }
  auto solved = gf2_solve(sys, z_eff);
  if (!solved) {
    cert.feasible = false;
    cert.solver = "infeasible";
    return cert;
  }
  cert.feasible = true;
  int rank = (int)solved->kernel.size();
  cert.kernel_rank = rank;

  if (mode == FlatMode::Heuristic) {
    // greedy descent over single kernel flips (and improving pairs)
    Bits cur = solved->particular;
    double cur_m = filling_mass(view, relative, cur);
    bool improved = true;
    std::uint64_t nodes = 0;
    while (improved && nodes < cfg.bb_node_budget) {
      improved = false;
      for (int i = 0; i < rank; ++i) {
        Bits cand = cur ^ solved->kernel[i];
        double cm = filling_mass(view, relative, cand);
        ++nodes;
        if (cm + 1e-15 < cur_m) { cur = std::move(cand); cur_m = cm; improved = true; }
      }
      if (!improved && rank <= 64) {
        for (int i = 0; i < rank && !improved; ++i)
          for (int j = i + 1; j < rank && !improved; ++j) {
            Bits cand = cur ^ solved->kernel[i] ^ solved->kernel[j];
            double cm = filling_mass(view, relative, cand);
            ++nodes;
            if (cm + 1e-15 < cur_m) { cur = std::move(cand); cur_m = cm; improved = true; }
          }
      }
    }
    cert.filling = cur;
    cert.value = cur_m;
    cert.solver = "heuristic";
    cert.exact = rank == 0;
    cert.nodes = nodes;
    return cert;
  }

  if (rank > cfg.kernel_bits_budget)
    throw std::runtime_error("flat_norm: kernel rank " + std::to_string(rank) +
                             " exceeds enumeration budget");

  if (mode == FlatMode::Brute) {
    // Gray-code over the full coset
    Bits cur = solved->particular;
    double cur_m = filling_mass(view, relative, cur);
    Bits best = cur;
    double best_m = cur_m;
    std::uint64_t total = 1ull << rank;
    std::uint64_t gray_prev = 0;
    for (std::uint64_t it = 1; it < total; ++it) {
      std::uint64_t gray = it ^ (it >> 1);
      int flip = __builtin_ctzll(gray ^ gray_prev);
      gray_prev = gray;
      const Bits& kv = solved->kernel[flip];
      for (size_t c = kv.find_first(); c != Bits::npos; c = kv.find_next(c)) {
        double w = col_cost(view, relative, (int)c);
        cur_m += cur.test(c) ? -w : w;
        cur.flip(c);
      }
      if (cur_m < best_m - 1e-15) { best_m = cur_m; best = cur; }
    }
    cert.filling = best;
    cert.value = best_m;
    cert.solver = "exact-brute";
    cert.exact = true;
    cert.nodes = total;
    return cert;
  }

  // Exact kernel-coset branch and bound.  Kernel is reduced, so deciding
  // vector i fixes the final state of its leading column.
  std::vector<int> order(rank);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return col_cost(view, relative, solved->lead[a]) > col_cost(view, relative, solved->lead[b]);
  });
  // columns untouched by any kernel vector are fixed by the particular solution
  Bits in_kernel(view.n_cols);
  for (const Bits& kv : solved->kernel) in_kernel |= kv;
  double fixed_mass = 0;
  for (int c = 0; c < view.n_cols; ++c)
    if (!in_kernel.test(c) && solved->particular.test(c))
      fixed_mass += col_cost(view, relative, c);

  double best_m = std::numeric_limits<double>::infinity();
  Bits best;
  Bits cur = solved->particular;
  std::uint64_t nodes = 0;
  bool budget_hit = false;
  std::vector<char> choice(rank, 0);

  std::function<void(int, double)> dfs = [&](int depth, double lead_mass) {
    if (++nodes > cfg.bb_node_budget) { budget_hit = true; return; }
    if (fixed_mass + lead_mass >= best_m - 1e-15) return;  // prune
    if (depth == rank) {
      double m = filling_mass(view, relative, cur);
      if (m < best_m - 1e-15) { best_m = m; best = cur; }
      return;
    }
    int i = order[depth];
    int lc = solved->lead[i];
    double w = col_cost(view, relative, lc);
    // branch 0: leave vector out; leading col keeps particular value
    double lm0 = lead_mass + (cur.test(lc) ? w : 0.0);
    dfs(depth + 1, lm0);
    if (budget_hit) return;
    // branch 1: include vector
    cur ^= solved->kernel[i];
    double lm1 = lead_mass + (cur.test(lc) ? w : 0.0);
    dfs(depth + 1, lm1);
    cur ^= solved->kernel[i];
  };
  dfs(0, 0.0);
  if (budget_hit) throw std::runtime_error("flat_norm: branch-and-bound budget exhausted");
  cert.filling = best;
  cert.value = best_m;
  cert.solver = "exact-kernel";
  cert.exact = true;
  cert.nodes = nodes;
  return cert;
}

namespace {

Bits chain_bits_grid(const GridChain& z) {
  Bits b(z.grid->dim_count(z.dim));
  for (size_t id = z.bits.find_first(); id != Bits::npos; id = z.bits.find_next(id)) b.set(id);
  return b;
}

}  // namespace

FillingCertificate flat_norm_grid(const GridChain& z, FlatMode mode, const Config& cfg,
                                  bool relative) {
  if (z.dim > 0) {
    GridChain b = z.boundary();
    for (size_t id = b.bits.find_first(); id != Bits::npos; id = b.bits.find_next(id))
      if (!relative || !grid_cell_on_boundary(*z.grid, z.dim - 1, (int)id))
        throw std::invalid_argument("not a cycle");
  }
  ComplexView v = view_of_grid(z.grid, z.dim);
  return flat_norm(v, chain_bits_grid(z), mode, cfg, relative);
}

FillingCertificate flat_norm_simplicial(const SimplicialChain& z, FlatMode mode,
                                        const Config& cfg, bool relative) {
  if (z.dim > 0) {
    SimplicialChain b = complex_boundary(z);
    for (const auto& [id, c] : b.coeffs)
      if (c % 2 && (!relative || !z.geom->is_boundary_tagged(z.dim - 1, id)))
        throw std::invalid_argument("not a cycle");
  }
  ComplexView v = view_of_geometry(z.geom, z.dim);
  Bits b(v.n_rows);
  for (const auto& [id, c] : z.coeffs)
    if (c % 2) b.flip(id);
  return flat_norm(v, b, mode, cfg, relative);
}

FillingCertificate flat_distance_grid(const GridChain& a, const GridChain& b, FlatMode mode,
                                      const Config& cfg, bool relative) {
  return flat_norm_grid(a.plus(b), mode, cfg, relative);
}

// ----- integer filling -----

namespace {

struct IntEnumStats {
  int kernel_rank = 0;
  std::uint64_t nodes = 0;
  bool exhausted = false;
  bool consistent = false;
};

IntEnumStats enumerate_integer_fillings(const ComplexView& view, const std::vector<int>& z,
                                        int coeff_bound, const Config& cfg,
                                        const std::function<void(const std::vector<int>&)>& visit) {
  IntEnumStats st;
  int rows = view.n_rows, cols = view.n_cols;
  Mat a(rows, std::vector<Rat>(cols, Rat(0)));
  for (int c = 0; c < cols; ++c)
    for (const auto& [r, s] : view.col_faces_signed[c]) a[r][c] += s;
  std::vector<Rat> rhs(rows);
  for (int r = 0; r < rows; ++r) rhs[r] = z[r];
  auto part = solve(a, rhs);
  if (!part) return st;  // no solutions at all
  st.consistent = true;
  // particular solution must be integer for the enumeration to be exhaustive
  std::vector<Rat> p = *part;
  for (const Rat& x : p)
    if (denominator(x) != 1)
      throw std::runtime_error("min_filling_integer: non-integral particular solution");
  auto ker = nullspace(a);
  // scale kernel vectors to primitive integer form
  std::vector<std::vector<long>> kz;
  for (auto& v : ker) {
    Int lcm = 1;
    for (const Rat& x : v) {
      Int d = denominator(x);
      lcm = lcm / gcd(lcm, d) * d;
    }
    std::vector<long> w(v.size());
    Int g = 0;
    for (size_t i = 0; i < v.size(); ++i) {
      Rat scaled = v[i] * lcm;
      Int num = numerator(scaled);
      w[i] = (long)num.convert_to<long>();
      g = gcd(g, num < 0 ? -num : num);
    }
    if (g > 1)
      for (auto& x : w) x /= (long)g.convert_to<long>();
    kz.push_back(std::move(w));
  }
  int rank = (int)kz.size();
  st.kernel_rank = rank;
  std::vector<long> base(cols);
  for (int c = 0; c < cols; ++c) base[c] = (long)numerator(p[c]).convert_to<long>();

  // coefficient range for each kernel direction: conservative window so that
  // every solution within the column bound is covered
  long amp = 0;
  for (int c = 0; c < cols; ++c) amp = std::max(amp, std::abs(base[c]) + (long)coeff_bound);
  std::vector<long> span(rank, 0);
  for (int i = 0; i < rank; ++i) {
    long mx = 0;
    for (long x : kz[i]) mx = std::max(mx, std::abs(x));
    span[i] = mx ? (amp / mx + 1) : 0;
  }
  std::vector<long> coeff(rank, 0);
  std::vector<int> cur(cols);
  std::function<void(int)> rec = [&](int i) {
    if (st.exhausted) return;
    if (st.nodes > cfg.ilp_node_budget) {
      st.exhausted = true;
      return;
    }
    if (i == rank) {
      ++st.nodes;
      for (int c = 0; c < cols; ++c) {
        long v = base[c];
        for (int t = 0; t < rank; ++t) v += coeff[t] * kz[t][c];
        if (std::abs(v) > coeff_bound) return;
        cur[c] = (int)v;
      }
      visit(cur);
      return;
    }
    for (long t = -span[i]; t <= span[i]; ++t) {
      coeff[i] = t;
      rec(i + 1);
    }
  };
  rec(0);
  return st;
}

}  // namespace

IntFilling min_filling_integer(const ComplexView& view, const std::vector<int>& z,
                               int coeff_bound, const Config& cfg) {
  IntFilling best;
  double best_m = std::numeric_limits<double>::infinity();
  IntEnumStats st =
      enumerate_integer_fillings(view, z, coeff_bound, cfg, [&](const std::vector<int>& c) {
        double m = 0;
        for (int j = 0; j < (int)c.size(); ++j) m += std::abs(c[j]) * view.col_mass[j];
        if (m < best_m - 1e-15) {
          best_m = m;
          best.coeffs = c;
          best.feasible = true;
          best.value = m;
        }
      });
  best.kernel_rank = st.kernel_rank;
  best.nodes = st.nodes;
  best.exhausted_budget = st.exhausted;
  if (st.exhausted)
    throw std::runtime_error("min_filling_integer: node budget exhausted");
  return best;
}

void for_each_integer_filling(const ComplexView& view, const std::vector<int>& z,
                              int coeff_bound, const Config& cfg,
                              const std::function<void(const std::vector<int>&)>& visit) {
  IntEnumStats st = enumerate_integer_fillings(view, z, coeff_bound, cfg, visit);
  if (st.exhausted)
    throw std::runtime_error("integer filling enumeration: node budget exhausted");
}

// ----- point matching -----

PointMatch match_points(const std::vector<Vec>& pts,
                        const std::function<double(const Vec&, const Vec&)>& metric,
                        const std::function<double(const Vec&)>* boundary_cost,
                        int exact_limit) {
  PointMatch out;
  int m = (int)pts.size();
  if (m == 0) { out.exact = true; return out; }
  std::vector<std::vector<double>> d(m, std::vector<double>(m, 0));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) d[i][j] = d[j][i] = metric(pts[i], pts[j]);
  std::vector<double> esc(m, std::numeric_limits<double>::infinity());
  if (boundary_cost)
    for (int i = 0; i < m; ++i) esc[i] = (*boundary_cost)(pts[i]);

  if (!boundary_cost && m % 2)
    throw std::invalid_argument("match_points: odd point count without boundary escape");

  if (m <= exact_limit) {
    int full = 1 << m;
    std::vector<double> f(full, std::numeric_limits<double>::infinity());
    std::vector<std::pair<int, int>> from(full, {-2, -2});
    f[0] = 0;
    for (int mask = 1; mask < full; ++mask) {
      int i = __builtin_ctz(mask);
      // pair i with j, or escape i
      if (esc[i] < std::numeric_limits<double>::infinity()) {
        double cand = f[mask ^ (1 << i)] + esc[i];
        if (cand < f[mask]) { f[mask] = cand; from[mask] = {i, -1}; }
      }
      for (int j = i + 1; j < m; ++j) {
        if (!(mask & (1 << j))) continue;
        double cand = f[mask ^ (1 << i) ^ (1 << j)] + d[i][j];
        if (cand < f[mask]) { f[mask] = cand; from[mask] = {i, j}; }
      }
    }
    out.value = f[full - 1];
    out.exact = true;
    int mask = full - 1;
    while (mask) {
      auto [i, j] = from[mask];
      out.pairs.push_back({i, j});
      mask ^= (1 << i);
      if (j >= 0) mask ^= (1 << j);
    }
    return out;
  }

  // greedy + pair-swap improvement (certified upper bound)
  std::vector<int> left(m);
  std::iota(left.begin(), left.end(), 0);
  std::vector<std::pair<int, int>> pairs;
  while (!left.empty()) {
    int i = left[0];
    double best = esc[i];
    int bj = -1;
    for (size_t t = 1; t < left.size(); ++t) {
      int j = left[t];
      if (d[i][j] < best) { best = d[i][j]; bj = j; }
    }
    if (bj < 0 && std::isinf(best))
      throw std::invalid_argument("match_points: unmatched point without escape");
    pairs.push_back({i, bj});
    std::vector<int> nl;
    for (int x : left)
      if (x != i && x != bj) nl.push_back(x);
    left = std::move(nl);
  }
  auto cost_of = [&](const std::pair<int, int>& pr) {
    return pr.second < 0 ? esc[pr.first] : d[pr.first][pr.second];
  };
  bool improved = true;
  while (improved) {
    improved = false;
    for (size_t a = 0; a < pairs.size() && !improved; ++a)
      for (size_t b = a + 1; b < pairs.size() && !improved; ++b) {
        auto [i, j] = pairs[a];
        auto [u, v] = pairs[b];
        if (j < 0 || v < 0) continue;
        double cur = d[i][j] + d[u][v];
        if (d[i][u] + d[j][v] < cur - 1e-15) {
          pairs[a] = {i, u};
          pairs[b] = {j, v};
          improved = true;
        } else if (d[i][v] + d[j][u] < cur - 1e-15) {
          pairs[a] = {i, v};
          pairs[b] = {j, u};
          improved = true;
        }
      }
  }
  out.value = 0;
  for (auto& pr : pairs) out.value += cost_of(pr);
  out.pairs = pairs;
  out.exact = false;
  return out;
}

}  // namespace cyclecraft
