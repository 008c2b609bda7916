#include "cyclecraft/deform.hpp"

#include "cyclecraft/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cyclecraft {

PolyChain split_at_lattice(const PolyChain& c, const GridComplex& grid) {
  PolyChain cur = c;
  for (int a = 0; a < grid.n; ++a) {
    Vec normal(grid.n, Rat(0));
    normal[a] = 1;
    for (int p = 0; p <= grid.res[a]; ++p) {
      Rat v = grid.lo[a] + grid.spacing(a) * p;
      cur = cur.split_by_hyperplane(normal, v);
    }
  }
  return cur;
}

namespace {

// supporting cell of a point: extent mask + anchor; positions must be inside
// the closed box
struct Support {
  unsigned mask = 0;
  std::vector<int> pos;
  int dim = 0;
};

Support support_of(const Vec& b, const GridComplex& g) {
  Support s;
  s.pos.assign(g.n, 0);
  for (int a = 0; a < g.n; ++a) {
    Rat t = (b[a] - g.lo[a]) / g.spacing(a);
    if (t < 0 || t > g.res[a]) throw std::invalid_argument("chain leaves the grid box");
    Int num = numerator(t), den = denominator(t);
    if (den == 1) {
      s.pos[a] = (int)num.convert_to<long>();
      if (s.pos[a] == g.res[a] && g.periodic[a]) s.pos[a] = 0;
    } else {
      s.mask |= 1u << a;
      s.pos[a] = (int)Int(num / den).convert_to<long>();  // floor, t >= 0 here
    }
  }
  s.dim = __builtin_popcount(s.mask);
  return s;
}

// slab-method exit parameter of ray c -> p out of the cell (t >= 1)
Rat exit_param(const Vec& c, const Vec& p, const Support& cell, const GridComplex& g) {
  Rat best;
  bool have = false;
  for (int a = 0; a < g.n; ++a) {
    if (!(cell.mask & (1u << a))) continue;
    Rat d = p[a] - c[a];
    if (d == 0) continue;
    Rat target = g.lo[a] + g.spacing(a) * (d > 0 ? cell.pos[a] + 1 : cell.pos[a]);
    Rat t = (target - c[a]) / d;
    if (!have || t < best) { best = t; have = true; }
  }
  if (!have) throw std::logic_error("radial projection: ray parallel to all slabs");
  return best;
}

Vec ray_at(const Vec& c, const Vec& p, const Rat& t) {
  return vadd(c, vscale(t, vsub(p, c)));
}

Vec sample_center(const Support& cell, const GridComplex& g, std::uint64_t& st) {
  Vec c(g.n);
  for (int a = 0; a < g.n; ++a) {
    Rat base = g.lo[a] + g.spacing(a) * cell.pos[a];
    if (cell.mask & (1u << a)) {
      Rat u = (unit_rat(st) * Rat(1048574, 1048576)) + Rat(1, 1048576);  // in (0,1)
      c[a] = base + g.spacing(a) * u;
    } else {
      c[a] = base;
    }
  }
  return c;
}

}  // namespace

DeformResult federer_fleming_deform(const PolyChain& z, GridPtr grid, const Config& cfg,
                                    std::uint64_t seed) {
  if (z.dim > 1) throw std::invalid_argument("federer_fleming_deform: only k <= 1 supported");
  DeformResult res;
  res.input_mass = z.mass();
  res.deformation.dim = z.dim + 1;

  PolyChain active = split_at_lattice(z, *grid);
  double blowup_limit = cfg.ff_blowup_base * std::pow(4.0, grid->n);

  for (int q = grid->n; q > z.dim; --q) {
    // group active pieces by supporting cell of dimension q
    std::map<int, std::vector<size_t>> by_cell;
    for (size_t i = 0; i < active.simplices.size(); ++i) {
      Support s = support_of(simplex_barycenter(active.simplices[i]), *grid);
      if (s.dim == q) by_cell[grid->cell_id(q, GridCell{s.mask, s.pos})].push_back(i);
    }
    std::vector<char> consumed(active.simplices.size(), 0);
    PolyChain projected;
    projected.dim = z.dim;
    for (auto& [cid, idxs] : by_cell) {
      GridCell gc = grid->cell_of(q, cid);
      Support cell{gc.mask, gc.pos, q};
      double local_mass = 0;
      for (size_t i : idxs) local_mass += simplex_volume(active.simplices[i]);

      bool ok = false;
      for (int attempt = 0; attempt < cfg.ff_retry_budget && !ok; ++attempt) {
        std::uint64_t st = stream_seed(seed, "ff") ^ (std::uint64_t)cid * 0x9e3779b97f4a7c15ull ^
                           ((std::uint64_t)attempt << 32) ^ ((std::uint64_t)q << 56);
        Vec c = sample_center(cell, *grid, st);
        // degeneracy checks
        bool degenerate = false;
        for (size_t i : idxs) {
          const Simplex& s = active.simplices[i];
          if (z.dim == 0) {
            if (s[0] == c) { degenerate = true; break; }
          } else {
            if (gram_det({c, s[0], s[1]}) == 0) { degenerate = true; break; }
          }
        }
        if (degenerate) { ++res.retries; continue; }

        PolyChain proj_local;
        proj_local.dim = z.dim;
        PolyChain tau_local;
        tau_local.dim = z.dim + 1;
        for (size_t i : idxs) {
          const Simplex& s = active.simplices[i];
          if (z.dim == 0) {
            Rat t = exit_param(c, s[0], cell, *grid);
            Vec img = ray_at(c, s[0], t);
            if (img != s[0]) tau_local.simplices.push_back({s[0], img});
            proj_local.simplices.push_back({img});
          } else {
            // breakpoints where the exit facet changes along the segment
            const Vec &x0 = s[0], &x1 = s[1];
            std::vector<Rat> brk;
            Vec dseg = vsub(x1, x0);
            std::vector<int> axes;
            for (int a = 0; a < grid->n; ++a)
              if (cell.mask & (1u << a)) axes.push_back(a);
            auto coord = [&](int a, const Rat& sp) { return x0[a] + sp * dseg[a]; };
            for (int a : axes) {
              // direction sign flip: x_a(s) == c_a
              Rat da = dseg[a];
              if (da != 0) {
                Rat sflip = (c[a] - x0[a]) / da;
                if (sflip > 0 && sflip < 1) brk.push_back(sflip);
              }
            }
            for (size_t ai = 0; ai < axes.size(); ++ai)
              for (size_t bi = 0; bi < axes.size(); ++bi) {
                if (ai == bi) continue;
                int a = axes[ai], b = axes[bi];
                for (int sa = 0; sa < 2; ++sa)
                  for (int sb = 0; sb < 2; ++sb) {
                    Rat va = grid->lo[a] + grid->spacing(a) * (cell.pos[a] + sa);
                    Rat vb = grid->lo[b] + grid->spacing(b) * (cell.pos[b] + sb);
                    // (va - c_a)(x_b(s) - c_b) = (vb - c_b)(x_a(s) - c_a): linear in s
                    Rat A = (va - c[a]) * dseg[b] - (vb - c[b]) * dseg[a];
                    Rat B = (va - c[a]) * (x0[b] - c[b]) - (vb - c[b]) * (x0[a] - c[a]);
                    if (A == 0) continue;
                    Rat sp = -B / A;
                    if (sp > 0 && sp < 1) brk.push_back(sp);
                  }
              }
            std::sort(brk.begin(), brk.end());
            brk.erase(std::unique(brk.begin(), brk.end()), brk.end());
            std::vector<Rat> cuts = {Rat(0)};
            cuts.insert(cuts.end(), brk.begin(), brk.end());
            cuts.push_back(Rat(1));
            for (size_t e = 0; e + 1 < cuts.size(); ++e) {
              Vec y0 = vlerp(x0, x1, cuts[e]);
              Vec y1 = vlerp(x0, x1, cuts[e + 1]);
              Rat t0 = exit_param(c, y0, cell, *grid);
              Rat t1 = exit_param(c, y1, cell, *grid);
              Vec i0 = ray_at(c, y0, t0);
              Vec i1 = ray_at(c, y1, t1);
              tau_local.simplices.push_back({y0, y1, i1});
              tau_local.simplices.push_back({y0, i1, i0});
              if (i0 != i1) proj_local.simplices.push_back({i0, i1});
            }
          }
        }
        double pm = proj_local.mass();
        if (local_mass > 1e-12 && pm > blowup_limit * local_mass) {
          ++res.retries;
          continue;
        }
        projected.append(proj_local);
        res.deformation.append(tau_local);
        ok = true;
      }
      if (!ok) throw std::runtime_error("federer_fleming_deform: projection degenerate (retry budget exhausted)");
      for (size_t i : idxs) consumed[i] = 1;
    }
    PolyChain rest;
    rest.dim = z.dim;
    for (size_t i = 0; i < active.simplices.size(); ++i)
      if (!consumed[i]) rest.simplices.push_back(active.simplices[i]);
    rest.append(projected);
    active = std::move(rest);
  }

  res.cellular = rasterize(active, grid, 0);
  res.cellular_mass = res.cellular.mass();
  res.deformation_mass = res.deformation.mass();
  PolyChain sum = z;
  sum.append(res.cellular.to_poly());
  sum.append(res.deformation.boundary());
  res.residual = sum.reduced();
  return res;
}

}  // namespace cyclecraft
