#include "cyclecraft/rational.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace cyclecraft {

Vec vadd(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec vsub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec vscale(const Rat& s, const Vec& a) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

Vec vlerp(const Vec& a, const Vec& b, const Rat& s) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * (b[i] - a[i]);
  return r;
}

Rat vdot(const Vec& a, const Vec& b) {
  Rat r = 0;
  for (size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
  return r;
}

Rat vnorm2(const Vec& a) { return vdot(a, a); }

Rat dist2(const Vec& a, const Vec& b) { return vnorm2(vsub(a, b)); }

bool is_zero(const Vec& a) {
  for (const auto& x : a)
    if (x != 0) return false;
  return true;
}

double to_double(const Rat& r) { return r.convert_to<double>(); }

double vnorm(const Vec& a) { return std::sqrt(to_double(vnorm2(a))); }

double dist(const Vec& a, const Vec& b) { return std::sqrt(to_double(dist2(a, b))); }

std::string rat_to_string(const Rat& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

Rat rat_from_string(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Int num(s.substr(0, slash));
    Int den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("rational with zero denominator: " + s);
    return Rat(num, den);
  }
  auto dot = s.find('.');
  if (dot == std::string::npos) return Rat(Int(s));
  // decimal literal: digits.digits
  std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
  bool neg = !head.empty() && head[0] == '-';
  if (neg) head = head.substr(1);
  if (head.empty()) head = "0";
  Int den = 1;
  for (size_t i = 0; i < tail.size(); ++i) den *= 10;
  Int num = Int(head) * den + (tail.empty() ? Int(0) : Int(tail));
  Rat r(num, den);
  return neg ? -r : r;
}

Rat rat_approx(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw std::invalid_argument("rat_approx of non-finite value");
  bool neg = x < 0;
  double v = neg ? -x : x;
  // Continued-fraction convergents with bounded denominator.
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(frac);
    if (fl > 9e17) break;
    std::int64_t a = (std::int64_t)fl;
    std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den || q2 < 0) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double rem = frac - fl;
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
  }
  if (q1 == 0) return Rat(neg ? -p0 : p0, q0);
  Rat r(p1, q1);
  return neg ? -r : r;
}

int row_reduce(Mat& m) {
  if (m.empty()) return 0;
  size_t rows = m.size(), cols = m[0].size();
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t piv = r;
    while (piv < rows && m[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[r], m[piv]);
    Rat inv = m[r][c];
    for (size_t j = c; j < cols; ++j) m[r][j] /= inv;
    for (size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c] == 0) continue;
      Rat f = m[i][c];
      for (size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    ++r;
  }
  return (int)r;
}

int rank(Mat m) { return row_reduce(m); }

Rat det(Mat m) {
  size_t n = m.size();
  Rat d = 1;
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    while (piv < n && m[piv][c] == 0) ++piv;
    if (piv == n) return 0;
    if (piv != c) { std::swap(m[c], m[piv]); d = -d; }
    d *= m[c][c];
    Rat inv = m[c][c];
    for (size_t i = c + 1; i < n; ++i) {
      if (m[i][c] == 0) continue;
      Rat f = m[i][c] / inv;
      for (size_t j = c; j < n; ++j) m[i][j] -= f * m[c][j];
    }
  }
  return d;
}

std::optional<std::vector<Rat>> solve(const Mat& a, const std::vector<Rat>& b) {
  size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  Mat aug(rows, std::vector<Rat>(cols + 1));
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) aug[i][j] = a[i][j];
    aug[i][cols] = b[i];
  }
  row_reduce(aug);
  std::vector<Rat> x(cols, Rat(0));
  for (size_t i = 0; i < rows; ++i) {
    size_t lead = cols + 1;
    for (size_t j = 0; j <= cols; ++j)
      if (aug[i][j] != 0) { lead = j; break; }
    if (lead == cols) return std::nullopt;  // 0 = nonzero
    if (lead > cols) continue;              // zero row
    x[lead] = aug[i][cols];
    // free columns after lead stay 0, so x[lead] = rhs minus nothing
    for (size_t j = lead + 1; j < cols; ++j)
      if (aug[i][j] != 0) x[lead] -= aug[i][j] * x[j];
  }
  // verify (guards against free-variable interplay)
  for (size_t i = 0; i < rows; ++i) {
    Rat s = 0;
    for (size_t j = 0; j < cols; ++j) s += a[i][j] * x[j];
    if (s != b[i]) return std::nullopt;
  }
  return x;
}

std::vector<std::vector<Rat>> nullspace(const Mat& a) {
  size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  Mat m = a;
  row_reduce(m);
  std::vector<int> lead_of_col(cols, -1);
  size_t r = 0;
  for (size_t i = 0; i < rows; ++i) {
    size_t lead = cols;
    for (size_t j = 0; j < cols; ++j)
      if (m[i][j] != 0) { lead = j; break; }
    if (lead < cols) lead_of_col[lead] = (int)i, ++r;
  }
  std::vector<std::vector<Rat>> basis;
  for (size_t c = 0; c < cols; ++c) {
    if (lead_of_col[c] >= 0) continue;
    std::vector<Rat> v(cols, Rat(0));
    v[c] = 1;
    for (size_t j = 0; j < cols; ++j) {
      if (lead_of_col[j] >= 0) v[j] = -m[lead_of_col[j]][c];
    }
    basis.push_back(std::move(v));
  }
  return basis;
}

Rat gram_det(const std::vector<Vec>& pts) {
  if (pts.size() < 2) return pts.empty() ? Rat(0) : Rat(1);
  size_t k = pts.size() - 1;
  std::vector<Vec> e(k);
  for (size_t i = 0; i < k; ++i) e[i] = vsub(pts[i + 1], pts[0]);
  Mat g(k, std::vector<Rat>(k));
  for (size_t i = 0; i < k; ++i)
    for (size_t j = i; j < k; ++j) g[i][j] = g[j][i] = vdot(e[i], e[j]);
  return det(g);
}

double simplex_volume(const std::vector<Vec>& pts) {
  if (pts.size() == 1) return 1.0;  // a point has 0-dim mass 1
  Rat g = gram_det(pts);
  size_t k = pts.size() - 1;
  double kfact = 1.0;
  for (size_t i = 2; i <= k; ++i) kfact *= (double)i;
  return std::sqrt(to_double(g)) / kfact;
}

Rat factorial_sq(int k) {
  Rat f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f * f;
}

}  // namespace cyclecraft
