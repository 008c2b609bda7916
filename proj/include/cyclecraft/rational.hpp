#pragma once

// Exact rational scalars/vectors and the small dense linear algebra used by
// the geometric kernels.  Everything here is exact; doubles appear only at
// the final sqrt when a mass is reported.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cyclecraft {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

using Vec = std::vector<Rat>;  // point or direction, dimension = size()

inline Rat rat(long n, long d = 1) { return Rat(n, d); }

Vec vadd(const Vec& a, const Vec& b);
Vec vsub(const Vec& a, const Vec& b);
Vec vscale(const Rat& s, const Vec& a);
// a + s*(b-a)
Vec vlerp(const Vec& a, const Vec& b, const Rat& s);
Rat vdot(const Vec& a, const Vec& b);
Rat vnorm2(const Vec& a);  // squared euclidean norm
Rat dist2(const Vec& a, const Vec& b);

bool is_zero(const Vec& a);
double to_double(const Rat& r);
double vnorm(const Vec& a);        // sqrt of exact norm2
double dist(const Vec& a, const Vec& b);

// Canonical "p/q" (or "p" when q==1) form; parse accepts both and decimals.
std::string rat_to_string(const Rat& r);
Rat rat_from_string(const std::string& s);

// Nearby rational with denominator <= max_den (Stern-Brocot).  Used only to
// generate inputs/sample points, never inside exact predicates.
Rat rat_approx(double x, std::int64_t max_den = 1 << 20);

// ----- dense exact linear algebra (row-major, small sizes) -----

using Mat = std::vector<std::vector<Rat>>;

// Row-reduce in place; returns rank.  Column order is left-to-right.
int row_reduce(Mat& m);
int rank(Mat m);
Rat det(Mat m);

// Solve A x = b; empty optional if inconsistent.  A is n_rows x n_cols.
std::optional<std::vector<Rat>> solve(const Mat& a, const std::vector<Rat>& b);

// Basis of the (right) nullspace of A.
std::vector<std::vector<Rat>> nullspace(const Mat& a);

// Squared k-volume of the simplex spanned by pts (k = pts.size()-1) times
// (k!)^2, i.e. det of the Gram matrix of edge vectors.  Exact.
Rat gram_det(const std::vector<Vec>& pts);

// k-volume of a simplex: sqrt(gram_det)/k!.  Double.
double simplex_volume(const std::vector<Vec>& pts);

// (k!)^2 as a Rat, for normalizing gram_det comparisons exactly.
Rat factorial_sq(int k);

}  // namespace cyclecraft
