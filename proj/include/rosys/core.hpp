#pragma once

// Dense small-matrix kernel shared by every other rosys header: symmetric
// eigendecomposition, three-valued PSD tests, Kronecker and block utilities,
// and seeded RNG streams. Everything here is real; complex data is handled
// one level up as (Re, Im) pairs.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace rosys {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Tolerance knobs. Defaults are the library-wide working values; callers that
// need a different membership tolerance pass their own copy.
struct Tols {
  double eig = 1e-10;        // relative eigen-reconstruction tolerance
  double symmetrize = 1e-8;  // max |A - A^T| accepted before symmetrizing
  double basis = 1e-9;       // rank cutoff for basis orthonormalization
  double cert = 1e-8;        // certificate verification tolerance
  double member = 1e-8;      // default cone membership tolerance
};

struct EigResult {
  Vec values;   // ascending
  Mat vectors;  // orthogonal, columns are eigenvectors
};

// Symmetric eigendecomposition. Requires a square, finite matrix whose
// asymmetry is at most symmetrize_tol; the input is symmetrized before
// factoring. Deterministic for identical input.
EigResult eig_sym(const Mat& a, double symmetrize_tol = 1e-8);

double lambda_min_sym(const Mat& a, double symmetrize_tol = 1e-8);

enum class PsdVerdict { inside, boundary, outside };

// Three-valued PSD classification: lambda_min >= tol is inside, |lambda_min|
// < tol is boundary, anything else is outside.
PsdVerdict psd_classify(const Mat& a, double tol, double symmetrize_tol = 1e-8);

// Boolean face of psd_classify; boundary maps to true.
bool is_psd(const Mat& a, double tol, double symmetrize_tol = 1e-8);

Mat kron(const Mat& a, const Mat& b);

// Permutation P of size 2(n+m) with
//   c(x (+) z, y (+) w) = P^T (c(x,y) (+) c(z,w)) P
// where c(x,y) = [[x,-y],[y,x]] and blocks have sizes n and m.
Mat canonical_shuffle(int n, int m);

// Projection onto the PSD cone in Frobenius norm (symmetrizes first).
Mat psd_project(const Mat& a);

double max_abs(const Mat& a);
double asym_norm(const Mat& a);  // max |A - A^T|
bool all_finite(const Mat& a);

// Nonnegative least squares, Lawson-Hanson active set: min |Ax - b| s.t. x >= 0.
Vec nnls(const Mat& a, const Vec& b, int max_iter = 0, double tol = 1e-12);

// Deterministic RNG streams: independent generators derived from
// (seed, tag, sub). Used so multistart fan-out merges deterministically.
std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t sub = 0);

Vec randn_vec(std::mt19937_64& g, int n);
Mat randn_mat(std::mt19937_64& g, int r, int c);
Mat random_sym(std::mt19937_64& g, int n);

// Runs fn(i) for i in [0, n) on up to jobs threads. jobs <= 1 runs inline.
// Exceptions propagate. Results must be written to preallocated slots so the
// merge is deterministic.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

// Complex matrix as a (Re, Im) pair of equally sized real matrices. All
// positivity questions about hermitian pairs are answered on the real
// realification [[re,-im],[im,re]], never through a complex eigensolver.
struct CMat {
  Mat re, im;

  CMat() = default;
  explicit CMat(const Mat& r) : re(r), im(Mat::Zero(r.rows(), r.cols())) {}
  CMat(const Mat& r, const Mat& i) : re(r), im(i) {}

  Eigen::Index rows() const { return re.rows(); }
  Eigen::Index cols() const { return re.cols(); }
  static CMat Zero(int r, int c) { return {Mat::Zero(r, c), Mat::Zero(r, c)}; }
  static CMat Identity(int n) { return {Mat::Identity(n, n), Mat::Zero(n, n)}; }
};

CMat operator+(const CMat& a, const CMat& b);
CMat operator-(const CMat& a, const CMat& b);
CMat operator*(const CMat& a, const CMat& b);  // matrix product
CMat operator*(double s, const CMat& a);
CMat operator*(std::complex<double> s, const CMat& a);

CMat adj(const CMat& a);                  // conjugate transpose
CMat kron(const CMat& a, const CMat& b);  // Kronecker product
double max_abs(const CMat& a);            // entrywise max of |re| and |im|
double herm_defect(const CMat& a);        // max_abs(a - adj(a))
bool all_finite(const CMat& a);
std::complex<double> trace_ip(const CMat& a, const CMat& b);  // tr(a* b)
std::complex<double> ctrace(const CMat& a);

// Block realification [[re,-im],[im,re]]; a *-isomorphism onto its image, so
// hermitian PSD pairs map exactly to symmetric PSD matrices with doubled
// eigenvalue multiplicities.
Mat realify(const CMat& x);
CMat unrealify(const Mat& r);  // averaged inverse of realify

double lambda_min_herm(const CMat& a, double herm_tol = 1e-8);
bool is_psd(const CMat& a, double tol, double herm_tol = 1e-8);

struct HermEig {
  Vec values;    // ascending, one per complex eigenvector
  CMat vectors;  // unitary columns
};

// Hermitian eigendecomposition through the realification: eigenvalues come
// back doubled, eigenvalue clusters are resolved by projecting the realified
// eigenspace projector back to a complex one and orthonormalizing its range.
HermEig herm_eig(const CMat& a, double herm_tol = 1e-8);

}  // namespace rosys
