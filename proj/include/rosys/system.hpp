#pragma once

// Concrete matrix operator systems: a unital selfadjoint subspace of real or
// complex d x d matrices, with level-n elements, involution, realization,
// cone membership and the example catalog. Complex data stays in (Re, Im)
// pairs; every positivity decision happens on a real matrix.

#include "rosys/core.hpp"

#include <optional>
#include <utility>

namespace rosys {

enum class Field { real, complex };

struct MatrixSystem {
  Field field = Field::real;
  int d = 1;                // ambient dimension
  std::vector<CMat> basis;  // basis[0] = I_d; later entries traceless, orthonormal
  CMat invol;               // m x m: coeffs(x*) = invol * conj(coeffs(x))
  std::vector<std::string> warnings;

  int dim() const { return static_cast<int>(basis.size()); }
};

// Element of M_n(V) in coefficients: row n*i + j of (re, im) holds the
// length-m coefficient vector of the (i, j) entry. im stays zero over the
// reals.
struct LevelElement {
  int level = 1;
  Mat re, im;  // (level^2) x m
};

// Linear functional in the dual coefficient basis: phi(basis[k]) = values[k].
struct Functional {
  Vec re, im;  // length m; im zero over the reals
};

// Builds the span of {I} u generators u adjoints, orthonormalized under the
// trace inner product with the unit kept first and unnormalized. Dependent
// generators are dropped with a warning record; adjoints absorbed during
// closure are not warned about.
MatrixSystem make_system(Field field, int ambient_dim, const std::vector<CMat>& generators,
                         double tol_basis = 1e-9);

// Coefficient extraction for an ambient matrix known to lie in the span.
// Returns nullopt when the expansion residual exceeds tol.
std::optional<std::pair<Vec, Vec>> coeffs_of(const MatrixSystem& s, const CMat& ambient,
                                             double tol = 1e-7);

LevelElement zero_element(const MatrixSystem& s, int level);
LevelElement unit_element(const MatrixSystem& s, int level);
LevelElement basis_element(const MatrixSystem& s, int k);  // level 1

// Builds a level element from an n x n grid of ambient matrices, each of
// which must expand in the basis.
LevelElement from_ambient(const MatrixSystem& s, const std::vector<std::vector<CMat>>& grid,
                          double tol = 1e-7);

LevelElement operator+(const LevelElement& a, const LevelElement& b);
LevelElement operator-(const LevelElement& a, const LevelElement& b);
LevelElement operator*(double t, const LevelElement& a);

bool element_valid(const MatrixSystem& s, const LevelElement& x);
double element_dist(const LevelElement& a, const LevelElement& b);

// (x*)_{ij} = (x_{ji})*.
LevelElement involution(const MatrixSystem& s, const LevelElement& x);

// x = sa + as with sa* = sa and as* = -as, exact in coefficients.
std::pair<LevelElement, LevelElement> sa_as_split(const MatrixSystem& s, const LevelElement& x);

bool is_selfadjoint(const MatrixSystem& s, const LevelElement& x, double tol = 1e-9);

// Complex nd x nd value of the block matrix [x_ij] in the ambient algebra;
// im part is zero over the reals.
CMat realize_c(const MatrixSystem& s, const LevelElement& x);

// Real realization: nd x nd over the reals, the entrywise 2nd x 2nd
// realification over the complexes (each entry a+bi becomes [[a,-b],[b,a]]).
Mat realize(const MatrixSystem& s, const LevelElement& x);

// Membership in the concrete cone at the element's level. Non-selfadjoint
// input returns false rather than erroring.
bool cone_member(const MatrixSystem& s, const LevelElement& x, double tol = 1e-8);

// lambda_min of the realization; requires selfadjoint input.
double cone_margin(const MatrixSystem& s, const LevelElement& x);

// Real dimension of M_n(V)_sa, as the rank of (id + involution)/2 on real
// coefficient space.
int sa_dimension(const MatrixSystem& s, int n);

// The normalized ambient trace restricted to the system.
Functional faithful_state(const MatrixSystem& s);

std::complex<double> apply_functional(const MatrixSystem& s, const Functional& f,
                                      const LevelElement& x);  // level 1 only

// Entrywise application [f(x_ij)] at any level.
CMat apply_functional_level(const MatrixSystem& s, const Functional& f, const LevelElement& x);

// y = alpha* x alpha for an (n x k) scale matrix; result has level k.
LevelElement compress(const MatrixSystem& s, const LevelElement& x, const CMat& alpha);

// Named example systems: quaternions, toeplitz(n), tridiag(n), chordal3, r5,
// m2c, mnc(n), full(n).
MatrixSystem catalog(const std::string& name);

}  // namespace rosys
