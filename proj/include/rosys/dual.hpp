#pragma once

// The dual of a concrete matrix system: functionals with the matrix ordering
// induced by completely positive maps into M_n, decided through Choi-matrix
// feasibility over the ambient algebra. Dual level elements reuse the
// LevelElement shape: row n*i + j holds the coefficients of the (i, j) entry
// functional in the basis dual to the system's orthonormal basis.

#include "rosys/ordering.hpp"

namespace rosys {

struct DualSystem {
  MatrixSystem base;
  Functional unit_state;                // the normalized ambient trace
  std::vector<Functional> dual_basis;   // pairing with base.basis = identity
};

DualSystem dual_system(const MatrixSystem& s);

LevelElement dual_zero(const DualSystem& sd, int level);

// Grid with the unit state on the diagonal and zeros elsewhere.
LevelElement dual_unit(const DualSystem& sd, int level);

// The bilinear duality pairing sum_ij Psi_ij(x_ij); real part (exact for
// selfadjoint pairs).
double dual_pair(const DualSystem& sd, const LevelElement& psi, const LevelElement& x);

// Entrywise adjoint grid (Psi*)_ij = (Psi_ji)^*, where f^*(x) = conj f(x*).
LevelElement dual_involution(const DualSystem& sd, const LevelElement& psi);

// Membership of a functional grid in the dual cone at its level: the induced
// map x -> [Psi_ij(x)] must admit a positive-semidefinite Choi extension from
// the ambient matrix algebra. member certificates record the extension
// residual; non_member certificates carry, through the witness coefficients,
// a concretely positive element of M_n(V) pairing strictly negatively with
// the grid.
Certificate dual_cone_member(const DualSystem& sd, const LevelElement& psi, double tol = 1e-8,
                             int budget = 5000);

// Order-unit norm of a functional on the dual system, via bisection on
// t |-> t * unit +/- psi. Non-selfadjoint functionals go through the
// selfadjoint level-2 grid [[0, psi], [psi*, 0]].
double dual_order_unit_norm(const DualSystem& sd, const Functional& psi, int bisect_iters = 24,
                            int budget = 5000);

struct SelfdualReport {
  bool unital = false;               // image of the unit equals the unit state
  double isometry_defect = 0.0;      // max | dual norm - element norm |
  int order_mismatches = 0;          // level 1-2 cone disagreements
  int isometry_samples = 0;
  int order_samples = 0;
  Mat pairing;                       // coefficient matrix of the duality map
  std::vector<std::string> notes;
};

// The quaternions mapped onto their dual by the normalized trace pairing
// a |-> (1/4) <a, .>_F on the 4x4 real representation; verifies unitality,
// isometry of the order-unit norms, and the order isomorphism at levels 1-2.
// jobs = 0 lets the sample loops pick a thread count.
SelfdualReport quaternion_selfdual(int isometry_samples = 200, int order_samples = 50,
                                   std::uint64_t seed = 0, int budget = 5000, int jobs = 0);

struct DualComplexReport {
  int samples = 0;
  int mismatches = 0;
  int undecided = 0;
  std::vector<std::string> notes;
};

// Compares the complexified dual cone (c-block over real dual grids) with the
// dual cone of the complexified system on sampled grids at levels 1-2; the
// two matrix orderings coincide, so decided verdicts must agree.
DualComplexReport dual_complexification_check(const MatrixSystem& s, int samples,
                                              std::uint64_t seed, int budget = 5000,
                                              int jobs = 0);

struct JordanParts {
  Functional plus, minus;
  double norm_plus = 0.0;
  double norm_minus = 0.0;
  std::string note;
};

// Splits a selfadjoint functional as psi = plus - minus with both parts
// dual-cone positive and norm_plus + norm_minus minimal over trace-pairing
// extensions to the ambient algebra (exact when the system is the whole
// algebra; the convex extension search is recorded in the note otherwise).
// Throws std::invalid_argument when psi is not selfadjoint.
JordanParts jordan_decompose(const DualSystem& sd, const Functional& psi, double tol = 1e-8);

}  // namespace rosys
