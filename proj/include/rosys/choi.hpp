#pragma once

// Feasibility engine for the intersection of the PSD cone with an affine
// subspace, run by alternating projections with Dykstra corrections, plus the
// completely-positive check for maps given by their values on a system basis.
// Every verdict ships with checkable data: a feasible point that satisfies
// both constraint families, or a separating witness that is (numerically)
// negative semidefinite on the cone side and constant-positive on the affine
// side.

#include "rosys/core.hpp"
#include "rosys/system.hpp"

namespace rosys {

enum class Feas { feasible, infeasible, undecided };

Vec flatten(const Mat& m);               // row-major
Mat unflatten(const Vec& v, int n);      // square reshape
Vec cflatten(const CMat& m);             // [re rows; im rows]
CMat cunflatten(const Vec& v, int n);

struct FeasResult {
  Feas verdict = Feas::undecided;
  Vec cone_point;     // in the cone exactly (when produced)
  Vec affine_point;   // satisfies the rows exactly up to solver accuracy
  Vec witness;        // affine_point - cone_point at the terminal gap
  double gap = 0.0;   // distance between the two iterates at exit
  double witness_norm = 0.0;
  double witness_max_eig = 0.0;  // cone-side support defect of the witness
  double witness_value = 0.0;    // <witness, affine point>
  Vec multipliers;               // row weights with witness ~ rows^T * multipliers
  int iterations = 0;
  std::string note;
};

// Generic driver over a real coordinate space: rows r_i with <r_i, x> = rhs_i
// cut the affine set; cone_project must be the exact metric projection onto
// the cone; max_eig must return the support slope sup{<w,p> : p in cone,
// tr-normalized}, i.e. the largest eigenvalue of the reshaped witness.
// Infeasibility is only claimed when the witness passes the rowspace and
// orientation checks; the caller finishes the argument with its own trace
// bound on feasible points.
FeasResult psd_affine_feasibility(int dim, const std::vector<Vec>& rows, const Vec& rhs,
                                  const std::function<Vec(const Vec&)>& cone_project,
                                  const std::function<double(const Vec&)>& max_eig,
                                  int max_iter = 5000, double tol = 1e-8);

// Symmetric real specialization: constraints <sym(g_i), c> = rhs_i over
// symmetric n x n matrices, entrywise inner product.
FeasResult sym_psd_feasibility(int n, const std::vector<Mat>& constraints, const Vec& rhs,
                               int max_iter = 5000, double tol = 1e-8);

// Hermitian specialization: sum_ab (m_i)_ab c_ab = v_i over hermitian n x n
// pairs; each complex constraint contributes its real and imaginary rows.
FeasResult herm_psd_feasibility(int n, const std::vector<CMat>& constraints,
                                const std::vector<std::complex<double>>& values,
                                int max_iter = 5000, double tol = 1e-8);

struct MatrixStateResult {
  Feas verdict = Feas::undecided;
  CMat choi;     // dk x dk extension Choi matrix (im zero over the reals)
  CMat witness;  // separator in the same space
  double gap = 0.0;
  int iterations = 0;
  std::string note;
};

// Decides whether basis |-> images[k] extends to a unital completely
// positive map into M_k by Choi-matrix feasibility. Requires images[0] = I.
MatrixStateResult matrix_state_check(const MatrixSystem& s, const std::vector<CMat>& images,
                                     double tol = 1e-8, int max_iter = 5000);

}  // namespace rosys
