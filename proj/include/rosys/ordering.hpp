#pragma once

// Abstract matrix orderings: cones generated by declared positive elements,
// their archimedean closures and archimedeanization, quotients by kernel
// subspaces, the minimal and maximal orderings over a level-k cone, and the
// order-unit extension built from level-2 blocks. Every decision returns a
// Certificate carrying either a verified decomposition or a verified
// separating functional.
//
// Membership in a generated cone is decided exactly as a PSD-affine
// feasibility problem: x = sum_l alpha_l^T P_{i_l} alpha_l holds for some
// scale matrices iff there are PSD matrices Y_i (one per generator, size
// p_i*n) with x's coefficients equal to a fixed linear image of the Y_i;
// repetitions of a generator correspond to rank(Y_i) > 1.

#include "rosys/choi.hpp"
#include "rosys/system.hpp"

#include <memory>

namespace rosys {

enum class Verdict { member, non_member, undecided };

struct DecompPiece {
  int generator = 0;  // index into the ordering's generator list
  CMat alpha;         // p x n scale matrix (im zero over the reals)
};

struct Decomposition {
  std::vector<DecompPiece> pieces;
  double residual = 0.0;  // reconstruction distance to x
};

// Real-linear functional on M_n(V) in coefficient form; value(y) =
// <re, y.re> + <im, y.im> entrywise.
struct WitnessFunctional {
  Mat re, im;  // (n^2) x m
  double value_on_x = 0.0;
  double min_on_cone_samples = 0.0;
};

double witness_value(const WitnessFunctional& w, const LevelElement& y);

// f(v) = u^T realize(v) u as a coefficient functional.
WitnessFunctional functional_from_realization(const MatrixSystem& s, int level, const Vec& u);

struct Certificate {
  Verdict verdict = Verdict::undecided;
  std::optional<Decomposition> decomposition;
  std::optional<WitnessFunctional> witness;
  std::optional<LevelElement> quotient_shift;  // y with x + y certified positive
  std::optional<CMat> omin_alpha;              // falsifying compression scale
  double residual = 0.0;                       // best feasibility gap or margin
  std::string note;
};

struct GeneratedOrdering {
  MatrixSystem base;
  std::vector<LevelElement> generators;  // selfadjoint, arbitrary levels
  LevelElement unit;                     // level 1
  std::string note;                      // provenance of the generator pool
};

GeneratedOrdering make_generated(const MatrixSystem& s, std::vector<LevelElement> gens);

// Exact membership in the cone generated by compressions of the declared
// generators. member certificates carry a decomposition trimmed to at most
// dim M_n(V) pieces; non_member certificates carry a functional vanishing or
// positive on the cone and negative on x.
Certificate generated_member(const GeneratedOrdering& d, const LevelElement& x,
                             int budget = 5000, double tol = 1e-8, std::uint64_t seed = 0);

std::vector<double> default_eps_schedule();  // 1e-1 .. 1e-6

// Membership in the archimedean closure: x + eps e_n must be generated for
// every eps in the schedule; monotonicity in eps prunes the search when the
// unit itself is reachable.
Certificate arch_closure_member(const GeneratedOrdering& d, const LevelElement& x,
                                std::vector<double> eps_schedule = {}, int budget = 5000,
                                double tol = 1e-8, std::uint64_t seed = 0);

// Polymorphic face shared by the concrete, generated-closure, minimal and
// quotient orderings.
class MatrixOrdering {
 public:
  virtual ~MatrixOrdering() = default;
  virtual const MatrixSystem& system() const = 0;
  virtual LevelElement unit() const = 0;
  virtual Certificate member(const LevelElement& x, double tol = 1e-8,
                             int budget = 5000) const = 0;
  // Membership in the archimedean closure; identical to member for orderings
  // that are already closed.
  virtual Certificate closure_member(const LevelElement& x, double tol = 1e-8,
                                     int budget = 5000) const {
    return member(x, tol, budget);
  }
  // Concave-in-x order margin; positive inside, negative outside.
  virtual double margin(const LevelElement& x, int budget = 5000) const = 0;
  // Distance of x from the ordering's zero coset (nonzero test for
  // properness searches; quotients measure modulo the kernel).
  virtual double zero_distance(const LevelElement& x) const;
  virtual std::string describe() const = 0;
};

class ConcreteOrdering final : public MatrixOrdering {
 public:
  explicit ConcreteOrdering(MatrixSystem s);
  const MatrixSystem& system() const override { return s_; }
  LevelElement unit() const override { return unit_element(s_, 1); }
  Certificate member(const LevelElement& x, double tol = 1e-8,
                     int budget = 5000) const override;
  double margin(const LevelElement& x, int budget = 5000) const override;
  std::string describe() const override { return "concrete"; }

 private:
  MatrixSystem s_;
};

// Archimedean closure of a generated ordering, the shape of OMAX_k and the
// order-unit extension cones.
class GeneratedClosureOrdering final : public MatrixOrdering {
 public:
  GeneratedClosureOrdering(GeneratedOrdering d, std::uint64_t seed = 0);
  const MatrixSystem& system() const override { return d_.base; }
  LevelElement unit() const override { return d_.unit; }
  const GeneratedOrdering& data() const { return d_; }
  Certificate member(const LevelElement& x, double tol = 1e-8,
                     int budget = 5000) const override;
  Certificate closure_member(const LevelElement& x, double tol = 1e-8,
                             int budget = 5000) const override;
  double margin(const LevelElement& x, int budget = 5000) const override;
  std::string describe() const override;

 private:
  GeneratedOrdering d_;
  std::uint64_t seed_;
};

class OminOrdering final : public MatrixOrdering {
 public:
  OminOrdering(MatrixSystem s, int k, int restarts = 16, std::uint64_t seed = 0);
  const MatrixSystem& system() const override { return s_; }
  LevelElement unit() const override { return unit_element(s_, 1); }
  Certificate member(const LevelElement& x, double tol = 1e-8,
                     int budget = 5000) const override;
  double margin(const LevelElement& x, int budget = 5000) const override;
  std::string describe() const override;
  int k() const { return k_; }
  int restarts() const { return restarts_; }
  std::uint64_t seed() const { return seed_; }

 private:
  MatrixSystem s_;
  int k_;
  int restarts_;
  std::uint64_t seed_;
};

class QuotientOrdering final : public MatrixOrdering {
 public:
  QuotientOrdering(std::shared_ptr<const MatrixOrdering> base,
                   std::vector<LevelElement> kernel_basis);
  const MatrixSystem& system() const override { return base_->system(); }
  LevelElement unit() const override { return base_->unit(); }
  const std::vector<LevelElement>& kernel() const { return kernel_; }
  bool degenerate() const { return degenerate_; }
  Certificate member(const LevelElement& x, double tol = 1e-8,
                     int budget = 5000) const override;
  double margin(const LevelElement& x, int budget = 5000) const override;
  double zero_distance(const LevelElement& x) const override;
  std::string describe() const override;

 private:
  std::shared_ptr<const MatrixOrdering> base_;
  std::vector<LevelElement> kernel_;  // level-1 directions spanning N
  bool degenerate_ = false;           // unit inside the kernel
};

struct OrderUnitReport {
  int samples = 0;
  int successes = 0;
  int certified_failures = 0;  // witness valid for every shift up to t_max
  int undecided = 0;
  std::vector<double> shifts;  // successful t per sample, -1 otherwise
  bool order_unit_evidence = false;
};

// Samples selfadjoint level-2 elements and searches an increasing shift
// schedule for x + t e membership; a single witness that stays negative at
// t_max certifies failure for every smaller shift.
OrderUnitReport matrix_order_unit_check(const MatrixOrdering& d, int samples = 10,
                                        double t_max = 1e6, std::uint64_t seed = 0,
                                        int budget = 5000);

struct ProperReport {
  int checked = 0;
  std::vector<LevelElement> violations;  // z with both +-z accepted, z not zero
};

// Searches level-2 selfadjoint directions (basis sweep plus random samples)
// for nonzero z with both signs members.
ProperReport properness_check_level2(const MatrixOrdering& d, int samples = 20,
                                     int budget = 5000, std::uint64_t seed = 0);

struct Archimedeanization {
  std::vector<LevelElement> n_basis;  // level-1 kernel directions found
  std::shared_ptr<QuotientOrdering> quotient;
  bool degenerate = false;
  std::vector<std::string> notes;
};

// Scans level-1 coefficient directions b, testing +-[[0,b],[b*,0]] against
// the closure at level 2, and quotients by the span of the passing ones.
Archimedeanization archimedeanize(const std::shared_ptr<const MatrixOrdering>& d,
                                  int budget = 5000, double tol = 1e-8);

// Coset positivity in a quotient of the concrete cones: exists y in M_n(J)
// with realize(x + y) + eps I PSD; decided at the smallest eps of the
// schedule by monotonicity.
Certificate quotient_member(const MatrixSystem& s, const std::vector<LevelElement>& jbasis,
                            const LevelElement& x, double tol = 1e-8, int budget = 5000);

// Minimal-ordering membership at block size k: falsified exactly by a
// compression with a negative realization, affirmed only as multistart
// evidence.
Certificate omin_member(const MatrixSystem& s, int k, const LevelElement& x, int restarts = 16,
                        double tol = 1e-8, std::uint64_t seed = 0);

// Maximal ordering over the level-k cone: generated by a canonical
// spanning pool of C_k elements (exact for full matrix algebras via the
// maximally entangled generator) plus the unit.
GeneratedOrdering omax_ordering(const MatrixSystem& s, int k, int pool = 24,
                                std::uint64_t seed = 0);

// Deterministic antiselfadjoint coefficient basis at level 1.
std::vector<LevelElement> as_basis(const MatrixSystem& s);

// Order-unit extension: level-1 positives plus level-2 blocks
// [[e,-x],[x,e]] for antiselfadjoint x on the weighted-max unit ball given
// by as_weights over as_basis(s).
GeneratedOrdering aou_extend(const MatrixSystem& s, const Vec& as_weights,
                             std::uint64_t seed = 0);

}  // namespace rosys
