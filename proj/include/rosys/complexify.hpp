#pragma once

// Complexification of a real operator system and realification of a complex
// one, with the 2x2 block calculus c(x,y) = [[x,-y],[y,x]] that decides
// complexified positivity inside the real system, and the conjugation theta.

#include "rosys/system.hpp"

namespace rosys {

// [[x, -y], [y, x]] at level 2n over the same system.
LevelElement c_block(const MatrixSystem& s, const LevelElement& x, const LevelElement& y);

// Same ambient matrices with complex coefficients; basis and involution carry
// over unchanged.
MatrixSystem complexify_system(const MatrixSystem& s);

// Membership of x + iy in the complexified cone, decided by definition as
// cone membership of c(x, y) at level 2n in the real system.
bool complexified_member(const MatrixSystem& s_real, const LevelElement& x,
                         const LevelElement& y, double tol = 1e-8);

// Element of the complexified system with real part x and imaginary part y.
LevelElement complexified_element(const MatrixSystem& s_c, const LevelElement& x,
                                  const LevelElement& y);

// Splits an element of a complexified system into real-coefficient parts.
std::pair<LevelElement, LevelElement> complexified_parts(const LevelElement& z);

// Real system in M_{2d}(R) spanned by the realifications of the basis and of
// i times the basis.
MatrixSystem realify_system(const MatrixSystem& s);

// Coefficientwise conjugation x + iy -> x - iy on a complexified system
// (a complex system whose basis matrices are all real).
LevelElement theta(const MatrixSystem& s_c, const LevelElement& z);

struct ComplexifyReport {
  int samples = 0;
  int violations = 0;
  std::vector<std::string> notes;
};

// Samples selfadjoint elements of S at levels up to n_max, shifted to sit
// clearly inside or outside the cone, and checks that real membership, the
// c-block decision, and concrete membership in the complexified system all
// agree.
ComplexifyReport check_complexification(const MatrixSystem& s, int n_max, int samples,
                                        std::uint64_t seed);

}  // namespace rosys
