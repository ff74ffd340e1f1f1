#include "rosys/complexify.hpp"

#include <stdexcept>

namespace rosys {

LevelElement c_block(const MatrixSystem& s, const LevelElement& x, const LevelElement& y) {
  if (x.level != y.level) throw std::invalid_argument("c_block: level mismatch");
  if (!element_valid(s, x) || !element_valid(s, y))
    throw std::invalid_argument("c_block: invalid element");
  const int n = x.level;
  const int big = 2 * n;
  LevelElement out = zero_element(s, big);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.re.row(i * big + j) = x.re.row(i * n + j);
      out.im.row(i * big + j) = x.im.row(i * n + j);
      out.re.row(i * big + (j + n)) = -y.re.row(i * n + j);
      out.im.row(i * big + (j + n)) = -y.im.row(i * n + j);
      out.re.row((i + n) * big + j) = y.re.row(i * n + j);
      out.im.row((i + n) * big + j) = y.im.row(i * n + j);
      out.re.row((i + n) * big + (j + n)) = x.re.row(i * n + j);
      out.im.row((i + n) * big + (j + n)) = x.im.row(i * n + j);
    }
  return out;
}

MatrixSystem complexify_system(const MatrixSystem& s) {
  if (s.field != Field::real)
    throw std::invalid_argument("complexify_system: real system expected");
  MatrixSystem c = s;
  c.field = Field::complex;
  c.warnings.clear();
  return c;
}

bool complexified_member(const MatrixSystem& s_real, const LevelElement& x,
                         const LevelElement& y, double tol) {
  return cone_member(s_real, c_block(s_real, x, y), tol);
}

LevelElement complexified_element(const MatrixSystem& s_c, const LevelElement& x,
                                  const LevelElement& y) {
  if (s_c.field != Field::complex)
    throw std::invalid_argument("complexified_element: complex system expected");
  if (x.level != y.level) throw std::invalid_argument("complexified_element: level mismatch");
  if (x.re.cols() != s_c.dim() || max_abs(x.im) != 0.0 || max_abs(y.im) != 0.0)
    throw std::invalid_argument("complexified_element: real-coefficient parts expected");
  LevelElement z;
  z.level = x.level;
  z.re = x.re;
  z.im = y.re;
  return z;
}

std::pair<LevelElement, LevelElement> complexified_parts(const LevelElement& z) {
  LevelElement x, y;
  x.level = y.level = z.level;
  x.re = z.re;
  x.im = Mat::Zero(z.re.rows(), z.re.cols());
  y.re = z.im;
  y.im = Mat::Zero(z.re.rows(), z.re.cols());
  return {x, y};
}

MatrixSystem realify_system(const MatrixSystem& s) {
  if (s.field != Field::complex)
    throw std::invalid_argument("realify_system: complex system expected");
  std::vector<CMat> gens;
  CMat iunit(Mat::Zero(s.d, s.d), Mat::Identity(s.d, s.d));
  gens.emplace_back(realify(iunit * s.basis[0]));
  for (int k = 1; k < s.dim(); ++k) {
    gens.emplace_back(realify(s.basis[k]));
    gens.emplace_back(realify(iunit * s.basis[k]));
  }
  return make_system(Field::real, 2 * s.d, gens);
}

LevelElement theta(const MatrixSystem& s_c, const LevelElement& z) {
  if (s_c.field != Field::complex)
    throw std::invalid_argument("theta: complex system expected");
  for (const CMat& b : s_c.basis)
    if (max_abs(b.im) != 0.0)
      throw std::invalid_argument("theta: system basis is not real, not a complexification");
  LevelElement out = z;
  out.im = -z.im;
  return out;
}

ComplexifyReport check_complexification(const MatrixSystem& s, int n_max, int samples,
                                        std::uint64_t seed) {
  if (s.field != Field::real)
    throw std::invalid_argument("check_complexification: real system expected");
  MatrixSystem sc = complexify_system(s);
  ComplexifyReport rep;
  auto g = rng_stream(seed, 21);
  std::uniform_int_distribution<int> pick_level(1, n_max);
  for (int t = 0; t < samples; ++t) {
    int n = pick_level(g);
    LevelElement raw = zero_element(s, n);
    raw.re = randn_mat(g, n * n, s.dim());
    LevelElement x = 0.5 * (raw + involution(s, raw));
    // push clearly inside or clearly outside so tolerance skew cannot flip
    // one decision path but not another
    double margin = cone_margin(s, x);
    double shift = (t % 2 == 0) ? (-margin + 0.05) : (-margin - 0.05);
    x = x + shift * unit_element(s, n);
    bool real_side = cone_member(s, x);
    bool via_block = complexified_member(s, x, zero_element(s, n));
    LevelElement z = complexified_element(sc, x, zero_element(s, n));
    bool concrete = cone_member(sc, z);
    ++rep.samples;
    if (real_side != via_block || real_side != concrete) {
      ++rep.violations;
      rep.notes.push_back("sample " + std::to_string(t) + " level " + std::to_string(n) +
                          ": real=" + std::to_string(real_side) +
                          " block=" + std::to_string(via_block) +
                          " concrete=" + std::to_string(concrete));
    }
  }
  return rep;
}

}  // namespace rosys
