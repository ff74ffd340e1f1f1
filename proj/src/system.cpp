#include "rosys/system.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rosys {

namespace {

double frob(const CMat& a) {
  return std::sqrt(a.re.squaredNorm() + a.im.squaredNorm());
}

// Expands an ambient matrix against the basis: c0 = tr(m)/d for the unit,
// c_k = tr(b_k^* m) for the orthonormal tail. Returns coefficients and the
// residual norm.
std::pair<std::pair<Vec, Vec>, double> expand(const MatrixSystem& s, const CMat& m) {
  const int dim = s.dim();
  Vec cre = Vec::Zero(dim), cim = Vec::Zero(dim);
  CMat rest = m;
  std::complex<double> c0 = ctrace(rest);
  c0 /= static_cast<double>(s.d);
  cre(0) = c0.real();
  cim(0) = c0.imag();
  rest = rest - c0 * s.basis[0];
  for (int k = 1; k < dim; ++k) {
    std::complex<double> c = trace_ip(s.basis[k], rest);
    cre(k) = c.real();
    cim(k) = c.imag();
    rest = rest - c * s.basis[k];
  }
  return {{cre, cim}, frob(rest)};
}

void check_system_field(const MatrixSystem& s, const CMat& a, const char* who) {
  if (s.field == Field::real && max_abs(a.im) != 0.0)
    throw std::invalid_argument(std::string(who) + ": complex data in a real system");
}

}  // namespace

MatrixSystem make_system(Field field, int ambient_dim, const std::vector<CMat>& generators,
                         double tol_basis) {
  if (ambient_dim < 1) throw std::invalid_argument("make_system: ambient_dim must be >= 1");
  MatrixSystem s;
  s.field = field;
  s.d = ambient_dim;
  s.basis.push_back(CMat::Identity(ambient_dim));

  std::vector<std::pair<CMat, int>> candidates;  // (matrix, generator index or -1)
  for (size_t g = 0; g < generators.size(); ++g) {
    const CMat& gen = generators[g];
    if (gen.re.rows() != ambient_dim || gen.re.cols() != ambient_dim ||
        gen.im.rows() != ambient_dim || gen.im.cols() != ambient_dim)
      throw std::invalid_argument("make_system: generator size mismatch");
    if (!all_finite(gen)) throw std::invalid_argument("make_system: non-finite generator");
    check_system_field(s, gen, "make_system");
    candidates.emplace_back(gen, static_cast<int>(g));
    candidates.emplace_back(adj(gen), -1);
  }

  for (auto& [cand, gen_idx] : candidates) {
    double orig = frob(cand);
    CMat v = cand;
    for (int pass = 0; pass < 2; ++pass) {
      std::complex<double> c0 = ctrace(v);
      c0 /= static_cast<double>(s.d);
      v = v - c0 * s.basis[0];
      for (int k = 1; k < s.dim(); ++k) {
        std::complex<double> c = trace_ip(s.basis[k], v);
        v = v - c * s.basis[k];
      }
    }
    double nrm = frob(v);
    if (nrm <= tol_basis * std::max(1.0, orig)) {
      if (gen_idx >= 0) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "dependent generator %d dropped", gen_idx);
        s.warnings.emplace_back(buf);
      }
      continue;
    }
    s.basis.push_back((1.0 / nrm) * v);
  }

  const int m = s.dim();
  s.invol = CMat::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    auto [c, resid] = expand(s, adj(s.basis[k]));
    if (resid > 100.0 * tol_basis)
      throw std::runtime_error("make_system: span not closed under adjoint");
    s.invol.re.col(k) = c.first;
    s.invol.im.col(k) = c.second;
  }
  // x** = x forces invol * conj(invol) = id
  CMat twice = s.invol * CMat(s.invol.re, -s.invol.im);
  if (max_abs(twice - CMat::Identity(m)) > 1e-8)
    throw std::runtime_error("make_system: involution is not an involution");
  return s;
}

std::optional<std::pair<Vec, Vec>> coeffs_of(const MatrixSystem& s, const CMat& ambient,
                                             double tol) {
  check_system_field(s, ambient, "coeffs_of");
  auto [c, resid] = expand(s, ambient);
  if (resid > tol) return std::nullopt;
  return c;
}

LevelElement zero_element(const MatrixSystem& s, int level) {
  if (level < 1) throw std::invalid_argument("zero_element: level must be >= 1");
  LevelElement x;
  x.level = level;
  x.re = Mat::Zero(level * level, s.dim());
  x.im = Mat::Zero(level * level, s.dim());
  return x;
}

LevelElement unit_element(const MatrixSystem& s, int level) {
  LevelElement x = zero_element(s, level);
  for (int i = 0; i < level; ++i) x.re(i * level + i, 0) = 1.0;
  return x;
}

LevelElement basis_element(const MatrixSystem& s, int k) {
  if (k < 0 || k >= s.dim()) throw std::invalid_argument("basis_element: index out of range");
  LevelElement x = zero_element(s, 1);
  x.re(0, k) = 1.0;
  return x;
}

LevelElement from_ambient(const MatrixSystem& s, const std::vector<std::vector<CMat>>& grid,
                          double tol) {
  const int n = static_cast<int>(grid.size());
  if (n < 1) throw std::invalid_argument("from_ambient: empty grid");
  LevelElement x = zero_element(s, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(grid[i].size()) != n)
      throw std::invalid_argument("from_ambient: grid not square");
    for (int j = 0; j < n; ++j) {
      check_system_field(s, grid[i][j], "from_ambient");
      auto [c, resid] = expand(s, grid[i][j]);
      if (resid > tol) throw std::invalid_argument("from_ambient: entry not in span");
      x.re.row(i * n + j) = c.first.transpose();
      x.im.row(i * n + j) = c.second.transpose();
    }
  }
  return x;
}

LevelElement operator+(const LevelElement& a, const LevelElement& b) {
  if (a.level != b.level) throw std::invalid_argument("LevelElement +: level mismatch");
  return {a.level, a.re + b.re, a.im + b.im};
}

LevelElement operator-(const LevelElement& a, const LevelElement& b) {
  if (a.level != b.level) throw std::invalid_argument("LevelElement -: level mismatch");
  return {a.level, a.re - b.re, a.im - b.im};
}

LevelElement operator*(double t, const LevelElement& a) { return {a.level, t * a.re, t * a.im}; }

bool element_valid(const MatrixSystem& s, const LevelElement& x) {
  if (x.level < 1) return false;
  const int n2 = x.level * x.level;
  if (x.re.rows() != n2 || x.re.cols() != s.dim()) return false;
  if (x.im.rows() != n2 || x.im.cols() != s.dim()) return false;
  if (!all_finite(x.re) || !all_finite(x.im)) return false;
  if (s.field == Field::real && max_abs(x.im) != 0.0) return false;
  return true;
}

double element_dist(const LevelElement& a, const LevelElement& b) {
  return std::max(max_abs(a.re - b.re), max_abs(a.im - b.im));
}

LevelElement involution(const MatrixSystem& s, const LevelElement& x) {
  const int n = x.level;
  LevelElement y = zero_element(s, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vec cre = x.re.row(j * n + i), cim = x.im.row(j * n + i);
      // invol * conj(c)
      Vec rre = s.invol.re * cre + s.invol.im * cim;
      Vec rim = s.invol.im * cre - s.invol.re * cim;
      y.re.row(i * n + j) = rre.transpose();
      y.im.row(i * n + j) = rim.transpose();
    }
  }
  return y;
}

std::pair<LevelElement, LevelElement> sa_as_split(const MatrixSystem& s, const LevelElement& x) {
  LevelElement star = involution(s, x);
  return {0.5 * (x + star), 0.5 * (x - star)};
}

bool is_selfadjoint(const MatrixSystem& s, const LevelElement& x, double tol) {
  return element_dist(x, involution(s, x)) <= tol;
}

CMat realize_c(const MatrixSystem& s, const LevelElement& x) {
  const int n = x.level;
  CMat out = CMat::Zero(n * s.d, n * s.d);
  for (int k = 0; k < s.dim(); ++k) {
    Mat cre(n, n), cim(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cre(i, j) = x.re(i * n + j, k);
        cim(i, j) = x.im(i * n + j, k);
      }
    out = out + kron(CMat(cre, cim), s.basis[k]);
  }
  return out;
}

Mat realize(const MatrixSystem& s, const LevelElement& x) {
  CMat v = realize_c(s, x);
  if (s.field == Field::real) return v.re;
  Mat rot(2, 2);
  rot << 0, -1, 1, 0;
  return kron(v.re, Mat::Identity(2, 2)) + kron(v.im, rot);
}

bool cone_member(const MatrixSystem& s, const LevelElement& x, double tol) {
  if (!element_valid(s, x)) return false;
  Mat a = realize(s, x);
  if (asym_norm(a) > 1e-8) return false;
  return is_psd(a, tol);
}

double cone_margin(const MatrixSystem& s, const LevelElement& x) {
  if (!element_valid(s, x)) throw std::invalid_argument("cone_margin: invalid element");
  Mat a = realize(s, x);
  if (asym_norm(a) > 1e-8)
    throw std::invalid_argument("cone_margin: element is not selfadjoint");
  return lambda_min_sym(a);
}

int sa_dimension(const MatrixSystem& s, int n) {
  if (n < 1) throw std::invalid_argument("sa_dimension: level must be >= 1");
  const int m = s.dim();
  const int n2 = n * n;
  const bool cx = s.field == Field::complex;
  const int total = n2 * m * (cx ? 2 : 1);
  Mat t(total, total);
  LevelElement probe = zero_element(s, n);
  for (int col = 0; col < total; ++col) {
    double* slot = col < n2 * m ? &probe.re(col / m, col % m)
                                : &probe.im((col - n2 * m) / m, (col - n2 * m) % m);
    *slot = 1.0;
    LevelElement star = involution(s, probe);
    *slot = 0.0;
    for (int r = 0; r < n2; ++r)
      for (int k = 0; k < m; ++k) {
        t(r * m + k, col) = star.re(r, k);
        if (cx) t(n2 * m + r * m + k, col) = star.im(r, k);
      }
  }
  Mat pi = 0.5 * (Mat::Identity(total, total) + t);
  EigResult er = eig_sym(0.5 * (pi + pi.transpose()), 1.0);
  int rank = 0;
  for (int i = 0; i < total; ++i)
    if (er.values(i) > 0.5) ++rank;
  return rank;
}

Functional faithful_state(const MatrixSystem& s) {
  Functional f;
  f.re = Vec(s.dim());
  f.im = Vec(s.dim());
  for (int k = 0; k < s.dim(); ++k) {
    std::complex<double> t = ctrace(s.basis[k]);
    f.re(k) = t.real() / s.d;
    f.im(k) = t.imag() / s.d;
  }
  return f;
}

std::complex<double> apply_functional(const MatrixSystem& s, const Functional& f,
                                      const LevelElement& x) {
  if (x.level != 1) throw std::invalid_argument("apply_functional: level 1 expected");
  std::complex<double> out = 0.0;
  for (int k = 0; k < s.dim(); ++k)
    out += std::complex<double>(x.re(0, k), x.im(0, k)) * std::complex<double>(f.re(k), f.im(k));
  return out;
}

CMat apply_functional_level(const MatrixSystem& s, const Functional& f, const LevelElement& x) {
  const int n = x.level;
  CMat out = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::complex<double> v = 0.0;
      for (int k = 0; k < s.dim(); ++k)
        v += std::complex<double>(x.re(i * n + j, k), x.im(i * n + j, k)) *
             std::complex<double>(f.re(k), f.im(k));
      out.re(i, j) = v.real();
      out.im(i, j) = v.imag();
    }
  return out;
}

LevelElement compress(const MatrixSystem& s, const LevelElement& x, const CMat& alpha) {
  const int n = x.level;
  if (alpha.re.rows() != n || alpha.im.rows() != n)
    throw std::invalid_argument("compress: scale matrix row count must match level");
  check_system_field(s, alpha, "compress");
  const int k = static_cast<int>(alpha.re.cols());
  if (k < 1) throw std::invalid_argument("compress: empty scale matrix");
  LevelElement y = zero_element(s, k);
  CMat astar = adj(alpha);
  for (int c = 0; c < s.dim(); ++c) {
    Mat cre(n, n), cim(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cre(i, j) = x.re(i * n + j, c);
        cim(i, j) = x.im(i * n + j, c);
      }
    CMat comp = astar * CMat(cre, cim) * alpha;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        y.re(i * k + j, c) = comp.re(i, j);
        y.im(i * k + j, c) = comp.im(i, j);
      }
  }
  return y;
}

namespace {

Mat unit_mat(int d, int i, int j) {
  Mat e = Mat::Zero(d, d);
  e(i, j) = 1.0;
  return e;
}

MatrixSystem full_matrix_system(Field field, int n) {
  std::vector<CMat> gens;
  for (int i = 0; i + 1 < n; ++i) gens.emplace_back(unit_mat(n, i, i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) gens.emplace_back(unit_mat(n, i, j));
  return make_system(field, n, gens);
}

bool parse_arg(const std::string& name, const std::string& head, int& n) {
  if (name.size() < head.size() + 3) return false;
  if (name.compare(0, head.size(), head) != 0) return false;
  if (name[head.size()] != '(' || name.back() != ')') return false;
  std::string inner = name.substr(head.size() + 1, name.size() - head.size() - 2);
  if (inner.empty()) return false;
  for (char c : inner)
    if (c < '0' || c > '9') return false;
  n = std::stoi(inner);
  return true;
}

}  // namespace

MatrixSystem catalog(const std::string& name) {
  if (name == "quaternions") {
    Mat li(4, 4), lj(4, 4), lk(4, 4);
    li << 0, -1, 0, 0,
          1, 0, 0, 0,
          0, 0, 0, -1,
          0, 0, 1, 0;
    lj << 0, 0, -1, 0,
          0, 0, 0, 1,
          1, 0, 0, 0,
          0, -1, 0, 0;
    lk << 0, 0, 0, -1,
          0, 0, -1, 0,
          0, 1, 0, 0,
          1, 0, 0, 0;
    return make_system(Field::real, 4, {CMat(li), CMat(lj), CMat(lk)});
  }
  if (name == "chordal3") {
    // all matrix units except the (1,3) and (3,1) corners; lower triangle
    // comes in through adjoint closure, E_33 through the unit
    std::vector<CMat> gens = {CMat(unit_mat(3, 0, 0)), CMat(unit_mat(3, 1, 1)),
                              CMat(unit_mat(3, 0, 1)), CMat(unit_mat(3, 1, 2))};
    return make_system(Field::real, 3, gens);
  }
  if (name == "r5") {
    std::vector<CMat> gens;
    for (int i = 1; i < 5; ++i) gens.emplace_back(unit_mat(5, i, i));
    return make_system(Field::real, 5, gens);
  }
  if (name == "m2c") return full_matrix_system(Field::complex, 2);
  int n = 0;
  if (parse_arg(name, "toeplitz", n)) {
    if (n < 1) throw std::invalid_argument("catalog: toeplitz size must be >= 1");
    std::vector<CMat> gens;
    for (int k = 1; k < n; ++k) {
      Mat shift = Mat::Zero(n, n);
      for (int i = 0; i + k < n; ++i) shift(i, i + k) = 1.0;
      gens.emplace_back(CMat(Mat(shift + shift.transpose())));
      gens.emplace_back(CMat(Mat(shift - shift.transpose())));
    }
    return make_system(Field::real, n, gens);
  }
  if (parse_arg(name, "tridiag", n)) {
    if (n < 1) throw std::invalid_argument("catalog: tridiag size must be >= 1");
    std::vector<CMat> gens;
    for (int i = 0; i + 1 < n; ++i) gens.emplace_back(unit_mat(n, i, i));
    for (int i = 0; i + 1 < n; ++i) gens.emplace_back(unit_mat(n, i, i + 1));
    return make_system(Field::real, n, gens);
  }
  if (parse_arg(name, "mnc", n)) {
    if (n < 1) throw std::invalid_argument("catalog: mnc size must be >= 1");
    return full_matrix_system(Field::complex, n);
  }
  if (parse_arg(name, "full", n)) {
    if (n < 1) throw std::invalid_argument("catalog: full size must be >= 1");
    return full_matrix_system(Field::real, n);
  }
  throw std::invalid_argument("catalog: unknown name '" + name + "'");
}

}  // namespace rosys
