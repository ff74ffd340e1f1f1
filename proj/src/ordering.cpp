#include "rosys/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rosys {

namespace {

Mat rot2() {
  Mat r(2, 2);
  r << 0.0, -1.0, 1.0, 0.0;
  return r;
}

int coord_count(const MatrixSystem& s, int level) {
  int base = level * level * s.dim();
  return s.field == Field::complex ? 2 * base : base;
}

Vec elem_vec(const MatrixSystem& s, const LevelElement& x) {
  const Eigen::Index sz = x.re.size();
  if (s.field == Field::real) {
    Vec v(sz);
    Eigen::Map<Vec>(v.data(), sz) = Eigen::Map<const Vec>(x.re.data(), sz);
    return v;
  }
  Vec v(2 * sz);
  v.head(sz) = Eigen::Map<const Vec>(x.re.data(), sz);
  v.tail(sz) = Eigen::Map<const Vec>(x.im.data(), sz);
  return v;
}

LevelElement vec_elem(const MatrixSystem& s, int level, const Vec& v) {
  LevelElement x = zero_element(s, level);
  const Eigen::Index sz = x.re.size();
  Eigen::Map<Vec>(x.re.data(), sz) = v.head(sz);
  if (s.field == Field::complex) Eigen::Map<Vec>(x.im.data(), sz) = v.tail(sz);
  return x;
}

double elem_norm(const MatrixSystem& s, const LevelElement& x) { return elem_vec(s, x).norm(); }

LevelElement random_sa(const MatrixSystem& s, int level, std::mt19937_64& g) {
  LevelElement x = zero_element(s, level);
  x.re = randn_mat(g, level * level, s.dim());
  if (s.field == Field::complex) x.im = randn_mat(g, level * level, s.dim());
  return sa_as_split(s, x).first;
}

CMat random_alpha(const MatrixSystem& s, int rows, int cols, std::mt19937_64& g) {
  Mat re = randn_mat(g, rows, cols);
  if (s.field == Field::complex) return CMat(re, randn_mat(g, rows, cols));
  return CMat(re);
}

// Orthonormal selfadjoint coefficient basis of M_n(V), via the range of the
// symmetrized fixed-point projector of the involution.
std::vector<LevelElement> sa_basis_level(const MatrixSystem& s, int level) {
  const int dim = coord_count(s, level);
  Mat t(dim, dim);
  for (int c = 0; c < dim; ++c) {
    Vec e = Vec::Zero(dim);
    e(c) = 1.0;
    t.col(c) = elem_vec(s, involution(s, vec_elem(s, level, e)));
  }
  Mat p = 0.5 * (Mat::Identity(dim, dim) + t);
  // the projector is idempotent but need not be orthogonal; orthonormalize a
  // spanning set of its range instead of trusting symmetry
  std::vector<Vec> cols;
  for (int c = 0; c < dim; ++c) {
    Vec v = p.col(c);
    for (const Vec& q : cols) v -= q.dot(v) * q;
    if (v.norm() > 1e-8) cols.push_back(v.normalized());
  }
  std::vector<LevelElement> out;
  out.reserve(cols.size());
  for (const Vec& v : cols) out.push_back(vec_elem(s, level, v));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

double witness_value(const WitnessFunctional& w, const LevelElement& y) {
  double v = (w.re.array() * y.re.array()).sum();
  if (w.im.size() == y.im.size() && w.im.size() > 0) v += (w.im.array() * y.im.array()).sum();
  return v;
}

WitnessFunctional functional_from_realization(const MatrixSystem& s, int level, const Vec& u) {
  const int dim = coord_count(s, level);
  Vec fvals(dim);
  for (int c = 0; c < dim; ++c) {
    Vec e = Vec::Zero(dim);
    e(c) = 1.0;
    LevelElement coord = vec_elem(s, level, e);
    Mat r = realize(s, coord);
    fvals(c) = u.dot(Vec(r * u));
  }
  // place the values through the same coordinate layout used to build the
  // sweep elements, so the entrywise pairing reproduces the quadratic form
  LevelElement wel = vec_elem(s, level, fvals);
  WitnessFunctional w;
  w.re = std::move(wel.re);
  w.im = std::move(wel.im);
  return w;
}

GeneratedOrdering make_generated(const MatrixSystem& s, std::vector<LevelElement> gens) {
  GeneratedOrdering d;
  d.base = s;
  d.unit = unit_element(s, 1);
  for (LevelElement& g : gens) {
    if (!element_valid(s, g)) throw std::invalid_argument("make_generated: malformed generator");
    if (!is_selfadjoint(s, g, 1e-7))
      throw std::invalid_argument("make_generated: generators must be selfadjoint");
    if (elem_norm(s, g) <= 1e-12) continue;
    d.generators.push_back(std::move(g));
  }
  return d;
}

namespace {

// ---- generated-cone membership as PSD block feasibility -------------------
//
// x = sum_l alpha_l^* P_{i_l} alpha_l  iff  for each generator i there is a
// PSD matrix Y_i of size p_i * n with
//   x_{uv} = sum_i sum_{ab} (P_i)_{ab} (Y_i)[(a,u),(b,v)],
// where Y_i collects sum_t conj(alpha)_{au} alpha_{bv} over the pieces that
// use generator i. Rank of Y_i counts the repetitions of that generator.

struct YSpace {
  std::vector<int> q;       // block side p_i * n
  std::vector<int> offset;  // coordinate offset of block i
  int dim = 0;              // total real coordinates
  bool complex_field = false;
};

YSpace y_space(const GeneratedOrdering& d, int n) {
  YSpace ys;
  ys.complex_field = d.base.field == Field::complex;
  for (const LevelElement& p : d.generators) {
    int q = p.level * n;
    ys.q.push_back(q);
    ys.offset.push_back(ys.dim);
    ys.dim += (ys.complex_field ? 2 : 1) * q * q;
  }
  return ys;
}

void y_rows(const GeneratedOrdering& d, const LevelElement& x, const YSpace& ys,
            std::vector<Vec>& rows, Vec& rhs) {
  const int n = x.level;
  const int m = d.base.dim();
  const int g = static_cast<int>(d.generators.size());
  const int per = ys.complex_field ? 2 : 1;
  rows.clear();
  rows.reserve(static_cast<size_t>(per) * n * n * m);
  rhs.resize(static_cast<Eigen::Index>(per) * n * n * m);
  Eigen::Index eq = 0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      for (int k = 0; k < m; ++k) {
        if (!ys.complex_field) {
          Vec row = Vec::Zero(ys.dim);
          for (int i = 0; i < g; ++i) {
            const LevelElement& p = d.generators[i];
            const int pl = p.level;
            Mat mm = Mat::Zero(ys.q[i], ys.q[i]);
            for (int a = 0; a < pl; ++a)
              for (int b = 0; b < pl; ++b) {
                double val = p.re(a * pl + b, k);
                if (val != 0.0) mm(a * n + u, b * n + v) += val;
              }
            mm = 0.5 * (mm + mm.transpose()).eval();
            row.segment(ys.offset[i], ys.q[i] * ys.q[i]) = flatten(mm);
          }
          rows.push_back(std::move(row));
          rhs(eq++) = x.re(u * n + v, k);
        } else {
          Vec row_re = Vec::Zero(ys.dim), row_im = Vec::Zero(ys.dim);
          for (int i = 0; i < g; ++i) {
            const LevelElement& p = d.generators[i];
            const int pl = p.level;
            CMat mm = CMat::Zero(ys.q[i], ys.q[i]);
            for (int a = 0; a < pl; ++a)
              for (int b = 0; b < pl; ++b) {
                mm.re(a * n + u, b * n + v) += p.re(a * pl + b, k);
                mm.im(a * n + u, b * n + v) += p.im(a * pl + b, k);
              }
            // real part row pairs with conj(mm), imaginary with conj(-i mm);
            // hermitize both since the iterates stay hermitian
            CMat g1(mm.re, Mat(-mm.im)), g2(mm.im, mm.re);
            CMat h1 = 0.5 * (g1 + adj(g1)), h2 = 0.5 * (g2 + adj(g2));
            row_re.segment(ys.offset[i], 2 * ys.q[i] * ys.q[i]) = cflatten(h1);
            row_im.segment(ys.offset[i], 2 * ys.q[i] * ys.q[i]) = cflatten(h2);
          }
          rows.push_back(std::move(row_re));
          rows.push_back(std::move(row_im));
          rhs(eq++) = x.re(u * n + v, k);
          rhs(eq++) = x.im(u * n + v, k);
        }
      }
}

Vec y_project(const YSpace& ys, const Vec& v) {
  Vec out = v;
  for (size_t i = 0; i < ys.q.size(); ++i) {
    const int q = ys.q[i];
    if (!ys.complex_field) {
      Mat y = unflatten(Vec(v.segment(ys.offset[i], q * q)), q);
      out.segment(ys.offset[i], q * q) = flatten(psd_project(y));
    } else {
      CMat y = cunflatten(Vec(v.segment(ys.offset[i], 2 * q * q)), q);
      CMat h = 0.5 * (y + adj(y));
      out.segment(ys.offset[i], 2 * q * q) = cflatten(unrealify(psd_project(realify(h))));
    }
  }
  return out;
}

double y_max_eig(const YSpace& ys, const Vec& v) {
  double me = -1e300;
  for (size_t i = 0; i < ys.q.size(); ++i) {
    const int q = ys.q[i];
    if (!ys.complex_field) {
      Mat w = unflatten(Vec(v.segment(ys.offset[i], q * q)), q);
      EigResult er = eig_sym(0.5 * (w + w.transpose()), 1.0);
      me = std::max(me, er.values(q - 1));
    } else {
      CMat w = cunflatten(Vec(v.segment(ys.offset[i], 2 * q * q)), q);
      CMat h = 0.5 * (w + adj(w));
      EigResult er = eig_sym(realify(h), 1.0);
      me = std::max(me, er.values(2 * q - 1));
    }
  }
  return me;
}

struct Piece {
  int gen = 0;
  CMat alpha;
  LevelElement value;
  Vec v;
};

std::vector<Piece> extract_pieces(const GeneratedOrdering& d, int n, const YSpace& ys,
                                  const Vec& cone_point) {
  std::vector<Piece> pieces;
  for (size_t i = 0; i < ys.q.size(); ++i) {
    const int q = ys.q[i];
    const LevelElement& p = d.generators[i];
    if (!ys.complex_field) {
      Mat y = unflatten(Vec(cone_point.segment(ys.offset[i], q * q)), q);
      y = 0.5 * (y + y.transpose()).eval();
      EigResult er = eig_sym(y, 1.0);
      double lmax = std::max(0.0, er.values(q - 1));
      for (int t = 0; t < q; ++t) {
        if (er.values(t) <= std::max(1e-12, 1e-10 * lmax)) continue;
        Vec w = std::sqrt(er.values(t)) * er.vectors.col(t);
        Mat al(p.level, n);
        for (int a = 0; a < p.level; ++a)
          for (int u = 0; u < n; ++u) al(a, u) = w(a * n + u);
        Piece pc;
        pc.gen = static_cast<int>(i);
        pc.alpha = CMat(al);
        pc.value = compress(d.base, p, pc.alpha);
        pc.v = elem_vec(d.base, pc.value);
        pieces.push_back(std::move(pc));
      }
    } else {
      CMat y = cunflatten(Vec(cone_point.segment(ys.offset[i], 2 * q * q)), q);
      CMat h = 0.5 * (y + adj(y));
      // realified eigenvectors come in exact pairs; each contributes half of
      // the complex rank-one it encodes
      EigResult er = eig_sym(realify(h), 1.0);
      double lmax = std::max(0.0, er.values(2 * q - 1));
      for (int t = 0; t < 2 * q; ++t) {
        if (er.values(t) <= std::max(1e-12, 1e-10 * lmax)) continue;
        Vec w = std::sqrt(0.5 * er.values(t)) * er.vectors.col(t);
        Mat are(p.level, n), aim(p.level, n);
        for (int a = 0; a < p.level; ++a)
          for (int u = 0; u < n; ++u) {
            // Y holds conj(alpha) alpha^T entries, so undo the conjugate
            are(a, u) = w(a * n + u);
            aim(a, u) = -w(q + a * n + u);
          }
        Piece pc;
        pc.gen = static_cast<int>(i);
        pc.alpha = CMat(are, aim);
        pc.value = compress(d.base, p, pc.alpha);
        pc.v = elem_vec(d.base, pc.value);
        pieces.push_back(std::move(pc));
      }
    }
  }
  return pieces;
}

// Drops linearly dependent pieces while preserving the sum, so the emitted
// decomposition never uses more pieces than the dimension of M_n(V).
void caratheodory_reduce(std::vector<Piece>& pieces) {
  auto drop_zeros = [&]() {
    pieces.erase(std::remove_if(pieces.begin(), pieces.end(),
                                [](const Piece& p) { return p.v.norm() <= 1e-12; }),
                 pieces.end());
  };
  drop_zeros();
  while (pieces.size() > 1) {
    const int r = static_cast<int>(pieces.size());
    Mat m(pieces[0].v.size(), r);
    for (int t = 0; t < r; ++t) m.col(t) = pieces[t].v;
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    if (sv(sv.size() - 1) > 1e-10 * std::max(sv(0), 1e-300)) break;
    Vec lam = svd.matrixV().col(sv.size() - 1);
    if (lam.maxCoeff() < -lam.minCoeff()) lam = -lam;
    double theta = 1e300;
    for (int t = 0; t < r; ++t)
      if (lam(t) > 1e-12) theta = std::min(theta, 1.0 / lam(t));
    if (theta >= 1e299) break;
    std::vector<Piece> next;
    next.reserve(pieces.size());
    for (int t = 0; t < r; ++t) {
      double sc = 1.0 - theta * lam(t);
      if (sc <= 1e-10) continue;
      Piece p = std::move(pieces[t]);
      p.alpha = std::sqrt(sc) * p.alpha;
      p.value = sc * p.value;
      p.v = sc * p.v;
      next.push_back(std::move(p));
    }
    if (next.size() >= pieces.size()) break;
    pieces = std::move(next);
  }
}

// Sampled compressions of the generators; used for span estimates and for
// witness verification against fresh cone points.
std::vector<LevelElement> sample_pieces(const GeneratedOrdering& d, int n, int per_gen,
                                        std::uint64_t seed, std::uint64_t sub) {
  std::vector<LevelElement> out;
  auto g = rng_stream(seed, 31, sub);
  for (const LevelElement& p : d.generators) {
    if (p.level == n) {
      CMat id = CMat::Identity(n);
      out.push_back(compress(d.base, p, id));
    }
    for (int t = 0; t < per_gen; ++t) {
      CMat a = random_alpha(d.base, p.level, n, g);
      out.push_back(compress(d.base, p, a));
    }
  }
  return out;
}

bool verify_witness_on_cone(const GeneratedOrdering& d, int n, WitnessFunctional& w,
                            std::uint64_t seed) {
  double mn = 0.0;
  for (const LevelElement& piece : sample_pieces(d, n, 30, seed, 7)) {
    double val = witness_value(w, piece) / std::max(1.0, elem_norm(d.base, piece));
    mn = std::min(mn, val);
  }
  w.min_on_cone_samples = mn;
  return mn >= -1e-6;
}

}  // namespace

Certificate generated_member(const GeneratedOrdering& d, const LevelElement& x, int budget,
                             double tol, std::uint64_t seed) {
  const MatrixSystem& s = d.base;
  if (!element_valid(s, x)) throw std::invalid_argument("generated_member: malformed element");
  const int n = x.level;
  const double xnorm = elem_norm(s, x);
  budget = std::max(budget, 100);
  Certificate cert;

  if (d.generators.empty()) {
    if (xnorm <= tol) {
      cert.verdict = Verdict::member;
      cert.decomposition = Decomposition{{}, xnorm};
      cert.note = "empty generating set; x vanishes";
      return cert;
    }
    WitnessFunctional w;
    Vec xv = elem_vec(s, x);
    w.re = Mat::Zero(n * n, s.dim());
    w.im = Mat::Zero(n * n, s.dim());
    LevelElement neg = vec_elem(s, n, Vec(-xv / xnorm));
    w.re = neg.re;
    w.im = neg.im;
    w.value_on_x = -xnorm;
    cert.verdict = Verdict::non_member;
    cert.witness = w;
    cert.note = "empty generating set; only zero is generated";
    return cert;
  }

  // quick rejection: components outside the span of the generated cone can
  // never be matched, and the orthogonal leftover itself gives a functional
  // vanishing identically on the cone
  {
    std::vector<LevelElement> samples = sample_pieces(d, n, 2 * coord_count(s, n) / std::max<int>(1, static_cast<int>(d.generators.size())) + 8, seed, 1);
    Mat m(coord_count(s, n), static_cast<Eigen::Index>(samples.size()));
    for (size_t t = 0; t < samples.size(); ++t) m.col(static_cast<Eigen::Index>(t)) = elem_vec(s, samples[t]);
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU);
    const Vec& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index t = 0; t < sv.size(); ++t)
      if (sv(t) > 1e-8 * std::max(sv(0), 1e-300)) ++rank;
    Mat u = svd.matrixU().leftCols(rank);
    Vec xv = elem_vec(s, x);
    Vec perp = xv - u * (u.transpose() * xv);
    if (perp.norm() > 1e-7 * std::max(1.0, xnorm)) {
      WitnessFunctional w;
      LevelElement dir = vec_elem(s, n, Vec(-perp / perp.norm()));
      w.re = dir.re;
      w.im = dir.im;
      w.value_on_x = witness_value(w, x);
      if (verify_witness_on_cone(d, n, w, seed) && w.value_on_x <= -1e-8 * std::max(1.0, xnorm)) {
        cert.verdict = Verdict::non_member;
        cert.witness = w;
        cert.residual = perp.norm();
        cert.note = "x has a component orthogonal to the span of all generator compressions";
        return cert;
      }
    }
  }

  YSpace ys = y_space(d, n);
  std::vector<Vec> rows;
  Vec rhs;
  y_rows(d, x, ys, rows, rhs);
  FeasResult fr = psd_affine_feasibility(
      ys.dim, rows, rhs, [&](const Vec& v) { return y_project(ys, v); },
      [&](const Vec& v) { return y_max_eig(ys, v); }, budget, tol);

  // membership is certified by the reconstruction residual of an extracted
  // decomposition, so try the extraction from any available cone point, even
  // when the solver stopped at its iteration cap just short of declaring
  // feasibility
  if (fr.cone_point.size() > 0) {
    std::vector<Piece> pieces = extract_pieces(d, n, ys, fr.cone_point);
    caratheodory_reduce(pieces);
    LevelElement sum = zero_element(s, n);
    for (const Piece& p : pieces) sum = sum + p.value;
    double resid = element_dist(x, sum);
    if (resid <= 1e-6 * std::max(1.0, xnorm)) {
      Decomposition dec;
      dec.residual = resid;
      for (Piece& p : pieces) dec.pieces.push_back({p.gen, std::move(p.alpha)});
      cert.verdict = Verdict::member;
      cert.decomposition = std::move(dec);
      cert.residual = resid;
      cert.note = "decomposition verified after " + std::to_string(fr.iterations) + " iterations";
      return cert;
    }
    if (fr.verdict == Feas::feasible) {
      cert.verdict = Verdict::undecided;
      cert.residual = resid;
      cert.note = "feasible point found but the decomposition residual " + fmt(resid) +
                  " exceeds tolerance";
      return cert;
    }
  }

  if (fr.verdict == Feas::infeasible && fr.multipliers.size() > 0) {
    const int m = s.dim();
    WitnessFunctional w;
    w.re = Mat::Zero(n * n, m);
    w.im = Mat::Zero(n * n, m);
    Eigen::Index eq = 0;
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v)
        for (int k = 0; k < m; ++k) {
          if (s.field == Field::real) {
            w.re(u * n + v, k) = -fr.multipliers(eq++);
          } else {
            w.re(u * n + v, k) = -fr.multipliers(eq++);
            w.im(u * n + v, k) = -fr.multipliers(eq++);
          }
        }
    double nw = std::sqrt(w.re.squaredNorm() + w.im.squaredNorm());
    if (nw > 1e-14) {
      w.re /= nw;
      w.im /= nw;
      w.value_on_x = witness_value(w, x);
      if (w.value_on_x <= -1e-9 * std::max(1.0, xnorm) && verify_witness_on_cone(d, n, w, seed)) {
        cert.verdict = Verdict::non_member;
        cert.witness = std::move(w);
        cert.residual = fr.gap;
        cert.note = "separating functional from the feasibility dual";
        return cert;
      }
    }
    cert.verdict = Verdict::undecided;
    cert.residual = fr.gap;
    cert.note = "infeasibility indicated but the witness failed verification";
    return cert;
  }

  cert.verdict = Verdict::undecided;
  cert.residual = fr.gap;
  cert.note = fr.note;
  return cert;
}

std::vector<double> default_eps_schedule() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

Certificate arch_closure_member(const GeneratedOrdering& d, const LevelElement& x,
                                std::vector<double> eps_schedule, int budget, double tol,
                                std::uint64_t seed) {
  if (eps_schedule.empty()) eps_schedule = default_eps_schedule();
  std::sort(eps_schedule.begin(), eps_schedule.end(), std::greater<double>());
  const double eps_min = eps_schedule.back();
  const int n = x.level;
  LevelElement en = unit_element(d.base, n);
  const double xnorm = elem_norm(d.base, x);

  // Membership requires every shifted element to be generated; a verified
  // rejection of any single shift already refutes it.
  Certificate unit_cert = generated_member(d, en, budget, tol, seed);
  if (unit_cert.verdict == Verdict::member) {
    // shifted membership is monotone in the shift once the unit is generated,
    // so the smallest shift decides the whole schedule
    Certificate c = generated_member(d, x + eps_min * en, budget, tol, seed);
    if (c.verdict == Verdict::member) {
      c.note = "member at shift " + fmt(eps_min) + "; larger shifts follow by adding unit pieces";
    } else if (c.verdict == Verdict::non_member && c.witness) {
      double v0 = witness_value(*c.witness, x);
      double v1 = v0 + eps_min * witness_value(*c.witness, en);
      if (v0 <= -1e-9 * std::max(1.0, xnorm) && v1 <= -1e-9 * std::max(1.0, xnorm)) {
        c.witness->value_on_x = v0;
        c.note = "functional negative at every shift in [0, " + fmt(eps_min) + "]";
      } else {
        c.note = "shift " + fmt(eps_min) + " has a verified rejection";
      }
    }
    return c;
  }

  // no unit absorption available: walk the whole schedule
  Certificate last;
  for (double eps : eps_schedule) {
    Certificate c = generated_member(d, x + eps * en, budget, tol, seed);
    if (c.verdict == Verdict::member) {
      last = std::move(c);
      continue;
    }
    if (c.verdict == Verdict::non_member) {
      c.note = "shift " + fmt(eps) + " has a verified rejection";
      return c;
    }
    c.note = "undecided at shift " + fmt(eps);
    return c;
  }
  last.note = "member at every shift of the schedule";
  return last;
}

double MatrixOrdering::zero_distance(const LevelElement& x) const {
  return elem_norm(system(), x);
}

// ---- concrete ordering ----------------------------------------------------

ConcreteOrdering::ConcreteOrdering(MatrixSystem s) : s_(std::move(s)) {}

Certificate ConcreteOrdering::member(const LevelElement& x, double tol, int budget) const {
  (void)budget;
  Certificate cert;
  if (!is_selfadjoint(s_, x, 1e-7)) {
    cert.verdict = Verdict::non_member;
    cert.note = "not selfadjoint";
    return cert;
  }
  Mat r = realize(s_, x);
  EigResult er = eig_sym(r, 1e-6);
  double mg = er.values(0);
  cert.residual = mg;
  if (mg >= -tol) {
    cert.verdict = Verdict::member;
    cert.note = "realization margin " + fmt(mg);
    return cert;
  }
  WitnessFunctional w = functional_from_realization(s_, x.level, er.vectors.col(0));
  w.value_on_x = witness_value(w, x);
  double mn = 0.0;
  auto g = rng_stream(0, 17, 0);
  for (int t = 0; t < 10; ++t) {
    LevelElement z = random_sa(s_, x.level, g);
    LevelElement p = z + (-cone_margin(s_, z)) * unit_element(s_, x.level);
    mn = std::min(mn, witness_value(w, p) / std::max(1.0, elem_norm(s_, p)));
  }
  w.min_on_cone_samples = mn;
  cert.verdict = Verdict::non_member;
  cert.witness = std::move(w);
  cert.note = "negative realization eigenvalue " + fmt(mg);
  return cert;
}

double ConcreteOrdering::margin(const LevelElement& x, int budget) const {
  (void)budget;
  return cone_margin(s_, x);
}

// ---- archimedean closure of a generated cone ------------------------------

GeneratedClosureOrdering::GeneratedClosureOrdering(GeneratedOrdering d, std::uint64_t seed)
    : d_(std::move(d)), seed_(seed) {}

Certificate GeneratedClosureOrdering::member(const LevelElement& x, double tol,
                                             int budget) const {
  return arch_closure_member(d_, x, {}, budget, tol, seed_);
}

Certificate GeneratedClosureOrdering::closure_member(const LevelElement& x, double tol,
                                                     int budget) const {
  return arch_closure_member(d_, x, {}, budget, tol, seed_);
}

double GeneratedClosureOrdering::margin(const LevelElement& x, int budget) const {
  if (!is_selfadjoint(d_.base, x, 1e-7))
    throw std::invalid_argument("margin requires a selfadjoint element");
  LevelElement e = unit_element(d_.base, x.level);
  auto inside = [&](double t) {
    return member(x + (-t) * e, 1e-8, budget).verdict == Verdict::member;
  };
  double s0 = std::max(1.0, elem_norm(d_.base, x));
  if (inside(0.0)) {
    double lo = 0.0, hi = s0;
    while (inside(hi)) {
      lo = hi;
      hi *= 4.0;
      if (hi > 1e6) return 1e6;
    }
    for (int it = 0; it < 12; ++it) {
      double mid = 0.5 * (lo + hi);
      (inside(mid) ? lo : hi) = mid;
    }
    return lo;
  }
  double lo = -s0, hi = 0.0;
  while (!inside(lo)) {
    lo *= 4.0;
    if (lo < -1e6) return -1e6;
  }
  for (int it = 0; it < 12; ++it) {
    double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::string GeneratedClosureOrdering::describe() const {
  std::string base = "archimedean closure of a cone with " +
                     std::to_string(d_.generators.size()) + " generators";
  if (!d_.note.empty()) base += " (" + d_.note + ")";
  return base;
}

// ---- minimal ordering -----------------------------------------------------

namespace {

struct OminSearch {
  double margin = 0.0;
  CMat alpha;  // n x k
  Vec evec;    // eigenvector of the compressed realization at the minimum
};

double omin_eval(const MatrixSystem& s, const Mat& rx, const CMat& alpha, int d, Vec* evec,
                 Mat* m_out) {
  Mat m;
  if (s.field == Field::real) {
    m = kron(alpha.re, Mat::Identity(d, d));
  } else {
    m = kron(kron(alpha.re, Mat::Identity(d, d)), Mat::Identity(2, 2)) +
        kron(kron(alpha.im, Mat::Identity(d, d)), rot2());
  }
  Mat r = m.transpose() * rx * m;
  EigResult er = eig_sym(0.5 * (r + r.transpose()), 1.0);
  if (evec) *evec = er.vectors.col(0);
  if (m_out) *m_out = std::move(m);
  return er.values(0);
}

OminSearch omin_search(const MatrixSystem& s, int k, const LevelElement& x, int restarts,
                       std::uint64_t seed) {
  const int n = x.level;
  const int d = s.d;
  const bool cx = s.field == Field::complex;
  Mat rx = realize(s, x);
  rx = 0.5 * (rx + rx.transpose()).eval();
  OminSearch best;
  best.margin = 1e300;
  const int iters = 120;
  for (int r = 0; r < restarts; ++r) {
    auto g = rng_stream(seed, 51, static_cast<std::uint64_t>(r));
    CMat alpha = [&]() {
      if (r == 0) {
        Mat a = Mat::Zero(n, k);
        for (int i = 0; i < std::min(n, k); ++i) a(i, i) = 1.0;
        return CMat(a);
      }
      return random_alpha(s, n, k, g);
    }();
    double nrm = std::sqrt(alpha.re.squaredNorm() + alpha.im.squaredNorm());
    if (nrm < 1e-12) continue;
    alpha = (1.0 / nrm) * alpha;
    double eta = 0.1;
    Vec u;
    Mat m;
    double val = omin_eval(s, rx, alpha, d, &u, &m);
    for (int it = 0; it < iters; ++it) {
      if (val < best.margin) {
        best.margin = val;
        best.alpha = alpha;
        best.evec = u;
      }
      Vec t = rx * (m * u);
      Mat gre = Mat::Zero(n, k), gim = Mat::Zero(n, k);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
          double vre = 0.0, vim = 0.0;
          for (int sI = 0; sI < d; ++sI) {
            if (!cx) {
              vre += t(i * d + sI) * u(j * d + sI);
            } else {
              double t0 = t((i * d + sI) * 2), t1 = t((i * d + sI) * 2 + 1);
              double u0 = u((j * d + sI) * 2), u1 = u((j * d + sI) * 2 + 1);
              vre += t0 * u0 + t1 * u1;
              vim += t1 * u0 - t0 * u1;
            }
          }
          gre(i, j) = 2.0 * vre;
          gim(i, j) = 2.0 * vim;
        }
      double gn = std::sqrt(gre.squaredNorm() + gim.squaredNorm());
      if (gn < 1e-12) break;
      bool stepped = false;
      for (int bt = 0; bt < 6; ++bt) {
        CMat cand(Mat(alpha.re - eta * gre), Mat(alpha.im - eta * gim));
        double cn = std::sqrt(cand.re.squaredNorm() + cand.im.squaredNorm());
        if (cn < 1e-12) break;
        cand = (1.0 / cn) * cand;
        Vec cu;
        Mat cm;
        double cval = omin_eval(s, rx, cand, d, &cu, &cm);
        if (cval < val - 1e-14) {
          alpha = std::move(cand);
          val = cval;
          u = std::move(cu);
          m = std::move(cm);
          eta = std::min(10.0, eta * 1.3);
          stepped = true;
          break;
        }
        eta *= 0.4;
      }
      if (!stepped && eta < 1e-10) break;
    }
    if (val < best.margin) {
      best.margin = val;
      best.alpha = alpha;
      best.evec = u;
    }
    if (best.margin < -1e-3) break;
  }
  if (best.alpha.re.size() > 0) {
    // exact recomputation through the compression; the eigenvector is taken
    // in the same realization the witness expansion uses
    LevelElement comp = compress(s, x, best.alpha);
    Mat rc = realize(s, comp);
    EigResult er = eig_sym(0.5 * (rc + rc.transpose()), 1.0);
    best.margin = er.values(0);
    best.evec = er.vectors.col(0);
  }
  return best;
}

}  // namespace

Certificate omin_member(const MatrixSystem& s, int k, const LevelElement& x, int restarts,
                        double tol, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("omin_member: block size must be positive");
  if (!element_valid(s, x)) throw std::invalid_argument("omin_member: malformed element");
  Certificate cert;
  if (!is_selfadjoint(s, x, 1e-7)) {
    cert.verdict = Verdict::non_member;
    cert.note = "not selfadjoint";
    return cert;
  }
  OminSearch sr = omin_search(s, k, x, restarts, seed);
  cert.residual = sr.margin;
  if (sr.margin >= -tol) {
    cert.verdict = Verdict::member;
    cert.note = "every found compression stays positive; multistart evidence with " +
                std::to_string(restarts) + " restarts";
    return cert;
  }
  cert.verdict = Verdict::non_member;
  cert.omin_alpha = sr.alpha;
  // functional v -> u^T realize(alpha^* v alpha) u, negative at x by the
  // search and nonnegative on the concrete cone by construction
  const int dim = coord_count(s, x.level);
  Vec fvals(dim);
  for (int c = 0; c < dim; ++c) {
    Vec e = Vec::Zero(dim);
    e(c) = 1.0;
    LevelElement coord = vec_elem(s, x.level, e);
    Mat r = realize(s, compress(s, coord, sr.alpha));
    fvals(c) = sr.evec.dot(Vec(r * sr.evec));
  }
  LevelElement wel = vec_elem(s, x.level, fvals);
  WitnessFunctional w;
  w.re = std::move(wel.re);
  w.im = std::move(wel.im);
  w.value_on_x = witness_value(w, x);
  double mn = 0.0;
  auto g = rng_stream(seed, 52, 0);
  for (int t = 0; t < 20; ++t) {
    LevelElement z = random_sa(s, x.level, g);
    LevelElement p = z + (-cone_margin(s, z)) * unit_element(s, x.level);
    mn = std::min(mn, witness_value(w, p) / std::max(1.0, elem_norm(s, p)));
  }
  w.min_on_cone_samples = mn;
  if (std::abs(w.value_on_x - sr.margin) > 1e-6 * std::max(1.0, std::abs(sr.margin)) ||
      mn < -1e-8) {
    cert.verdict = Verdict::undecided;
    cert.note = "negative compression found but its functional failed verification";
    return cert;
  }
  cert.witness = std::move(w);
  cert.note = "compression with negative realization eigenvalue " + fmt(sr.margin);
  return cert;
}

OminOrdering::OminOrdering(MatrixSystem s, int k, int restarts, std::uint64_t seed)
    : s_(std::move(s)), k_(k), restarts_(restarts), seed_(seed) {
  if (k < 1) throw std::invalid_argument("OminOrdering: block size must be positive");
}

Certificate OminOrdering::member(const LevelElement& x, double tol, int budget) const {
  (void)budget;
  return omin_member(s_, k_, x, restarts_, tol, seed_);
}

double OminOrdering::margin(const LevelElement& x, int budget) const {
  (void)budget;
  return omin_search(s_, k_, x, restarts_, seed_).margin;
}

std::string OminOrdering::describe() const {
  return "minimal ordering at block size " + std::to_string(k_);
}

// ---- quotients ------------------------------------------------------------

namespace {

// Selfadjoint directions spanning M_n(J) for a *-closed level-1 subspace J.
std::vector<LevelElement> kernel_level_directions(const MatrixSystem& s,
                                                  const std::vector<LevelElement>& jb, int n,
                                                  bool selfadjoint_only) {
  std::vector<Vec> vecs;
  std::vector<LevelElement> out;
  auto push = [&](const LevelElement& cand) {
    Vec v = elem_vec(s, cand);
    for (const Vec& q : vecs) v -= q.dot(v) * q;
    if (v.norm() > 1e-9) {
      vecs.push_back(v.normalized());
      out.push_back(vec_elem(s, n, vecs.back()));
    }
  };
  for (const LevelElement& b : jb) {
    if (b.level != 1) throw std::invalid_argument("kernel directions must have level 1");
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        LevelElement c = zero_element(s, n);
        c.re.row(u * n + v) = b.re.row(0);
        c.im.row(u * n + v) = b.im.row(0);
        if (selfadjoint_only) {
          push(c + involution(s, c));
        } else {
          push(c);
        }
        if (s.field == Field::complex) {
          LevelElement ci = zero_element(s, n);
          ci.re.row(u * n + v) = -b.im.row(0);
          ci.im.row(u * n + v) = b.re.row(0);
          if (selfadjoint_only) {
            push(ci + involution(s, ci));
          } else {
            push(ci);
          }
        }
      }
  }
  return out;
}

// Maximizes the block-size-k margin of x over kernel shifts by supergradient
// ascent; the gradient at the active compression (alpha, u) is
// d/dc_t = u^T realize(alpha^* d_t alpha) u.
struct OminQuotientResult {
  double margin = 0.0;
  Vec coef;
  std::vector<LevelElement> dirs;
  OminSearch search;
};

OminQuotientResult omin_quotient_ascent(const MatrixSystem& s, int k, int restarts,
                                        std::uint64_t seed,
                                        const std::vector<LevelElement>& kernel,
                                        const LevelElement& x) {
  OminQuotientResult out;
  out.dirs = kernel_level_directions(s, kernel, x.level, true);
  const int kdim = static_cast<int>(out.dirs.size());
  out.coef = Vec::Zero(kdim);
  const int r_in = std::max(4, restarts / 2);
  auto eval = [&](const Vec& cc, OminSearch* sr) {
    LevelElement z = x;
    for (int t = 0; t < kdim; ++t) z = z + cc(t) * out.dirs[t];
    OminSearch srr = omin_search(s, k, z, r_in, seed);
    double mg = srr.margin;
    if (sr) *sr = std::move(srr);
    return mg;
  };
  out.margin = eval(out.coef, &out.search);
  if (kdim == 0) return out;
  double scale = 1.0 + elem_norm(s, x);
  double eta = 0.5 * scale;
  for (int it = 0; it < 40 && out.margin < 1e-8; ++it) {
    Vec grad(kdim);
    for (int t = 0; t < kdim; ++t) {
      Mat rd = realize(s, compress(s, out.dirs[t], out.search.alpha));
      grad(t) = out.search.evec.dot(Vec((0.5 * (rd + rd.transpose())) * out.search.evec));
    }
    if (grad.norm() < 1e-12) break;
    Vec cand = out.coef + eta * grad;
    OminSearch snew;
    double mc = eval(cand, &snew);
    if (mc > out.margin + 1e-14) {
      out.coef = cand;
      out.margin = mc;
      out.search = std::move(snew);
      eta = std::min(eta * 1.4, 10.0 * scale);
    } else {
      eta *= 0.4;
      if (eta < 1e-9 * scale) break;
    }
  }
  return out;
}

void require_star_closed(const MatrixSystem& s, const std::vector<LevelElement>& jb) {
  if (jb.empty()) return;
  Mat span(coord_count(s, 1), static_cast<Eigen::Index>(jb.size()));
  for (size_t t = 0; t < jb.size(); ++t) span.col(static_cast<Eigen::Index>(t)) = elem_vec(s, jb[t]);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(span);
  for (const LevelElement& b : jb) {
    Vec target = elem_vec(s, involution(s, b));
    Vec res = span * cod.solve(target) - target;
    if (res.norm() > 1e-7 * std::max(1.0, target.norm()))
      throw std::invalid_argument("kernel subspace is not closed under the involution");
  }
}

}  // namespace

Certificate quotient_member(const MatrixSystem& s, const std::vector<LevelElement>& jbasis,
                            const LevelElement& x, double tol, int budget) {
  if (!element_valid(s, x)) throw std::invalid_argument("quotient_member: malformed element");
  require_star_closed(s, jbasis);
  const int n = x.level;
  const double eps = 1e-6;
  const double xnorm = elem_norm(s, x);
  Certificate cert;

  // a component outside selfadjoints + M_n(J) can never be shifted positive,
  // and its orthogonal direction annihilates the whole coset cone
  {
    std::vector<LevelElement> sa = sa_basis_level(s, n);
    std::vector<LevelElement> full = kernel_level_directions(s, jbasis, n, false);
    std::vector<Vec> span;
    auto add = [&](const LevelElement& e) {
      Vec v = elem_vec(s, e);
      for (const Vec& q : span) v -= q.dot(v) * q;
      if (v.norm() > 1e-9) span.push_back(v.normalized());
    };
    for (const LevelElement& e : sa) add(e);
    for (const LevelElement& e : full) add(e);
    Vec xv = elem_vec(s, x);
    Vec perp = xv;
    for (const Vec& q : span) perp -= q.dot(perp) * q;
    if (perp.norm() > 1e-7 * std::max(1.0, xnorm)) {
      WitnessFunctional w;
      LevelElement dir = vec_elem(s, n, Vec(-perp / perp.norm()));
      w.re = dir.re;
      w.im = dir.im;
      w.value_on_x = witness_value(w, x);
      cert.verdict = Verdict::non_member;
      cert.witness = std::move(w);
      cert.note = "component outside selfadjoints and the kernel";
      return cert;
    }
  }

  std::vector<LevelElement> dirs = kernel_level_directions(s, jbasis, n, true);
  Mat r0 = realize(s, x);
  Mat r0s = 0.5 * (r0 + r0.transpose());
  const int nn = static_cast<int>(r0s.rows());
  std::vector<Mat> rj;
  rj.reserve(dirs.size());
  for (const LevelElement& e : dirs) {
    Mat r = realize(s, e);
    rj.push_back(0.5 * (r + r.transpose()));
  }
  std::vector<Vec> uspan;
  for (const Mat& r : rj) {
    Vec v = flatten(r);
    for (const Vec& q : uspan) v -= q.dot(v) * q;
    if (v.norm() > 1e-9) uspan.push_back(v.normalized());
  }
  // affine rows: every symmetric direction orthogonal to the realized kernel
  std::vector<Mat> cons;
  std::vector<double> rhs;
  std::vector<Vec> accepted;
  Mat target = r0s + eps * Mat::Identity(nn, nn);
  for (int i = 0; i < nn; ++i)
    for (int j = i; j < nn; ++j) {
      Mat f = Mat::Zero(nn, nn);
      if (i == j) {
        f(i, i) = 1.0;
      } else {
        f(i, j) = f(j, i) = 1.0 / std::sqrt(2.0);
      }
      Vec v = flatten(f);
      for (const Vec& q : uspan) v -= q.dot(v) * q;
      for (const Vec& q : accepted) v -= q.dot(v) * q;
      if (v.norm() <= 1e-9) continue;
      v.normalize();
      accepted.push_back(v);
      Mat g = unflatten(v, nn);
      cons.push_back(g);
      rhs.push_back((g.array() * target.array()).sum());
    }
  Vec rhsv = Eigen::Map<Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  FeasResult fr = sym_psd_feasibility(nn, cons, rhsv, std::max(budget, 100), tol);

  if (fr.verdict == Feas::feasible) {
    Mat c = unflatten(fr.cone_point, nn);
    Mat delta = 0.5 * (c + c.transpose()) - target;
    LevelElement y = zero_element(s, n);
    if (!rj.empty()) {
      Mat basis(nn * nn, static_cast<Eigen::Index>(rj.size()));
      for (size_t t = 0; t < rj.size(); ++t) basis.col(static_cast<Eigen::Index>(t)) = flatten(rj[t]);
      Vec coef = Eigen::CompleteOrthogonalDecomposition<Mat>(basis).solve(flatten(delta));
      for (size_t t = 0; t < dirs.size(); ++t) y = y + coef(static_cast<Eigen::Index>(t)) * dirs[t];
    }
    // cancel any antiselfadjoint part of x; the span check above placed it
    // inside the kernel, so the correction is itself an admissible shift
    LevelElement anti = 0.5 * (x - involution(s, x));
    if (elem_norm(s, anti) > 1e-12) y = y - anti;
    Mat check = realize(s, x + y);
    double mg = lambda_min_sym(0.5 * (check + check.transpose()), 1e-6);
    if (mg >= -eps - 1e-6) {
      cert.verdict = Verdict::member;
      cert.quotient_shift = std::move(y);
      cert.residual = mg;
      cert.note = "kernel shift found at identity offset " + fmt(eps) +
                  "; larger offsets follow monotonely";
      return cert;
    }
    cert.verdict = Verdict::undecided;
    cert.residual = mg;
    cert.note = "feasible point did not verify after the kernel shift";
    return cert;
  }

  if (fr.verdict == Feas::infeasible && fr.witness.size() > 0) {
    Mat w = unflatten(fr.witness, nn);
    w = 0.5 * (w + w.transpose()).eval();
    // the solver leaves the separating direction negative semidefinite and
    // kernel-annihilating only up to its own tolerance; tighten it by
    // alternating exact projections, ending on the annihilation subspace
    for (int round = 0; round < 4; ++round) {
      Eigen::SelfAdjointEigenSolver<Mat> es(w);
      Vec ev = es.eigenvalues().cwiseMin(0.0);
      w = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      Vec v = flatten(w);
      for (const Vec& q : uspan) v -= q.dot(v) * q;
      w = unflatten(v, nn);
      w = 0.5 * (w + w.transpose()).eval();
    }
    double wn = w.norm();
    double ann = 0.0;
    if (wn > 1e-12)
      for (const Mat& r : rj) ann = std::max(ann, std::abs((w.array() * r.array()).sum()) / wn);
    if (wn > 1e-12 && ann <= 1e-6) {
      const int dim = coord_count(s, n);
      Vec fvals(dim);
      for (int cI = 0; cI < dim; ++cI) {
        Vec e = Vec::Zero(dim);
        e(cI) = 1.0;
        Mat rc = realize(s, vec_elem(s, n, e));
        fvals(cI) = -((w.array() * (0.5 * (rc + rc.transpose())).array()).sum()) / wn;
      }
      LevelElement wel = vec_elem(s, n, fvals);
      WitnessFunctional wf;
      wf.re = std::move(wel.re);
      wf.im = std::move(wel.im);
      wf.value_on_x = witness_value(wf, x);
      double mn = 0.0;
      auto g = rng_stream(0, 61, 0);
      for (int t = 0; t < 10; ++t) {
        LevelElement z = random_sa(s, n, g);
        LevelElement p = z + (-cone_margin(s, z)) * unit_element(s, n);
        mn = std::min(mn, witness_value(wf, p) / std::max(1.0, elem_norm(s, p)));
      }
      wf.min_on_cone_samples = mn;
      if (wf.value_on_x <= -1e-9 * std::max(1.0, xnorm) && mn >= -1e-6) {
        cert.verdict = Verdict::non_member;
        cert.witness = std::move(wf);
        cert.residual = fr.gap;
        cert.note = "dual functional vanishing on the kernel, negative at the shifted element";
        return cert;
      }
    }
    cert.verdict = Verdict::undecided;
    cert.residual = fr.gap;
    cert.note = "infeasibility indicated but the kernel-annihilating functional failed checks";
    return cert;
  }

  cert.verdict = Verdict::undecided;
  cert.residual = fr.gap;
  cert.note = fr.note;
  return cert;
}

QuotientOrdering::QuotientOrdering(std::shared_ptr<const MatrixOrdering> base,
                                   std::vector<LevelElement> kernel_basis)
    : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("QuotientOrdering: missing base ordering");
  const MatrixSystem& s = base_->system();
  // orthonormalize and close under the involution so the kernel is a
  // *-subspace regardless of how the directions were found
  std::vector<Vec> vecs;
  auto push = [&](const LevelElement& e) {
    Vec v = elem_vec(s, e);
    for (const Vec& q : vecs) v -= q.dot(v) * q;
    if (v.norm() > 1e-9) {
      vecs.push_back(v.normalized());
      kernel_.push_back(vec_elem(s, 1, vecs.back()));
      return true;
    }
    return false;
  };
  for (const LevelElement& e : kernel_basis) {
    if (e.level != 1) throw std::invalid_argument("QuotientOrdering: kernel must be level 1");
    push(e);
  }
  for (size_t t = 0; t < kernel_.size(); ++t) push(involution(s, kernel_[t]));
  Vec ev = elem_vec(s, unit_element(s, 1));
  Vec perp = ev;
  for (const Vec& q : vecs) perp -= q.dot(perp) * q;
  degenerate_ = perp.norm() <= 1e-8 * ev.norm();
}

Certificate QuotientOrdering::member(const LevelElement& x, double tol, int budget) const {
  const MatrixSystem& s = base_->system();
  Certificate cert;

  // reduce modulo the kernel: positives are selfadjoint, so the coset holds
  // one only when the antiselfadjoint part of x is itself a kernel shift
  LevelElement h = 0.5 * (x + involution(s, x));
  LevelElement extra = zero_element(s, x.level);
  {
    LevelElement a = 0.5 * (x - involution(s, x));
    if (elem_norm(s, a) > 1e-10 * std::max(1.0, elem_norm(s, x))) {
      std::vector<LevelElement> full = kernel_level_directions(s, kernel_, x.level, false);
      std::vector<Vec> span;
      for (const LevelElement& e : full) {
        Vec q = elem_vec(s, e);
        for (const Vec& p : span) q -= p.dot(q) * p;
        if (q.norm() > 1e-9) span.push_back(q.normalized());
      }
      Vec perp = elem_vec(s, a);
      for (const Vec& p : span) perp -= p.dot(perp) * p;
      if (perp.norm() > 1e-7 * std::max(1.0, elem_norm(s, x))) {
        WitnessFunctional w;
        LevelElement dir = vec_elem(s, x.level, Vec(-perp / perp.norm()));
        w.re = dir.re;
        w.im = dir.im;
        w.value_on_x = witness_value(w, x);
        cert.verdict = Verdict::non_member;
        cert.witness = std::move(w);
        cert.note = "antiselfadjoint part outside the kernel; the coset holds no selfadjoint element";
        return cert;
      }
      extra = (-1.0) * a;
    }
  }

  if (degenerate_) {
    Mat r = realize(s, h);
    double t = 1.0 + 2.0 * std::max(0.0, -lambda_min_sym(0.5 * (r + r.transpose()), 1.0));
    LevelElement shift = t * unit_element(s, x.level);
    Certificate c = base_->member(h + shift, tol, budget);
    if (c.verdict == Verdict::member) {
      c.quotient_shift = shift + extra;
      c.note = "degenerate quotient: the unit lies in the kernel";
      return c;
    }
    cert.verdict = Verdict::undecided;
    cert.note = "degenerate quotient: the unit lies in the kernel";
    return cert;
  }
  if (const auto* conc = dynamic_cast<const ConcreteOrdering*>(base_.get())) {
    return quotient_member(conc->system(), kernel_, x, tol, budget);
  }

  if (const auto* om = dynamic_cast<const OminOrdering*>(base_.get())) {
    OminQuotientResult qr =
        omin_quotient_ascent(s, om->k(), om->restarts(), om->seed(), kernel_, h);
    LevelElement y = zero_element(s, x.level);
    for (int t = 0; t < static_cast<int>(qr.dirs.size()); ++t) y = y + qr.coef(t) * qr.dirs[t];
    Certificate fin = om->member(h + y, tol, budget);
    if (fin.verdict == Verdict::member) {
      fin.quotient_shift = y + extra;
      fin.note = "kernel shift confirmed by the block-size-" + std::to_string(om->k()) +
                 " compression search";
      return fin;
    }
    if (fin.verdict == Verdict::non_member && fin.witness) {
      double ann = 0.0;
      for (const LevelElement& dir : qr.dirs)
        ann = std::max(ann, std::abs(witness_value(*fin.witness, dir)));
      double v0 = witness_value(*fin.witness, x);
      if (ann <= 1e-6 && v0 <= -1e-9 * std::max(1.0, elem_norm(s, x))) {
        fin.witness->value_on_x = v0;
        fin.quotient_shift.reset();
        fin.note = "functional annihilates the kernel and stays negative on the coset";
        return fin;
      }
    }
    cert.verdict = Verdict::undecided;
    cert.residual = qr.margin;
    cert.note = "kernel ascent stalled without a kernel-annihilating functional";
    return cert;
  }
  Certificate direct = base_->member(h, tol, budget);
  if (direct.verdict == Verdict::member) {
    direct.quotient_shift = extra;
    return direct;
  }

  // probe whether base membership even depends on kernel shifts
  std::vector<LevelElement> dirs = kernel_level_directions(s, kernel_, x.level, true);
  if (dirs.empty()) return direct;
  double m0 = base_->margin(h, budget);
  bool invariant = true;
  auto g = rng_stream(0, 62, 0);
  for (int t = 0; t < 3 && invariant; ++t) {
    LevelElement y = zero_element(s, x.level);
    for (const LevelElement& dir : dirs) {
      std::normal_distribution<double> nd;
      y = y + nd(g) * (1.0 + elem_norm(s, x)) * dir;
    }
    if (std::abs(base_->margin(h + y, budget) - m0) > 1e-8 * std::max(1.0, std::abs(m0)))
      invariant = false;
  }
  if (invariant) {
    direct.note += "; base membership is invariant under kernel shifts";
    return direct;
  }

  // coordinate ascent over the kernel shift, maximizing the base margin
  const int kdim = static_cast<int>(dirs.size());
  Vec c = Vec::Zero(kdim);
  auto hfun = [&](const Vec& cc) {
    LevelElement y = zero_element(s, x.level);
    for (int t = 0; t < kdim; ++t) y = y + cc(t) * dirs[t];
    return base_->margin(h + y, budget);
  };
  double hv = m0;
  double scale = 1.0 + elem_norm(s, x);
  double eta = 0.5 * scale;
  for (int it = 0; it < 10 && hv < tol; ++it) {
    Vec grad(kdim);
    double delta = 1e-3 * scale;
    for (int t = 0; t < kdim; ++t) {
      Vec cp = c, cmn = c;
      cp(t) += delta;
      cmn(t) -= delta;
      grad(t) = (hfun(cp) - hfun(cmn)) / (2.0 * delta);
    }
    if (grad.norm() < 1e-12) break;
    Vec cand = c + eta * grad;
    double hc = hfun(cand);
    if (hc > hv + 1e-12) {
      c = cand;
      hv = hc;
      eta *= 1.5;
    } else {
      eta *= 0.4;
      if (eta < 1e-8 * scale) break;
    }
  }
  if (hv >= -tol) {
    LevelElement y = extra;
    for (int t = 0; t < kdim; ++t) y = y + c(t) * dirs[t];
    cert.verdict = Verdict::member;
    cert.quotient_shift = std::move(y);
    cert.residual = hv;
    cert.note = "kernel ascent evidence";
    return cert;
  }
  cert.verdict = Verdict::undecided;
  cert.residual = hv;
  cert.note = "kernel ascent stalled without a dual certificate";
  return cert;
}

double QuotientOrdering::margin(const LevelElement& x, int budget) const {
  const MatrixSystem& s = base_->system();

  // reduce modulo the kernel: only cosets holding a selfadjoint element can
  // reach the cone, so the antiselfadjoint part must itself be a kernel shift
  LevelElement h = 0.5 * (x + involution(s, x));
  {
    LevelElement a = 0.5 * (x - involution(s, x));
    if (elem_norm(s, a) > 1e-10 * std::max(1.0, elem_norm(s, x))) {
      std::vector<LevelElement> full = kernel_level_directions(s, kernel_, x.level, false);
      std::vector<Vec> span;
      for (const LevelElement& e : full) {
        Vec q = elem_vec(s, e);
        for (const Vec& p : span) q -= p.dot(q) * p;
        if (q.norm() > 1e-9) span.push_back(q.normalized());
      }
      Vec perp = elem_vec(s, a);
      for (const Vec& p : span) perp -= p.dot(perp) * p;
      if (perp.norm() > 1e-7 * std::max(1.0, elem_norm(s, x))) return -1e6;
    }
  }
  if (degenerate_) return 1e6;

  std::vector<LevelElement> dirs = kernel_level_directions(s, kernel_, x.level, true);
  if (dirs.empty()) return base_->margin(h, budget);
  if (const auto* conc = dynamic_cast<const ConcreteOrdering*>(base_.get())) {
    // analytic supergradient ascent on the smallest realization eigenvalue
    const MatrixSystem& cs = conc->system();
    Mat r0 = realize(cs, h);
    r0 = 0.5 * (r0 + r0.transpose()).eval();
    std::vector<Mat> rj;
    for (const LevelElement& e : dirs) {
      Mat r = realize(cs, e);
      rj.push_back(0.5 * (r + r.transpose()));
    }
    const int kdim = static_cast<int>(rj.size());
    Vec c = Vec::Zero(kdim);
    double eta = 0.5;
    auto eval = [&](const Vec& cc, Vec* u) {
      Mat r = r0;
      for (int t = 0; t < kdim; ++t) r += cc(t) * rj[t];
      EigResult er = eig_sym(r, 1.0);
      if (u) *u = er.vectors.col(0);
      return er.values(0);
    };
    Vec u;
    double hv = eval(c, &u);
    for (int it = 0; it < 80; ++it) {
      Vec grad(kdim);
      for (int t = 0; t < kdim; ++t) grad(t) = u.dot(Vec(rj[t] * u));
      if (grad.norm() < 1e-12) break;
      Vec cand = c + eta * grad;
      Vec cu;
      double hc = eval(cand, &cu);
      if (hc > hv + 1e-14) {
        c = cand;
        hv = hc;
        u = cu;
        eta *= 1.4;
      } else {
        eta *= 0.4;
        if (eta < 1e-10) break;
      }
    }
    return hv;
  }
  if (const auto* om = dynamic_cast<const OminOrdering*>(base_.get())) {
    OminQuotientResult qr =
        omin_quotient_ascent(s, om->k(), om->restarts(), om->seed(), kernel_, h);
    LevelElement y = zero_element(s, x.level);
    for (int t = 0; t < static_cast<int>(qr.dirs.size()); ++t) y = y + qr.coef(t) * qr.dirs[t];
    return om->margin(h + y, budget);
  }
  double m0 = base_->margin(h, budget);
  bool invariant = true;
  auto g = rng_stream(0, 63, 0);
  for (int t = 0; t < 3 && invariant; ++t) {
    LevelElement y = zero_element(s, x.level);
    for (const LevelElement& dir : dirs) {
      std::normal_distribution<double> nd;
      y = y + nd(g) * (1.0 + elem_norm(s, x)) * dir;
    }
    if (std::abs(base_->margin(h + y, budget) - m0) > 1e-8 * std::max(1.0, std::abs(m0)))
      invariant = false;
  }
  if (invariant) return m0;
  const int kdim = static_cast<int>(dirs.size());
  Vec c = Vec::Zero(kdim);
  auto hfun = [&](const Vec& cc) {
    LevelElement y = zero_element(s, x.level);
    for (int t = 0; t < kdim; ++t) y = y + cc(t) * dirs[t];
    return base_->margin(h + y, budget);
  };
  double hv = m0;
  double scale = 1.0 + elem_norm(s, x);
  double eta = 0.5 * scale;
  for (int it = 0; it < 15; ++it) {
    Vec grad(kdim);
    double delta = 1e-3 * scale;
    for (int t = 0; t < kdim; ++t) {
      Vec cp = c, cmn = c;
      cp(t) += delta;
      cmn(t) -= delta;
      grad(t) = (hfun(cp) - hfun(cmn)) / (2.0 * delta);
    }
    if (grad.norm() < 1e-12) break;
    Vec cand = c + eta * grad;
    double hc = hfun(cand);
    if (hc > hv + 1e-12) {
      c = cand;
      hv = hc;
      eta *= 1.5;
    } else {
      eta *= 0.4;
      if (eta < 1e-8 * scale) break;
    }
  }
  return hv;
}

double QuotientOrdering::zero_distance(const LevelElement& x) const {
  const MatrixSystem& s = base_->system();
  std::vector<LevelElement> dirs = kernel_level_directions(s, kernel_, x.level, false);
  Vec v = elem_vec(s, x);
  std::vector<Vec> span;
  for (const LevelElement& e : dirs) {
    Vec q = elem_vec(s, e);
    for (const Vec& p : span) q -= p.dot(q) * p;
    if (q.norm() > 1e-9) span.push_back(q.normalized());
  }
  for (const Vec& p : span) v -= p.dot(v) * p;
  return v.norm();
}

std::string QuotientOrdering::describe() const {
  return "quotient of [" + base_->describe() + "] by a kernel of dimension " +
         std::to_string(kernel_.size()) + (degenerate_ ? " (degenerate)" : "");
}

// ---- diagnostics ----------------------------------------------------------

OrderUnitReport matrix_order_unit_check(const MatrixOrdering& d, int samples, double t_max,
                                        std::uint64_t seed, int budget) {
  const MatrixSystem& s = d.system();
  OrderUnitReport rep;
  rep.samples = samples;
  LevelElement e2 = unit_element(s, 2);
  auto g = rng_stream(seed, 41, 0);
  for (int t = 0; t < samples; ++t) {
    LevelElement x = random_sa(s, 2, g);
    bool done = false;
    Certificate last;
    for (double shift = 1.0; shift <= t_max * (1.0 + 1e-12); shift *= 10.0) {
      last = d.member(x + shift * e2, 1e-8, budget);
      if (last.verdict == Verdict::member) {
        rep.successes += 1;
        rep.shifts.push_back(shift);
        done = true;
        break;
      }
    }
    if (done) continue;
    rep.shifts.push_back(-1.0);
    if (last.verdict == Verdict::non_member && last.witness) {
      // linear in the shift: negative at both endpoints means negative on the
      // whole range, with slack for the closure shift
      double ve = witness_value(*last.witness, e2);
      double guard = 1e-9 + 1e-6 * std::max(0.0, ve);
      double v0 = witness_value(*last.witness, x);
      double v1 = v0 + t_max * ve;
      if (v0 <= -guard && v1 <= -guard) {
        rep.certified_failures += 1;
        continue;
      }
    }
    rep.undecided += 1;
  }
  rep.order_unit_evidence = rep.successes == samples;
  return rep;
}

ProperReport properness_check_level2(const MatrixOrdering& d, int samples, int budget,
                                     std::uint64_t seed) {
  const MatrixSystem& s = d.system();
  ProperReport rep;
  std::vector<LevelElement> cands = sa_basis_level(s, 2);
  auto g = rng_stream(seed, 42, 0);
  for (int t = 0; t < samples; ++t) {
    LevelElement z = random_sa(s, 2, g);
    double nz = elem_norm(s, z);
    if (nz > 1e-12) cands.push_back((1.0 / nz) * z);
  }
  for (const LevelElement& z : cands) {
    rep.checked += 1;
    if (d.zero_distance(z) <= 1e-6) continue;
    Certificate cp = d.member(z, 1e-8, budget);
    if (cp.verdict != Verdict::member) continue;
    Certificate cm = d.member((-1.0) * z, 1e-8, budget);
    if (cm.verdict != Verdict::member) continue;
    rep.violations.push_back(z);
  }
  return rep;
}

Archimedeanization archimedeanize(const std::shared_ptr<const MatrixOrdering>& d, int budget,
                                  double tol) {
  if (!d) throw std::invalid_argument("archimedeanize: missing ordering");
  const MatrixSystem& s = d->system();
  const int m = s.dim();
  Archimedeanization out;
  const int dirs = s.field == Field::complex ? 2 * m : m;
  for (int c = 0; c < dirs; ++c) {
    LevelElement b = zero_element(s, 1);
    if (c < m)
      b.re(0, c) = 1.0;
    else
      b.im(0, c - m) = 1.0;
    LevelElement bs = involution(s, b);
    LevelElement c2 = zero_element(s, 2);
    c2.re.row(1) = b.re.row(0);
    c2.im.row(1) = b.im.row(0);
    c2.re.row(2) = bs.re.row(0);
    c2.im.row(2) = bs.im.row(0);
    Certificate plus = d->closure_member(c2, tol, budget);
    bool pass = false;
    if (plus.verdict == Verdict::member) {
      Certificate minus = d->closure_member((-1.0) * c2, tol, budget);
      pass = minus.verdict == Verdict::member;
    }
    std::string label = (c < m ? "re[" + std::to_string(c) : "im[" + std::to_string(c - m)) + "]";
    out.notes.push_back(label + (pass ? ": kernel direction" : ": survives"));
    if (pass) out.n_basis.push_back(b);
  }
  out.quotient = std::make_shared<QuotientOrdering>(d, out.n_basis);
  if (out.quotient->degenerate()) out.degenerate = true;
  return out;
}

// ---- maximal ordering and the order-unit extension ------------------------

GeneratedOrdering omax_ordering(const MatrixSystem& s, int k, int pool, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("omax_ordering: block size must be positive");
  std::vector<LevelElement> gens;
  gens.push_back(unit_element(s, 1));
  std::string note;
  const bool full_algebra =
      s.dim() == s.d * s.d;  // the span is the whole matrix algebra
  if (full_algebra) {
    // maximally entangled rank-one generator: its scale-matrix compressions
    // reach every rank-one of the concrete level cones
    const int r = std::min(k, s.d);
    std::vector<std::vector<CMat>> grid(k, std::vector<CMat>(k, CMat::Zero(s.d, s.d)));
    Mat h = Mat::Zero(k, s.d);
    for (int t = 0; t < r; ++t) h(t, t) = 1.0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) grid[a][b] = CMat(Mat(h.row(a).transpose() * h.row(b)));
    gens.push_back(from_ambient(s, grid));
    note = "unit + maximally entangled generator";
    auto g = rng_stream(seed, 71, 0);
    for (int t = 0; t < std::min(pool, 8); ++t) {
      Mat wre = randn_mat(g, k, s.d);
      Mat wim = s.field == Field::complex ? randn_mat(g, k, s.d) : Mat::Zero(k, s.d);
      std::vector<std::vector<CMat>> gr(k, std::vector<CMat>(k, CMat::Zero(s.d, s.d)));
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          Mat re = wre.row(a).transpose() * wre.row(b) + wim.row(a).transpose() * wim.row(b);
          Mat im = wim.row(a).transpose() * wre.row(b) - wre.row(a).transpose() * wim.row(b);
          gr[a][b] = CMat(re, im);
        }
      gens.push_back(from_ambient(s, gr));
    }
    note += " + rank-one lifts";
  } else {
    auto g = rng_stream(seed, 72, 0);
    LevelElement ek = unit_element(s, k);
    std::vector<Vec> seen;
    for (int t = 0; t < pool; ++t) {
      LevelElement z = random_sa(s, k, g);
      LevelElement p = z + (-cone_margin(s, z)) * ek;
      double nrm = elem_norm(s, p);
      if (nrm <= 1e-9) continue;
      Vec v = elem_vec(s, p) / nrm;
      bool dup = false;
      for (const Vec& q : seen)
        if ((v - q).norm() < 1e-6) dup = true;
      if (dup) continue;
      seen.push_back(v);
      gens.push_back(p);
    }
    note = "unit + boundary shifts of random selfadjoint level-" + std::to_string(k) +
           " samples";
  }
  GeneratedOrdering d = make_generated(s, std::move(gens));
  d.note = note;
  return d;
}

std::vector<LevelElement> as_basis(const MatrixSystem& s) {
  const int dim = coord_count(s, 1);
  Mat t(dim, dim);
  for (int c = 0; c < dim; ++c) {
    Vec e = Vec::Zero(dim);
    e(c) = 1.0;
    t.col(c) = elem_vec(s, involution(s, vec_elem(s, 1, e)));
  }
  Mat p = 0.5 * (Mat::Identity(dim, dim) - t);
  std::vector<LevelElement> out;
  std::vector<Vec> cols;
  for (int c = 0; c < dim; ++c) {
    Vec v = p.col(c);
    for (const Vec& q : cols) v -= q.dot(v) * q;
    if (v.norm() > 1e-8) {
      cols.push_back(v.normalized());
      out.push_back(vec_elem(s, 1, cols.back()));
    }
  }
  return out;
}

GeneratedOrdering aou_extend(const MatrixSystem& s, const Vec& as_weights, std::uint64_t seed) {
  std::vector<LevelElement> ab = as_basis(s);
  const int kdim = static_cast<int>(ab.size());
  if (as_weights.size() != kdim)
    throw std::invalid_argument("aou_extend: one positive weight per antiselfadjoint direction");
  for (int t = 0; t < kdim; ++t)
    if (!(as_weights(t) > 0.0)) throw std::invalid_argument("aou_extend: weights must be positive");

  std::vector<LevelElement> gens;
  LevelElement e1 = unit_element(s, 1);
  gens.push_back(e1);
  {
    auto g = rng_stream(seed, 73, 0);
    std::vector<Vec> seen;
    for (int t = 0; t < 8; ++t) {
      LevelElement z = random_sa(s, 1, g);
      LevelElement p = z + (-cone_margin(s, z)) * e1;
      double nrm = elem_norm(s, p);
      if (nrm <= 1e-9) continue;
      Vec v = elem_vec(s, p) / nrm;
      bool dup = false;
      for (const Vec& q : seen)
        if ((v - q).norm() < 1e-6) dup = true;
      if (dup) continue;
      seen.push_back(v);
      gens.push_back(p);
    }
  }

  std::string note = "level-1 positives";
  if (kdim > 0) {
    std::vector<LevelElement> corners;
    if (kdim <= 6) {
      // the admissible antiselfadjoints form a weighted box; its corners are
      // the extreme points, and their blocks generate every block in between
      for (int mask = 0; mask < (1 << kdim); ++mask) {
        LevelElement x = zero_element(s, 1);
        for (int t = 0; t < kdim; ++t) {
          double sign = (mask >> t) & 1 ? -1.0 : 1.0;
          x = x + (sign / as_weights(t)) * ab[t];
        }
        corners.push_back(x);
      }
      note += " + block generators at every corner of the weighted ball";
    } else {
      for (int t = 0; t < kdim; ++t) {
        corners.push_back((1.0 / as_weights(t)) * ab[t]);
        corners.push_back((-1.0 / as_weights(t)) * ab[t]);
      }
      note += " + block generators along the weighted axes (corner set truncated)";
    }
    for (const LevelElement& x : corners) {
      LevelElement q = zero_element(s, 2);
      q.re.row(0) = e1.re.row(0);
      q.re.row(3) = e1.re.row(0);
      q.re.row(1) = -x.re.row(0);
      q.im.row(1) = -x.im.row(0);
      q.re.row(2) = x.re.row(0);
      q.im.row(2) = x.im.row(0);
      gens.push_back(q);
    }
  }
  GeneratedOrdering d = make_generated(s, std::move(gens));
  d.note = note;
  return d;
}

}  // namespace rosys
