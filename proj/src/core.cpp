#include "rosys/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <thread>

namespace rosys {

bool all_finite(const Mat& a) { return a.allFinite(); }

double max_abs(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().maxCoeff();
}

double asym_norm(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("asym_norm: matrix not square");
  return max_abs(a - a.transpose());
}

static void check_square_finite(const Mat& a, const char* who) {
  if (a.rows() != a.cols())
    throw std::invalid_argument(std::string(who) + ": matrix not square");
  if (!all_finite(a))
    throw std::invalid_argument(std::string(who) + ": non-finite entry");
}

EigResult eig_sym(const Mat& a, double symmetrize_tol) {
  check_square_finite(a, "eig_sym");
  if (asym_norm(a) > symmetrize_tol)
    throw std::invalid_argument("eig_sym: asymmetry exceeds tolerance");
  Mat s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_sym: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

double lambda_min_sym(const Mat& a, double symmetrize_tol) {
  return eig_sym(a, symmetrize_tol).values(0);
}

PsdVerdict psd_classify(const Mat& a, double tol, double symmetrize_tol) {
  double lm = lambda_min_sym(a, symmetrize_tol);
  if (lm >= tol) return PsdVerdict::inside;
  if (lm > -tol) return PsdVerdict::boundary;
  return PsdVerdict::outside;
}

bool is_psd(const Mat& a, double tol, double symmetrize_tol) {
  return lambda_min_sym(a, symmetrize_tol) >= -tol;
}

Mat kron(const Mat& a, const Mat& b) {
  if (!all_finite(a) || !all_finite(b))
    throw std::invalid_argument("kron: non-finite entry");
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat canonical_shuffle(int n, int m) {
  if (n < 1 || m < 1) throw std::invalid_argument("canonical_shuffle: sizes must be >= 1");
  int sz = 2 * (n + m);
  // Target block order (x, z, y, w); source block order (x, y, z, w).
  // sigma maps a target index to the source index it reads from, so that
  // (P^T A P)_{ij} = A_{sigma(i) sigma(j)} with column i of P equal to
  // e_{sigma(i)}.
  std::vector<int> sigma(sz);
  for (int i = 0; i < n; ++i) sigma[i] = i;
  for (int i = 0; i < m; ++i) sigma[n + i] = 2 * n + i;
  for (int i = 0; i < n; ++i) sigma[n + m + i] = n + i;
  for (int i = 0; i < m; ++i) sigma[2 * n + m + i] = 2 * n + m + i;
  Mat p = Mat::Zero(sz, sz);
  for (int i = 0; i < sz; ++i) p(sigma[i], i) = 1.0;
  return p;
}

Mat psd_project(const Mat& a) {
  check_square_finite(a, "psd_project");
  Mat s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  Vec v = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
}

Vec nnls(const Mat& a, const Vec& b, int max_iter, double tol) {
  const int n = static_cast<int>(a.cols());
  if (max_iter <= 0) max_iter = 3 * n + 30;
  Vec x = Vec::Zero(n);
  std::vector<bool> active(n, true);  // active = clamped at zero
  Vec w = a.transpose() * (b - a * x);
  int iter = 0;
  while (iter++ < max_iter) {
    int best = -1;
    double bestw = tol;
    for (int j = 0; j < n; ++j)
      if (active[j] && w(j) > bestw) { bestw = w(j); best = j; }
    if (best < 0) break;
    active[best] = false;
    while (true) {
      std::vector<int> passive;
      for (int j = 0; j < n; ++j)
        if (!active[j]) passive.push_back(j);
      Mat ap(a.rows(), passive.size());
      for (size_t k = 0; k < passive.size(); ++k) ap.col(k) = a.col(passive[k]);
      Vec z = ap.colPivHouseholderQr().solve(b);
      bool ok = true;
      for (size_t k = 0; k < passive.size(); ++k)
        if (z(k) <= 0) { ok = false; break; }
      if (ok) {
        x.setZero();
        for (size_t k = 0; k < passive.size(); ++k) x(passive[k]) = z(k);
        break;
      }
      double alpha = 1.0;
      int drop = -1;
      for (size_t k = 0; k < passive.size(); ++k) {
        if (z(k) <= 0) {
          double xj = x(passive[k]);
          double step = xj / (xj - z(k));
          if (step < alpha) { alpha = step; drop = passive[k]; }
        }
      }
      for (size_t k = 0; k < passive.size(); ++k) {
        int j = passive[k];
        x(j) += alpha * (z(k) - x(j));
      }
      if (drop >= 0) { x(drop) = 0.0; active[drop] = true; }
      for (int j = 0; j < n; ++j)
        if (active[j]) x(j) = 0.0;
    }
    w = a.transpose() * (b - a * x);
  }
  return x;
}

std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t sub) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(sub), static_cast<std::uint32_t>(sub >> 32)};
  return std::mt19937_64(seq);
}

Vec randn_vec(std::mt19937_64& g, int n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = d(g);
  return v;
}

Mat randn_mat(std::mt19937_64& g, int r, int c) {
  std::normal_distribution<double> d(0.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = d(g);
  return m;
}

Mat random_sym(std::mt19937_64& g, int n) {
  Mat m = randn_mat(g, n, n);
  return 0.5 * (m + m.transpose());
}

CMat operator+(const CMat& a, const CMat& b) { return {a.re + b.re, a.im + b.im}; }
CMat operator-(const CMat& a, const CMat& b) { return {a.re - b.re, a.im - b.im}; }

CMat operator*(const CMat& a, const CMat& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

CMat operator*(double s, const CMat& a) { return {s * a.re, s * a.im}; }

CMat operator*(std::complex<double> s, const CMat& a) {
  return {s.real() * a.re - s.imag() * a.im, s.real() * a.im + s.imag() * a.re};
}

CMat adj(const CMat& a) { return {a.re.transpose(), -a.im.transpose()}; }

CMat kron(const CMat& a, const CMat& b) {
  return {kron(a.re, b.re) - kron(a.im, b.im), kron(a.re, b.im) + kron(a.im, b.re)};
}

double max_abs(const CMat& a) { return std::max(max_abs(a.re), max_abs(a.im)); }

double herm_defect(const CMat& a) {
  CMat d = a - adj(a);
  return max_abs(d);
}

bool all_finite(const CMat& a) { return all_finite(a.re) && all_finite(a.im); }

std::complex<double> trace_ip(const CMat& a, const CMat& b) {
  CMat p = adj(a) * b;
  return {p.re.trace(), p.im.trace()};
}

std::complex<double> ctrace(const CMat& a) { return {a.re.trace(), a.im.trace()}; }

Mat realify(const CMat& x) {
  Eigen::Index r = x.re.rows(), c = x.re.cols();
  Mat out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = x.re;
  out.topRightCorner(r, c) = -x.im;
  out.bottomLeftCorner(r, c) = x.im;
  out.bottomRightCorner(r, c) = x.re;
  return out;
}

CMat unrealify(const Mat& r) {
  Eigen::Index hr = r.rows() / 2, hc = r.cols() / 2;
  Mat re = 0.5 * (r.topLeftCorner(hr, hc) + r.bottomRightCorner(hr, hc));
  Mat im = 0.5 * (r.bottomLeftCorner(hr, hc) - r.topRightCorner(hr, hc));
  return {re, im};
}

double lambda_min_herm(const CMat& a, double herm_tol) {
  if (herm_defect(a) > herm_tol)
    throw std::invalid_argument("lambda_min_herm: hermitian defect exceeds tolerance");
  CMat h = 0.5 * (a + adj(a));
  return lambda_min_sym(realify(h), 1e-12);
}

bool is_psd(const CMat& a, double tol, double herm_tol) {
  return lambda_min_herm(a, herm_tol) >= -tol;
}

HermEig herm_eig(const CMat& a, double herm_tol) {
  if (a.re.rows() != a.re.cols() || a.im.rows() != a.im.cols() ||
      a.re.rows() != a.im.rows())
    throw std::invalid_argument("herm_eig: matrix not square");
  if (!all_finite(a)) throw std::invalid_argument("herm_eig: non-finite entry");
  if (herm_defect(a) > herm_tol)
    throw std::invalid_argument("herm_eig: hermitian defect exceeds tolerance");
  const int d = static_cast<int>(a.re.rows());
  CMat h = 0.5 * (a + adj(a));
  EigResult er = eig_sym(realify(h), 1e-12);
  double scale = std::max(1.0, std::max(std::abs(er.values(0)), std::abs(er.values(2 * d - 1))));

  HermEig out;
  out.values = Vec(d);
  out.vectors = CMat::Zero(d, d);
  int filled = 0;
  int i = 0;
  while (i < 2 * d) {
    int j = i + 1;
    while (j < 2 * d && er.values(j) - er.values(i) <= 1e-9 * scale) ++j;
    int k = (j - i) / 2;  // complex multiplicity; realified clusters pair up
    if (2 * k != j - i)
      throw std::runtime_error("herm_eig: odd realified eigenvalue cluster");
    // Complex projector onto the cluster eigenspace, recovered from the
    // realified one, then a rank-revealing Gram-Schmidt over its columns.
    Mat pi = Mat::Zero(2 * d, 2 * d);
    for (int c = i; c < j; ++c) pi += er.vectors.col(c) * er.vectors.col(c).transpose();
    CMat pc = unrealify(pi);
    std::vector<std::pair<Vec, Vec>> accepted;  // (re, im) of unit vectors
    for (int step = 0; step < k; ++step) {
      int best = -1;
      double bestn = 1e-8;
      Vec bre, bim;
      for (int c = 0; c < d; ++c) {
        Vec vr = pc.re.col(c), vi = pc.im.col(c);
        for (auto& u : accepted) {
          // subtract <u, v> u with complex inner product u* v
          double ipr = u.first.dot(vr) + u.second.dot(vi);
          double ipi = u.first.dot(vi) - u.second.dot(vr);
          vr -= ipr * u.first - ipi * u.second;
          vi -= ipr * u.second + ipi * u.first;
        }
        double nn = std::sqrt(vr.squaredNorm() + vi.squaredNorm());
        if (nn > bestn) { bestn = nn; bre = vr; bim = vi; best = c; }
      }
      if (best < 0) throw std::runtime_error("herm_eig: projector rank deficit");
      bre /= bestn;
      bim /= bestn;
      accepted.emplace_back(bre, bim);
    }
    double lam = 0.0;
    for (int c = i; c < j; ++c) lam += er.values(c);
    lam /= (j - i);
    for (int t = 0; t < k; ++t) {
      out.values(filled) = lam;
      out.vectors.re.col(filled) = accepted[t].first;
      out.vectors.im.col(filled) = accepted[t].second;
      ++filled;
    }
    i = j;
  }
  if (filled != d) throw std::runtime_error("herm_eig: cluster bookkeeping failed");
  return out;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  jobs = std::min(jobs, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += jobs) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace rosys
