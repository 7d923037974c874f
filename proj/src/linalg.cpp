#include "hybandit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hybandit {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void symmetrize(Matrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

Matrix Matrix::identity(std::size_t n, double scale) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require(rows_ == o.rows_ && cols_ == o.cols_, "matrix shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require(rows_ == o.rows_ && cols_ == o.cols_, "matrix shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matrix product shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector matvec(const Matrix& a, std::span<const double> v) {
  require(a.cols() == v.size(), "matvec: length mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), v);
  return out;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> v) {
  require(a.rows() == v.size(), "matvec_transposed: length mismatch");
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += vi * r[j];
  }
  return out;
}

void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v,
               double alpha) {
  require(a.rows() == u.size() && a.cols() == v.size(),
          "add_outer: shape mismatch");
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double s = alpha * u[i];
    if (s == 0.0) continue;
    auto r = a.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) r[j] += s * v[j];
  }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (!a.square()) return false;
  const double scale = std::max(1.0, a.max_abs());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

Matrix spd_inverse(const Matrix& a) {
  require(a.square(), "spd_inverse: matrix not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d))
      throw SingularMatrixError("matrix is not positive definite (pivot " +
                                std::to_string(j) + ")");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  // L^{-1} by forward substitution, then A^{-1} = L^{-T} L^{-1}.
  Matrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * linv(k, j);
      linv(i, j) = s / l(i, i);
    }
  }
  Matrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = j; k < n; ++k) s += linv(k, i) * linv(k, j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

// ---------------------------------------------------------------------------
// SymPosDef

SymPosDef::SymPosDef(std::size_t dim, double prior)
    : entries_(Matrix::identity(dim, prior)),
      inverse_(Matrix::identity(dim, 1.0 / prior)),
      prior_(prior) {
  require(dim > 0, "SymPosDef: dimension must be positive");
  require(prior > 0.0 && std::isfinite(prior),
          "SymPosDef: prior must be positive");
}

SymPosDef::SymPosDef(Matrix entries, double prior)
    : entries_(std::move(entries)), prior_(prior) {
  require(entries_.square() && entries_.rows() > 0,
          "SymPosDef: matrix must be square and nonempty");
  symmetrize(entries_);
  inverse_ = spd_inverse(entries_);
}

void SymPosDef::rank_one_update(std::span<const double> v) {
  if (v.size() != dim())
    throw std::invalid_argument("rank_one_update: expected length " +
                                std::to_string(dim()) + ", got " +
                                std::to_string(v.size()));
  const std::size_t n = dim();
  const Vector w = matvec(inverse_, v);
  const double denom = 1.0 + dot(v, w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double e = entries_(i, j) + v[i] * v[j];
      entries_(i, j) = e;
      entries_(j, i) = e;
      const double q = inverse_(i, j) - w[i] * w[j] / denom;
      inverse_(i, j) = q;
      inverse_(j, i) = q;
    }
  }
  if (++updates_since_refresh_ >= kRefreshInterval) refresh();
}

void SymPosDef::refresh() {
  inverse_ = spd_inverse(entries_);
  updates_since_refresh_ = 0;
}

double SymPosDef::quad_form_inv(std::span<const double> v) const {
  require(v.size() == dim(), "quad_form_inv: length mismatch");
  return std::max(0.0, dot(v, matvec(inverse_, v)));
}

Vector SymPosDef::solve(std::span<const double> rhs) const {
  require(rhs.size() == dim(), "solve: length mismatch");
  return matvec(inverse_, rhs);
}

// ---------------------------------------------------------------------------
// SparseHybridVector

Vector SparseHybridVector::dense(std::size_t num_arms) const {
  require(arm < num_arms, "SparseHybridVector: arm out of range");
  Vector out(x.size() + z.size() * num_arms, 0.0);
  std::copy(x.begin(), x.end(), out.begin());
  std::copy(z.begin(), z.end(),
            out.begin() + static_cast<std::ptrdiff_t>(x.size() + arm * z.size()));
  return out;
}

// ---------------------------------------------------------------------------
// BlockDesign

BlockDesign::BlockDesign(std::size_t d1, std::size_t d2, std::size_t num_arms,
                         double lambda)
    : d1_(d1), d2_(d2), lambda_(lambda), V_(d1, lambda) {
  require(d1 > 0 && d2 > 0 && num_arms > 0,
          "BlockDesign: dimensions must be positive");
  W_.assign(num_arms, SymPosDef(d2, lambda));
  B_.assign(num_arms, Matrix(d1, d2));
  pulls_.assign(num_arms, 0);
  G_.assign(num_arms, Matrix(d1, d2));
  C_.assign(num_arms, Matrix(d1, d1));
  schur_inv_ = Matrix::identity(d1, 1.0 / lambda);
}

BlockDesign BlockDesign::from_sums(const Matrix& xx, std::vector<Matrix> zz,
                                   std::vector<Matrix> xz,
                                   std::vector<std::size_t> pulls,
                                   double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda),
          "BlockDesign: lambda must be nonnegative");
  require(!zz.empty() && zz.size() == xz.size() && zz.size() == pulls.size(),
          "BlockDesign: per-arm block counts disagree");
  BlockDesign d;
  d.d1_ = xx.rows();
  d.d2_ = zz.front().rows();
  d.lambda_ = lambda;
  d.V_ = SymPosDef(xx + Matrix::identity(d.d1_, lambda), lambda);
  for (std::size_t i = 0; i < zz.size(); ++i) {
    require(zz[i].rows() == d.d2_ && zz[i].cols() == d.d2_ &&
                xz[i].rows() == d.d1_ && xz[i].cols() == d.d2_,
            "BlockDesign: block shape mismatch");
    d.W_.emplace_back(zz[i] + Matrix::identity(d.d2_, lambda), lambda);
  }
  d.B_ = std::move(xz);
  d.pulls_ = std::move(pulls);
  d.round_ = std::accumulate(d.pulls_.begin(), d.pulls_.end(), std::size_t{0});
  d.G_.assign(d.W_.size(), Matrix(d.d1_, d.d2_));
  d.C_.assign(d.W_.size(), Matrix(d.d1_, d.d1_));
  for (std::size_t i = 0; i < d.W_.size(); ++i) d.rebuild_arm(i);
  d.rebuild_schur();
  return d;
}

void BlockDesign::check(const SparseHybridVector& u) const {
  if (u.arm >= num_arms())
    throw std::out_of_range("arm index " + std::to_string(u.arm) +
                                " out of range for K=" +
                                std::to_string(num_arms()));
  if (u.x.size() != d1_ || u.z.size() != d2_)
    throw std::invalid_argument("hybrid vector dimensions (" +
                                std::to_string(u.x.size()) + ", " +
                                std::to_string(u.z.size()) +
                                ") do not match design (" +
                                std::to_string(d1_) + ", " +
                                std::to_string(d2_) + ")");
}

void BlockDesign::update(const SparseHybridVector& u) {
  check(u);
  V_.rank_one_update(u.x);
  W_[u.arm].rank_one_update(u.z);
  add_outer(B_[u.arm], u.x, u.z);
  ++pulls_[u.arm];
  ++round_;
  rebuild_arm(u.arm);
  rebuild_schur();
}

void BlockDesign::rebuild_arm(std::size_t arm) {
  G_[arm] = B_[arm] * W_[arm].inverse();
  C_[arm] = G_[arm] * B_[arm].transpose();
  symmetrize(C_[arm]);
}

void BlockDesign::rebuild_schur() {
  Matrix s = V_.entries();
  for (const auto& c : C_) s -= c;
  schur_inv_ = spd_inverse(s);
}

Vector BlockDesign::solve_sparse(const SparseHybridVector& u) const {
  check(u);
  Vector a = u.x;
  const Vector gz = matvec(G_[u.arm], u.z);
  for (std::size_t k = 0; k < d1_; ++k) a[k] -= gz[k];
  const Vector p = matvec(schur_inv_, a);

  Vector out(dim(), 0.0);
  std::copy(p.begin(), p.end(), out.begin());
  for (std::size_t j = 0; j < num_arms(); ++j) {
    const Vector q = matvec_transposed(G_[j], p);
    double* slot = out.data() + d1_ + j * d2_;
    for (std::size_t k = 0; k < d2_; ++k) slot[k] = -q[k];
  }
  const Vector wz = W_[u.arm].solve(u.z);
  double* slot = out.data() + d1_ + u.arm * d2_;
  for (std::size_t k = 0; k < d2_; ++k) slot[k] += wz[k];
  return out;
}

double BlockDesign::quad_form_inv(const SparseHybridVector& u) const {
  check(u);
  Vector a = u.x;
  const Vector gz = matvec(G_[u.arm], u.z);
  for (std::size_t k = 0; k < d1_; ++k) a[k] -= gz[k];
  const double shared = dot(a, matvec(schur_inv_, a));
  const double own = W_[u.arm].quad_form_inv(u.z);
  return std::max(0.0, shared + own);
}

Vector BlockDesign::solve(std::span<const double> rhs) const {
  require(rhs.size() == dim(), "BlockDesign::solve: length mismatch");
  Vector a(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(d1_));
  for (std::size_t j = 0; j < num_arms(); ++j) {
    const Vector g = matvec(G_[j], rhs.subspan(d1_ + j * d2_, d2_));
    for (std::size_t k = 0; k < d1_; ++k) a[k] -= g[k];
  }
  const Vector p = matvec(schur_inv_, a);

  Vector out(dim(), 0.0);
  std::copy(p.begin(), p.end(), out.begin());
  for (std::size_t j = 0; j < num_arms(); ++j) {
    const Vector w = W_[j].solve(rhs.subspan(d1_ + j * d2_, d2_));
    const Vector q = matvec_transposed(G_[j], p);
    double* slot = out.data() + d1_ + j * d2_;
    for (std::size_t k = 0; k < d2_; ++k) slot[k] = w[k] - q[k];
  }
  return out;
}

double BlockDesign::quad_form(std::span<const double> v) const {
  require(v.size() == dim(), "BlockDesign::quad_form: length mismatch");
  const auto theta = v.first(d1_);
  double s = dot(theta, matvec(V_.entries(), theta));
  for (std::size_t j = 0; j < num_arms(); ++j) {
    const auto beta = v.subspan(d1_ + j * d2_, d2_);
    s += 2.0 * dot(theta, matvec(B_[j], beta));
    s += dot(beta, matvec(W_[j].entries(), beta));
  }
  return s;
}

Matrix BlockDesign::assemble_dense() const {
  Matrix m(dim(), dim());
  for (std::size_t r = 0; r < d1_; ++r)
    for (std::size_t c = 0; c < d1_; ++c) m(r, c) = V_.entries()(r, c);
  for (std::size_t j = 0; j < num_arms(); ++j) {
    const std::size_t off = d1_ + j * d2_;
    for (std::size_t r = 0; r < d2_; ++r)
      for (std::size_t c = 0; c < d2_; ++c)
        m(off + r, off + c) = W_[j].entries()(r, c);
    for (std::size_t r = 0; r < d1_; ++r) {
      for (std::size_t c = 0; c < d2_; ++c) {
        m(r, off + c) = B_[j](r, c);
        m(off + c, r) = B_[j](r, c);
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Eigen-decomposition

SymEigen sym_eigen(const Matrix& input) {
  if (!is_symmetric(input, 1e-9))
    throw std::invalid_argument("sym_eigen: matrix is not symmetric");
  const std::size_t n = input.rows();
  Matrix a = input;
  symmetrize(a);
  Matrix v = Matrix::identity(n);

  double frob = 0.0;
  for (double x : a.data()) frob += x * x;
  frob = std::sqrt(frob);
  const double tol = 1e-12 * frob;

  for (int sweep = 0; sweep < 100 && frob > 0.0; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= tol) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          const double nkp = c * akp - s * akq;
          const double nkq = s * akp + c * akq;
          a(k, p) = nkp;
          a(p, k) = nkp;
          a(k, q) = nkq;
          a(q, k) = nkq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i) < a(j, j);
  });
  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

Vector sym_eigenvalues(const Matrix& a) { return sym_eigen(a).values; }

Matrix inverse_sqrt_spd(const Matrix& a) {
  const SymEigen e = sym_eigen(a);
  const std::size_t n = a.rows();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(e.values[k] > 0.0))
      throw SingularMatrixError("inverse_sqrt_spd: matrix is not positive definite");
    const double w = 1.0 / std::sqrt(e.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = w * e.vectors(i, k);
      if (vik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * e.vectors(j, k);
    }
  }
  symmetrize(out);
  return out;
}

Matrix hermitian_dilation(const Matrix& b) {
  const std::size_t r = b.rows();
  const std::size_t c = b.cols();
  Matrix h(r + c, r + c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      h(i, r + j) = b(i, j);
      h(r + j, i) = b(i, j);
    }
  }
  return h;
}

double max_singular_value(const Matrix& b) {
  if (b.rows() == 0 || b.cols() == 0) return 0.0;
  return std::max(0.0, sym_eigenvalues(hermitian_dilation(b)).back());
}

namespace {

struct WhitenedBlocks {
  std::vector<Matrix> z;  // V^{-1/2} B_i W_i^{-1/2}
};

WhitenedBlocks whiten(const BlockDesign& d) {
  const Matrix v_is = inverse_sqrt_spd(d.V().entries());
  WhitenedBlocks out;
  out.z.reserve(d.num_arms());
  for (std::size_t i = 0; i < d.num_arms(); ++i) {
    if (d.B(i).max_abs() == 0.0) {
      out.z.emplace_back(d.d1(), d.d2());
      continue;
    }
    out.z.push_back(v_is * d.B(i) * inverse_sqrt_spd(d.W(i).entries()));
  }
  return out;
}

}  // namespace

std::pair<double, double> sandwich_spectrum(const BlockDesign& d) {
  const WhitenedBlocks wb = whiten(d);
  // Diagonal blocks of U^{-1/2} M U^{-1/2} are identities by construction.
  Matrix a = Matrix::identity(d.dim());
  for (std::size_t j = 0; j < d.num_arms(); ++j) {
    const std::size_t off = d.d1() + j * d.d2();
    for (std::size_t r = 0; r < d.d1(); ++r) {
      for (std::size_t c = 0; c < d.d2(); ++c) {
        a(r, off + c) = wb.z[j](r, c);
        a(off + c, r) = wb.z[j](r, c);
      }
    }
  }
  const Vector ev = sym_eigenvalues(a);
  return {ev.front(), ev.back()};
}

std::pair<double, double> sandwich_spectrum_reduced(const BlockDesign& d) {
  const WhitenedBlocks wb = whiten(d);
  Matrix zzt(d.d1(), d.d1());
  for (const auto& z : wb.z) zzt += z * z.transpose();
  const double top = std::max(0.0, sym_eigenvalues(zzt).back());
  const double sigma = std::sqrt(top);
  return {1.0 - sigma, 1.0 + sigma};
}

}  // namespace hybandit
