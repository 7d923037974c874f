#pragma once

// Dense small-matrix kernels and the block-structured hybrid design matrix.
//
// Layout of the hybrid design (shared dimension d1, arm dimension d2, K arms):
//
//   M = [ V      B_1   B_2  ...  B_K ]
//       [ B_1^T  W_1   0    ...  0   ]
//       [ ...                        ]
//       [ B_K^T  0     0    ...  W_K ]
//
// with V = lambda I + sum x x^T, W_i = lambda I + sum_{pulls of i} z z^T and
// B_i = sum_{pulls of i} x z^T. M is never materialized on production paths.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hybandit {

using Vector = std::vector<double>;

/// Raised when a matrix expected to be positive definite is not.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n, double scale = 1.0);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  double max_abs() const noexcept;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
Vector matvec(const Matrix& a, std::span<const double> v);
Vector matvec_transposed(const Matrix& a, std::span<const double> v);
/// a += alpha * u v^T
void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v,
               double alpha = 1.0);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool is_symmetric(const Matrix& a, double rel_tol);

/// Inverse of a symmetric positive definite matrix through its Cholesky
/// factor. Throws SingularMatrixError if a pivot is not positive.
Matrix spd_inverse(const Matrix& a);

/// Symmetric positive definite matrix with a maintained inverse.
///
/// Rank-one updates use Sherman-Morrison. The inverse is recomputed from the
/// entries every kRefreshInterval updates to bound floating-point drift.
class SymPosDef {
 public:
  static constexpr std::size_t kRefreshInterval = 10000;

  SymPosDef() = default;
  /// prior * I.
  SymPosDef(std::size_t dim, double prior);
  /// Takes ownership of an already accumulated SPD matrix; computes its
  /// inverse and throws SingularMatrixError if it is not positive definite.
  SymPosDef(Matrix entries, double prior);

  std::size_t dim() const noexcept { return entries_.rows(); }
  double prior() const noexcept { return prior_; }
  const Matrix& entries() const noexcept { return entries_; }
  const Matrix& inverse() const noexcept { return inverse_; }

  void rank_one_update(std::span<const double> v);
  /// Recompute the inverse from scratch.
  void refresh();

  /// v^T A^{-1} v
  double quad_form_inv(std::span<const double> v) const;
  Vector solve(std::span<const double> rhs) const;

 private:
  Matrix entries_;
  Matrix inverse_;
  double prior_ = 0.0;
  std::size_t updates_since_refresh_ = 0;
};

/// The embedded vector P(arm, x, z): x in the leading d1 coordinates, z in
/// the arm's d2-sized slot, zeros elsewhere. Arms are 0-based.
struct SparseHybridVector {
  std::size_t arm = 0;
  Vector x;
  Vector z;

  /// Materialized length-(d1 + d2 K) form. For oracles and tests.
  Vector dense(std::size_t num_arms) const;
};

/// The regularized hybrid design matrix held in block form.
///
/// After every update the Schur complement S = V - sum_i B_i W_i^{-1} B_i^T
/// and its inverse are rebuilt from cached per-arm products G_i = B_i W_i^{-1},
/// so all queries are const and cost O(d1^2 + d1 d2 + d2^2) for a sparse
/// vector and O(K d1 d2 + d1^2) for a full right-hand side.
class BlockDesign {
 public:
  BlockDesign() = default;
  BlockDesign(std::size_t d1, std::size_t d2, std::size_t num_arms,
              double lambda);

  /// Builds a design from accumulated (unregularized) sums; lambda I is added
  /// to V and every W_i. lambda may be zero, in which case a singular system
  /// raises SingularMatrixError.
  static BlockDesign from_sums(const Matrix& xx, std::vector<Matrix> zz,
                               std::vector<Matrix> xz,
                               std::vector<std::size_t> pulls, double lambda);

  std::size_t d1() const noexcept { return d1_; }
  std::size_t d2() const noexcept { return d2_; }
  std::size_t num_arms() const noexcept { return W_.size(); }
  std::size_t dim() const noexcept { return d1_ + d2_ * W_.size(); }
  double lambda() const noexcept { return lambda_; }
  std::size_t round() const noexcept { return round_; }

  const SymPosDef& V() const noexcept { return V_; }
  const SymPosDef& W(std::size_t arm) const { return W_.at(arm); }
  const Matrix& B(std::size_t arm) const { return B_.at(arm); }
  std::size_t pull_count(std::size_t arm) const { return pulls_.at(arm); }
  const std::vector<std::size_t>& pull_counts() const noexcept {
    return pulls_;
  }

  /// M += u~ u~^T, pull count of u.arm and the round counter increment.
  void update(const SparseHybridVector& u);

  /// M^{-1} u~ as a dense length-dim() vector.
  Vector solve_sparse(const SparseHybridVector& u) const;
  /// u~^T M^{-1} u~
  double quad_form_inv(const SparseHybridVector& u) const;
  /// M^{-1} rhs for a dense right-hand side in the hybrid layout.
  Vector solve(std::span<const double> rhs) const;
  /// v^T M v for a dense vector in the hybrid layout.
  double quad_form(std::span<const double> v) const;

  Matrix assemble_dense() const;

 private:
  void check(const SparseHybridVector& u) const;
  void rebuild_arm(std::size_t arm);
  void rebuild_schur();

  std::size_t d1_ = 0;
  std::size_t d2_ = 0;
  double lambda_ = 0.0;
  std::size_t round_ = 0;
  SymPosDef V_;
  std::vector<SymPosDef> W_;
  std::vector<Matrix> B_;
  std::vector<std::size_t> pulls_;

  // Cached: G_i = B_i W_i^{-1}, C_i = G_i B_i^T, S^{-1}.
  std::vector<Matrix> G_;
  std::vector<Matrix> C_;
  Matrix schur_inv_;
};

struct SymEigen {
  Vector values;  // ascending
  Matrix vectors; // column j is the eigenvector for values[j]
};

/// Cyclic Jacobi eigensolver. Throws std::invalid_argument if the input is
/// not symmetric.
SymEigen sym_eigen(const Matrix& a);
Vector sym_eigenvalues(const Matrix& a);

/// A^{-1/2} of a symmetric positive definite matrix.
Matrix inverse_sqrt_spd(const Matrix& a);

/// [[0, B], [B^T, 0]]
Matrix hermitian_dilation(const Matrix& b);
double max_singular_value(const Matrix& b);

/// Extreme eigenvalues of U^{-1/2} M U^{-1/2} with U = blockdiag(V, W_1..W_K),
/// formed densely and diagonalized with the Jacobi solver.
std::pair<double, double> sandwich_spectrum(const BlockDesign& d);

/// Same quantity through the reduced route 1 -/+ sigma_max(Z) where
/// Z = [V^{-1/2} B_i W_i^{-1/2}]_i, using the d1 x d1 matrix Z Z^T.
std::pair<double, double> sandwich_spectrum_reduced(const BlockDesign& d);

}  // namespace hybandit
