#pragma once

// Elementary symmetric polynomials S_k, the Garding cones Gamma^m and the
// classical inequalities attached to them. Everything here is a pure function.

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace hessianlab {

inline constexpr int kMaxDimension = 8;

/// Real n-tuple of (generalized) eigenvalues, 2 <= n <= kMaxDimension.
class EigenTuple {
 public:
  EigenTuple() = default;
  explicit EigenTuple(Eigen::VectorXd values);
  EigenTuple(std::initializer_list<double> values);

  int size() const noexcept { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  std::span<const double> span() const noexcept { return {values_.data(), static_cast<std::size_t>(values_.size())}; }

 private:
  Eigen::VectorXd values_;
};

struct ConeSpec {
  int n = 2;
  int m = 2;
  /// Membership requires S_k > margin * binom(n, k) for k = 1..m.
  double margin = 0.0;
  /// Closed cone: compare with >= instead of >.
  bool closed = false;
};

struct ConeMembership {
  bool is_member = false;
  /// min_k S_k / binom(n, k) over k = 1..m
  double worst_margin = 0.0;
};

/// n x n complex Hermitian matrix; symmetrized on construction.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const Eigen::MatrixXcd& entries);
  static HermitianMatrix identity(int n);
  static HermitianMatrix diagonal(std::span<const double> diag);

  int size() const noexcept { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const noexcept { return entries_; }
  std::complex<double> operator()(int i, int j) const { return entries_(i, j); }

 private:
  Eigen::MatrixXcd entries_;
};

double binomial(int n, int k);

/// S_k(lambda) by the Vieta recurrence; S_0 = 1.
double elem_sym(const EigenTuple& lambda, int k);

/// S_0..S_kmax of a raw tuple written into out[0..kmax]. No validation; hot path.
void elem_sym_upto(const double* lambda, int n, int kmax, double* out);

/// S_k of `lambda` with the entries at `skip_a` and `skip_b` set to zero (-1 = none).
double elem_sym_skip(const double* lambda, int n, int k, int skip_a, int skip_b = -1);

/// Sum of the k x k principal minors of A.
double elem_sym_minors(const HermitianMatrix& a, int k);

ConeMembership cone_membership(const EigenTuple& lambda, const ConeSpec& spec);

/// (S_{m-1;i}(lambda))_i = dS_m / dlambda_i.
Eigen::VectorXd grad_elem_sym(const EigenTuple& lambda, int m);

/// Entries S_{m-2;ij}(lambda) off the diagonal, zero on it.
Eigen::MatrixXd hess_elem_sym(const EigenTuple& lambda, int m);

/// Smallest Maclaurin gap (S_j/C(n,j))^{1/j} - (S_i/C(n,i))^{1/i} over 1 <= j < i <= m.
/// Zero when m == 1 (there is no pair). Throws DomainError outside Gamma^m.
double check_maclaurin(const EigenTuple& lambda, int m);

/// sum_i eta_i S_{m-1;i}(lambda) - m S_m(eta)^{1/m} S_m(lambda)^{(m-1)/m}.
/// Both tuples must lie in the closed cone.
double check_garding(const EigenTuple& lambda, const EigenTuple& eta, int m);

/// Eigenvalues of G^{-1/2} A G^{-1/2}, descending.
EigenTuple generalized_eigenvalues(const HermitianMatrix& a, const HermitianMatrix& g);

/// (S_m(lambda) / C(n,m))^{1/m}; F(1,...,1) = 1.
double hessian_operator_F(const EigenTuple& lambda, int m);

}  // namespace hessianlab
