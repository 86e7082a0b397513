#include "hessianlab/symmetric.hpp"

#include "hessianlab/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace hessianlab {

namespace {

void require_degree(int k, int lo, int hi, const char* what) {
  if (k < lo || k > hi) {
    throw DomainError(std::string(what) + ": degree " + std::to_string(k) + " outside [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

EigenTuple::EigenTuple(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < 2 || values_.size() > kMaxDimension) {
    throw ValidationError("EigenTuple: length " + std::to_string(values_.size()) + " outside [2, " +
                          std::to_string(kMaxDimension) + "]");
  }
  if (!values_.allFinite()) throw ValidationError("EigenTuple: non-finite entry");
}

EigenTuple::EigenTuple(std::initializer_list<double> values)
    : EigenTuple(Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

HermitianMatrix::HermitianMatrix(const Eigen::MatrixXcd& entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 1) {
    throw ValidationError("HermitianMatrix: matrix must be square and nonempty");
  }
  if (!entries.allFinite()) throw ValidationError("HermitianMatrix: non-finite entry");
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  const double asym = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw ValidationError("HermitianMatrix: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  entries_ = 0.5 * (entries + entries.adjoint());
}

HermitianMatrix HermitianMatrix::identity(int n) { return HermitianMatrix(Eigen::MatrixXcd::Identity(n, n)); }

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> diag) {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(diag.size()), static_cast<Eigen::Index>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
  return HermitianMatrix(d);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

void elem_sym_upto(const double* lambda, int n, int kmax, double* out) {
  out[0] = 1.0;
  for (int j = 1; j <= kmax; ++j) out[j] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int top = std::min(i + 1, kmax);
    for (int j = top; j >= 1; --j) out[j] += lambda[i] * out[j - 1];
  }
}

double elem_sym_skip(const double* lambda, int n, int k, int skip_a, int skip_b) {
  if (k < 0) return 0.0;
  std::array<double, kMaxDimension + 1> e{};
  e[0] = 1.0;
  int used = 0;
  for (int i = 0; i < n; ++i) {
    if (i == skip_a || i == skip_b) continue;
    ++used;
    const int top = std::min(used, k);
    for (int j = top; j >= 1; --j) e[j] += lambda[i] * e[j - 1];
  }
  return k <= used ? e[k] : 0.0;
}

double elem_sym(const EigenTuple& lambda, int k) {
  const int n = lambda.size();
  require_degree(k, 0, n, "elem_sym");
  std::array<double, kMaxDimension + 1> e{};
  elem_sym_upto(lambda.values().data(), n, k, e.data());
  return e[k];
}

double elem_sym_minors(const HermitianMatrix& a, int k) {
  const int n = a.size();
  require_degree(k, 0, n, "elem_sym_minors");
  if (k == 0) return 1.0;
  if (n > kMaxDimension) throw DomainError("elem_sym_minors: dimension too large");
  double total = 0.0;
  std::vector<int> idx;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    idx.clear();
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    Eigen::MatrixXcd sub(k, k);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) sub(r, c) = a(idx[r], idx[c]);
    total += sub.determinant().real();
  }
  return total;
}

ConeMembership cone_membership(const EigenTuple& lambda, const ConeSpec& spec) {
  const int n = lambda.size();
  if (spec.n != n) throw ValidationError("cone_membership: tuple length does not match ConeSpec.n");
  if (spec.m < 1 || spec.m > n) throw DomainError("cone_membership: m outside [1, n]");
  if (spec.margin < 0.0) throw ValidationError("cone_membership: negative margin");
  std::array<double, kMaxDimension + 1> e{};
  elem_sym_upto(lambda.values().data(), n, spec.m, e.data());
  ConeMembership out{true, std::numeric_limits<double>::infinity()};
  for (int k = 1; k <= spec.m; ++k) {
    const double c = binomial(n, k);
    out.worst_margin = std::min(out.worst_margin, e[k] / c);
    const double threshold = spec.margin * c;
    const bool ok = spec.closed ? e[k] >= threshold : e[k] > threshold;
    out.is_member = out.is_member && ok;
  }
  return out;
}

Eigen::VectorXd grad_elem_sym(const EigenTuple& lambda, int m) {
  const int n = lambda.size();
  require_degree(m, 1, n, "grad_elem_sym");
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = elem_sym_skip(lambda.values().data(), n, m - 1, i);
  return g;
}

Eigen::MatrixXd hess_elem_sym(const EigenTuple& lambda, int m) {
  const int n = lambda.size();
  require_degree(m, 2, n, "hess_elem_sym");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      h(i, j) = elem_sym_skip(lambda.values().data(), n, m - 2, i, j);
      h(j, i) = h(i, j);
    }
  return h;
}

double check_maclaurin(const EigenTuple& lambda, int m) {
  const int n = lambda.size();
  require_degree(m, 1, n, "check_maclaurin");
  if (!cone_membership(lambda, {n, m, 0.0, false}).is_member) {
    throw DomainError("check_maclaurin: tuple outside Gamma^" + std::to_string(m));
  }
  std::array<double, kMaxDimension + 1> e{};
  elem_sym_upto(lambda.values().data(), n, m, e.data());
  std::array<double, kMaxDimension + 1> mean{};
  for (int k = 1; k <= m; ++k) mean[k] = std::pow(e[k] / binomial(n, k), 1.0 / k);
  double gap = m == 1 ? 0.0 : std::numeric_limits<double>::infinity();
  for (int i = 2; i <= m; ++i)
    for (int j = 1; j < i; ++j) gap = std::min(gap, mean[j] - mean[i]);
  return gap;
}

double check_garding(const EigenTuple& lambda, const EigenTuple& eta, int m) {
  const int n = lambda.size();
  if (eta.size() != n) throw ValidationError("check_garding: tuple lengths differ");
  require_degree(m, 1, n, "check_garding");
  const ConeSpec closed{n, m, 0.0, true};
  if (!cone_membership(lambda, closed).is_member || !cone_membership(eta, closed).is_member) {
    throw DomainError("check_garding: tuple outside the closed cone");
  }
  const Eigen::VectorXd g = grad_elem_sym(lambda, m);
  const double pairing = eta.values().dot(g);
  const double sl = std::max(0.0, elem_sym(lambda, m));
  const double se = std::max(0.0, elem_sym(eta, m));
  const double rhs = (sl == 0.0 || se == 0.0) ? 0.0 : m * std::pow(se, 1.0 / m) * std::pow(sl, (m - 1.0) / m);
  return pairing - rhs;
}

EigenTuple generalized_eigenvalues(const HermitianMatrix& a, const HermitianMatrix& g) {
  const int n = a.size();
  if (g.size() != n) throw ValidationError("generalized_eigenvalues: size mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> metric(g.entries());
  const Eigen::VectorXd mu = metric.eigenvalues();
  if (!(mu.minCoeff() > 1e-10)) {
    throw SingularMetricError("generalized_eigenvalues: metric not positive definite (smallest eigenvalue " +
                              std::to_string(mu.minCoeff()) + ")");
  }
  const Eigen::MatrixXcd& v = metric.eigenvectors();
  const Eigen::MatrixXcd w = v * mu.cwiseSqrt().cwiseInverse().asDiagonal() * v.adjoint();
  Eigen::MatrixXcd c = w * a.entries() * w;
  c = 0.5 * (c + c.adjoint()).eval();
  Eigen::VectorXd lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(c, Eigen::EigenvaluesOnly).eigenvalues();
  std::sort(lam.data(), lam.data() + n, std::greater<>());
  return EigenTuple(lam);
}

double hessian_operator_F(const EigenTuple& lambda, int m) {
  const int n = lambda.size();
  require_degree(m, 1, n, "hessian_operator_F");
  const double s = elem_sym(lambda, m);
  if (s < 0.0) throw DomainError("hessian_operator_F: S_m < 0");
  return std::pow(s / binomial(n, m), 1.0 / m);
}

}  // namespace hessianlab
