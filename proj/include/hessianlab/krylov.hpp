#pragma once

#include "hessianlab/reduce.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace hessianlab {

using Vec = std::vector<double>;
using LinearMap = std::function<void(const Vec&, Vec&)>;

inline double dot(const Vec& a, const Vec& b) {
  Vec w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) w[i] = a[i] * b[i];
  return pairwise_sum(w);
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES with right preconditioning; x is the initial guess on entry.
/// Stops once ||b - A x|| <= rtol ||b||.
inline KrylovResult gmres(const LinearMap& apply, const LinearMap& precondition, const Vec& b, Vec& x, double rtol,
                          int restart, int max_iterations) {
  const std::size_t n = b.size();
  KrylovResult out;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    out.converged = true;
    return out;
  }
  Vec r(n), w(n), z(n);
  std::vector<Vec> v(restart + 1, Vec(n));
  std::vector<Vec> zs(restart, Vec(n));
  std::vector<std::vector<double>> hess(restart + 1, std::vector<double>(restart, 0.0));
  std::vector<double> cs(restart), sn(restart), g(restart + 1);

  while (out.iterations < max_iterations) {
    apply(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    double beta = norm2(r);
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= rtol) {
      out.converged = true;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    for (; k < restart && out.iterations < max_iterations; ++k) {
      ++out.iterations;
      precondition(v[k], zs[k]);
      apply(zs[k], w);
      for (int j = 0; j <= k; ++j) {
        hess[j][k] = dot(w, v[j]);
        for (std::size_t i = 0; i < n; ++i) w[i] -= hess[j][k] * v[j][i];
      }
      hess[k + 1][k] = norm2(w);
      if (hess[k + 1][k] != 0.0)
        for (std::size_t i = 0; i < n; ++i) v[k + 1][i] = w[i] / hess[k + 1][k];
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
        hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
        hess[j][k] = t;
      }
      const double denom = std::hypot(hess[k][k], hess[k + 1][k]);
      cs[k] = denom == 0.0 ? 1.0 : hess[k][k] / denom;
      sn[k] = denom == 0.0 ? 0.0 : hess[k + 1][k] / denom;
      hess[k][k] = denom;
      hess[k + 1][k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      out.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (out.relative_residual <= rtol) {
        ++k;
        break;
      }
    }
    // Back substitution and update x += Z y.
    std::vector<double> y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= hess[i][j] * y[j];
      y[i] = s / hess[i][i];
    }
    for (int j = 0; j < k; ++j)
      for (std::size_t i = 0; i < n; ++i) x[i] += y[j] * zs[j][i];
    if (out.relative_residual <= rtol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace hessianlab
