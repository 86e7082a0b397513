#include <doctest.h>

#include "hessianlab/grid.hpp"
#include "hessianlab/spectral.hpp"

#include <cmath>
#include <random>

using namespace hessianlab;

namespace {

// L0 u = sum_ab C_ab D_ab u by the same stencils the solver uses.
std::vector<double> apply_operator(const TorusGrid& g, const Eigen::MatrixXd& c, const std::vector<double>& u) {
  const int k = g.axes();
  std::vector<double> out(g.size()), d(k * k);
  for (std::size_t p = 0; p < g.size(); ++p) {
    real_second_differences(g, u.data(), p, d.data());
    double s = 0.0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) s += c(a, b) * d[a * k + b];
    out[p] = s;
  }
  return out;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int k) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = gauss(rng);
  return 0.3 * a * a.transpose() + Eigen::MatrixXd::Identity(k, k);
}

}  // namespace

TEST_CASE("symbol matches the operator on a Fourier mode") {
  std::mt19937_64 rng(1);
  const TorusGrid g(2, 8, 3.0);
  const Eigen::MatrixXd c = random_spd(rng, 4);
  for (const Coords k : {Coords{1, 0, 2, 3}, Coords{0, 0, 0, 1}, Coords{4, 7, 1, 5}}) {
    std::vector<double> u(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
      const Coords x = g.coords(p);
      double phase = 0.0;
      for (int a = 0; a < 4; ++a) phase += 2 * M_PI * k[a] * x[a] / g.points_per_axis();
      u[p] = std::cos(phase);
    }
    const std::vector<double> lu = apply_operator(g, c, u);
    const double sigma = ConstantCoefficientInverse::symbol(c, k, g);
    for (std::size_t p = 0; p < g.size(); p += 7) CHECK(lu[p] == doctest::Approx(sigma * u[p]).epsilon(1e-10));
  }
}

TEST_CASE("apply inverts the operator on mean-zero data") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const TorusGrid g(2, 8, 2 * M_PI);
  const Eigen::MatrixXd c = random_spd(rng, 4);
  ConstantCoefficientInverse inv(g);
  inv.set_coefficients(c);
  std::vector<double> u(g.size());
  double mean = 0.0;
  for (double& v : u) mean += (v = unif(rng));
  mean /= g.size();
  for (double& v : u) v -= mean;
  const std::vector<double> f = apply_operator(g, c, u);
  std::vector<double> back(g.size());
  inv.apply(f, back);
  double err = 0.0, m2 = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    err = std::max(err, std::abs(back[p] - u[p]));
    m2 += back[p];
  }
  CHECK(err < 1e-10);
  CHECK(std::abs(m2) / g.size() < 1e-13);

  // A constant input has no mean-zero part.
  std::vector<double> constant(g.size(), 4.0), out(g.size());
  inv.apply(constant, out);
  for (double v : out) CHECK(std::abs(v) < 1e-12);
}
