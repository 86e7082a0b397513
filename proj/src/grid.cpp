#include "hessianlab/grid.hpp"

#include "hessianlab/errors.hpp"
#include "hessianlab/parallel.hpp"
#include "hessianlab/reduce.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

namespace hessianlab {

// ---------------------------------------------------------------- threads

namespace {
int g_threads = 0;
}

int thread_count() {
  if (g_threads == 0) {
    int t = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("HESSIANLAB_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) t = v;
    }
    set_thread_count(t);
  }
  return g_threads;
}

void set_thread_count(int threads) {
  g_threads = std::max(1, threads);
  omp_set_num_threads(g_threads);
}

// ---------------------------------------------------------------- grid

TorusGrid::TorusGrid(int n, int points_per_axis, double period, std::size_t budget)
    : n_(n), N_(points_per_axis), L_(period) {
  if (n < 1 || n > kMaxDimension) throw ValidationError("TorusGrid: dimension outside [1, 8]");
  if (points_per_axis < 4 || points_per_axis % 2 != 0) {
    throw ValidationError("TorusGrid: points per axis must be even and >= 4");
  }
  if (!(period > 0.0) || !std::isfinite(period)) throw ValidationError("TorusGrid: period must be positive");
  double total = 1.0;
  for (int a = 0; a < 2 * n; ++a) total *= points_per_axis;
  if (total > static_cast<double>(budget)) {
    throw ValidationError("TorusGrid: " + std::to_string(static_cast<long long>(total)) +
                          " points exceed the budget of " + std::to_string(budget));
  }
  size_ = static_cast<std::size_t>(total);
  std::size_t s = 1;
  for (int a = 2 * n - 1; a >= 0; --a) {
    strides_[a] = s;
    s *= static_cast<std::size_t>(N_);
  }
}

Coords TorusGrid::coords(std::size_t index) const noexcept {
  Coords c{};
  for (int a = axes() - 1; a >= 0; --a) {
    c[a] = static_cast<int>(index % N_);
    index /= N_;
  }
  return c;
}

std::size_t TorusGrid::index(const Coords& c) const noexcept {
  std::size_t p = 0;
  for (int a = 0; a < axes(); ++a) {
    const int v = ((c[a] % N_) + N_) % N_;
    p += static_cast<std::size_t>(v) * strides_[a];
  }
  return p;
}

double TorusGrid::position(std::size_t index, int axis) const noexcept {
  const std::size_t c = (index / strides_[axis]) % N_;
  return static_cast<double>(c) * spacing();
}

void TorusGrid::neighbour_offsets(std::size_t index, std::ptrdiff_t* up, std::ptrdiff_t* down) const noexcept {
  for (int a = 0; a < axes(); ++a) {
    const auto s = static_cast<std::ptrdiff_t>(strides_[a]);
    const std::size_t c = (index / strides_[a]) % N_;
    up[a] = c + 1 == static_cast<std::size_t>(N_) ? -s * (N_ - 1) : s;
    down[a] = c == 0 ? s * (N_ - 1) : -s;
  }
}

// ---------------------------------------------------------------- fields

ScalarField::ScalarField(const TorusGrid& grid, double value) : grid_(grid), data_(grid.size(), value) {}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> data) : grid_(grid), data_(std::move(data)) {
  if (data_.size() != grid_.size()) throw ValidationError("ScalarField: data length does not match grid");
}

double ScalarField::max() const { return *std::max_element(data_.begin(), data_.end()); }
double ScalarField::min() const { return *std::min_element(data_.begin(), data_.end()); }
bool ScalarField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

HermitianField::HermitianField(const TorusGrid& grid)
    : grid_(grid), data_(grid.size() * grid.dimension() * grid.dimension()) {}

HermitianField HermitianField::constant(const TorusGrid& grid, const HermitianMatrix& value) {
  if (value.size() != grid.dimension()) throw ValidationError("HermitianField: matrix size does not match grid");
  HermitianField f(grid);
  const int nn = grid.dimension() * grid.dimension();
  const auto* src = value.entries().data();
  for (std::size_t p = 0; p < grid.size(); ++p) std::copy(src, src + nn, f.data_.begin() + p * nn);
  return f;
}

void HermitianField::set(std::size_t p, const Eigen::MatrixXcd& value) {
  const int n = dimension();
  Eigen::Map<Eigen::MatrixXcd> dst(data_.data() + p * n * n, n, n);
  dst = 0.5 * (value + value.adjoint());
}

HermitianField& HermitianField::operator+=(const HermitianField& o) { return add_scaled(1.0, o); }

HermitianField& HermitianField::add_scaled(double s, const HermitianField& o) {
  if (!(grid_ == o.grid_)) throw ValidationError("HermitianField: grid mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  return *this;
}

EigenField::EigenField(const TorusGrid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size() * grid_.dimension()) throw ValidationError("EigenField: size mismatch");
}

EigenTuple EigenField::at(std::size_t p) const {
  const int n = grid_.dimension();
  return EigenTuple(Eigen::Map<const Eigen::VectorXd>(raw(p), n));
}

// ---------------------------------------------------------------- background

BackgroundData make_background(HermitianField omega, HermitianField chi, HermitianField chi_tilde, double kappa, int m) {
  const TorusGrid& grid = omega.grid();
  if (!(chi.grid() == grid) || !(chi_tilde.grid() == grid)) throw ValidationError("make_background: grid mismatch");
  if (!(kappa >= 0.0)) throw ValidationError("make_background: kappa must be nonnegative");
  const int n = grid.dimension();
  BackgroundData bg;
  bg.kappa = kappa;
  bg.volume = ScalarField(grid, 0.0);
  bg.omega_inv_sqrt = HermitianField(grid);
  bg.constant_metric = true;
  const int nn = n * n;
  for (std::size_t p = 1; p < grid.size() && bg.constant_metric; ++p)
    for (int k = 0; k < nn; ++k)
      if (omega.data()[p * nn + k] != omega.data()[k]) {
        bg.constant_metric = false;
        break;
      }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(n);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    es.compute(omega.at(p));
    const Eigen::VectorXd mu = es.eigenvalues();
    if (!(mu.minCoeff() >= 1e-8)) {
      throw SingularMetricError("make_background: omega not positive definite at point " + std::to_string(p));
    }
    bg.volume[p] = mu.prod();
    const Eigen::MatrixXcd& v = es.eigenvectors();
    const Eigen::MatrixXcd w = v * mu.cwiseSqrt().cwiseInverse().asDiagonal() * v.adjoint();
    bg.omega_inv_sqrt.set(p, w);

    const Eigen::MatrixXcd c = w * chi.at(p) * w;
    Eigen::VectorXd lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly).eigenvalues();
    std::array<double, kMaxDimension + 1> e{};
    elem_sym_upto(lam.data(), n, m, e.data());
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    for (int k = 1; k <= m; ++k) {
      if (e[k] < -1e-12 * std::pow(scale, k)) {
        throw ValidationError("make_background: chi leaves the closed cone at point " + std::to_string(p));
      }
    }
    const double tmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(chi_tilde.at(p), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (tmin < -1e-12) throw ValidationError("make_background: chi_tilde not semipositive at point " + std::to_string(p));
  }
  bg.omega = std::move(omega);
  bg.chi = std::move(chi);
  bg.chi_tilde = std::move(chi_tilde);
  return bg;
}

// ---------------------------------------------------------------- stencils

void real_second_differences(const TorusGrid& grid, const double* u, std::size_t p, double* d) {
  const int axes = grid.axes();
  const double h = grid.spacing();
  const double inv_h2 = 1.0 / (h * h);
  const double inv_4h2 = 0.25 * inv_h2;
  std::array<std::ptrdiff_t, kMaxAxes> up{}, dn{};
  grid.neighbour_offsets(p, up.data(), dn.data());
  const auto ip = static_cast<std::ptrdiff_t>(p);
  for (int a = 0; a < axes; ++a) {
    d[a * axes + a] = (u[ip + up[a]] - 2.0 * u[ip] + u[ip + dn[a]]) * inv_h2;
    for (int b = a + 1; b < axes; ++b) {
      const double v = (u[ip + up[a] + up[b]] - u[ip + up[a] + dn[b]] - u[ip + dn[a] + up[b]] + u[ip + dn[a] + dn[b]]) * inv_4h2;
      d[a * axes + b] = v;
      d[b * axes + a] = v;
    }
  }
}

void real_first_differences(const TorusGrid& grid, const double* u, std::size_t p, double* g) {
  const double inv_2h = 0.5 / grid.spacing();
  std::array<std::ptrdiff_t, kMaxAxes> up{}, dn{};
  grid.neighbour_offsets(p, up.data(), dn.data());
  const auto ip = static_cast<std::ptrdiff_t>(p);
  for (int a = 0; a < grid.axes(); ++a) g[a] = (u[ip + up[a]] - u[ip + dn[a]]) * inv_2h;
}

Eigen::MatrixXcd complex_from_real(const double* d, int n) {
  const int axes = 2 * n;
  Eigen::MatrixXcd hz(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
      const double re = 0.25 * (d[xi * axes + xj] + d[yi * axes + yj]);
      const double im = 0.25 * (d[xi * axes + yj] - d[yi * axes + xj]);
      hz(i, j) = {re, im};
    }
  return hz;
}

HermitianField complex_hessian(const ScalarField& phi) {
  const TorusGrid& grid = phi.grid();
  const int n = grid.dimension();
  HermitianField out(grid);
  const double* u = phi.data().data();
  const auto size = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel num_threads(thread_count())
  {
    std::array<double, kMaxAxes * kMaxAxes> d{};
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < size; ++p) {
      real_second_differences(grid, u, static_cast<std::size_t>(p), d.data());
      out.set(static_cast<std::size_t>(p), complex_from_real(d.data(), n));
    }
  }
  return out;
}

EigenField eigen_field(const HermitianField& a, const HermitianField& g) {
  const TorusGrid& grid = a.grid();
  if (!(g.grid() == grid)) throw ValidationError("eigen_field: grid mismatch");
  const int n = grid.dimension();
  std::vector<double> values(grid.size() * n);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    EigenTuple lam;
    try {
      lam = generalized_eigenvalues(HermitianMatrix(a.at(p)), HermitianMatrix(g.at(p)));
    } catch (const SingularMetricError& e) {
      const Coords c = grid.coords(p);
      std::string where;
      for (int ax = 0; ax < grid.axes(); ++ax) where += (ax ? "," : "") + std::to_string(c[ax]);
      throw SingularMetricError(std::string(e.what()) + " at grid point (" + where + ")");
    }
    std::copy(lam.values().data(), lam.values().data() + n, values.begin() + p * n);
  }
  return EigenField(grid, std::move(values));
}

// ---------------------------------------------------------------- integrals

namespace {

double cell_volume(const TorusGrid& grid) { return std::pow(grid.spacing(), grid.axes()); }

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
  if (!(a.grid() == b.grid())) throw ValidationError(std::string(what) + ": grid mismatch");
}

}  // namespace

double integrate(const ScalarField& g, const ScalarField& volume) {
  require_same_grid(g, volume, "integrate");
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = g[i] * volume[i];
  return cell_volume(g.grid()) * pairwise_sum(w);
}

double lp_norm(const ScalarField& g, double p, const ScalarField& volume) {
  require_same_grid(g, volume, "lp_norm");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : g.data()) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1");
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(std::abs(g[i]), p) * volume[i];
  return std::pow(cell_volume(g.grid()) * pairwise_sum(w), 1.0 / p);
}

double entropy_functional(const ScalarField& f, double p, const ScalarField& volume) {
  require_same_grid(f, volume, "entropy_functional");
  if (!(p > 0.0)) throw DomainError("entropy_functional: p must be positive");
  const double n = f.grid().dimension();
  std::vector<double> logs(f.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i) {
    logs[i] = n * f[i] + p * std::log1p(n * std::abs(f[i])) + std::log(volume[i]);
    top = std::max(top, logs[i]);
  }
  const double shift = top > 300.0 ? top : 0.0;
  std::vector<double> w(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) w[i] = std::exp(logs[i] - shift);
  const double s = pairwise_sum(w) * cell_volume(f.grid());
  return shift == 0.0 ? s : std::exp(std::log(s) + shift);
}

ScalarField mollify(const ScalarField& g, double sigma) {
  if (!(sigma >= 0.0)) throw DomainError("mollify: sigma must be nonnegative");
  if (sigma == 0.0) return g;
  const TorusGrid& grid = g.grid();
  const int N = grid.points_per_axis();
  const double h = grid.spacing();
  const double L = grid.period();

  // Periodized Gaussian sampled on the grid, normalized to unit sum.
  std::vector<double> w(N, 0.0);
  const int images = 2 + static_cast<int>(std::ceil(8.0 * sigma / L));
  for (int j = 0; j < N; ++j) {
    for (int k = -images; k <= images; ++k) {
      const double x = j * h + k * L;
      w[j] += std::exp(-0.5 * x * x / (sigma * sigma));
    }
  }
  const double total = pairwise_sum(w);
  for (double& v : w) v /= total;

  std::vector<double> cur = g.data();
  std::vector<double> next(cur.size());
  for (int a = 0; a < grid.axes(); ++a) {
    const std::size_t s = grid.stride(a);
    const auto size = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t pp = 0; pp < size; ++pp) {
      const auto p = static_cast<std::size_t>(pp);
      const std::size_t c = (p / s) % N;
      const std::size_t base = p - c * s;
      double acc = 0.0;
      for (int j = 0; j < N; ++j) {
        const std::size_t src = (c + N - j) % N;
        acc += w[j] * cur[base + src * s];
      }
      next[p] = acc;
    }
    cur.swap(next);
  }
  return ScalarField(grid, std::move(cur));
}

}  // namespace hessianlab
