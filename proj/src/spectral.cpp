#include "hessianlab/spectral.hpp"

#include "hessianlab/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

namespace hessianlab {

namespace {
// FFTW planning is not thread safe.
std::mutex g_plan_mutex;
}  // namespace

struct ConstantCoefficientInverse::Impl {
  TorusGrid grid;
  std::size_t complex_size = 0;
  double* real_buf = nullptr;
  fftw_complex* spec_buf = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> inv_symbol;

  ~Impl() {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real_buf);
    fftw_free(spec_buf);
  }
};

ConstantCoefficientInverse::ConstantCoefficientInverse(const TorusGrid& grid) : impl_(std::make_unique<Impl>()) {
  impl_->grid = grid;
  const int axes = grid.axes();
  const int N = grid.points_per_axis();
  std::vector<int> dims(axes, N);
  impl_->complex_size = grid.size() / N * (N / 2 + 1);
  impl_->real_buf = fftw_alloc_real(grid.size());
  impl_->spec_buf = fftw_alloc_complex(impl_->complex_size);
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  // FFTW_ESTIMATE with aligned buffers selects the same plan on every run.
  impl_->forward = fftw_plan_dft_r2c(axes, dims.data(), impl_->real_buf, impl_->spec_buf, FFTW_ESTIMATE);
  impl_->backward = fftw_plan_dft_c2r(axes, dims.data(), impl_->spec_buf, impl_->real_buf, FFTW_ESTIMATE);
  if (!impl_->forward || !impl_->backward) throw std::runtime_error("ConstantCoefficientInverse: FFT planning failed");
}

ConstantCoefficientInverse::~ConstantCoefficientInverse() = default;

double ConstantCoefficientInverse::symbol(const Eigen::MatrixXd& c, const Coords& k, const TorusGrid& grid) {
  const int axes = grid.axes();
  const int N = grid.points_per_axis();
  const double h = grid.spacing();
  std::array<double, kMaxAxes> s1{}, s2{};
  for (int a = 0; a < axes; ++a) {
    const double theta = 2.0 * std::numbers::pi * k[a] / N;
    s1[a] = std::sin(theta);
    const double half = std::sin(0.5 * theta);
    s2[a] = 4.0 * half * half;
  }
  double sigma = 0.0;
  for (int a = 0; a < axes; ++a) {
    sigma -= c(a, a) * s2[a];
    for (int b = 0; b < axes; ++b)
      if (b != a) sigma -= c(a, b) * s1[a] * s1[b];
  }
  return sigma / (h * h);
}

void ConstantCoefficientInverse::set_coefficients(const Eigen::MatrixXd& c) {
  const TorusGrid& grid = impl_->grid;
  const int axes = grid.axes();
  const int N = grid.points_per_axis();
  const int half = N / 2 + 1;
  impl_->inv_symbol.assign(impl_->complex_size, 0.0);
  const double norm = static_cast<double>(grid.size());
  Coords k{};
  for (std::size_t idx = 0; idx < impl_->complex_size; ++idx) {
    std::size_t rest = idx;
    k[axes - 1] = static_cast<int>(rest % half);
    rest /= half;
    for (int a = axes - 2; a >= 0; --a) {
      k[a] = static_cast<int>(rest % N);
      rest /= N;
    }
    const double s = symbol(c, k, grid);
    impl_->inv_symbol[idx] = (idx == 0 || std::abs(s) < 1e-14) ? 0.0 : 1.0 / (s * norm);
  }
}

void ConstantCoefficientInverse::apply(std::span<const double> in, std::span<double> out) {
  const std::size_t size = impl_->grid.size();
  if (in.size() != size || out.size() != size) throw ValidationError("ConstantCoefficientInverse: size mismatch");
  if (impl_->inv_symbol.empty()) throw std::logic_error("ConstantCoefficientInverse: coefficients not set");
  std::copy(in.begin(), in.end(), impl_->real_buf);
  fftw_execute(impl_->forward);
  for (std::size_t i = 0; i < impl_->complex_size; ++i) {
    impl_->spec_buf[i][0] *= impl_->inv_symbol[i];
    impl_->spec_buf[i][1] *= impl_->inv_symbol[i];
  }
  fftw_execute(impl_->backward);
  std::copy(impl_->real_buf, impl_->real_buf + size, out.begin());
}

}  // namespace hessianlab
