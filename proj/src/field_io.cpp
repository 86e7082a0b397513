#include "hessianlab/field_io.hpp"

#include "hessianlab/errors.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace hessianlab {

namespace {

static_assert(std::endian::native == std::endian::little, "HLF1 I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'H', 'L', 'F', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ValidationError("HLF1: truncated stream");
  return v;
}

void write_header(std::ostream& os, const TorusGrid& grid, FieldKind kind) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kHlfVersion);
  put<std::uint64_t>(os, 0);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.dimension()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.points_per_axis()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(kind));
  put<std::uint32_t>(os, 0);
}

void write_payload(std::ostream& os, const double* data, std::size_t count) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!os) throw std::runtime_error("HLF1: write failed");
}

std::vector<double> read_payload(std::istream& is, std::size_t count) {
  std::vector<double> v(count);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw ValidationError("HLF1: truncated payload");
  return v;
}

TorusGrid grid_from_header(const Hlf1Header& h, double period) {
  return TorusGrid(static_cast<int>(h.n), static_cast<int>(h.N), period);
}

void expect_kind(const Hlf1Header& h, FieldKind kind) {
  if (h.kind != kind) throw ValidationError("HLF1: unexpected field kind");
}

nlohmann::json sidecar(const TorusGrid& grid, FieldKind kind) {
  nlohmann::json axes = nlohmann::json::array();
  for (int i = 1; i <= grid.dimension(); ++i) {
    axes.push_back("x" + std::to_string(i));
    axes.push_back("y" + std::to_string(i));
  }
  return {{"format", "HLF1"},
          {"version", kHlfVersion},
          {"n", grid.dimension()},
          {"N", grid.points_per_axis()},
          {"L", grid.period()},
          {"h", grid.spacing()},
          {"kind", static_cast<std::uint32_t>(kind)},
          {"axes", axes},
          {"points", grid.size()}};
}

template <typename Field>
void save_impl(const std::filesystem::path& path, const Field& f, FieldKind kind) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_hlf1(os, f);
  std::ofstream js(path.string() + ".json");
  js << std::setw(2) << sidecar(f.grid(), kind) << '\n';
}

double sidecar_period(const std::filesystem::path& path, std::optional<double> fallback) {
  std::ifstream js(path.string() + ".json");
  if (js) {
    const auto j = nlohmann::json::parse(js);
    return j.at("L").get<double>();
  }
  if (fallback) return *fallback;
  throw ValidationError("HLF1: no sidecar for " + path.string() + " and no period supplied");
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path.string());
  return is;
}

}  // namespace

void write_hlf1(std::ostream& os, const ScalarField& f) {
  write_header(os, f.grid(), FieldKind::Scalar);
  write_payload(os, f.data().data(), f.size());
}

void write_hlf1(std::ostream& os, const HermitianField& f) {
  write_header(os, f.grid(), FieldKind::Hermitian);
  const int n = f.dimension();
  std::vector<double> buf(2 * n * n);
  for (std::size_t p = 0; p < f.size(); ++p) {
    const auto a = f.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        buf[2 * (i * n + j)] = a(i, j).real();
        buf[2 * (i * n + j) + 1] = a(i, j).imag();
      }
    write_payload(os, buf.data(), buf.size());
  }
}

void write_hlf1(std::ostream& os, const EigenField& f) {
  write_header(os, f.grid(), FieldKind::Eigen);
  write_payload(os, f.raw(0), f.size() * f.grid().dimension());
}

Hlf1Header read_hlf1_header(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ValidationError("HLF1: bad magic");
  if (get<std::uint32_t>(is) != kHlfVersion) throw ValidationError("HLF1: unsupported version");
  get<std::uint64_t>(is);
  Hlf1Header h;
  h.n = get<std::uint32_t>(is);
  h.N = get<std::uint32_t>(is);
  const auto kind = get<std::uint32_t>(is);
  if (kind > 2) throw ValidationError("HLF1: unknown field kind");
  h.kind = static_cast<FieldKind>(kind);
  get<std::uint32_t>(is);
  return h;
}

ScalarField read_hlf1_scalar(std::istream& is, double period) {
  const Hlf1Header h = read_hlf1_header(is);
  expect_kind(h, FieldKind::Scalar);
  const TorusGrid grid = grid_from_header(h, period);
  ScalarField f(grid, read_payload(is, grid.size()));
  if (!f.all_finite()) throw ValidationError("HLF1: non-finite scalar data");
  return f;
}

HermitianField read_hlf1_hermitian(std::istream& is, double period) {
  const Hlf1Header h = read_hlf1_header(is);
  expect_kind(h, FieldKind::Hermitian);
  const TorusGrid grid = grid_from_header(h, period);
  const int n = grid.dimension();
  const std::vector<double> raw = read_payload(is, grid.size() * 2 * n * n);
  HermitianField f(grid);
  Eigen::MatrixXcd a(n, n);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t k = p * 2 * n * n + 2 * (i * n + j);
        a(i, j) = {raw[k], raw[k + 1]};
      }
    f.set(p, HermitianMatrix(a).entries());
  }
  return f;
}

EigenField read_hlf1_eigen(std::istream& is, double period) {
  const Hlf1Header h = read_hlf1_header(is);
  expect_kind(h, FieldKind::Eigen);
  const TorusGrid grid = grid_from_header(h, period);
  return EigenField(grid, read_payload(is, grid.size() * grid.dimension()));
}

void save_field(const std::filesystem::path& path, const ScalarField& f) { save_impl(path, f, FieldKind::Scalar); }
void save_field(const std::filesystem::path& path, const HermitianField& f) { save_impl(path, f, FieldKind::Hermitian); }
void save_field(const std::filesystem::path& path, const EigenField& f) { save_impl(path, f, FieldKind::Eigen); }

Hlf1Header peek_field(const std::filesystem::path& path) {
  auto is = open_binary(path);
  return read_hlf1_header(is);
}

ScalarField load_scalar_field(const std::filesystem::path& path, std::optional<double> fallback_period) {
  const double period = sidecar_period(path, fallback_period);
  auto is = open_binary(path);
  return read_hlf1_scalar(is, period);
}

HermitianField load_hermitian_field(const std::filesystem::path& path, std::optional<double> fallback_period) {
  const double period = sidecar_period(path, fallback_period);
  auto is = open_binary(path);
  return read_hlf1_hermitian(is, period);
}

EigenField load_eigen_field(const std::filesystem::path& path, std::optional<double> fallback_period) {
  const double period = sidecar_period(path, fallback_period);
  auto is = open_binary(path);
  return read_hlf1_eigen(is, period);
}

void write_csv_slice(std::ostream& os, const ScalarField& f, int axis_a, int axis_b) {
  const TorusGrid& grid = f.grid();
  if (axis_a < 0 || axis_a >= grid.axes() || axis_b >= grid.axes() || axis_a == axis_b) {
    throw ValidationError("write_csv_slice: bad axes");
  }
  auto name = [](int axis) { return std::string(axis % 2 == 0 ? "x" : "y") + std::to_string(axis / 2 + 1); };
  const int N = grid.points_per_axis();
  const double h = grid.spacing();
  os << std::setprecision(17);
  Coords c{};
  if (axis_b < 0) {
    os << name(axis_a) << ",value\n";
    for (int i = 0; i < N; ++i) {
      c[axis_a] = i;
      os << i * h << ',' << f[grid.index(c)] << '\n';
    }
    return;
  }
  os << name(axis_a) << ',' << name(axis_b) << ",value\n";
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      c[axis_a] = i;
      c[axis_b] = j;
      os << i * h << ',' << j * h << ',' << f[grid.index(c)] << '\n';
    }
}

}  // namespace hessianlab
