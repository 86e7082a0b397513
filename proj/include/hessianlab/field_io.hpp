#pragma once

// HLF1 binary field files.
//
//   offset  size  content
//   0       4     magic "HLF1"
//   4       4     u32 format version (1)
//   8       8     reserved, zero
//   16      16    u32 n, u32 N, u32 kind, u32 reserved
//   32      ...   float64 payload, grid points in row-major axis order
//                 (x_1, y_1, ..., x_n, y_n), y_n fastest
//
// All integers and floats are little-endian. Per point the payload holds
//   kind 0 (scalar):    1 value
//   kind 1 (hermitian): n*n complex entries, row-major, (re, im) pairs
//   kind 2 (eigen):     n values, descending
// The period L is not in the binary; it lives in the JSON sidecar `<path>.json`.

#include "hessianlab/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace hessianlab {

enum class FieldKind : std::uint32_t { Scalar = 0, Hermitian = 1, Eigen = 2 };

inline constexpr std::uint32_t kHlfVersion = 1;

void write_hlf1(std::ostream& os, const ScalarField& f);
void write_hlf1(std::ostream& os, const HermitianField& f);
void write_hlf1(std::ostream& os, const EigenField& f);

struct Hlf1Header {
  std::uint32_t n = 0;
  std::uint32_t N = 0;
  FieldKind kind = FieldKind::Scalar;
};

Hlf1Header read_hlf1_header(std::istream& is);
ScalarField read_hlf1_scalar(std::istream& is, double period);
HermitianField read_hlf1_hermitian(std::istream& is, double period);
EigenField read_hlf1_eigen(std::istream& is, double period);

/// Writes `path` and the sidecar `path.json`.
void save_field(const std::filesystem::path& path, const ScalarField& f);
void save_field(const std::filesystem::path& path, const HermitianField& f);
void save_field(const std::filesystem::path& path, const EigenField& f);

/// Period from the sidecar when present, else `fallback_period`.
Hlf1Header peek_field(const std::filesystem::path& path);
ScalarField load_scalar_field(const std::filesystem::path& path, std::optional<double> fallback_period = {});
HermitianField load_hermitian_field(const std::filesystem::path& path, std::optional<double> fallback_period = {});
EigenField load_eigen_field(const std::filesystem::path& path, std::optional<double> fallback_period = {});

/// CSV slice through the origin: one axis gives columns (coord, value), two axes
/// give (coord_a, coord_b, value). Other coordinates are held at index 0.
void write_csv_slice(std::ostream& os, const ScalarField& f, int axis_a, int axis_b = -1);

}  // namespace hessianlab
