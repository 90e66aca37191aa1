#pragma once

#include <filesystem>
#include <iosfwd>

#include "cnslab/field.hpp"

namespace cns {

/// Binary snapshot of one scalar field:
///   "CNSF" | u32 version = 1 | u32 nx | u32 ny | nx*ny f64, row-major,
/// all integers and floats little-endian.
inline constexpr std::uint32_t kCnsfVersion = 1;

void write_cnsf(std::ostream& os, const ScalarField& f);
void write_cnsf(const std::filesystem::path& path, const ScalarField& f);

/// Reads a snapshot onto `grid` (sizes must match).
ScalarField read_cnsf(std::istream& is, const GridPtr& grid);
/// Reads a snapshot and creates a grid for it. Only square grids are supported.
ScalarField read_cnsf(const std::filesystem::path& path);
ScalarField read_cnsf(const std::filesystem::path& path, const GridPtr& grid);

}  // namespace cns
