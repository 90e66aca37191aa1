#include "cnslab/field_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cnslab/error.hpp"

namespace cns {
namespace {

constexpr std::array<char, 4> kMagic = {'C', 'N', 'S', 'F'};

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFFu);
  os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xFFu);
  os.write(b.data(), 8);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) throw InvalidArgument("CNSF: truncated header");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

double get_f64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw InvalidArgument("CNSF: truncated payload");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

struct Header {
  std::uint32_t nx;
  std::uint32_t ny;
};

Header read_header(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kMagic) throw InvalidArgument("CNSF: bad magic bytes");
  const auto version = get_u32(is);
  if (version != kCnsfVersion) {
    throw InvalidArgument("CNSF: unsupported version " + std::to_string(version));
  }
  Header h{get_u32(is), get_u32(is)};
  if (h.nx != h.ny) {
    throw InvalidArgument("CNSF: only square grids are supported (nx=" + std::to_string(h.nx) +
                          ", ny=" + std::to_string(h.ny) + ")");
  }
  return h;
}

ScalarField read_payload(std::istream& is, const GridPtr& grid) {
  std::vector<double> vals(grid->size());
  for (double& v : vals) v = get_f64(is);
  return ScalarField(grid, std::move(vals));
}

}  // namespace

void write_cnsf(std::ostream& os, const ScalarField& f) {
  os.write(kMagic.data(), 4);
  put_u32(os, kCnsfVersion);
  const auto n = static_cast<std::uint32_t>(f.grid().n());
  put_u32(os, n);
  put_u32(os, n);
  for (double v : f.values()) put_f64(os, v);
  if (!os) throw Error("CNSF: write failed");
}

void write_cnsf(const std::filesystem::path& path, const ScalarField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("CNSF: cannot open " + path.string() + " for writing");
  write_cnsf(os, f);
}

ScalarField read_cnsf(std::istream& is, const GridPtr& grid) {
  const auto h = read_header(is);
  if (h.nx != grid->n()) {
    throw InvalidArgument("CNSF: snapshot is " + std::to_string(h.nx) + "^2 but grid is " +
                          std::to_string(grid->n()) + "^2");
  }
  return read_payload(is, grid);
}

ScalarField read_cnsf(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("CNSF: cannot open " + path.string());
  const auto h = read_header(is);
  return read_payload(is, TorusGrid::create(h.nx));
}

ScalarField read_cnsf(const std::filesystem::path& path, const GridPtr& grid) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("CNSF: cannot open " + path.string());
  return read_cnsf(is, grid);
}

}  // namespace cns
