#include "rieszlab/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace rieszlab::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json header_for(const Grid& g, int components, const std::string& dtype, const std::string& payload) {
  json j;
  j["version"] = 1;
  j["dim"] = g.dim();
  std::vector<std::size_t> shape;
  std::vector<double> origin;
  for (int a = 0; a < g.dim(); ++a) {
    shape.push_back(g.extent(a));
    origin.push_back(g.origin()[a]);
  }
  j["shape"] = shape;
  j["origin"] = origin;
  j["spacing"] = g.spacing();
  j["components"] = components;
  j["dtype"] = dtype;
  j["payload"] = payload;
  return j;
}

std::string payload_name(const fs::path& header) { return header.stem().string() + ".bin"; }

void write_header(const fs::path& header, const json& j) {
  if (header.has_parent_path()) fs::create_directories(header.parent_path());
  std::ofstream os(header);
  if (!os) throw InputError("cannot write " + header.string());
  os << j.dump(2) << '\n';
}

void write_f64(const fs::path& path, std::span<const double> values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
  }
}

struct Loaded {
  json header;
  Grid grid;
  int components = 1;
  fs::path payload;
};

Loaded load_header(const fs::path& header) {
  std::ifstream is(header);
  if (!is) throw InputError("cannot open field header " + header.string());
  Loaded out;
  try {
    is >> out.header;
    const auto& j = out.header;
    if (j.at("version").get<int>() != 1) throw InputError("unsupported field version in " + header.string());
    const int dim = j.at("dim").get<int>();
    auto shape = j.at("shape").get<std::vector<std::size_t>>();
    auto origin = j.at("origin").get<std::vector<double>>();
    out.grid = Grid(dim, shape, origin, j.at("spacing").get<double>());
    out.components = j.value("components", 1);
    out.payload = header.parent_path() / j.at("payload").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError("malformed field header " + header.string() + ": " + e.what());
  }
  return out;
}

std::vector<double> read_f64(const fs::path& path, std::size_t count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open payload " + path.string());
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    char buf[8];
    if (!is.read(buf, 8)) throw InputError("payload too short: " + path.string());
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

void expect_dtype(const Loaded& l, const std::string& dtype, const fs::path& header) {
  if (l.header.value("dtype", std::string{}) != dtype)
    throw InputError("expected dtype " + dtype + " in " + header.string());
}

}  // namespace

void write_field(const fs::path& header, const ScalarField& f) {
  write_header(header, header_for(f.grid(), 1, "f64-le", payload_name(header)));
  write_f64(header.parent_path() / payload_name(header), f.values());
}

void write_field(const fs::path& header, const VectorField& f) {
  write_header(header, header_for(f.grid(), f.components(), "f64-le", payload_name(header)));
  write_f64(header.parent_path() / payload_name(header), f.values());
}

void write_mask(const fs::path& header, const RegionMask& m) {
  write_header(header, header_for(m.grid(), 1, "u8", payload_name(header)));
  std::ofstream os(header.parent_path() / payload_name(header), std::ios::binary);
  if (!os) throw InputError("cannot write mask payload for " + header.string());
  os.write(reinterpret_cast<const char*>(m.flags().data()), static_cast<std::streamsize>(m.flags().size()));
}

ScalarField read_scalar_field(const fs::path& header) {
  Loaded l = load_header(header);
  expect_dtype(l, "f64-le", header);
  if (l.components != 1) throw InputError("expected a scalar field in " + header.string());
  return ScalarField(l.grid, read_f64(l.payload, l.grid.size()));
}

VectorField read_vector_field(const fs::path& header) {
  Loaded l = load_header(header);
  expect_dtype(l, "f64-le", header);
  return VectorField(l.grid, l.components, read_f64(l.payload, l.grid.size() * static_cast<std::size_t>(l.components)));
}

RegionMask read_mask(const fs::path& header) {
  Loaded l = load_header(header);
  expect_dtype(l, "u8", header);
  std::ifstream is(l.payload, std::ios::binary);
  if (!is) throw InputError("cannot open payload " + l.payload.string());
  std::vector<std::uint8_t> flags(l.grid.size());
  if (!is.read(reinterpret_cast<char*>(flags.data()), static_cast<std::streamsize>(flags.size())))
    throw InputError("payload too short: " + l.payload.string());
  return RegionMask(l.grid, std::move(flags));
}

Grid read_grid(const fs::path& header) { return load_header(header).grid; }

}  // namespace rieszlab::io
