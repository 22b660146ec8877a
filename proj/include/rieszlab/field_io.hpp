#pragma once

#include <filesystem>
#include <string>

#include "rieszlab/grid.hpp"

namespace rieszlab::io {

/// Header + raw payload pair.
///
/// The header is a JSON document:
///   {"version":1, "dim":2, "shape":[..], "origin":[..], "spacing":h,
///    "components":m, "dtype":"f64-le"|"u8", "payload":"name.bin"}
/// The payload holds row-major values with axis 0 slowest and the component
/// index fastest. Masks use dtype "u8" with values in {0, 1}.
///
/// Writers place the payload next to the header, named after the header stem.

void write_field(const std::filesystem::path& header, const ScalarField& f);
void write_field(const std::filesystem::path& header, const VectorField& f);
void write_mask(const std::filesystem::path& header, const RegionMask& m);

ScalarField read_scalar_field(const std::filesystem::path& header);
VectorField read_vector_field(const std::filesystem::path& header);
RegionMask read_mask(const std::filesystem::path& header);

/// Grid described by a header, without loading the payload.
Grid read_grid(const std::filesystem::path& header);

}  // namespace rieszlab::io
