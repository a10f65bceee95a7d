#pragma once

#include <filesystem>
#include <iosfwd>

#include "enslab/testbed/mlp.hpp"

namespace enslab::testbed {

// Flat little-endian checkpoint:
//   bytes 0..7   magic "ENSMLP01"
//   u64          layer count L
//   u64 x (L+1)  widths: input, hidden..., output
//   per layer    weight (out x in, row-major f64), then bias (out f64)

void save_mlp(std::ostream& out, const MlpParams& net);
MlpParams load_mlp(std::istream& in);

void save_mlp(const std::filesystem::path& path, const MlpParams& net);
MlpParams load_mlp(const std::filesystem::path& path);

}  // namespace enslab::testbed
