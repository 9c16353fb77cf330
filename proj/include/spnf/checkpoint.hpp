#pragma once

#include <string>
#include <vector>

#include "spnf/tensor.hpp"

namespace spnf::nn {

/// Checkpoint container: magic "SPNF", u32 format version, then repeated
/// records of (name length u32, name bytes, rank u32, dims u32 x rank,
/// payload as little-endian 64-bit floats). Byte-exact round trip.
struct TensorRecord {
    std::string name;
    Shape shape;
    std::vector<double> data;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_checkpoint(const std::string& path);

}  // namespace spnf::nn
