#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlsal/tensor.hpp"

// Portable weight container:
//   "NLSAL1" | u32 count | count x { u32 name_len | name | 4 x u32 shape | f64[] }
// All integers and doubles little-endian.

namespace nlsal {

class WeightFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

inline constexpr char kWeightMagic[] = "NLSAL1";

void write_weights(std::ostream& out, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_weights(std::istream& in);

void save_weights(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_weights(const std::filesystem::path& path);

/// FNV-1a of the file's bytes as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace nlsal
