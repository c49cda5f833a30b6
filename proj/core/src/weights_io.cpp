#include "nlsal/weights_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <fmt/format.h>

#include "nlsal/random.hpp"

namespace nlsal {

namespace {

constexpr std::size_t kMagicLen = sizeof(kWeightMagic) - 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw WeightFormatError(fmt::format("weight file truncated while reading {}", what));
  }
  return to_little(v);
}

}  // namespace

void write_weights(std::ostream& out, std::span<const NamedTensor> tensors) {
  out.write(kWeightMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& s = t.shape();
    for (int d : {s.n, s.h, s.w, s.c}) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) {
      v = to_little(v);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!out) throw WeightFormatError("failed writing weight stream");
}

std::vector<NamedTensor> read_weights(std::istream& in) {
  std::array<char, kMagicLen> magic{};
  if (!in.read(magic.data(), kMagicLen) || std::memcmp(magic.data(), kWeightMagic, kMagicLen) != 0) {
    throw WeightFormatError("not an NLSAL1 weight file (bad magic)");
  }
  const std::uint32_t count = get_u32(in, "tensor count");
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(in, "name length");
    if (len > (1u << 16)) throw WeightFormatError(fmt::format("implausible name length {}", len));
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw WeightFormatError("weight file truncated in tensor name");
    Shape s;
    s.n = static_cast<int>(get_u32(in, "shape"));
    s.h = static_cast<int>(get_u32(in, "shape"));
    s.w = static_cast<int>(get_u32(in, "shape"));
    s.c = static_cast<int>(get_u32(in, "shape"));
    std::vector<double> data(s.numel());
    for (double& v : data) {
      if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw WeightFormatError(fmt::format("weight file truncated in tensor '{}'", name));
      }
      v = to_little(v);
    }
    out.push_back({std::move(name), Tensor(s, std::move(data))});
  }
  return out;
}

void save_weights(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightFormatError(fmt::format("cannot open '{}' for writing", path.string()));
  write_weights(out, tensors);
}

std::vector<NamedTensor> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFormatError(fmt::format("cannot open weight file '{}'", path.string()));
  return read_weights(in);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFormatError(fmt::format("cannot open '{}'", path.string()));
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return fmt::format("{:016x}", fnv1a64(bytes));
}

}  // namespace nlsal
