#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gfno/tensor.hpp"

// GFT binary layout:
//   "GFT1" | u8 dtype (0 real64, 1 complex128) | u8 rank | rank x u64 LE extents |
//   payload: little-endian float64, row-major, complex interleaved (re, im).

namespace gfno {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'T', '1'};

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  v = to_little(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return to_little(v);
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(6 + 8 * t.rank() + 8 * t.raw().size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  if (t.rank() > 255) throw ShapeError("GFT supports rank <= 255, got " + std::to_string(t.rank()));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto e : t.shape()) put<std::uint64_t>(out, e);
  for (double v : t.raw()) put<double>(out, v);
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  using Kind = TensorIoError::Kind;
  if (bytes.size() < 6) throw TensorIoError(Kind::truncated, "GFT header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw TensorIoError(Kind::bad_magic, "bad magic: not a GFT1 file");
  const std::uint8_t code = bytes[4];
  if (code > 1) throw TensorIoError(Kind::bad_dtype, "unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[5];
  if (bytes.size() < 6 + 8 * rank) throw TensorIoError(Kind::truncated, "GFT extents truncated");

  Shape shape(rank);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const auto e = get<std::uint64_t>(bytes, 6 + 8 * i);
    if (e == 0) throw TensorIoError(Kind::extent_overflow, "zero extent on axis " + std::to_string(i));
    if (__builtin_mul_overflow(count, e, &count)) {
      throw TensorIoError(Kind::extent_overflow, "extent product overflows 64 bits");
    }
    shape[i] = e;
  }
  std::uint64_t doubles = 0;
  std::uint64_t payload = 0;
  const std::uint64_t per_entry = dtype == DType::complex128 ? 2 : 1;
  if (__builtin_mul_overflow(count, per_entry, &doubles) ||
      __builtin_mul_overflow(doubles, std::uint64_t{8}, &payload)) {
    throw TensorIoError(Kind::extent_overflow, "payload size overflows 64 bits");
  }
  const std::size_t header = 6 + 8 * rank;
  if (bytes.size() - header < payload) {
    throw TensorIoError(Kind::truncated, "GFT payload truncated: expected " + std::to_string(payload) +
                                             " bytes, found " + std::to_string(bytes.size() - header));
  }
  Tensor t(shape, dtype);
  auto raw = t.raw();
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = get<double>(bytes, header + 8 * i);
  return t;
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw TensorIoError(TensorIoError::Kind::io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw TensorIoError(TensorIoError::Kind::io, "write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TensorIoError(TensorIoError::Kind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace gfno
