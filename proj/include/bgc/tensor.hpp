#pragma once

// Binary tensor interchange format.
//
// Layout (all integers little-endian):
//   bytes 0..3   magic "BGC1"
//   byte  4      dtype code (0 = f32, 1 = f64, 2 = u8)
//   byte  5      rank
//   rank x u64   dimensions
//   payload      row-major elements, little-endian

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bgc/error.hpp"

namespace bgc {

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2 };

inline std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::U8: return 1;
  }
  return 0;
}

inline const char* dtype_name(DType t) {
  switch (t) {
    case DType::F32: return "f32";
    case DType::F64: return "f64";
    case DType::U8: return "u8";
  }
  return "?";
}

class Tensor {
public:
  using Storage = std::variant<std::vector<float>, std::vector<double>,
                               std::vector<std::uint8_t>>;

  Tensor() = default;

  template <typename T>
  Tensor(std::vector<std::uint64_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double> ||
                      std::is_same_v<T, std::uint8_t>,
                  "unsupported element type");
    validate();
  }

  DType dtype() const { return static_cast<DType>(data_.index()); }
  const std::vector<std::uint64_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::uint64_t dim(std::size_t i) const { return shape_.at(i); }

  std::size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, data_);
  }

  template <typename T>
  const std::vector<T>& values() const {
    return std::get<std::vector<T>>(data_);
  }

  /// Element i widened to double (exact for all supported dtypes).
  double at(std::size_t i) const {
    return std::visit([i](const auto& v) { return static_cast<double>(v[i]); }, data_);
  }

  std::vector<double> to_doubles() const {
    return std::visit(
        [](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, data_);
  }

  const Storage& storage() const { return data_; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    if (a.shape_ != b.shape_ || a.data_.index() != b.data_.index()) return false;
    // Bitwise comparison so NaN payloads and signed zeros count as identical.
    return std::visit(
        [&](const auto& va) {
          using V = std::decay_t<decltype(va)>;
          const auto& vb = std::get<V>(b.data_);
          return va.size() == vb.size() &&
                 (va.empty() ||
                  std::memcmp(va.data(), vb.data(),
                              va.size() * sizeof(typename V::value_type)) == 0);
        },
        a.data_);
  }

private:
  void validate() const {
    if (shape_.empty()) throw ShapeError("tensor shape must be non-empty");
    if (shape_.size() > 255) throw ShapeError("tensor rank exceeds 255");
    std::uint64_t n = 1;
    for (auto d : shape_) {
      if (d == 0) throw ShapeError("tensor dimensions must be >= 1");
      n *= d;
    }
    if (n != size())
      throw ShapeError("shape product " + std::to_string(n) +
                       " does not match element count " + std::to_string(size()));
  }

  std::vector<std::uint64_t> shape_;
  Storage data_;
};

namespace detail {

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

template <typename T>
T read_le(const std::uint8_t* p) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline constexpr char kTensorMagic[4] = {'B', 'G', 'C', '1'};

inline std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(6 + 8 * t.rank() + t.size() * dtype_size(t.dtype()));
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) detail::append_le<std::uint64_t>(out, d);
  std::visit(
      [&](const auto& v) {
        for (auto x : v) detail::append_le(out, x);
      },
      t.storage());
  return out;
}

inline Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  const std::size_t n = bytes.size();
  if (n < 4) throw FormatError("truncated magic", n);
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) throw FormatError("bad magic", 0);
  if (n < 6) throw FormatError("truncated header", n);
  const std::uint8_t code = bytes[4];
  if (code > 2) throw FormatError("unknown dtype code " + std::to_string(code), 4);
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[5];
  if (rank == 0) throw FormatError("rank must be >= 1", 5);
  std::size_t off = 6;
  std::vector<std::uint64_t> shape(rank);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    if (off + 8 > n) throw FormatError("truncated dimension list", off);
    shape[i] = detail::read_le<std::uint64_t>(bytes.data() + off);
    if (shape[i] == 0) throw FormatError("zero dimension", off);
    if (count > UINT64_MAX / shape[i]) throw FormatError("dimension overflow", off);
    count *= shape[i];
    off += 8;
  }
  const std::size_t esize = dtype_size(dtype);
  if (count > (n - off) / esize) throw FormatError("truncated payload", n);
  if (n - off != count * esize)
    throw FormatError("trailing bytes after payload", off + count * esize);
  auto read_payload = [&]<typename T>(std::vector<T> v) {
    v.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      v[i] = detail::read_le<T>(bytes.data() + off + i * sizeof(T));
    return Tensor(shape, std::move(v));
  };
  switch (dtype) {
    case DType::F32: return read_payload(std::vector<float>{});
    case DType::F64: return read_payload(std::vector<double>{});
    case DType::U8: return read_payload(std::vector<std::uint8_t>{});
  }
  throw FormatError("unknown dtype", 4);
}

inline void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw InputError("write failed for '" + path.string() + "'");
}

inline Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace bgc
