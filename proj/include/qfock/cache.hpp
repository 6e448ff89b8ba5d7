#pragma once

// Versioned binary container for Fock levels and exported operators.
//
// Record layout (host byte order, little-endian on every supported target):
//   magic "QFCK" | u32 format_version | u32 kind | f64 q | u64 d | u64 n
//   | u64 payload_bytes | u64 checksum (FNV-1a 64 of the payload) | payload
// Level payload: row-major gram, then row-major chol, both f64.
// Operator payload: u64 domain kind, u64 codomain kind, u64 block count, then
// per block u64 out, u64 in, u64 rows, u64 cols and the row-major entries.

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>
#include <vector>

#include "qfock/errors.hpp"
#include "qfock/fock.hpp"
#include "qfock/operators.hpp"
#include "qfock/spectral.hpp"

namespace qfock {

inline constexpr std::uint32_t kCacheFormatVersion = 1;
inline constexpr std::array<char, 4> kCacheMagic = {'Q', 'F', 'C', 'K'};

enum class RecordKind : std::uint32_t { level = 1, op = 2 };

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t q_bits(double q) { return std::bit_cast<std::uint64_t>(q); }

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_matrix(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(m(r, c));
  }
  void append(const std::vector<std::uint8_t>& other) {
    bytes_.insert(bytes_.end(), other.begin(), other.end());
  }
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, std::string what)
      : data_(data), size_(size), what_(std::move(what)) {}

  template <class T>
  T get() {
    if (size_ - pos_ < sizeof(T)) throw CacheCorrupt(what_ + ": truncated record");
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Matrix get_matrix(std::size_t rows, std::size_t cols) {
    if ((size_ - pos_) / sizeof(double) / std::max<std::size_t>(cols, 1) < rows) {
      throw CacheCorrupt(what_ + ": truncated matrix");
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = get<double>();
    return m;
  }
  std::size_t remaining() const noexcept { return size_ - pos_; }
  const std::uint8_t* cursor() const noexcept { return data_ + pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

struct RecordHeader {
  RecordKind kind = RecordKind::level;
  double q = 0.0;
  std::uint64_t d = 0;
  std::uint64_t n = 0;
};

inline std::vector<std::uint8_t> encode_record(const RecordHeader& h,
                                               const std::vector<std::uint8_t>& payload) {
  ByteWriter w;
  for (char c : kCacheMagic) w.put<char>(c);
  w.put<std::uint32_t>(kCacheFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.kind));
  w.put<double>(h.q);
  w.put<std::uint64_t>(h.d);
  w.put<std::uint64_t>(h.n);
  w.put<std::uint64_t>(payload.size());
  w.put<std::uint64_t>(fnv1a64(payload.data(), payload.size()));
  w.append(payload);
  return w.bytes();
}

/// Validates magic, version and checksum; returns the header and leaves the
/// reader positioned at the payload.
inline RecordHeader decode_header(ByteReader& r, const std::string& what) {
  std::array<char, 4> magic{};
  for (auto& c : magic) c = r.get<char>();
  if (magic != kCacheMagic) throw CacheCorrupt(what + ": bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCacheFormatVersion) {
    throw CacheCorrupt(what + ": unsupported format version " + std::to_string(version));
  }
  RecordHeader h;
  h.kind = static_cast<RecordKind>(r.get<std::uint32_t>());
  h.q = r.get<double>();
  h.d = r.get<std::uint64_t>();
  h.n = r.get<std::uint64_t>();
  const auto payload_bytes = r.get<std::uint64_t>();
  const auto checksum = r.get<std::uint64_t>();
  if (payload_bytes != r.remaining()) throw CacheCorrupt(what + ": payload size mismatch");
  if (fnv1a64(r.cursor(), r.remaining()) != checksum) throw CacheCorrupt(what + ": checksum mismatch");
  return h;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Writes to a sibling temporary file, then renames over the target so readers
/// never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::uint64_t counter = 0;
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(stamp) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidInput("cannot rename into " + path.string());
  }
}

inline void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
  atomic_write(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// ---------------------------------------------------------------------------
// Levels

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::filesystem::path level_cache_path(const std::filesystem::path& dir, double q,
                                              std::size_t d, std::size_t n) {
  return dir / ("level_q" + hex64(q_bits(q)) + "_d" + std::to_string(d) + "_n" +
                std::to_string(n) + ".qfc");
}

inline std::vector<std::uint8_t> encode_level(double q, std::size_t d, const LevelSpace& level) {
  detail::ByteWriter payload;
  payload.put_matrix(level.gram);
  payload.put_matrix(level.chol);
  return detail::encode_record({RecordKind::level, q, d, level.level}, payload.bytes());
}

inline LevelSpace decode_level(const std::vector<std::uint8_t>& bytes, double q, std::size_t d,
                               std::size_t n, const std::string& what = "level record") {
  detail::ByteReader r(bytes.data(), bytes.size(), what);
  const auto h = detail::decode_header(r, what);
  if (h.kind != RecordKind::level) throw CacheCorrupt(what + ": not a level record");
  if (q_bits(h.q) != q_bits(q) || h.d != d || h.n != n) {
    throw CacheCorrupt(what + ": parameters do not match the requested level");
  }
  const auto dim = ipow(d, n);
  if (r.remaining() != 2 * dim * dim * sizeof(double)) throw CacheCorrupt(what + ": wrong size");
  LevelSpace ls;
  ls.level = n;
  ls.dim = dim;
  ls.gram = r.get_matrix(dim, dim);
  ls.chol = r.get_matrix(dim, dim);
  return ls;
}

inline void write_level(const std::filesystem::path& path, double q, std::size_t d,
                        const LevelSpace& level) {
  atomic_write(path, encode_level(q, d, level));
}

inline LevelSpace read_level(const std::filesystem::path& path, double q, std::size_t d,
                             std::size_t n) {
  return decode_level(detail::read_file(path), q, d, n, path.string());
}

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t corrupt = 0;          ///< records rejected and rebuilt
  std::size_t levels_built = 0;
  double assembly_seconds = 0.0;    ///< time spent assembling Gram matrices
};

/// Directory of level records. Corrupt records are rebuilt and overwritten.
class LevelCache {
 public:
  explicit LevelCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const CacheStats& stats() const noexcept { return stats_; }
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

  TruncatedFock load(double q, std::size_t d, std::size_t max_level, const FockOptions& opt = {}) {
    validate_q(q);
    if (d == 0) throw InvalidInput("d must be at least 1");
    if (max_level == 0) throw InvalidInput("truncation degree N must be at least 1");
    detail::check_level_budget(max_level, d, opt.max_level_dim);
    std::vector<LevelSpace> levels;
    for (std::size_t n = 0; n <= max_level; ++n) {
      const auto path = level_cache_path(dir_, q, d, n);
      if (std::filesystem::exists(path)) {
        try {
          levels.push_back(read_level(path, q, d, n));
          ++stats_.hits;
          continue;
        } catch (const CacheCorrupt& e) {
          ++stats_.corrupt;
          diagnostics_.push_back(e.what());
        }
      }
      ++stats_.misses;
      const auto start = std::chrono::steady_clock::now();
      Matrix gram = n == 0 ? Matrix::Identity(1, 1) : symmetrizer_next(levels.back().gram, n - 1, d, q);
      levels.push_back(make_level(n, std::move(gram)));
      stats_.assembly_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ++stats_.levels_built;
      write_level(path, q, d, levels.back());
    }
    return TruncatedFock::from_levels(q, d, std::move(levels));
  }

  SpaceFactory factory() {
    return [this](double q, std::size_t d, std::size_t N) { return load(q, d, N); };
  }

 private:
  std::filesystem::path dir_;
  CacheStats stats_;
  std::vector<std::string> diagnostics_;
};

// ---------------------------------------------------------------------------
// Operators

inline std::vector<std::uint8_t> encode_operator(const FockOperator& op, double q) {
  detail::ByteWriter payload;
  payload.put<std::uint64_t>(static_cast<std::uint64_t>(op.domain().kind));
  payload.put<std::uint64_t>(static_cast<std::uint64_t>(op.codomain().kind));
  payload.put<std::uint64_t>(op.blocks().size());
  for (const auto& [key, m] : op.blocks()) {
    payload.put<std::uint64_t>(key.first);
    payload.put<std::uint64_t>(key.second);
    payload.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    payload.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    payload.put_matrix(m);
  }
  return detail::encode_record({RecordKind::op, q, op.domain().d, op.domain().max_level},
                               payload.bytes());
}

struct OperatorRecord {
  double q = 0.0;
  FockOperator op;
};

inline OperatorRecord decode_operator(const std::vector<std::uint8_t>& bytes,
                                      const std::string& what = "operator record") {
  detail::ByteReader r(bytes.data(), bytes.size(), what);
  const auto h = detail::decode_header(r, what);
  if (h.kind != RecordKind::op) throw CacheCorrupt(what + ": not an operator record");
  const auto kind_of = [&](std::uint64_t k) {
    if (k > static_cast<std::uint64_t>(SpaceKind::h_tensor_fock)) throw CacheCorrupt(what + ": bad space kind");
    return static_cast<SpaceKind>(k);
  };
  const SpaceShape domain{kind_of(r.get<std::uint64_t>()), h.d, h.n};
  const SpaceShape codomain{kind_of(r.get<std::uint64_t>()), h.d, h.n};
  OperatorRecord rec{h.q, FockOperator(domain, codomain)};
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t b = 0; b < count; ++b) {
    const auto out = r.get<std::uint64_t>();
    const auto in = r.get<std::uint64_t>();
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    try {
      rec.op.set_block(out, in, r.get_matrix(rows, cols));
    } catch (const InvalidInput& e) {
      throw CacheCorrupt(what + ": " + e.what());
    }
  }
  if (r.remaining() != 0) throw CacheCorrupt(what + ": trailing bytes");
  return rec;
}

inline void write_operator(const std::filesystem::path& path, const FockOperator& op, double q) {
  atomic_write(path, encode_operator(op, q));
}

inline OperatorRecord read_operator(const std::filesystem::path& path) {
  return decode_operator(detail::read_file(path), path.string());
}

}  // namespace qfock
