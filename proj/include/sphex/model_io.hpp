#pragma once

// Model files. Fixed little-endian layout, independent of host endianness:
//
//   offset        size     field
//   0             4        magic "SHEX"
//   4             4        format version, u32 (currently 1)
//   8             8        d, u64
//   16            8        q, u64
//   24            8        s, u64
//   32            8*s*d    sample coordinates, row-major binary64
//   32 + 8*s*d    8*s      weights, binary64
//   end - 8       8        FNV-1a 64 checksum of bytes [4, end-8)
//
// Doubles are stored as raw IEEE-754 bit patterns, so save/load round-trips
// are exact to the bit, including signed zeros and subnormals.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "sphex/common.hpp"
#include "sphex/regression.hpp"

namespace sphex {

namespace detail {

inline constexpr std::uint32_t model_version = 1;
inline constexpr char model_magic[4] = {'S', 'H', 'E', 'X'};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
inline double get_f64(const std::uint8_t* p) {
  return std::bit_cast<double>(get_u64(p));
}

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const ExpansionModel& m) {
  const std::size_t s = m.points.size();
  const unsigned d = m.params.d;
  std::vector<std::uint8_t> out;
  out.reserve(40 + 8 * s * (d + 1));
  out.insert(out.end(), detail::model_magic, detail::model_magic + 4);
  detail::put_u32(out, detail::model_version);
  detail::put_u64(out, d);
  detail::put_u64(out, m.params.q);
  detail::put_u64(out, s);
  for (double c : m.points.flat()) detail::put_f64(out, c);
  for (std::size_t j = 0; j < s; ++j) detail::put_f64(out, m.weights(j));
  detail::put_u64(out,
                  detail::fnv1a64({out.data() + 4, out.size() - 4}));
  return out;
}

inline ExpansionModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 40)
    throw format_error("model: " + std::to_string(bytes.size()) +
                       " bytes is shorter than any valid model file");
  if (std::memcmp(bytes.data(), detail::model_magic, 4) != 0)
    throw format_error("model: bad magic, not a model file");
  const std::uint32_t version = detail::get_u32(bytes.data() + 4);
  if (version != detail::model_version)
    throw format_error("model: unsupported format version " +
                       std::to_string(version));
  const std::uint64_t d = detail::get_u64(bytes.data() + 8);
  const std::uint64_t q = detail::get_u64(bytes.data() + 16);
  const std::uint64_t s = detail::get_u64(bytes.data() + 24);
  if (d < 2 || d > 1u << 20)
    throw format_error("model: implausible d = " + std::to_string(d));
  if (q > max_degree)
    throw format_error("model: degree " + std::to_string(q) + " exceeds cap " +
                       std::to_string(max_degree));
  if (s < 1 || s > (std::uint64_t(1) << 32))
    throw format_error("model: implausible s = " + std::to_string(s));
  const std::uint64_t want = 32 + 8 * s * (d + 1) + 8;
  if (bytes.size() != want)
    throw format_error("model: expected " + std::to_string(want) +
                       " bytes for d=" + std::to_string(d) + " q=" +
                       std::to_string(q) + " s=" + std::to_string(s) +
                       ", got " + std::to_string(bytes.size()));

  const std::uint64_t stored = detail::get_u64(bytes.data() + bytes.size() - 8);
  const std::uint64_t computed =
      detail::fnv1a64(bytes.subspan(4, bytes.size() - 12));
  if (stored != computed) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "model: checksum mismatch over bytes [4, %zu): stored "
                  "0x%016llx, computed 0x%016llx",
                  bytes.size() - 8, (unsigned long long)stored,
                  (unsigned long long)computed);
    throw format_error(msg);
  }

  std::vector<double> coords(s * d);
  const std::uint8_t* p = bytes.data() + 32;
  for (double& c : coords) {
    c = detail::get_f64(p);
    p += 8;
  }
  Eigen::VectorXd weights(s);
  for (std::uint64_t j = 0; j < s; ++j) {
    weights(j) = detail::get_f64(p);
    p += 8;
  }
  for (double c : coords)
    if (!std::isfinite(c)) throw format_error("model: non-finite coordinate");
  for (std::uint64_t j = 0; j < s; ++j)
    if (!std::isfinite(weights(j)))
      throw format_error("model: non-finite weight");

  ProblemParams params(static_cast<unsigned>(d), static_cast<unsigned>(q));
  SampleSet pts = SampleSet::adopt(unsigned(d), std::move(coords));
  // loose on-sphere sanity; stored bits are never altered
  for (std::uint64_t j = 0; j < s; ++j) {
    double ss = 0.0;
    for (double c : pts[j]) ss += c * c;
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-6)
      throw format_error("model: point " + std::to_string(j) +
                         " is not on the unit sphere");
  }
  return ExpansionModel{std::move(params), std::move(pts), std::move(weights)};
}

inline void save_model(const ExpansionModel& m, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_model(m);
  atomic_write_file(path, bytes.data(), bytes.size());
}

inline ExpansionModel load_model(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  return deserialize_model(bytes);
}

}  // namespace sphex
