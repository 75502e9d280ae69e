#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphex {

// Numerical breakdown past input validation (eigensolver failure and the like).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem-level trouble: missing files, unwritable paths, short reads.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally bad data: malformed model files, bad point tables, bad CSV.
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cosines of angles between unit vectors can land slightly outside [-1, 1]
// through rounding. Anything beyond the slack means the inputs were not unit
// vectors in the first place, and is reported rather than hidden.
inline double clamp_cosine(double t) {
  constexpr double slack = 1e-9;
  if (!(t >= -1.0 - slack && t <= 1.0 + slack))
    throw std::domain_error("clamp_cosine: " + std::to_string(t) +
                            " is outside [-1-1e-9, 1+1e-9]");
  if (t > 1.0) return 1.0;
  if (t < -1.0) return -1.0;
  return t;
}

// Shortest decimal form that round-trips a binary64 exactly.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("read failure on " + path);
  return bytes;
}

// Writes via a sibling temp file and renames into place, so a crash or a full
// disk never leaves a half-written file under the requested name.
inline void atomic_write_file(const std::string& path, const void* data,
                              std::size_t size) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + tmp + " for writing");
    out.write(static_cast<const char*>(data),
              static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw io_error("write failure on " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw io_error("cannot rename " + tmp + " to " + path);
  }
}

inline void atomic_write_file(const std::string& path, const std::string& text) {
  atomic_write_file(path, text.data(), text.size());
}

}  // namespace sphex
