#pragma once

// Artifact output: locale-independent number formatting, CSV assembly and
// atomic file replacement (write to a temporary sibling, then rename).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrising/errors.hpp"

namespace lrising::io {

/// Shortest round-trip decimal form with '.' as separator; nan/inf spelled out.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

class CsvWriter {
 public:
  /// Leading '#' comment lines carry the run's provenance.
  void comment(const std::string& text) { body_ += "# " + text + "\n"; }

  void header(const std::vector<std::string>& cols) { row(cols); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) body_ += ',';
      body_ += cells[k];
    }
    body_ += '\n';
  }

  const std::string& str() const noexcept { return body_; }

 private:
  std::string body_;
};

/// Writes `content` to `path` so that readers see either the old file or
/// the complete new one, never a partial write.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace lrising::io
