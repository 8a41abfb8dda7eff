#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "courtesy/scenario.hpp"

namespace courtesy {

/// Shortest round-trippable decimal form, stable across runs.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(std::move(header)) {
    for (std::size_t i = 0; i < cols_.size(); ++i) {
      if (i) body_ += ',';
      body_ += cols_[i];
    }
    body_ += '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i];
    }
    body_ += '\n';
  }

  const std::string& str() const { return body_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body_;
  }

 private:
  std::vector<std::string> cols_;
  std::string body_;
};

}  // namespace courtesy
