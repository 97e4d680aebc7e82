#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splab {

/// CSV writer with a mandatory header row and fixed 17-significant-digit
/// formatting so identical runs produce identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void row(const std::vector<double>& values);
  void raw_row(const std::string& line);
  const std::string& text() const { return text_; }
  void write(const std::string& path) const;

  static std::string format(double x);

 private:
  size_t n_cols_;
  std::string text_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// FNV-1a 64-bit content digest, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace splab
