#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotorsim {

// Fixed 12-significant-digit formatting shared by every emitted number so
// that identical runs produce byte-identical files.
std::string format_g12(double v);

// 64-bit FNV-1a, hex-encoded; tags outputs with their config.
std::string fnv1a_hex(std::string_view bytes);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& comment,
            const std::vector<std::string>& columns);

  void add_row(std::span<const double> values);
  void add_row(std::initializer_list<double> values);

 private:
  std::ofstream out_;
  std::size_t n_columns_;
};

}  // namespace rotorsim
