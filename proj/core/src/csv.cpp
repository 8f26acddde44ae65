#include "rotorsim/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace rotorsim {

std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::string& comment,
                     const std::vector<std::string>& columns)
    : n_columns_(columns.size()) {
  std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw std::runtime_error("cannot open output file: " + path.string());
  }
  out_ << "# " << comment << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
  }
  out_ << "\n";
}

void CsvWriter::add_row(std::span<const double> values) {
  if (values.size() != n_columns_) {
    throw std::invalid_argument("CsvWriter: row width mismatch");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    out_ << format_g12(values[i]) << (i + 1 < values.size() ? "," : "");
  }
  out_ << "\n";
}

void CsvWriter::add_row(std::initializer_list<double> values) {
  add_row(std::span<const double>(values.begin(), values.size()));
}

}  // namespace rotorsim
