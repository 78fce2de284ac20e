#pragma once

#include <string>
#include <vector>

namespace klab {

// Deterministic CSV writer: doubles are printed with %.17g so equal inputs
// produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& values);

  static std::string format(double v);

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace klab
