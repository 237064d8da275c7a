#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace speclab::io {

/// Scientific notation with 13 significant digits and '.' decimal separator,
/// locale-independent.
std::string fmt(double v);
std::string fmt_int(long long v);

/// RFC-4180-style writer: CRLF rows, one header row, plain fields (the values
/// here never need quoting). Bodies contain no timestamps, so identical runs
/// produce identical bytes.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void row(const std::vector<std::string>& fields);

  private:
    std::ostream& out_;
};

/// Minimal reader for report aggregation (no quoting support needed for our
/// own files).
std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace speclab::io
