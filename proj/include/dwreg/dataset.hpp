#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwreg {

// Raised for malformed input files or datasets that fail validation. The
// command line maps this class of failure to its own exit code.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ColumnKind { continuous, dummy };

// Column-major table of covariates plus an integer response.
struct Dataset {
  std::vector<std::int64_t> y;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<ColumnKind> kinds;

  std::size_t n() const { return y.size(); }
  std::size_t n_covariates() const { return names.size(); }

  // Index of a named column; throws DataError when absent.
  std::size_t find(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
  ColumnKind kind(const std::string& name) const;
};

struct CsvOptions {
  std::string response = "y";
  // Prediction data may omit the response column; with this flag cleared a
  // missing column yields an all-zero response instead of an error.
  bool require_response = true;
  // Columns forced to a kind regardless of their values; anything else is
  // detected as dummy when every entry is 0 or 1.
  std::vector<std::string> force_continuous;
  std::vector<std::string> force_dummy;
};

// Reads a comma-separated file with a header row. Lines starting with '#'
// are skipped (our own writers emit such metadata lines). Empty or
// non-numeric cells and negative or fractional responses are reported with
// row and column positions.
Dataset read_csv(std::istream& in, const CsvOptions& opts = {});
Dataset read_csv_file(const std::string& path, const CsvOptions& opts = {});

void write_csv(std::ostream& out, const Dataset& data,
               const std::vector<std::string>& comment_lines = {});

}  // namespace dwreg
