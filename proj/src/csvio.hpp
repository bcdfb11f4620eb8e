#pragma once

// CSV emission with a fixed column set shared by every subcommand:
//   experiment,seed,n,k,steps,param_name,param_value,trials,estimate,stderr,extra
// Doubles are rendered with %.17g in the C locale so identical runs produce
// byte-identical files.

#include <cstdint>
#include <string>
#include <vector>

namespace lab {

struct CsvRow {
  std::string experiment;
  std::uint64_t seed = 0;
  long long n = 0;
  long long k = 0;
  long long steps = 0;
  std::string param_name;
  double param_value = 0.0;
  long long trials = 0;
  double estimate = 0.0;
  double std_err = 0.0;
  std::string extra;  // semicolon-separated key=value pairs, no commas
};

// %.17g rendering of one double.
std::string format_double(double v);

std::string csv_header();
std::string render_row(const CsvRow& row);
std::string render_table(const std::vector<CsvRow>& rows);

// Writes text to path, or to stdout when path is empty or "-".
void write_output(const std::string& path, const std::string& text);

}  // namespace lab
