#include "csvio.hpp"

#include <cstdio>
#include <fstream>

#include "errors.hpp"

namespace lab {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_header() {
  return "experiment,seed,n,k,steps,param_name,param_value,trials,estimate,stderr,extra";
}

std::string render_row(const CsvRow& row) {
  std::string out;
  out += row.experiment;
  out += ',';
  out += std::to_string(row.seed);
  out += ',';
  out += std::to_string(row.n);
  out += ',';
  out += std::to_string(row.k);
  out += ',';
  out += std::to_string(row.steps);
  out += ',';
  out += row.param_name;
  out += ',';
  out += format_double(row.param_value);
  out += ',';
  out += std::to_string(row.trials);
  out += ',';
  out += format_double(row.estimate);
  out += ',';
  out += format_double(row.std_err);
  out += ',';
  out += row.extra;
  return out;
}

std::string render_table(const std::vector<CsvRow>& rows) {
  std::string out = csv_header();
  out += '\n';
  for (const auto& row : rows) {
    out += render_row(row);
    out += '\n';
  }
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw config_error("failed writing output file '" + path + "'");
}

}  // namespace lab
