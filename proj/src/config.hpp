#pragma once

// Flat key=value configuration with file loading and CLI overrides.
// Files: one `key = value` pair per line, `#` starts a comment, blank lines
// ignored.  Later assignments win, and overrides applied after a file load
// win over the file.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lab {

class Config {
 public:
  static Config from_file(const std::string& path);
  // Parses text in the same format as from_file (used by tests).
  static Config from_text(const std::string& text, const std::string& origin = "<text>");

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void merge(const Config& overrides);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  // Comma-separated list of doubles.
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::optional<std::string> lookup(const std::string& key) const;

  std::map<std::string, std::string> kv_;
};

}  // namespace lab
