#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bdlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value text with [section] headers. Keys before the first header
// belong to the unnamed section. '#' starts a comment; blank lines are
// ignored. to_text() emits a canonical form that parses back to an equal
// Config.
class Config {
 public:
  using Section = std::map<std::string, std::string>;

  static Config parse(std::string_view text, const std::string& origin = "config");
  static Config read(const std::string& path);
  std::string to_text() const;

  bool has(const std::string& section, const std::string& key) const;
  const Section& section(const std::string& name) const;  // empty when absent
  std::vector<std::string> section_names() const;

  // Throws ConfigError naming the key when it is absent or malformed.
  std::string get(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  // Comma separated lists.
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::vector<double> fallback) const;
  std::vector<int> get_ints(const std::string& section, const std::string& key, std::vector<int> fallback) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                       std::vector<std::string> fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  friend bool operator==(const Config&, const Config&) = default;

 private:
  std::map<std::string, Section> sections_;
};

// Settings shared by every subcommand, read from the unnamed section.
struct RunConfig {
  int dim = 1;
  int radius = 10;
  std::uint64_t seed = 1;
  int replicas = 30;
  std::vector<int> scales{8, 16, 32, 64};
  std::string out = "out";
  int workers = 1;

  static RunConfig from(const Config& c);
  void store(Config& c) const;
  // Throws ConfigError on nonpositive fields or nonincreasing scales.
  void validate() const;
};

}  // namespace bdlab
