#include "bdlab/config.hpp"

#include <fstream>
#include <sstream>

#include "bdlab/csv.hpp"

namespace bdlab {

namespace {

const Config::Section kEmpty;

std::string strip_comment(std::string_view line) {
  auto pos = line.find('#');
  return trim(line.substr(0, pos));
}

std::string join_list(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  std::string current;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    if (line.empty()) continue;
    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError(where() + "empty section name");
      c.sections_[current];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + "empty key");
    auto& sec = c.sections_[current];
    if (sec.count(key)) throw ConfigError(where() + "duplicate key '" + key + "'");
    sec[key] = value;
  }
  return c;
}

Config Config::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string Config::to_text() const {
  std::ostringstream out;
  auto emit = [&](const Section& s) {
    for (const auto& [k, v] : s) out << k << " = " << v << '\n';
  };
  if (auto it = sections_.find(""); it != sections_.end()) emit(it->second);
  for (const auto& [name, s] : sections_) {
    if (name.empty()) continue;
    out << "\n[" << name << "]\n";
    emit(s);
  }
  return out.str();
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

const Config::Section& Config::section(const std::string& name) const {
  auto it = sections_.find(name);
  return it == sections_.end() ? kEmpty : it->second;
}

std::vector<std::string> Config::section_names() const {
  std::vector<std::string> out;
  for (const auto& [name, s] : sections_) out.push_back(name);
  return out;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    throw ConfigError("missing config key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
  return sections_.at(section).at(key);
}

std::string Config::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return parse_double(get(section, key));
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + get(section, key));
  }
}

long long Config::get_int(const std::string& section, const std::string& key, long long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("config key '" + key + "' is not an integer: " + v);
  return out;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v.front() == '-')
    throw ConfigError("config key '" + key + "' is not an unsigned integer: " + v);
  return out;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + v);
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        std::vector<double> fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  for (const auto& s : get_strings(section, key, {})) {
    try {
      out.push_back(parse_double(s));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has a non-numeric entry: " + s);
    }
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& section, const std::string& key,
                                  std::vector<int> fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<int> out;
  for (const auto& s : get_strings(section, key, {})) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw ConfigError("config key '" + key + "' has a non-integer entry: " + s);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& section, const std::string& key,
                                             std::vector<std::string> fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<std::string> out;
  for (const auto& part : split(get(section, key), ',')) {
    std::string s = trim(part);
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

RunConfig RunConfig::from(const Config& c) {
  RunConfig r;
  r.dim = static_cast<int>(c.get_int("", "dim", r.dim));
  r.radius = static_cast<int>(c.get_int("", "radius", r.radius));
  r.seed = c.get_u64("", "seed", r.seed);
  r.replicas = static_cast<int>(c.get_int("", "replicas", r.replicas));
  r.scales = c.get_ints("", "scales", r.scales);
  r.out = c.get("", "out", r.out);
  r.workers = static_cast<int>(c.get_int("", "workers", r.workers));
  r.validate();
  return r;
}

void RunConfig::store(Config& c) const {
  std::vector<std::string> s;
  for (int n : scales) s.push_back(std::to_string(n));
  c.set("", "dim", std::to_string(dim));
  c.set("", "radius", std::to_string(radius));
  c.set("", "seed", std::to_string(seed));
  c.set("", "replicas", std::to_string(replicas));
  c.set("", "scales", join_list(s));
  c.set("", "out", out);
  c.set("", "workers", std::to_string(workers));
}

void RunConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (radius < 1) throw ConfigError("radius must be >= 1");
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (scales.empty()) throw ConfigError("scales must not be empty");
  for (std::size_t k = 0; k < scales.size(); ++k) {
    if (scales[k] < 1) throw ConfigError("scales must be positive");
    if (k && scales[k] <= scales[k - 1]) throw ConfigError("scales must be strictly increasing");
  }
  if (out.empty()) throw ConfigError("out must not be empty");
}

}  // namespace bdlab
