#include "bdlab/cache.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "bdlab/csv.hpp"

namespace bdlab {

namespace {

constexpr const char* kHeader = "module,site,height,n,sample,seed,value";

// Site labels contain commas; store them with spaces instead.
std::string encode(std::string s) {
  std::replace(s.begin(), s.end(), ',', ' ');
  return s;
}

}  // namespace

FileCache::FileCache(std::string path) : path_(std::move(path)) {
  const bool exists = std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0;
  if (exists) {
    CsvTable t = read_csv(path_);
    if (t.header != split(kHeader, ',')) throw std::runtime_error(path_ + ": not a sample cache (bad header)");
    for (const auto& row : t.rows) {
      if (row.size() != 7) throw std::runtime_error(path_ + ": malformed cache row");
      shape::SampleKey k{row[0], row[1], std::stoll(row[2]), std::stoi(row[3]), std::stoi(row[4]),
                         std::stoull(row[5])};
      data_[k] = parse_double(row[6]);
    }
  }
  if (auto dir = std::filesystem::path(path_).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  out_.open(path_, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open cache file " + path_);
  if (!exists) out_ << kHeader << '\n' << std::flush;
}

std::optional<double> FileCache::find(const shape::SampleKey& key) const {
  shape::SampleKey k = key;
  k.site = encode(k.site);
  std::lock_guard lock(mutex_);
  auto it = data_.find(k);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

void FileCache::put(const shape::SampleKey& key, double value) {
  shape::SampleKey k = key;
  k.site = encode(k.site);
  std::lock_guard lock(mutex_);
  if (data_.count(k)) return;  // append-only: the first value stands
  data_[k] = value;
  out_ << k.module << ',' << k.site << ',' << k.height << ',' << k.n << ',' << k.sample << ',' << k.seed << ','
       << format_double(value) << '\n';
  out_.flush();
}

std::size_t FileCache::size() const {
  std::lock_guard lock(mutex_);
  return data_.size();
}

}  // namespace bdlab
