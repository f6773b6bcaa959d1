#pragma once

#include <fstream>
#include <map>
#include <mutex>
#include <string>

#include "bdlab/shape.hpp"

namespace bdlab {

// Append-only CSV store of passage samples with header
// "module,site,height,n,sample,seed,value". Existing rows are loaded on open
// and new ones appended and flushed as they arrive. Values use round-trip
// decimal form, so a hit returns exactly the stored double.
class FileCache : public shape::SampleCache {
 public:
  explicit FileCache(std::string path);

  std::optional<double> find(const shape::SampleKey& key) const override;
  void put(const shape::SampleKey& key, double value) override;

  std::size_t size() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::map<shape::SampleKey, double> data_;
  std::ofstream out_;
};

}  // namespace bdlab
