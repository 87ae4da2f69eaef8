#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "unitax/cooccurrence.hpp"
#include "unitax/raster.hpp"
#include "unitax/taxonomy.hpp"

namespace testutil {

inline unitax::Taxonomy make_taxonomy(const std::string& id, std::size_t num_classes) {
  unitax::Taxonomy t;
  t.dataset_id = id;
  for (std::size_t i = 0; i < num_classes; ++i) t.classes.push_back("c" + std::to_string(i));
  return t;
}

inline unitax::LabelRaster make_raster(const std::string& taxonomy_id,
                                       const std::vector<std::uint16_t>& labels,
                                       std::uint32_t width = 0) {
  unitax::LabelRaster r;
  r.width = width ? width : static_cast<std::uint32_t>(labels.size());
  r.height = static_cast<std::uint32_t>(labels.size() / r.width);
  r.labels = labels;
  r.taxonomy_id = taxonomy_id;
  return r;
}

inline unitax::LabelRaster random_raster(const std::string& taxonomy_id, std::uint32_t width,
                                         std::uint32_t height, std::size_t num_classes,
                                         std::mt19937_64& rng, double void_rate = 0.0) {
  unitax::LabelRaster r;
  r.width = width;
  r.height = height;
  r.taxonomy_id = taxonomy_id;
  r.labels.resize(std::size_t(width) * height);
  std::uniform_int_distribution<std::size_t> dist(0, num_classes - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (auto& l : r.labels) {
    if (void_rate > 0.0 && coin(rng) < void_rate)
      l = unitax::kVoidLabel;
    else
      l = static_cast<std::uint16_t>(dist(rng));
  }
  return r;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("unitax_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace testutil
