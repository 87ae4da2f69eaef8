#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "unitax/taxonomy.hpp"

namespace unitax {

/// Dense per-pixel class labels, row-major. Void pixels hold kVoidLabel
/// regardless of the on-disk bit depth.
struct LabelRaster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint16_t> labels;
  std::string taxonomy_id;

  std::size_t pixels() const { return labels.size(); }
  std::uint16_t at(std::uint32_t x, std::uint32_t y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
};

/// Sparse top-K class posteriors per pixel, entries sorted by descending
/// probability. Slots beyond the available mass are padded with
/// (kVoidLabel, 0.0f) and skipped by all consumers.
struct PosteriorDump {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t top_k = 0;
  std::vector<std::uint16_t> classes;  // pixels * top_k
  std::vector<float> probs;            // pixels * top_k
  std::string taxonomy_id;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::span<const std::uint16_t> pixel_classes(std::size_t p) const {
    return {classes.data() + p * top_k, top_k};
  }
  std::span<const float> pixel_probs(std::size_t p) const {
    return {probs.data() + p * top_k, top_k};
  }
};

// Label raster binary ("SEGR"): magic, u8 version=1, u8 bits in {8,16},
// u32 width, u32 height, little-endian, then row-major labels.
// 16-bit PGM (P5) is accepted for interchange; PGM stores 16-bit samples
// big-endian per the format definition.
LabelRaster load_raster(const std::filesystem::path& path);
void save_raster(const LabelRaster& raster, const std::filesystem::path& path,
                 int bits_per_label = 0);  // 0 = narrowest that fits

// Posterior dump binary ("SEGP"): magic, u8 version=1, u16 K, u32 width,
// u32 height, then per pixel K x (u16 class_index, f32 probability), LE.
PosteriorDump load_posterior_dump(const std::filesystem::path& path);
void save_posterior_dump(const PosteriorDump& dump, const std::filesystem::path& path);

/// Checks labels against a taxonomy: every non-void entry must be a valid
/// class index. Returns violations, empty means valid.
std::vector<std::string> validate_raster(const LabelRaster& raster, const Taxonomy& taxonomy);

/// Checks the dump invariants: per pixel non-increasing probabilities in
/// [0,1] summing to at most 1 + 1e-5, distinct non-padding class indices.
std::vector<std::string> validate_dump(const PosteriorDump& dump, std::size_t num_classes);

}  // namespace unitax
