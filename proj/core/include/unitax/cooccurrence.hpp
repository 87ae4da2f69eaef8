#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "unitax/raster.hpp"
#include "unitax/taxonomy.hpp"

namespace unitax {

/// Pixel counts pairing one taxonomy's ground truth (rows) with another
/// taxonomy's predictions (columns). Counts are 64-bit: seven datasets of
/// segmentation scale overflow 32 bits.
struct CooccurrenceMatrix {
  std::string row_taxonomy_id;
  std::string col_taxonomy_id;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> counts;  // row-major
  std::uint64_t pixel_total = 0;

  static CooccurrenceMatrix zero(const Taxonomy& row_taxonomy, const Taxonomy& col_taxonomy);

  std::uint64_t at(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }
  std::uint64_t& at(std::size_t r, std::size_t c) { return counts[r * cols + c]; }
  std::uint64_t row_total(std::size_t r) const;
};

/// Counts gt/prediction pairs where both sides are non-void. Ground truth
/// indexes rows, the foreign prediction indexes columns.
void accumulate_cooccurrence(const LabelRaster& gt, const LabelRaster& foreign_pred,
                             CooccurrenceMatrix& acc);

/// Same counting with intra-domain predictions (or meta-dataset pseudo
/// labels) on the row side instead of ground truth.
void accumulate_coincidence(const LabelRaster& pred_row, const LabelRaster& pred_col,
                            CooccurrenceMatrix& acc);

/// Entrywise addition; the merge half of the per-worker parallelism
/// contract. Partial matrices over disjoint raster subsets merged this way
/// equal the sequential result exactly.
void merge(CooccurrenceMatrix& acc, const CooccurrenceMatrix& other);

/// Accumulates raster pairs across worker threads with per-worker partial
/// matrices. Bit-identical to sequential accumulation.
CooccurrenceMatrix accumulate_parallel(
    const std::vector<std::pair<const LabelRaster*, const LabelRaster*>>& pairs,
    const Taxonomy& row_taxonomy, const Taxonomy& col_taxonomy, unsigned threads);

// CSV: first row = column class names, first column = row class names,
// corner cell = "<row_taxonomy_id>\<col_taxonomy_id>", cells = counts.
void save_cooccurrence_csv(const CooccurrenceMatrix& m, const Taxonomy& row_taxonomy,
                           const Taxonomy& col_taxonomy, const std::filesystem::path& path);
CooccurrenceMatrix load_cooccurrence_csv(const std::filesystem::path& path);

}  // namespace unitax
