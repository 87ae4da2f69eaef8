#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "unitax/raster.hpp"
#include "unitax/relation_graph.hpp"
#include "unitax/taxonomy.hpp"

namespace unitax {

/// Assembles the universal taxonomy from a disambiguated graph. One
/// universal class per mutual edge pair (merged), one per surviving one-way
/// edge, and one singleton per vertex without an outgoing edge (unobserved,
/// or its edge lost the tournament). Hence
///   |U| = |T_a| + |T_b| - number of mutual pairs
/// on every build. Throws if the graph still contains conflict patterns.
UniversalTaxonomy build_universal(const BipartiteGraph& g);

/// Naming convention: a one-way edge inherits the name of its source vertex,
/// a two-way edge joins both vertex names with "/" (side a first), a
/// singleton keeps its own qualified name. Collisions get "#2", "#3", ...
/// suffixes in canonical class order.
std::string derive_edge_name(const BipartiteGraph& g, Side source_side, std::uint32_t source,
                             bool mutual);

/// One binary mapping matrix per dataset, rows = dataset classes, columns =
/// universal classes.
std::vector<PartialLabelMatrix> partial_label_matrices(const UniversalTaxonomy& u);

/// Maps a universal-space prediction into one dataset's label space: each
/// universal class goes to the unique dataset class containing it, foreign
/// universal classes go to void.
LabelRaster map_prediction(const LabelRaster& universal_pred, const UniversalTaxonomy& u,
                           const std::string& dataset_id);

/// Per-universal-class target table used by map_prediction: dataset class
/// index or kVoidLabel.
std::vector<std::uint16_t> dataset_projection(const UniversalTaxonomy& u,
                                              const std::string& dataset_id);

/// Wraps a universal taxonomy as a flat taxonomy for the next merge round.
Taxonomy make_meta_taxonomy(const UniversalTaxonomy& u, const std::string& meta_id);

// CSV export: first row = universal class names, first column = dataset
// class names, cells 0/1.
void save_partial_label_csv(const PartialLabelMatrix& m, const std::vector<std::string>& row_names,
                            const UniversalTaxonomy& u, const std::filesystem::path& path);

}  // namespace unitax
