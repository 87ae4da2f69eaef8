#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "unitax/conflict_resolution.hpp"
#include "unitax/cooccurrence.hpp"
#include "unitax/multi_merge.hpp"
#include "unitax/raster.hpp"
#include "unitax/taxonomy.hpp"

namespace unitax {

/// One dataset of a latent world: a partition of (a subset of) the latent
/// classes into dataset classes.
struct DatasetSpec {
  std::string id;
  std::vector<std::vector<std::uint32_t>> groups;  // latent ids per class
  std::vector<std::string> class_names;

  Taxonomy taxonomy() const;
};

/// Ground-truth world for verification: disjoint atomic concepts, per
/// dataset a grouping into classes, a pixel prior, and a noise model. The
/// full pipeline's recovery can be scored against this known structure.
struct LatentWorld {
  std::uint32_t num_latent = 0;
  std::vector<double> prior;  // sums to 1
  std::vector<DatasetSpec> datasets;
  double noise = 0.0;         // prediction flip rate
  /// Concatenation models split the correct probability mass between the
  /// intra-domain class and the foreign class of the same concept; this is
  /// the intra share.
  double intra_weight = 0.6;
  std::uint64_t seed = 0;
  std::uint32_t image_width = 64;
  std::uint32_t image_height = 64;

  std::size_t dataset_index(const std::string& id) const;
  /// latent -> class lookup for one dataset; empty = ungrouped.
  std::vector<std::optional<std::uint32_t>> latent_classes(std::size_t dataset_index) const;
  /// Truth predicate scored by recovery_score: do two dataset classes share
  /// latent content?
  bool latent_intersects(std::size_t d1, std::uint32_t c1, std::size_t d2,
                         std::uint32_t c2) const;
};

/// Grouping-law mix for sample_world. Interleaved blocks share a dominant
/// latent between two fat classes, the structure that degrades into a
/// conflict under noise; chain blocks skew the mass so the mcfp graph
/// provably contains a conflict pair even without noise.
struct WorldParams {
  std::uint32_t num_latent = 8;
  std::uint32_t num_datasets = 2;
  double noise = 0.0;
  bool overlaps = true;
  bool subset_splits = true;
  bool interleaved = true;
  bool conflict_chains = false;
  bool foreign_only = false;
  std::uint32_t image_width = 64;
  std::uint32_t image_height = 64;
};

LatentWorld sample_world(const WorldParams& params, std::uint64_t seed);

/// Two-dataset world with exactly `num_chains` conflict-inducing chain
/// blocks: classify yields N_C = num_chains at zero noise, and each
/// tournament winner is the hypothesis with the higher latent pixel mass.
LatentWorld make_conflict_world(std::uint32_t num_chains, std::uint64_t seed);

std::string world_to_json(const LatentWorld& w);
LatentWorld world_from_json(const std::string& text);
LatentWorld load_world(const std::filesystem::path& path);
void save_world(const LatentWorld& w, const std::filesystem::path& path);

/// Deterministic stream derivation: (seed, tag, index) -> RNG stream seed.
/// Sampling is reproducible regardless of scheduling because every image
/// draws from its own derived stream.
std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index);

/// Simulator view of a (meta-)dataset: a flat taxonomy plus the latent
/// content of every class.
struct NodeView {
  Taxonomy taxonomy;
  std::vector<std::optional<std::uint32_t>> latent_to_class;
};

NodeView leaf_view(const LatentWorld& world, std::size_t dataset_index);
/// View of a merge result. A universal class covers the intersection of its
/// members' latents; a singleton keeps whatever no other universal class of
/// its vertex covers.
NodeView meta_view(const NodeView& a, const NodeView& b, const UniversalTaxonomy& pair_universal,
                   const Taxonomy& meta_taxonomy);

// Pixel sampling. Pixels are i.i.d. draws from the prior; co-occurrence
// counting is pixelwise, so spatial structure would add nothing.
std::vector<std::uint32_t> sample_latents(const LatentWorld& w, std::uint64_t stream,
                                          std::size_t count);
LabelRaster ground_truth_raster(const std::vector<std::uint32_t>& latents, std::uint32_t width,
                                std::uint32_t height, const NodeView& view);
/// Correct class with probability 1 - noise, else a uniformly random other
/// class; latents invisible to the taxonomy predict void when not flipped.
LabelRaster prediction_raster(const std::vector<std::uint32_t>& latents, std::uint32_t width,
                              std::uint32_t height, const NodeView& view, double noise,
                              std::uint64_t stream);
/// Concatenated-space posterior dump: intra_weight * (1 - noise) on the
/// intra-domain correct class, the rest of (1 - noise) on the foreign
/// correct class, noise on one random other class.
PosteriorDump eval_dump(const std::vector<std::uint32_t>& latents, std::uint32_t width,
                        std::uint32_t height, const NodeView& view_a, const NodeView& view_b,
                        Side intra_side, double intra_weight, double noise, std::uint16_t top_k,
                        std::uint64_t stream);

/// Per-dataset fixture bundle for two-dataset worlds (the simulate command).
struct DatasetFixtures {
  std::vector<LabelRaster> gt;
  std::map<std::string, std::vector<LabelRaster>> foreign_preds;  // model id -> rasters
  std::vector<LabelRaster> intra_preds;
  std::vector<PosteriorDump> eval_dumps;  // over concat(datasets[0], datasets[1])
};

std::map<std::string, DatasetFixtures> simulate(const LatentWorld& world, std::size_t num_images,
                                                std::uint16_t top_k = 4);

struct RecoveryOptions {
  std::size_t evidence_pixels = 100000;  // per direction per merge
  std::size_t eval_pixels = 20000;       // per evaluated dataset per merge
  std::uint16_t top_k = 4;
  double min_support = 0.0;
  unsigned threads = 1;
  std::uint32_t image_width = 0;   // 0 = world default
  std::uint32_t image_height = 0;
};

struct RecoveryRun {
  MergeNode root;
  std::size_t total_conflicts = 0;
  std::size_t total_evaluations = 0;
};

/// Executes a full recovery over a world: per merge node, simulates the
/// evidence (ground-truth co-occurrence at the leaves, coincidence above
/// them) and the per-leaf evaluation records, then runs merge_pair.
RecoveryRun run_recovery(const LatentWorld& world, const Schedule& schedule,
                         const RecoveryOptions& options = {});

/// Fraction of cross-dataset class pairs whose recovered sharing matches
/// the latent intersection structure: two classes should share a universal
/// class iff their latent groups intersect.
double recovery_score(const UniversalTaxonomy& recovered, const LatentWorld& world);

}  // namespace unitax
