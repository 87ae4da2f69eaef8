#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unitax/raster.hpp"
#include "unitax/relation_graph.hpp"
#include "unitax/taxonomy.hpp"

namespace unitax {

/// Index layout of the naive concatenation label space T_a + T_b:
/// a-classes occupy [0, size_a), b-classes [size_a, size_a + size_b).
struct ConcatLayout {
  std::string dataset_a;
  std::string dataset_b;
  std::size_t size_a = 0;
  std::size_t size_b = 0;

  static ConcatLayout of(const Taxonomy& a, const Taxonomy& b);

  std::size_t total() const { return size_a + size_b; }
  std::size_t size(Side s) const { return s == Side::kA ? size_a : size_b; }
  Side side_of(const std::string& dataset_id) const;
  std::size_t concat_index(Side s, std::uint32_t local) const {
    return s == Side::kA ? local : size_a + local;
  }
};

/// Set of accepted relations over a taxonomy pair. Two classes are related
/// iff any relation (overlap or subset, either direction) links them; that
/// is exactly the condition under which a foreign posterior joins an
/// evaluation class's score.
class RelationSet {
 public:
  RelationSet() = default;
  explicit RelationSet(const ConcatLayout& layout);

  void add(std::uint32_t a_class, std::uint32_t b_class);
  void add(const RelationHypothesis& h);
  bool related(std::uint32_t a_class, std::uint32_t b_class) const;
  /// Related partners of a foreign class on the given evaluation side,
  /// ascending. For eval side A this lists a-classes related to a b-class.
  const std::vector<std::uint32_t>& partners(Side eval_side, std::uint32_t foreign_class) const;
  std::size_t pair_count() const { return pairs_; }
  const ConcatLayout& layout() const { return layout_; }

 private:
  ConcatLayout layout_;
  std::vector<std::vector<std::uint32_t>> a_to_b_;  // per a-class, sorted b partners
  std::vector<std::vector<std::uint32_t>> b_to_a_;
  std::size_t pairs_ = 0;
};

/// Unnormalized classification score over the evaluation side:
///   S(c) = P(c) + sum of P(f) over related foreign classes f.
/// Summation order is part of the contract: the intra posterior first, then
/// foreign contributions in ascending foreign class index, accumulated in
/// double. The posterior is dense over the concatenated space.
void score_concat(std::span<const float> posterior, const RelationSet& relations, Side eval_side,
                  std::span<double> out);
std::vector<double> score_concat(std::span<const float> posterior, const RelationSet& relations,
                                 Side eval_side);

/// Prediction = argmax of the scores, ties toward the lowest class index.
std::uint32_t argmax_score(std::span<const double> scores);

/// One evaluation image: ground truth plus the concatenated-space posterior
/// dump for the same pixels.
struct EvalRecord {
  LabelRaster gt;
  PosteriorDump dump;
};

/// Evaluation stream for one dataset. The ground truth lives in the
/// dataset's own label space; `projection` maps a predicted class of the
/// concat side `side` into that space (kVoidLabel = no counterpart). An
/// empty projection means the side taxonomy is the evaluation taxonomy.
struct EvalDataset {
  std::string dataset_id;
  Side side = Side::kA;
  std::size_t num_eval_classes = 0;
  std::vector<std::uint16_t> projection;
  std::vector<EvalRecord> records;
};

struct MiouResult {
  double miou = 0.0;
  std::vector<double> per_class_iou;   // NaN for classes absent from gt and predictions
  std::vector<std::uint8_t> present;
};

/// Per pixel: Eq-style scores over the eval side from the top-K dump,
/// argmax, optional projection into the evaluation label space, then
/// integer intersection/union accumulation against ground truth. Void
/// ground-truth pixels are ignored; classes absent from both ground truth
/// and predictions are excluded from the mean. Results are bit-identical
/// for any thread count (integer confusion accumulators merged by addition).
MiouResult evaluate_miou(const EvalDataset& dataset, const RelationSet& relations,
                         unsigned threads = 1);

/// mIoU of a plain prediction raster against ground truth in the same label
/// space; predictions may contain kVoidLabel (foreign content mapped to
/// void counts against the ground-truth class).
MiouResult evaluate_miou_rasters(const LabelRaster& prediction, const LabelRaster& gt,
                                 std::size_t num_classes);
/// Same, accumulated over parallel lists of prediction/ground-truth images.
MiouResult evaluate_miou_rasters(const std::vector<LabelRaster>& predictions,
                                 const std::vector<LabelRaster>& gts, std::size_t num_classes);

struct CandidateEval {
  std::vector<double> per_dataset_miou;
  double average = 0.0;
};

struct ResolutionRecord {
  ConflictPair pair;
  CandidateEval candidate_a;
  CandidateEval candidate_b;
  int winner = 0;        // 0 = hypothesis_a, 1 = hypothesis_b, -1 = both already rejected
  bool forced = false;   // outcome reused from an earlier pair sharing an edge
  std::size_t evaluations_after = 0;
};

struct ResolutionResult {
  RelationSet relations;  // base relations plus accepted hypotheses
  std::vector<RelationHypothesis> accepted;
  std::vector<RelationHypothesis> rejected;
  std::vector<ResolutionRecord> log;
  std::size_t evaluations = 0;  // exactly 2 * N_C * N_D
};

/// Tournament over the conflict pairs, one pair at a time in descending
/// combined-support order. Each pair is scored by adding one candidate at a
/// time to the currently accepted relation set and evaluating train mIoU on
/// every dataset, so each pair costs exactly 2 * N_D evaluations. The winner
/// has the higher average mIoU (tie: higher support, then canonical order).
/// When pairs share an edge, the first decision for that edge is reused.
ResolutionResult resolve(const std::vector<ConflictPair>& conflicts, const RelationSet& base,
                         const std::vector<EvalDataset>& eval_data, unsigned threads = 1);

/// Builds the base relation set (overlaps plus plain subsets) from a
/// classification.
RelationSet base_relations(const Classification& c, const ConcatLayout& layout);

/// Applies a resolution to the graph: losers' edges are removed. After this,
/// classify() yields zero conflicts.
void apply_resolution(BipartiteGraph& g, const ResolutionResult& r);

/// JSON-lines resolution log, one record per conflict.
std::string resolution_log_to_jsonl(const ResolutionResult& r,
                                    const std::vector<std::string>& dataset_ids);

}  // namespace unitax
