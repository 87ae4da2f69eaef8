#pragma once

#include <memory>
#include <string>
#include <vector>

#include "unitax/conflict_resolution.hpp"
#include "unitax/cooccurrence.hpp"
#include "unitax/relation_graph.hpp"
#include "unitax/taxonomy.hpp"
#include "unitax/universal_builder.hpp"

namespace unitax {

/// Binary merge schedule: leaves are dataset ids, internal nodes pairwise
/// merges. JSON form is nested arrays, e.g. [["bdd","city"],["idd","vistas"]].
struct Schedule {
  std::string leaf;  // non-empty for leaves
  std::unique_ptr<Schedule> left;
  std::unique_ptr<Schedule> right;

  bool is_leaf() const { return !left; }
};

Schedule parse_schedule(const std::string& json_text);
/// Left-to-right pairing in input order: ((d0, d1), d2), ...
Schedule default_schedule(const std::vector<std::string>& dataset_ids);
std::vector<std::string> schedule_leaves(const Schedule& s);
std::string schedule_to_json(const Schedule& s);

/// A node of the (partially) executed merge tree. Leaves wrap original
/// datasets; internal nodes are meta-datasets carrying the universal
/// taxonomy of the merge that created them, flattened for the next round.
struct MergeNode {
  std::string id;
  std::vector<std::string> member_datasets;
  Taxonomy taxonomy;

  std::unique_ptr<MergeNode> left;
  std::unique_ptr<MergeNode> right;
  UniversalTaxonomy pair_universal;  // mappings keyed by the two child ids
  /// Same universal classes with members and mappings composed down to the
  /// original datasets.
  UniversalTaxonomy composed;
  std::size_t conflicts = 0;
  std::size_t evaluations = 0;
  std::vector<ResolutionRecord> resolution_log;

  bool is_leaf() const { return !left; }
};

MergeNode make_leaf(const Taxonomy& taxonomy);

struct MergeOptions {
  double min_support = 0.0;
  unsigned threads = 1;
};

/// One unification round: build the mcfp graph from the evidence pair, run
/// classification and the conflict tournament, assemble the universal
/// taxonomy, and wrap it as a meta-dataset. For meta children the evidence
/// must be coincidence matrices; proper ground truth does not exist above
/// the leaves.
MergeNode merge_pair(MergeNode left, MergeNode right, const CooccurrenceMatrix& m_ab,
                     const CooccurrenceMatrix& m_ba, const std::vector<EvalDataset>& eval_data,
                     const MergeOptions& options = {});

/// Final 1:N mapping of every original dataset class to universal classes of
/// the completed tree, as image compositions of the per-merge mappings.
/// Throws on a broken chain (an intermediate class without a mapping).
std::map<std::string, std::vector<std::vector<std::uint32_t>>> compose_mappings(
    const MergeNode& root);

}  // namespace unitax
