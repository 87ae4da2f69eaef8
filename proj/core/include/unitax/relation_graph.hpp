#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "unitax/cooccurrence.hpp"
#include "unitax/taxonomy.hpp"

namespace unitax {

enum class Side : std::uint8_t { kA, kB };

inline Side other_side(Side s) { return s == Side::kA ? Side::kB : Side::kA; }

struct GraphEdge {
  std::uint32_t target = 0;  // class index in the opposite taxonomy
  std::uint64_t count = 0;   // co-occurrence mass backing the edge
};

/// Bipartite graph over two taxonomies induced by the mcfp function: every
/// observed class vertex has exactly one outgoing edge to its most common
/// foreign prediction. Edges are removable during conflict resolution.
struct BipartiteGraph {
  Taxonomy taxonomy_a;
  Taxonomy taxonomy_b;
  std::vector<std::optional<GraphEdge>> out_a;  // one slot per class of a
  std::vector<std::optional<GraphEdge>> out_b;

  const Taxonomy& taxonomy(Side s) const { return s == Side::kA ? taxonomy_a : taxonomy_b; }
  std::vector<std::optional<GraphEdge>>& edges(Side s) { return s == Side::kA ? out_a : out_b; }
  const std::vector<std::optional<GraphEdge>>& edges(Side s) const {
    return s == Side::kA ? out_a : out_b;
  }
  ClassRef ref(Side s, std::uint32_t index) const {
    return {taxonomy(s).dataset_id, index};
  }
  Side side_of(const std::string& dataset_id) const;

  std::size_t edge_count() const;
  /// Deletes the outgoing edge of the given class (resolution loser).
  void remove_edge(Side side, std::uint32_t source);
};

/// Most common foreign prediction: argmax of the co-occurrence row, ties
/// broken toward the lowest class index. Returns nothing when the row is
/// all-zero (class never observed) or, with min_support > 0, when the best
/// count is below min_support * row_total.
std::optional<std::uint32_t> mcfp(const CooccurrenceMatrix& m, std::size_t row,
                                  double min_support = 0.0);

/// Builds the graph from the two directed co-occurrence matrices.
/// m_ab must have rows = taxonomy_a, columns = taxonomy_b; m_ba the reverse.
BipartiteGraph build_graph(const CooccurrenceMatrix& m_ab, const CooccurrenceMatrix& m_ba,
                           const Taxonomy& taxonomy_a, const Taxonomy& taxonomy_b,
                           double min_support = 0.0);

/// Every edge accounted for exactly once:
///  - mutual edge pairs become OVERLAP relations;
///  - a one-way edge u->v paired with v's one-way outgoing edge v->w forms a
///    ConflictPair (u in v) vs (v in w), one pair per incoming edge at v;
///  - remaining one-way edges are plain SUBSET hypotheses.
/// An incoming edge into a vertex whose own edge closed a 2-cycle is a plain
/// subset, not a conflict: the contradiction pattern requires the middle
/// vertex's outgoing edge to leave the cycle.
struct Classification {
  std::vector<RelationHypothesis> overlaps;
  std::vector<RelationHypothesis> subsets;   // plain subsets only
  std::vector<ConflictPair> conflicts;

  std::size_t num_conflicts() const { return conflicts.size(); }
};

Classification classify(const BipartiteGraph& g);

// Stage handoff: JSON embeds both taxonomies, the edge list and the
// classification, so later stages run off the file alone.
std::string graph_to_json(const BipartiteGraph& g, const Classification& c);
BipartiteGraph graph_from_json(const std::string& text);
BipartiteGraph load_graph(const std::filesystem::path& path);
void save_graph(const BipartiteGraph& g, const Classification& c,
                const std::filesystem::path& path);

/// Graphviz emitter; overlap edges green, plain subsets orange, conflict
/// edges red.
std::string graph_to_dot(const BipartiteGraph& g, const Classification& c);

}  // namespace unitax
