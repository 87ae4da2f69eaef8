#include "unitax/multi_merge.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace unitax {

using nlohmann::json;

namespace {

Schedule schedule_from(const json& j) {
  Schedule s;
  if (j.is_string()) {
    s.leaf = j.get<std::string>();
    if (s.leaf.empty()) throw std::runtime_error("parse_schedule: empty dataset id");
    return s;
  }
  if (!j.is_array() || j.size() != 2)
    throw std::runtime_error("parse_schedule: node must be a dataset id or a pair");
  s.left = std::make_unique<Schedule>(schedule_from(j[0]));
  s.right = std::make_unique<Schedule>(schedule_from(j[1]));
  return s;
}

json schedule_json(const Schedule& s) {
  if (s.is_leaf()) return s.leaf;
  return json::array({schedule_json(*s.left), schedule_json(*s.right)});
}

void collect_leaves(const Schedule& s, std::vector<std::string>& out) {
  if (s.is_leaf()) {
    out.push_back(s.leaf);
    return;
  }
  collect_leaves(*s.left, out);
  collect_leaves(*s.right, out);
}

}  // namespace

Schedule parse_schedule(const std::string& json_text) {
  Schedule s = schedule_from(json::parse(json_text));
  auto leaves = schedule_leaves(s);
  std::set<std::string> unique(leaves.begin(), leaves.end());
  if (unique.size() != leaves.size())
    throw std::runtime_error("parse_schedule: a dataset appears in more than one leaf");
  return s;
}

Schedule default_schedule(const std::vector<std::string>& dataset_ids) {
  if (dataset_ids.empty()) throw std::invalid_argument("default_schedule: no datasets");
  Schedule acc;
  acc.leaf = dataset_ids[0];
  for (std::size_t i = 1; i < dataset_ids.size(); ++i) {
    Schedule parent;
    parent.left = std::make_unique<Schedule>(std::move(acc));
    parent.right = std::make_unique<Schedule>();
    parent.right->leaf = dataset_ids[i];
    acc = std::move(parent);
  }
  return acc;
}

std::vector<std::string> schedule_leaves(const Schedule& s) {
  std::vector<std::string> out;
  collect_leaves(s, out);
  return out;
}

std::string schedule_to_json(const Schedule& s) { return schedule_json(s).dump() + "\n"; }

MergeNode make_leaf(const Taxonomy& taxonomy) {
  MergeNode node;
  node.id = taxonomy.dataset_id;
  node.member_datasets = {taxonomy.dataset_id};
  node.taxonomy = taxonomy;
  return node;
}

namespace {

// Mapping of one leaf dataset into a node's class space. For a leaf node
// this is the identity; for merged nodes it is the composed image.
std::vector<std::vector<std::uint32_t>> node_mapping(const MergeNode& node,
                                                     const std::string& dataset_id) {
  if (node.is_leaf()) {
    std::vector<std::vector<std::uint32_t>> identity(node.taxonomy.size());
    for (std::uint32_t c = 0; c < identity.size(); ++c) identity[c] = {c};
    return identity;
  }
  auto it = node.composed.mappings.find(dataset_id);
  if (it == node.composed.mappings.end())
    throw std::runtime_error("compose_mappings: dataset " + dataset_id +
                             " missing from node " + node.id);
  return it->second;
}

std::vector<std::vector<std::uint32_t>> compose_through(
    const std::vector<std::vector<std::uint32_t>>& first,
    const std::vector<std::vector<std::uint32_t>>& second, const std::string& context) {
  std::vector<std::vector<std::uint32_t>> out(first.size());
  for (std::size_t c = 0; c < first.size(); ++c) {
    std::set<std::uint32_t> image;
    for (std::uint32_t mid : first[c]) {
      if (mid >= second.size())
        throw std::runtime_error("compose_mappings: broken chain at " + context +
                                 ": intermediate class " + std::to_string(mid) + " unmapped");
      image.insert(second[mid].begin(), second[mid].end());
    }
    out[c].assign(image.begin(), image.end());
    if (out[c].empty())
      throw std::runtime_error("compose_mappings: broken chain at " + context +
                               ": empty image for class " + std::to_string(c));
  }
  return out;
}

}  // namespace

MergeNode merge_pair(MergeNode left, MergeNode right, const CooccurrenceMatrix& m_ab,
                     const CooccurrenceMatrix& m_ba, const std::vector<EvalDataset>& eval_data,
                     const MergeOptions& options) {
  BipartiteGraph graph =
      build_graph(m_ab, m_ba, left.taxonomy, right.taxonomy, options.min_support);
  Classification cls = classify(graph);
  const ConcatLayout layout = ConcatLayout::of(left.taxonomy, right.taxonomy);

  ResolutionResult resolution =
      resolve(cls.conflicts, base_relations(cls, layout), eval_data, options.threads);
  apply_resolution(graph, resolution);

  MergeNode node;
  node.id = "(" + left.id + "+" + right.id + ")";
  node.member_datasets = left.member_datasets;
  node.member_datasets.insert(node.member_datasets.end(), right.member_datasets.begin(),
                              right.member_datasets.end());
  node.pair_universal = build_universal(graph);
  node.taxonomy = make_meta_taxonomy(node.pair_universal, node.id);
  node.conflicts = cls.conflicts.size();
  node.evaluations = resolution.evaluations;
  node.resolution_log = std::move(resolution.log);

  // Compose the pairwise mappings down to original datasets and rewrite
  // members as original class references.
  node.composed.classes.resize(node.pair_universal.size());
  for (std::size_t ui = 0; ui < node.pair_universal.size(); ++ui)
    node.composed.classes[ui].name = node.pair_universal.classes[ui].name;

  for (const MergeNode* child : {&left, &right}) {
    const auto& pair_mapping = node.pair_universal.mappings.at(child->id);
    for (const auto& dataset : child->member_datasets) {
      auto composed = compose_through(node_mapping(*child, dataset), pair_mapping, node.id);
      node.composed.mappings[dataset] = std::move(composed);
    }
  }
  for (const auto& [dataset, mapping] : node.composed.mappings)
    for (std::uint32_t c = 0; c < mapping.size(); ++c)
      for (std::uint32_t ui : mapping[c])
        node.composed.classes[ui].members.push_back({dataset, c});
  for (auto& uc : node.composed.classes) std::sort(uc.members.begin(), uc.members.end());

  node.left = std::make_unique<MergeNode>(std::move(left));
  node.right = std::make_unique<MergeNode>(std::move(right));
  return node;
}

std::map<std::string, std::vector<std::vector<std::uint32_t>>> compose_mappings(
    const MergeNode& root) {
  std::map<std::string, std::vector<std::vector<std::uint32_t>>> out;
  if (root.is_leaf()) {
    out[root.taxonomy.dataset_id] = node_mapping(root, root.taxonomy.dataset_id);
    return out;
  }
  // Recompute from the per-merge mappings rather than trusting the cached
  // composition, so the two can be cross-checked.
  for (const MergeNode* child : {root.left.get(), root.right.get()}) {
    auto child_composed = compose_mappings(*child);
    const auto& pair_mapping = root.pair_universal.mappings.at(child->id);
    for (auto& [dataset, mapping] : child_composed)
      out[dataset] = compose_through(mapping, pair_mapping, root.id);
  }
  return out;
}

}  // namespace unitax
