#include "unitax/universal_builder.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace unitax {

namespace {

bool is_mutual(const BipartiteGraph& g, Side side, std::uint32_t source) {
  const auto& e = g.edges(side)[source];
  if (!e) return false;
  const auto& back = g.edges(other_side(side))[e->target];
  return back && back->target == source;
}

}  // namespace

std::string derive_edge_name(const BipartiteGraph& g, Side source_side, std::uint32_t source,
                             bool mutual) {
  const auto& e = g.edges(source_side)[source];
  if (!e) return g.taxonomy(source_side).qualified_name(source);
  if (!mutual) return g.taxonomy(source_side).qualified_name(source);
  // Both names, side a first regardless of which vertex we started from.
  const std::uint32_t a_index = source_side == Side::kA ? source : e->target;
  const std::uint32_t b_index = source_side == Side::kA ? e->target : source;
  return g.taxonomy_a.qualified_name(a_index) + "/" + g.taxonomy_b.qualified_name(b_index);
}

UniversalTaxonomy build_universal(const BipartiteGraph& g) {
  const Classification cls = classify(g);
  if (!cls.conflicts.empty())
    throw std::runtime_error("build_universal: unresolved conflicts: " +
                             std::to_string(cls.conflicts.size()));

  struct Pending {
    std::string name;
    std::vector<ClassRef> members;
  };
  std::vector<Pending> pending;

  // Mutual pairs merge into one class; enumerate from side a.
  for (std::uint32_t i = 0; i < g.out_a.size(); ++i) {
    if (!is_mutual(g, Side::kA, i)) continue;
    const std::uint32_t j = g.out_a[i]->target;
    pending.push_back({derive_edge_name(g, Side::kA, i, true),
                       {g.ref(Side::kA, i), g.ref(Side::kB, j)}});
  }
  for (Side side : {Side::kA, Side::kB}) {
    const auto& out = g.edges(side);
    for (std::uint32_t i = 0; i < out.size(); ++i) {
      if (out[i] && !is_mutual(g, side, i)) {
        pending.push_back({derive_edge_name(g, side, i, false),
                           {g.ref(side, i), g.ref(other_side(side), out[i]->target)}});
      } else if (!out[i]) {
        pending.push_back({g.taxonomy(side).qualified_name(i), {g.ref(side, i)}});
      }
    }
  }

  // Canonical order: by least member, then by full member list. Several
  // classes can share their least member (a superset with many edges).
  for (auto& p : pending) std::sort(p.members.begin(), p.members.end());
  std::sort(pending.begin(), pending.end(),
            [](const Pending& x, const Pending& y) { return x.members < y.members; });

  // Deduplicate names with ordinal suffixes in canonical order.
  std::unordered_map<std::string, int> name_uses;
  UniversalTaxonomy u;
  for (auto& p : pending) {
    int& uses = name_uses[p.name];
    ++uses;
    std::string name = uses == 1 ? p.name : p.name + "#" + std::to_string(uses);
    u.classes.push_back({std::move(name), std::move(p.members)});
  }

  u.mappings[g.taxonomy_a.dataset_id].resize(g.taxonomy_a.size());
  u.mappings[g.taxonomy_b.dataset_id].resize(g.taxonomy_b.size());
  for (std::uint32_t ui = 0; ui < u.classes.size(); ++ui)
    for (const auto& m : u.classes[ui].members)
      u.mappings[m.dataset_id][m.class_index].push_back(ui);
  for (auto& [dataset, mapping] : u.mappings)
    for (auto& targets : mapping) std::sort(targets.begin(), targets.end());
  return u;
}

std::vector<PartialLabelMatrix> partial_label_matrices(const UniversalTaxonomy& u) {
  const auto violations = validate_universal(u);
  if (!violations.empty())
    throw std::invalid_argument("partial_label_matrices: invalid universal taxonomy: " +
                                violations.front());
  std::vector<PartialLabelMatrix> matrices;
  for (const auto& [dataset, mapping] : u.mappings) {
    PartialLabelMatrix m;
    m.dataset_id = dataset;
    m.rows = mapping.size();
    m.cols = u.size();
    m.values.assign(m.rows * m.cols, 0);
    for (std::size_t c = 0; c < mapping.size(); ++c)
      for (auto ui : mapping[c]) m.values[c * m.cols + ui] = 1;
    matrices.push_back(std::move(m));
  }
  return matrices;
}

std::vector<std::uint16_t> dataset_projection(const UniversalTaxonomy& u,
                                              const std::string& dataset_id) {
  if (!u.mappings.count(dataset_id))
    throw std::invalid_argument("dataset_projection: unknown dataset " + dataset_id);
  std::vector<std::uint16_t> table(u.size(), kVoidLabel);
  for (std::size_t ui = 0; ui < u.classes.size(); ++ui)
    for (const auto& m : u.classes[ui].members)
      if (m.dataset_id == dataset_id) table[ui] = static_cast<std::uint16_t>(m.class_index);
  return table;
}

LabelRaster map_prediction(const LabelRaster& universal_pred, const UniversalTaxonomy& u,
                           const std::string& dataset_id) {
  const auto table = dataset_projection(u, dataset_id);
  LabelRaster out;
  out.width = universal_pred.width;
  out.height = universal_pred.height;
  out.taxonomy_id = dataset_id;
  out.labels.resize(universal_pred.labels.size());
  for (std::size_t p = 0; p < universal_pred.labels.size(); ++p) {
    const std::uint16_t v = universal_pred.labels[p];
    if (v == kVoidLabel) {
      out.labels[p] = kVoidLabel;
      continue;
    }
    if (v >= table.size())
      throw std::out_of_range("map_prediction: label out of range at pixel " + std::to_string(p));
    out.labels[p] = table[v];
  }
  return out;
}

Taxonomy make_meta_taxonomy(const UniversalTaxonomy& u, const std::string& meta_id) {
  Taxonomy t;
  t.dataset_id = meta_id;
  t.meta = true;
  t.classes.reserve(u.size());
  for (const auto& uc : u.classes) t.classes.push_back(uc.name);
  return t;
}

namespace {

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void save_partial_label_csv(const PartialLabelMatrix& m, const std::vector<std::string>& row_names,
                            const UniversalTaxonomy& u, const std::filesystem::path& path) {
  if (row_names.size() != m.rows || u.size() != m.cols)
    throw std::invalid_argument("save_partial_label_csv: name count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_partial_label_csv: cannot open " + path.string());
  out << csv_quote(m.dataset_id);
  for (const auto& uc : u.classes) out << ',' << csv_quote(uc.name);
  out << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    out << csv_quote(row_names[r]);
    for (std::size_t c = 0; c < m.cols; ++c) out << ',' << int(m.at(r, c));
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_partial_label_csv: write failed for " + path.string());
}

}  // namespace unitax
