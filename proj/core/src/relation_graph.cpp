#include "unitax/relation_graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace unitax {

using nlohmann::json;

Side BipartiteGraph::side_of(const std::string& dataset_id) const {
  if (dataset_id == taxonomy_a.dataset_id) return Side::kA;
  if (dataset_id == taxonomy_b.dataset_id) return Side::kB;
  throw std::invalid_argument("side_of: unknown dataset " + dataset_id);
}

std::size_t BipartiteGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& e : out_a) n += e.has_value();
  for (const auto& e : out_b) n += e.has_value();
  return n;
}

void BipartiteGraph::remove_edge(Side side, std::uint32_t source) {
  auto& out = edges(side);
  if (source >= out.size()) throw std::out_of_range("remove_edge: source out of range");
  out[source].reset();
}

std::optional<std::uint32_t> mcfp(const CooccurrenceMatrix& m, std::size_t row,
                                  double min_support) {
  if (row >= m.rows) throw std::out_of_range("mcfp: row out of range");
  std::uint64_t best = 0;
  std::uint64_t total = 0;
  std::uint32_t best_col = 0;
  for (std::size_t c = 0; c < m.cols; ++c) {
    const std::uint64_t v = m.at(row, c);
    total += v;
    if (v > best) {
      best = v;
      best_col = static_cast<std::uint32_t>(c);
    }
  }
  if (best == 0) return std::nullopt;
  if (min_support > 0.0 &&
      static_cast<double>(best) < min_support * static_cast<double>(total))
    return std::nullopt;
  return best_col;
}

BipartiteGraph build_graph(const CooccurrenceMatrix& m_ab, const CooccurrenceMatrix& m_ba,
                           const Taxonomy& taxonomy_a, const Taxonomy& taxonomy_b,
                           double min_support) {
  if (m_ab.row_taxonomy_id != taxonomy_a.dataset_id ||
      m_ab.col_taxonomy_id != taxonomy_b.dataset_id)
    throw std::invalid_argument("build_graph: m_ab taxonomy mismatch (" + m_ab.row_taxonomy_id +
                                " x " + m_ab.col_taxonomy_id + ")");
  if (m_ba.row_taxonomy_id != taxonomy_b.dataset_id ||
      m_ba.col_taxonomy_id != taxonomy_a.dataset_id)
    throw std::invalid_argument("build_graph: m_ba taxonomy mismatch (" + m_ba.row_taxonomy_id +
                                " x " + m_ba.col_taxonomy_id + ")");
  if (m_ab.rows != taxonomy_a.size() || m_ab.cols != taxonomy_b.size() ||
      m_ba.rows != taxonomy_b.size() || m_ba.cols != taxonomy_a.size())
    throw std::invalid_argument("build_graph: matrix shape does not match taxonomy sizes");

  BipartiteGraph g;
  g.taxonomy_a = taxonomy_a;
  g.taxonomy_b = taxonomy_b;
  g.out_a.resize(taxonomy_a.size());
  g.out_b.resize(taxonomy_b.size());
  for (std::size_t i = 0; i < taxonomy_a.size(); ++i)
    if (auto t = mcfp(m_ab, i, min_support)) g.out_a[i] = GraphEdge{*t, m_ab.at(i, *t)};
  for (std::size_t j = 0; j < taxonomy_b.size(); ++j)
    if (auto t = mcfp(m_ba, j, min_support)) g.out_b[j] = GraphEdge{*t, m_ba.at(j, *t)};
  return g;
}

namespace {

bool is_mutual(const BipartiteGraph& g, Side side, std::uint32_t source) {
  const auto& e = g.edges(side)[source];
  if (!e) return false;
  const auto& back = g.edges(other_side(side))[e->target];
  return back && back->target == source;
}

RelationHypothesis subset_hypothesis(const BipartiteGraph& g, Side side, std::uint32_t source) {
  const auto& e = g.edges(side)[source];
  return {RelationKind::kSubset, g.ref(side, source), g.ref(other_side(side), e->target),
          e->count};
}

}  // namespace

Classification classify(const BipartiteGraph& g) {
  Classification result;

  // 2-cycles first: enumerate from side A so each pair is seen once.
  for (std::uint32_t i = 0; i < g.out_a.size(); ++i) {
    if (!is_mutual(g, Side::kA, i)) continue;
    const auto& e = *g.out_a[i];
    const auto& back = *g.out_b[e.target];
    ClassRef ra = g.ref(Side::kA, i);
    ClassRef rb = g.ref(Side::kB, e.target);
    RelationHypothesis h{RelationKind::kOverlap, std::min(ra, rb), std::max(ra, rb),
                         e.count + back.count};
    result.overlaps.push_back(std::move(h));
  }

  // One conflict pair per (incoming one-way edge, outgoing one-way edge)
  // combination at the middle vertex.
  std::vector<bool> conflicted_a(g.out_a.size(), false);
  std::vector<bool> conflicted_b(g.out_b.size(), false);
  auto conflicted = [&](Side s) -> std::vector<bool>& {
    return s == Side::kA ? conflicted_a : conflicted_b;
  };

  for (Side side : {Side::kA, Side::kB}) {
    const auto& outgoing = g.edges(side);
    for (std::uint32_t u = 0; u < outgoing.size(); ++u) {
      if (!outgoing[u] || is_mutual(g, side, u)) continue;
      const std::uint32_t v = outgoing[u]->target;
      const Side vside = other_side(side);
      const auto& vedge = g.edges(vside)[v];
      if (!vedge || is_mutual(g, vside, v)) continue;  // no escape edge, or excused by 2-cycle
      ConflictPair pair;
      pair.hypothesis_a = subset_hypothesis(g, side, u);
      pair.hypothesis_b = subset_hypothesis(g, vside, v);
      pair.triplet = {g.ref(side, u), g.ref(vside, v), g.ref(side, vedge->target)};
      result.conflicts.push_back(std::move(pair));
      conflicted(side)[u] = true;
      conflicted(vside)[v] = true;
    }
  }

  for (Side side : {Side::kA, Side::kB}) {
    const auto& outgoing = g.edges(side);
    for (std::uint32_t u = 0; u < outgoing.size(); ++u) {
      if (!outgoing[u] || is_mutual(g, side, u) || conflicted(side)[u]) continue;
      result.subsets.push_back(subset_hypothesis(g, side, u));
    }
  }

  auto by_subject = [](const RelationHypothesis& x, const RelationHypothesis& y) {
    return std::tie(x.subject, x.object) < std::tie(y.subject, y.object);
  };
  std::sort(result.overlaps.begin(), result.overlaps.end(), by_subject);
  std::sort(result.subsets.begin(), result.subsets.end(), by_subject);
  std::sort(result.conflicts.begin(), result.conflicts.end(),
            [](const ConflictPair& x, const ConflictPair& y) { return x.triplet < y.triplet; });
  return result;
}

namespace {

const char* side_name(Side s) { return s == Side::kA ? "a" : "b"; }

json taxonomy_json(const Taxonomy& t) {
  json j;
  j["dataset_id"] = t.dataset_id;
  j["classes"] = t.classes;
  if (t.meta) j["meta"] = true;
  return j;
}

Taxonomy taxonomy_from(const json& j) {
  Taxonomy t;
  t.dataset_id = j.at("dataset_id").get<std::string>();
  t.classes = j.at("classes").get<std::vector<std::string>>();
  t.meta = j.value("meta", false);
  return t;
}

json ref_json(const ClassRef& r) {
  return {{"dataset", r.dataset_id}, {"class", r.class_index}};
}

json hypothesis_json(const RelationHypothesis& h) {
  return {{"kind", h.kind == RelationKind::kOverlap ? "overlap" : "subset"},
          {"subject", ref_json(h.subject)},
          {"object", ref_json(h.object)},
          {"support", h.support}};
}

}  // namespace

std::string graph_to_json(const BipartiteGraph& g, const Classification& c) {
  json j;
  j["taxonomy_a"] = taxonomy_json(g.taxonomy_a);
  j["taxonomy_b"] = taxonomy_json(g.taxonomy_b);

  json edges = json::array();
  json unobserved = json::array();
  for (Side side : {Side::kA, Side::kB}) {
    const auto& out = g.edges(side);
    for (std::uint32_t i = 0; i < out.size(); ++i) {
      if (out[i]) {
        edges.push_back({{"side", side_name(side)},
                         {"source", i},
                         {"target", out[i]->target},
                         {"count", out[i]->count}});
      } else {
        unobserved.push_back({{"side", side_name(side)}, {"class", i}});
      }
    }
  }
  j["edges"] = edges;
  j["unobserved"] = unobserved;

  json cls;
  cls["overlaps"] = json::array();
  for (const auto& h : c.overlaps) cls["overlaps"].push_back(hypothesis_json(h));
  cls["subsets"] = json::array();
  for (const auto& h : c.subsets) cls["subsets"].push_back(hypothesis_json(h));
  cls["conflicts"] = json::array();
  for (const auto& p : c.conflicts)
    cls["conflicts"].push_back(
        {{"hypothesis_a", hypothesis_json(p.hypothesis_a)},
         {"hypothesis_b", hypothesis_json(p.hypothesis_b)},
         {"triplet",
          json::array({ref_json(p.triplet[0]), ref_json(p.triplet[1]), ref_json(p.triplet[2])})}});
  j["classification"] = cls;
  return j.dump(2) + "\n";
}

BipartiteGraph graph_from_json(const std::string& text) {
  const json j = json::parse(text);
  BipartiteGraph g;
  g.taxonomy_a = taxonomy_from(j.at("taxonomy_a"));
  g.taxonomy_b = taxonomy_from(j.at("taxonomy_b"));
  g.out_a.resize(g.taxonomy_a.size());
  g.out_b.resize(g.taxonomy_b.size());
  for (const auto& e : j.at("edges")) {
    const std::string side = e.at("side").get<std::string>();
    const auto source = e.at("source").get<std::uint32_t>();
    const auto target = e.at("target").get<std::uint32_t>();
    const auto count = e.at("count").get<std::uint64_t>();
    auto& out = side == "a" ? g.out_a : g.out_b;
    const auto limit = side == "a" ? g.taxonomy_b.size() : g.taxonomy_a.size();
    if (source >= out.size() || target >= limit)
      throw std::runtime_error("graph_from_json: edge index out of range");
    out[source] = GraphEdge{target, count};
  }
  return g;
}

BipartiteGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_graph: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return graph_from_json(ss.str());
  } catch (const json::exception& e) {
    throw std::runtime_error("load_graph: " + path.string() + ": " + e.what());
  }
}

void save_graph(const BipartiteGraph& g, const Classification& c,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_graph: cannot open " + path.string());
  out << graph_to_json(g, c);
}

std::string graph_to_dot(const BipartiteGraph& g, const Classification& c) {
  auto node_id = [](Side s, std::uint32_t i) {
    return std::string(side_name(s)) + std::to_string(i);
  };
  auto edge_color = [&](Side side, std::uint32_t source) -> const char* {
    const ClassRef from = g.ref(side, source);
    const ClassRef to = g.ref(other_side(side), g.edges(side)[source]->target);
    for (const auto& h : c.overlaps)
      if (h.links(from, to)) return "green";
    for (const auto& p : c.conflicts)
      if ((p.hypothesis_a.subject == from && p.hypothesis_a.object == to) ||
          (p.hypothesis_b.subject == from && p.hypothesis_b.object == to))
        return "red";
    return "orange";
  };

  std::ostringstream out;
  out << "digraph relations {\n  rankdir=LR;\n  node [shape=box];\n";
  for (Side side : {Side::kA, Side::kB}) {
    const auto& t = g.taxonomy(side);
    out << "  subgraph cluster_" << side_name(side) << " {\n    label=\"" << t.dataset_id
        << "\";\n";
    for (std::uint32_t i = 0; i < t.size(); ++i)
      out << "    " << node_id(side, i) << " [label=\"" << t.qualified_name(i) << "\"];\n";
    out << "  }\n";
  }
  for (Side side : {Side::kA, Side::kB}) {
    const auto& out_edges = g.edges(side);
    for (std::uint32_t i = 0; i < out_edges.size(); ++i) {
      if (!out_edges[i]) continue;
      out << "  " << node_id(side, i) << " -> " << node_id(other_side(side), out_edges[i]->target)
          << " [color=" << edge_color(side, i) << ", label=\"" << out_edges[i]->count << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace unitax
