#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "test_util.hpp"
#include "unitax/relation_graph.hpp"

using namespace unitax;

namespace {

CooccurrenceMatrix matrix_from(const Taxonomy& rows, const Taxonomy& cols,
                               const std::vector<std::vector<std::uint64_t>>& counts) {
  auto m = CooccurrenceMatrix::zero(rows, cols);
  for (std::size_t r = 0; r < counts.size(); ++r)
    for (std::size_t c = 0; c < counts[r].size(); ++c) {
      m.at(r, c) = counts[r][c];
      m.pixel_total += counts[r][c];
    }
  return m;
}

// Exhaustive pattern oracle: enumerates 2-cycles and all vertex triplets
// directly from the edge maps, independent of classify().
struct OraclePatterns {
  std::set<std::pair<std::uint32_t, std::uint32_t>> overlaps;            // (a, b)
  std::set<std::tuple<ClassRef, ClassRef, ClassRef>> conflicts;          // (u, v, w)
  std::set<std::pair<ClassRef, ClassRef>> subsets;                       // subject -> object
};

OraclePatterns pattern_oracle(const BipartiteGraph& g) {
  OraclePatterns out;
  auto target = [&](Side s, std::uint32_t v) -> std::optional<std::uint32_t> {
    const auto& e = g.edges(s)[v];
    return e ? std::optional<std::uint32_t>(e->target) : std::nullopt;
  };
  auto mutual = [&](Side s, std::uint32_t v) {
    const auto t = target(s, v);
    return t && target(other_side(s), *t) == std::optional<std::uint32_t>(v);
  };

  for (std::uint32_t i = 0; i < g.out_a.size(); ++i)
    if (mutual(Side::kA, i)) out.overlaps.insert({i, *target(Side::kA, i)});

  for (Side s : {Side::kA, Side::kB}) {
    for (std::uint32_t u = 0; u < g.edges(s).size(); ++u) {
      const auto v = target(s, u);
      if (!v || mutual(s, u)) continue;
      // Triplet scan: every same-side w reachable through v.
      bool in_conflict = false;
      const auto w = target(other_side(s), *v);
      if (w && !mutual(other_side(s), *v)) {
        out.conflicts.insert(
            {g.ref(s, u), g.ref(other_side(s), *v), g.ref(s, *w)});
        in_conflict = true;
      }
      // The edge also joins every conflict rooted at u itself.
      for (std::uint32_t x = 0; x < g.edges(other_side(s)).size(); ++x) {
        const auto xt = target(other_side(s), x);
        if (xt == std::optional<std::uint32_t>(u) && !mutual(other_side(s), x)) in_conflict = true;
      }
      if (!in_conflict) out.subsets.insert({g.ref(s, u), g.ref(other_side(s), *v)});
    }
  }
  return out;
}

void check_against_oracle(const BipartiteGraph& g, const Classification& cls) {
  const OraclePatterns oracle = pattern_oracle(g);

  CHECK(cls.overlaps.size() == oracle.overlaps.size());
  for (const auto& h : cls.overlaps) {
    const ClassRef a_ref = h.subject.dataset_id == g.taxonomy_a.dataset_id ? h.subject : h.object;
    const ClassRef b_ref = h.subject.dataset_id == g.taxonomy_a.dataset_id ? h.object : h.subject;
    CHECK(oracle.overlaps.count({a_ref.class_index, b_ref.class_index}));
  }

  CHECK(cls.conflicts.size() == oracle.conflicts.size());
  for (const auto& c : cls.conflicts)
    CHECK(oracle.conflicts.count({c.triplet[0], c.triplet[1], c.triplet[2]}));

  CHECK(cls.subsets.size() == oracle.subsets.size());
  for (const auto& h : cls.subsets) CHECK(oracle.subsets.count({h.subject, h.object}));
}

}  // namespace

TEST_CASE("mcfp is the row argmax with lowest-index ties") {
  const Taxonomy ta = testutil::make_taxonomy("a", 1);
  const Taxonomy tb = testutil::make_taxonomy("b", 3);
  auto m = matrix_from(ta, tb, {{0, 90, 10}});
  CHECK(mcfp(m, 0) == 1u);

  m = matrix_from(ta, tb, {{5, 9, 9}});
  CHECK(mcfp(m, 0) == 1u);  // tie between columns 1 and 2

  m = matrix_from(ta, tb, {{0, 0, 0}});
  CHECK(!mcfp(m, 0).has_value());

  CHECK_THROWS_AS(mcfp(m, 5), std::out_of_range);
}

TEST_CASE("mcfp honors the min-support fraction") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 3);
  const auto m = matrix_from(ta, tb, {{8, 1, 1}, {4, 3, 3}});
  CHECK(mcfp(m, 0, 0.5) == 0u);       // 8 of 10
  CHECK(!mcfp(m, 1, 0.5).has_value());  // 4 of 10 falls below half
  CHECK(mcfp(m, 1, 0.0) == 0u);
}

TEST_CASE("mcfp against a brute-force argmax oracle on a random matrix") {
  std::mt19937_64 rng(13);
  const Taxonomy ta = testutil::make_taxonomy("a", 50);
  const Taxonomy tb = testutil::make_taxonomy("b", 70);
  auto m = CooccurrenceMatrix::zero(ta, tb);
  std::uniform_int_distribution<std::uint64_t> dist(0, 30);
  for (auto& v : m.counts) v = dist(rng);
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::uint64_t best = 0;
    std::optional<std::uint32_t> expect;
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (m.at(r, c) > best) {
        best = m.at(r, c);
        expect = static_cast<std::uint32_t>(c);
      }
    }
    CHECK(mcfp(m, r) == expect);
  }
}

TEST_CASE("identity matrices give a perfect matching of mutual edges") {
  const Taxonomy ta = testutil::make_taxonomy("a", 4);
  const Taxonomy tb = testutil::make_taxonomy("b", 4);
  auto m_ab = CooccurrenceMatrix::zero(ta, tb);
  auto m_ba = CooccurrenceMatrix::zero(tb, ta);
  for (std::size_t i = 0; i < 4; ++i) m_ab.at(i, i) = m_ba.at(i, i) = 10;

  const auto g = build_graph(m_ab, m_ba, ta, tb);
  const auto cls = classify(g);
  CHECK(cls.overlaps.size() == 4);
  CHECK(cls.subsets.empty());
  CHECK(cls.conflicts.empty());
  check_against_oracle(g, cls);
}

TEST_CASE("an incoming edge into a 2-cycle vertex is a subset, not a conflict") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 1);
  // a0 <-> b0 overlap; a1 -> b0 while b0's edge returns to a0.
  const auto m_ab = matrix_from(ta, tb, {{10}, {4}});
  const auto m_ba = matrix_from(tb, ta, {{9, 3}});
  const auto g = build_graph(m_ab, m_ba, ta, tb);
  const auto cls = classify(g);
  REQUIRE(cls.overlaps.size() == 1);
  REQUIRE(cls.subsets.size() == 1);
  CHECK(cls.conflicts.empty());
  CHECK(cls.subsets[0].subject == ClassRef{"a", 1});
  CHECK(cls.subsets[0].object == ClassRef{"b", 0});
  CHECK(cls.subsets[0].support == 4);
  check_against_oracle(g, cls);
}

TEST_CASE("an inconsistent triplet yields one conflict pair per incoming edge") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 2);
  // a0 -> b0 -> a1, where a1 -> b1 (does not point back at b0), b1 -> a1.
  const auto m_ab = matrix_from(ta, tb, {{7, 0}, {2, 8}});
  const auto m_ba = matrix_from(tb, ta, {{3, 6}, {0, 9}});
  const auto g = build_graph(m_ab, m_ba, ta, tb);
  const auto cls = classify(g);
  REQUIRE(cls.overlaps.size() == 1);  // a1 <-> b1
  REQUIRE(cls.conflicts.size() == 1);
  const auto& c = cls.conflicts[0];
  CHECK(c.hypothesis_a.subject == ClassRef{"a", 0});
  CHECK(c.hypothesis_a.object == ClassRef{"b", 0});
  CHECK(c.hypothesis_b.subject == ClassRef{"b", 0});
  CHECK(c.hypothesis_b.object == ClassRef{"a", 1});
  CHECK(c.hypothesis_a.support == 7);
  CHECK(c.hypothesis_b.support == 6);
  CHECK(cls.subsets.empty());
  check_against_oracle(g, cls);
}

TEST_CASE("seven-plus-seven matrix pair with the depicted mixed structure") {
  const Taxonomy ta = testutil::make_taxonomy("a", 7);
  const Taxonomy tb = testutil::make_taxonomy("b", 7);
  // Three 2-cycles (a0b0, a1b1, a2b2), two one-way subsets into the cycles
  // (a6 -> b0, b6 -> a1), and two inconsistent triplets terminating at
  // unobserved vertices: a3 -> b3 -> a4 and b4 -> a5 -> b5.
  const auto m_ab = matrix_from(ta, tb,
                                {{9, 0, 0, 0, 0, 0, 0},
                                 {0, 9, 0, 0, 0, 0, 0},
                                 {0, 0, 9, 0, 0, 0, 0},
                                 {0, 0, 0, 7, 0, 0, 0},
                                 {0, 0, 0, 0, 0, 0, 0},
                                 {0, 0, 0, 0, 0, 7, 0},
                                 {3, 0, 0, 0, 0, 0, 0}});
  const auto m_ba = matrix_from(tb, ta,
                                {{9, 0, 0, 0, 0, 0, 0},
                                 {0, 9, 0, 0, 0, 0, 0},
                                 {0, 0, 9, 0, 0, 0, 0},
                                 {0, 0, 0, 2, 6, 0, 0},
                                 {0, 0, 0, 0, 0, 6, 0},
                                 {0, 0, 0, 0, 0, 0, 0},
                                 {0, 3, 0, 0, 0, 0, 0}});
  const auto g = build_graph(m_ab, m_ba, ta, tb);
  const auto cls = classify(g);
  CHECK(cls.overlaps.size() == 3);
  CHECK(cls.subsets.size() == 2);
  CHECK(cls.conflicts.size() == 2);
  CHECK(g.edge_count() == 12);
  check_against_oracle(g, cls);

  // Edge partition: every edge accounted for exactly once here.
  CHECK(2 * cls.overlaps.size() + cls.subsets.size() + 2 * cls.conflicts.size() ==
        g.edge_count());
}

TEST_CASE("classification matches the exhaustive oracle on random graphs") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t na = 2 + rng() % 9;
    const std::size_t nb = 2 + rng() % 9;
    const Taxonomy ta = testutil::make_taxonomy("a", na);
    const Taxonomy tb = testutil::make_taxonomy("b", nb);
    auto m_ab = CooccurrenceMatrix::zero(ta, tb);
    auto m_ba = CooccurrenceMatrix::zero(tb, ta);
    // Sparse random rows; some rows stay all-zero (unobserved classes).
    for (std::size_t r = 0; r < na; ++r)
      if (rng() % 5) m_ab.at(r, rng() % nb) = 1 + rng() % 50;
    for (std::size_t r = 0; r < nb; ++r)
      if (rng() % 5) m_ba.at(r, rng() % na) = 1 + rng() % 50;

    const auto g = build_graph(m_ab, m_ba, ta, tb);
    const auto cls = classify(g);
    check_against_oracle(g, cls);

    // Partition property with shared conflict edges counted once.
    std::set<std::pair<std::string, std::uint32_t>> conflict_edges;
    for (const auto& c : cls.conflicts) {
      conflict_edges.insert({c.hypothesis_a.subject.dataset_id,
                             c.hypothesis_a.subject.class_index});
      conflict_edges.insert({c.hypothesis_b.subject.dataset_id,
                             c.hypothesis_b.subject.class_index});
    }
    CHECK(2 * cls.overlaps.size() + cls.subsets.size() + conflict_edges.size() ==
          g.edge_count());
  }
}

TEST_CASE("classification is invariant under consistent class permutation") {
  std::mt19937_64 rng(31);
  const std::size_t na = 6, nb = 7;
  const Taxonomy ta = testutil::make_taxonomy("a", na);
  const Taxonomy tb = testutil::make_taxonomy("b", nb);
  auto m_ab = CooccurrenceMatrix::zero(ta, tb);
  auto m_ba = CooccurrenceMatrix::zero(tb, ta);
  for (std::size_t r = 0; r < na; ++r) m_ab.at(r, rng() % nb) = 1 + rng() % 20;
  for (std::size_t r = 0; r < nb; ++r) m_ba.at(r, rng() % na) = 1 + rng() % 20;

  std::vector<std::uint32_t> pa(na), pb(nb);
  std::iota(pa.begin(), pa.end(), 0);
  std::iota(pb.begin(), pb.end(), 0);
  std::shuffle(pa.begin(), pa.end(), rng);
  std::shuffle(pb.begin(), pb.end(), rng);

  auto p_ab = CooccurrenceMatrix::zero(ta, tb);
  auto p_ba = CooccurrenceMatrix::zero(tb, ta);
  for (std::size_t r = 0; r < na; ++r)
    for (std::size_t c = 0; c < nb; ++c) p_ab.at(pa[r], pb[c]) = m_ab.at(r, c);
  for (std::size_t r = 0; r < nb; ++r)
    for (std::size_t c = 0; c < na; ++c) p_ba.at(pb[r], pa[c]) = m_ba.at(r, c);

  const auto cls = classify(build_graph(m_ab, m_ba, ta, tb));
  const auto pcls = classify(build_graph(p_ab, p_ba, ta, tb));

  auto mapped = [&](const ClassRef& r) -> ClassRef {
    return {r.dataset_id, r.dataset_id == "a" ? pa[r.class_index] : pb[r.class_index]};
  };
  REQUIRE(cls.overlaps.size() == pcls.overlaps.size());
  REQUIRE(cls.subsets.size() == pcls.subsets.size());
  REQUIRE(cls.conflicts.size() == pcls.conflicts.size());
  for (const auto& h : cls.subsets) {
    bool found = false;
    for (const auto& ph : pcls.subsets)
      found |= ph.subject == mapped(h.subject) && ph.object == mapped(h.object) &&
               ph.support == h.support;
    CHECK(found);
  }
  for (const auto& c : cls.conflicts) {
    bool found = false;
    for (const auto& pc : pcls.conflicts)
      found |= pc.triplet[0] == mapped(c.triplet[0]) && pc.triplet[1] == mapped(c.triplet[1]) &&
               pc.triplet[2] == mapped(c.triplet[2]);
    CHECK(found);
  }
}

TEST_CASE("build_graph rejects mismatched matrices") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 2);
  const Taxonomy tc = testutil::make_taxonomy("c", 2);
  const auto m_ab = CooccurrenceMatrix::zero(ta, tb);
  const auto m_ca = CooccurrenceMatrix::zero(tc, ta);
  CHECK_THROWS_WITH_AS(build_graph(m_ab, m_ca, ta, tb), doctest::Contains("taxonomy mismatch"),
                       std::invalid_argument);
}

TEST_CASE("graph JSON round trip preserves edges and taxonomies") {
  testutil::TempDir tmp("graph");
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 2);
  const auto m_ab = matrix_from(ta, tb, {{7, 0}, {2, 8}});
  const auto m_ba = matrix_from(tb, ta, {{3, 6}, {0, 9}});
  const auto g = build_graph(m_ab, m_ba, ta, tb);
  const auto cls = classify(g);

  const auto path = tmp.path() / "g.json";
  save_graph(g, cls, path);
  const auto back = load_graph(path);
  CHECK(back.taxonomy_a.dataset_id == "a");
  CHECK(back.edge_count() == g.edge_count());
  for (Side s : {Side::kA, Side::kB})
    for (std::size_t i = 0; i < back.edges(s).size(); ++i) {
      REQUIRE(back.edges(s)[i].has_value() == g.edges(s)[i].has_value());
      if (g.edges(s)[i]) {
        CHECK(back.edges(s)[i]->target == g.edges(s)[i]->target);
        CHECK(back.edges(s)[i]->count == g.edges(s)[i]->count);
      }
    }

  const std::string dot = graph_to_dot(back, classify(back));
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("green") != std::string::npos);   // overlap edges
  CHECK(dot.find("red") != std::string::npos);      // conflict edges
}

TEST_CASE("remove_edge turns a vertex into a singleton source") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 2);
  const auto m_ab = matrix_from(ta, tb, {{7, 0}, {2, 8}});
  const auto m_ba = matrix_from(tb, ta, {{3, 6}, {0, 9}});
  auto g = build_graph(m_ab, m_ba, ta, tb);
  const auto before = g.edge_count();
  g.remove_edge(Side::kA, 0);
  CHECK(g.edge_count() == before - 1);
  CHECK(!g.out_a[0].has_value());
  CHECK(classify(g).conflicts.empty());
}
