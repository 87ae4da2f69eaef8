#include <doctest.h>

#include <fstream>

#include "test_util.hpp"
#include "unitax/taxonomy.hpp"

using namespace unitax;

TEST_CASE("validate_taxonomy accepts well-formed input") {
  Taxonomy t;
  t.dataset_id = "city";
  t.classes = {"road", "sky"};
  CHECK(validate_taxonomy(t).empty());
}

TEST_CASE("validate_taxonomy reports duplicate names") {
  Taxonomy t;
  t.dataset_id = "city";
  t.classes = {"road", "road"};
  const auto v = validate_taxonomy(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("duplicate name") != std::string::npos);
}

TEST_CASE("validate_taxonomy reports an empty class list") {
  Taxonomy t;
  t.dataset_id = "city";
  const auto v = validate_taxonomy(t);
  REQUIRE(!v.empty());
  CHECK(v[0].find("empty") != std::string::npos);
}

TEST_CASE("qualified names prefix the dataset for leaves only") {
  Taxonomy leaf = testutil::make_taxonomy("ade", 2);
  CHECK(leaf.qualified_name(1) == "ade-c1");
  Taxonomy meta;
  meta.dataset_id = "(a+b)";
  meta.classes = {"ade-car/vistas-car"};
  meta.meta = true;
  CHECK(meta.qualified_name(0) == "ade-car/vistas-car");
}

TEST_CASE("taxonomy JSON round trip is byte-stable") {
  testutil::TempDir tmp("tax");
  Taxonomy t = testutil::make_taxonomy("vistas", 5);
  const auto path = tmp.path() / "t.json";
  save_taxonomy(t, path);
  const Taxonomy back = load_taxonomy(path);
  CHECK(back.dataset_id == t.dataset_id);
  CHECK(back.classes == t.classes);

  const auto path2 = tmp.path() / "t2.json";
  save_taxonomy(back, path2);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("validate_universal flags non-disjoint mappings") {
  UniversalTaxonomy u;
  u.classes = {{"u0", {{"a", 0}}}, {"u1", {{"a", 1}}}};
  u.mappings["a"] = {{0, 1}, {1}};  // class 0 and class 1 both map to u1
  const auto v = validate_universal(u);
  bool found = false;
  for (const auto& msg : v) found |= msg.find("non-disjoint") != std::string::npos;
  CHECK(found);
}

TEST_CASE("validate_universal flags intra-dataset member pairs") {
  UniversalTaxonomy u;
  u.classes = {{"u0", {{"a", 0}, {"a", 1}}}};
  u.mappings["a"] = {{0}, {0}};
  const auto v = validate_universal(u);
  bool found = false;
  for (const auto& msg : v) found |= msg.find("intra-dataset member pair") != std::string::npos;
  CHECK(found);
}

TEST_CASE("validate_universal flags unmapped classes and missing images") {
  UniversalTaxonomy u;
  u.classes = {{"u0", {{"a", 0}}}};
  u.mappings["a"] = {{0}, {}};
  auto v = validate_universal(u);
  bool found = false;
  for (const auto& msg : v) found |= msg.find("unmapped dataset class") != std::string::npos;
  CHECK(found);

  // Member present but mapping image missing the universal class.
  UniversalTaxonomy w;
  w.classes = {{"u0", {{"a", 0}}}, {"u1", {{"a", 0}}}};
  w.mappings["a"] = {{0}};
  v = validate_universal(w);
  found = false;
  for (const auto& msg : v) found |= msg.find("missing from mapping image") != std::string::npos;
  CHECK(found);
}

TEST_CASE("universal taxonomy JSON round trip is byte-stable") {
  testutil::TempDir tmp("universal");
  UniversalTaxonomy u;
  u.classes = {{"a-c0/b-c0", {{"a", 0}, {"b", 0}}}, {"a-c1", {{"a", 1}, {"b", 0}}}};
  u.mappings["a"] = {{0}, {1}};
  u.mappings["b"] = {{0, 1}};

  const auto p1 = tmp.path() / "u1.json";
  const auto p2 = tmp.path() / "u2.json";
  save_universal(u, p1);
  const UniversalTaxonomy back = load_universal(p1);
  REQUIRE(back.classes.size() == u.classes.size());
  CHECK(back.classes[1].name == "a-c1");
  CHECK(back.mappings.at("b") == u.mappings.at("b"));
  save_universal(back, p2);
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("partial label matrix induces dataset scores by M*p") {
  PartialLabelMatrix m;
  m.dataset_id = "a";
  m.rows = 2;
  m.cols = 3;
  m.values = {1, 0, 1, 0, 1, 0};
  const auto scores = m.apply({0.2, 0.3, 0.5});
  CHECK(scores[0] == doctest::Approx(0.7));
  CHECK(scores[1] == doctest::Approx(0.3));
}
