#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "test_util.hpp"
#include "unitax/cooccurrence.hpp"

using namespace unitax;

namespace {

// Brute-force oracle: plain nested per-pixel counting, independent of the
// accumulator implementation.
std::vector<std::uint64_t> counting_oracle(const LabelRaster& rows, const LabelRaster& cols,
                                           std::size_t nr, std::size_t nc) {
  std::vector<std::uint64_t> counts(nr * nc, 0);
  for (std::size_t p = 0; p < rows.labels.size(); ++p) {
    const auto r = rows.labels[p];
    const auto c = cols.labels[p];
    if (r == kVoidLabel || c == kVoidLabel) continue;
    counts[r * nc + c] += 1;
  }
  return counts;
}

}  // namespace

TEST_CASE("accumulate counts gt/prediction pairs directly") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 3);
  auto acc = CooccurrenceMatrix::zero(ta, tb);
  accumulate_cooccurrence(testutil::make_raster("a", {0, 0, 1}),
                          testutil::make_raster("b", {2, 2, 0}), acc);
  CHECK(acc.at(0, 2) == 2);
  CHECK(acc.at(1, 0) == 1);
  CHECK(acc.pixel_total == 3);
}

TEST_CASE("void on either side contributes nothing") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 2);
  auto acc = CooccurrenceMatrix::zero(ta, tb);
  accumulate_cooccurrence(testutil::make_raster("a", {0, kVoidLabel}),
                          testutil::make_raster("b", {1, 1}), acc);
  CHECK(acc.at(0, 1) == 1);
  CHECK(acc.pixel_total == 1);

  accumulate_cooccurrence(testutil::make_raster("a", {0, 1}),
                          testutil::make_raster("b", {kVoidLabel, 1}), acc);
  CHECK(acc.pixel_total == 2);
  CHECK(acc.at(1, 1) == 1);
}

TEST_CASE("coincidence counting matches the same definition") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 2);
  auto acc = CooccurrenceMatrix::zero(ta, tb);
  accumulate_coincidence(testutil::make_raster("a", {0, 1}), testutil::make_raster("b", {1, 1}),
                         acc);
  CHECK(acc.at(0, 1) == 1);
  CHECK(acc.at(1, 1) == 1);
}

TEST_CASE("identical rasters give a diagonal coincidence matrix") {
  const Taxonomy ta = testutil::make_taxonomy("a", 3);
  const Taxonomy tb = testutil::make_taxonomy("b", 3);
  auto acc = CooccurrenceMatrix::zero(ta, tb);
  const auto r = testutil::make_raster("", {0, 1, 2, 2, 1, 0});
  auto ra = r, rb = r;
  ra.taxonomy_id = "a";
  rb.taxonomy_id = "b";
  accumulate_coincidence(ra, rb, acc);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(acc.at(i, j) == (i == j ? 2u : 0u));
}

TEST_CASE("random rasters equal the nested-loop counting oracle") {
  std::mt19937_64 rng(7);
  const Taxonomy ta = testutil::make_taxonomy("a", 5);
  const Taxonomy tb = testutil::make_taxonomy("b", 7);
  auto acc = CooccurrenceMatrix::zero(ta, tb);
  std::vector<std::uint64_t> expected(5 * 7, 0);
  for (int i = 0; i < 3; ++i) {
    const auto rows = testutil::random_raster("a", 64, 64, 5, rng, 0.1);
    const auto cols = testutil::random_raster("b", 64, 64, 7, rng, 0.1);
    accumulate_cooccurrence(rows, cols, acc);
    const auto part = counting_oracle(rows, cols, 5, 7);
    for (std::size_t k = 0; k < part.size(); ++k) expected[k] += part[k];
  }
  CHECK(acc.counts == expected);
  std::uint64_t total = 0;
  for (auto v : expected) total += v;
  CHECK(acc.pixel_total == total);
}

TEST_CASE("accumulation order does not matter and partial merge equals sequential") {
  std::mt19937_64 rng(11);
  const Taxonomy ta = testutil::make_taxonomy("a", 4);
  const Taxonomy tb = testutil::make_taxonomy("b", 4);

  std::vector<std::pair<LabelRaster, LabelRaster>> pairs;
  for (int i = 0; i < 6; ++i)
    pairs.push_back({testutil::random_raster("a", 16, 16, 4, rng, 0.05),
                     testutil::random_raster("b", 16, 16, 4, rng, 0.05)});

  auto sequential = CooccurrenceMatrix::zero(ta, tb);
  for (const auto& [r, c] : pairs) accumulate_cooccurrence(r, c, sequential);

  auto reversed = CooccurrenceMatrix::zero(ta, tb);
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it)
    accumulate_cooccurrence(it->first, it->second, reversed);
  CHECK(sequential.counts == reversed.counts);

  std::vector<std::pair<const LabelRaster*, const LabelRaster*>> ptrs;
  for (const auto& [r, c] : pairs) ptrs.push_back({&r, &c});
  for (unsigned threads : {2u, 3u, 5u}) {
    const auto parallel = accumulate_parallel(ptrs, ta, tb, threads);
    CHECK(parallel.counts == sequential.counts);
    CHECK(parallel.pixel_total == sequential.pixel_total);
  }
}

TEST_CASE("dimension and taxonomy mismatches are rejected") {
  const Taxonomy ta = testutil::make_taxonomy("a", 2);
  const Taxonomy tb = testutil::make_taxonomy("b", 2);
  auto acc = CooccurrenceMatrix::zero(ta, tb);
  CHECK_THROWS_AS(accumulate_cooccurrence(testutil::make_raster("a", {0, 1}),
                                          testutil::make_raster("b", {0}), acc),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(accumulate_cooccurrence(testutil::make_raster("b", {0}),
                                               testutil::make_raster("b", {0}), acc),
                       doctest::Contains("taxonomy mismatch"), std::invalid_argument);
}

TEST_CASE("co-occurrence CSV round trips exactly") {
  testutil::TempDir tmp("csv");
  Taxonomy ta = testutil::make_taxonomy("a", 2);
  Taxonomy tb = testutil::make_taxonomy("b", 3);
  ta.classes[1] = "with,comma";  // quoting must survive
  auto m = CooccurrenceMatrix::zero(ta, tb);
  m.at(0, 0) = 5;
  m.at(1, 2) = 123456789012345ull;  // 64-bit counts
  m.pixel_total = 5 + 123456789012345ull;

  const auto path = tmp.path() / "m.csv";
  save_cooccurrence_csv(m, ta, tb, path);
  const auto back = load_cooccurrence_csv(path);
  CHECK(back.row_taxonomy_id == "a");
  CHECK(back.col_taxonomy_id == "b");
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK(back.counts == m.counts);
  CHECK(back.pixel_total == m.pixel_total);
}

TEST_CASE("malformed CSV rows are rejected") {
  testutil::TempDir tmp("badcsv");
  const auto path = tmp.path() / "bad.csv";
  std::ofstream(path) << "a\\b,c0,c1\nr0,1,2\nr1,3\n";
  CHECK_THROWS_WITH_AS(load_cooccurrence_csv(path), doctest::Contains("malformed row"),
                       std::runtime_error);

  std::ofstream(path) << "a\\b,c0\nr0,xyz\n";
  CHECK_THROWS_WITH_AS(load_cooccurrence_csv(path), doctest::Contains("non-numeric"),
                       std::runtime_error);
}
