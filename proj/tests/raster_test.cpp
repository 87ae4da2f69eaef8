#include <doctest.h>

#include <cstdint>
#include <fstream>

#include "test_util.hpp"
#include "unitax/raster.hpp"

using namespace unitax;

namespace {

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

}  // namespace

TEST_CASE("label raster round trip preserves labels and void") {
  testutil::TempDir tmp("raster");
  LabelRaster r = testutil::make_raster("a", {0, 1, 2, kVoidLabel, 1, 0}, 3);

  SUBCASE("8-bit") {
    save_raster(r, tmp.path() / "r.segr", 8);
    const LabelRaster back = load_raster(tmp.path() / "r.segr");
    CHECK(back.width == r.width);
    CHECK(back.height == r.height);
    CHECK(back.labels == r.labels);
  }
  SUBCASE("16-bit") {
    save_raster(r, tmp.path() / "r.segr", 16);
    const LabelRaster back = load_raster(tmp.path() / "r.segr");
    CHECK(back.labels == r.labels);
  }
  SUBCASE("narrowest fit picks 8-bit for small label ranges") {
    save_raster(r, tmp.path() / "r.segr");
    std::ifstream in(tmp.path() / "r.segr", std::ios::binary);
    char header[6];
    in.read(header, 6);
    CHECK(header[5] == 8);
  }
}

TEST_CASE("save_raster rejects labels that do not fit 8 bits") {
  testutil::TempDir tmp("raster8");
  LabelRaster r = testutil::make_raster("a", {300});
  CHECK_THROWS_WITH_AS(save_raster(r, tmp.path() / "r.segr", 8),
                       doctest::Contains("do not fit"), std::invalid_argument);
}

TEST_CASE("truncated raster payload is rejected") {
  testutil::TempDir tmp("trunc");
  const auto path = tmp.path() / "bad.segr";
  write_bytes(path, {'S', 'E', 'G', 'R', 1, 8, 4, 0, 0, 0, 1, 0, 0, 0, 7, 7});  // 4x1, 2 labels
  CHECK_THROWS_WITH_AS(load_raster(path), doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("bad magic is rejected") {
  testutil::TempDir tmp("magic");
  const auto path = tmp.path() / "bad.segr";
  write_bytes(path, {'X', 'X', 'X', 'X', 1, 8, 1, 0, 0, 0, 1, 0, 0, 0, 0});
  CHECK_THROWS_WITH_AS(load_raster(path), doctest::Contains("bad magic"), std::runtime_error);
}

TEST_CASE("8-bit PGM is accepted for interchange") {
  testutil::TempDir tmp("pgm8");
  const auto path = tmp.path() / "r.pgm";
  std::vector<unsigned char> bytes;
  for (char c : std::string("P5\n# comment\n3 2\n255\n")) bytes.push_back(c);
  for (unsigned char v : {0, 1, 2, 255, 1, 0}) bytes.push_back(v);
  write_bytes(path, bytes);
  const LabelRaster r = load_raster(path);
  CHECK(r.width == 3);
  CHECK(r.height == 2);
  CHECK(r.labels == std::vector<std::uint16_t>{0, 1, 2, kVoidLabel, 1, 0});
}

TEST_CASE("16-bit PGM samples are big-endian") {
  testutil::TempDir tmp("pgm16");
  const auto path = tmp.path() / "r.pgm";
  std::vector<unsigned char> bytes;
  for (char c : std::string("P5\n2 1\n65535\n")) bytes.push_back(c);
  // 0x0102 = 258 and 0xFFFF = void
  for (unsigned char v : {1, 2, 255, 255}) bytes.push_back(v);
  write_bytes(path, bytes);
  const LabelRaster r = load_raster(path);
  CHECK(r.labels == std::vector<std::uint16_t>{258, kVoidLabel});
}

TEST_CASE("validate_raster reports out-of-range labels") {
  const Taxonomy t = testutil::make_taxonomy("a", 3);
  LabelRaster r = testutil::make_raster("a", {0, 1, 5});
  const auto v = validate_raster(r, t);
  REQUIRE(!v.empty());
  CHECK(v[0].find("out-of-range label") != std::string::npos);
  CHECK(validate_raster(testutil::make_raster("a", {0, 1, kVoidLabel}), t).empty());
}

TEST_CASE("posterior dump round trip and invariants") {
  testutil::TempDir tmp("dump");
  PosteriorDump d;
  d.width = 2;
  d.height = 1;
  d.top_k = 3;
  d.classes = {0, 2, kVoidLabel, 1, 0, kVoidLabel};
  d.probs = {0.6f, 0.4f, 0.0f, 0.9f, 0.1f, 0.0f};

  const auto path = tmp.path() / "d.segp";
  save_posterior_dump(d, path);
  const PosteriorDump back = load_posterior_dump(path);
  CHECK(back.top_k == 3);
  CHECK(back.classes == d.classes);
  CHECK(back.probs == d.probs);
  CHECK(validate_dump(back, 3).empty());
}

TEST_CASE("validate_dump catches ordering, range and duplicate violations") {
  PosteriorDump d;
  d.width = 1;
  d.height = 1;
  d.top_k = 2;

  d.classes = {0, 1};
  d.probs = {0.2f, 0.5f};  // increasing
  CHECK(!validate_dump(d, 3).empty());

  d.probs = {0.5f, 0.2f};
  d.classes = {0, 7};  // out of range
  CHECK(!validate_dump(d, 3).empty());

  d.classes = {1, 1};  // duplicate
  CHECK(!validate_dump(d, 3).empty());

  d.classes = {1, 2};
  d.probs = {0.8f, 0.7f};  // sums above 1
  CHECK(!validate_dump(d, 3).empty());

  d.probs = {0.8f, 0.2f};
  CHECK(validate_dump(d, 3).empty());
}

TEST_CASE("truncated dump payload is rejected") {
  testutil::TempDir tmp("dumptrunc");
  const auto path = tmp.path() / "bad.segp";
  std::vector<unsigned char> bytes = {'S', 'E', 'G', 'P', 1, 2, 0, 1, 0, 0, 0, 1, 0, 0, 0};
  bytes.push_back(0);  // half an entry
  write_bytes(path, bytes);
  CHECK_THROWS_WITH_AS(load_posterior_dump(path), doctest::Contains("truncated"),
                       std::runtime_error);
}
