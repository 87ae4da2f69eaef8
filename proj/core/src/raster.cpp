#include "unitax/raster.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace unitax {

namespace {

constexpr char kRasterMagic[4] = {'S', 'E', 'G', 'R'};
constexpr char kDumpMagic[4] = {'S', 'E', 'G', 'P'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void write_f32(std::ostream& out, float v) {
  static_assert(sizeof(float) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

struct Reader {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos = 0;
  std::string context;

  void need(std::size_t n) const {
    if (pos + n > size) throw std::runtime_error(context + ": truncated payload");
  }
  std::uint8_t u8() {
    need(1);
    return data[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(data[pos]) |
                      (static_cast<std::uint32_t>(data[pos + 1]) << 8) |
                      (static_cast<std::uint32_t>(data[pos + 2]) << 16) |
                      (static_cast<std::uint32_t>(data[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

std::vector<unsigned char> read_file(const std::filesystem::path& path, const char* who) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string(who) + ": cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

// PGM (P5) header: token-based with '#' comments allowed between tokens.
std::uint32_t pgm_token(Reader& r) {
  while (r.pos < r.size) {
    unsigned char c = r.data[r.pos];
    if (c == '#') {
      while (r.pos < r.size && r.data[r.pos] != '\n') ++r.pos;
    } else if (std::isspace(c)) {
      ++r.pos;
    } else {
      break;
    }
  }
  if (r.pos >= r.size || !std::isdigit(r.data[r.pos]))
    throw std::runtime_error(r.context + ": malformed header");
  std::uint64_t v = 0;
  while (r.pos < r.size && std::isdigit(r.data[r.pos])) {
    v = v * 10 + (r.data[r.pos] - '0');
    if (v > 0xFFFFFFFFull) throw std::runtime_error(r.context + ": malformed header");
    ++r.pos;
  }
  return static_cast<std::uint32_t>(v);
}

LabelRaster load_pgm(Reader& r) {
  r.pos = 2;  // past "P5"
  const std::uint32_t width = pgm_token(r);
  const std::uint32_t height = pgm_token(r);
  const std::uint32_t maxval = pgm_token(r);
  if (maxval != 255 && maxval != 65535)
    throw std::runtime_error(r.context + ": unsupported PGM maxval " + std::to_string(maxval));
  r.need(1);
  ++r.pos;  // single whitespace byte before samples

  LabelRaster raster;
  raster.width = width;
  raster.height = height;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  raster.labels.resize(n);
  if (maxval == 255) {
    r.need(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t v = r.data[r.pos + i];
      raster.labels[i] = (v == 255) ? kVoidLabel : v;
    }
  } else {
    r.need(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      // PGM 16-bit samples are big-endian.
      raster.labels[i] = static_cast<std::uint16_t>((r.data[r.pos + 2 * i] << 8) |
                                                    r.data[r.pos + 2 * i + 1]);
    }
  }
  return raster;
}

}  // namespace

LabelRaster load_raster(const std::filesystem::path& path) {
  const auto bytes = read_file(path, "load_raster");
  Reader r{bytes.data(), bytes.size(), 0, "load_raster: " + path.string()};

  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return load_pgm(r);

  r.need(4);
  if (std::memcmp(bytes.data(), kRasterMagic, 4) != 0)
    throw std::runtime_error(r.context + ": bad magic");
  r.pos = 4;
  const std::uint8_t version = r.u8();
  if (version != 1) throw std::runtime_error(r.context + ": unsupported version");
  const std::uint8_t bits = r.u8();
  if (bits != 8 && bits != 16) throw std::runtime_error(r.context + ": bad bits-per-label");

  LabelRaster raster;
  raster.width = r.u32();
  raster.height = r.u32();
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;
  raster.labels.resize(n);
  if (bits == 8) {
    r.need(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t v = r.data[r.pos + i];
      raster.labels[i] = (v == 255) ? kVoidLabel : v;
    }
    r.pos += n;
  } else {
    r.need(n * 2);
    for (std::size_t i = 0; i < n; ++i)
      raster.labels[i] = static_cast<std::uint16_t>(r.data[r.pos + 2 * i] |
                                                    (r.data[r.pos + 2 * i + 1] << 8));
    r.pos += n * 2;
  }
  if (r.pos != r.size) throw std::runtime_error(r.context + ": trailing bytes");
  return raster;
}

void save_raster(const LabelRaster& raster, const std::filesystem::path& path,
                 int bits_per_label) {
  std::uint16_t max_label = 0;
  for (auto v : raster.labels)
    if (v != kVoidLabel && v > max_label) max_label = v;
  int bits = bits_per_label;
  if (bits == 0) bits = (max_label < 255) ? 8 : 16;
  if (bits != 8 && bits != 16)
    throw std::invalid_argument("save_raster: bits_per_label must be 8 or 16");
  if (bits == 8 && max_label >= 255)
    throw std::invalid_argument("save_raster: labels do not fit in 8 bits");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_raster: cannot open " + path.string());
  out.write(kRasterMagic, 4);
  out.put(1);
  out.put(static_cast<char>(bits));
  write_u32(out, raster.width);
  write_u32(out, raster.height);
  if (bits == 8) {
    for (auto v : raster.labels) out.put(static_cast<char>(v == kVoidLabel ? 255 : v));
  } else {
    for (auto v : raster.labels) write_u16(out, v);
  }
  if (!out) throw std::runtime_error("save_raster: write failed for " + path.string());
}

PosteriorDump load_posterior_dump(const std::filesystem::path& path) {
  const auto bytes = read_file(path, "load_posterior_dump");
  Reader r{bytes.data(), bytes.size(), 0, "load_posterior_dump: " + path.string()};
  r.need(4);
  if (std::memcmp(bytes.data(), kDumpMagic, 4) != 0)
    throw std::runtime_error(r.context + ": bad magic");
  r.pos = 4;
  if (r.u8() != 1) throw std::runtime_error(r.context + ": unsupported version");

  PosteriorDump dump;
  dump.top_k = r.u16();
  dump.width = r.u32();
  dump.height = r.u32();
  if (dump.top_k == 0) throw std::runtime_error(r.context + ": zero top-K");
  const std::size_t entries = static_cast<std::size_t>(dump.width) * dump.height * dump.top_k;
  dump.classes.resize(entries);
  dump.probs.resize(entries);
  for (std::size_t i = 0; i < entries; ++i) {
    dump.classes[i] = r.u16();
    dump.probs[i] = r.f32();
  }
  if (r.pos != r.size) throw std::runtime_error(r.context + ": trailing bytes");
  return dump;
}

void save_posterior_dump(const PosteriorDump& dump, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_posterior_dump: cannot open " + path.string());
  out.write(kDumpMagic, 4);
  out.put(1);
  write_u16(out, dump.top_k);
  write_u32(out, dump.width);
  write_u32(out, dump.height);
  const std::size_t entries = static_cast<std::size_t>(dump.width) * dump.height * dump.top_k;
  if (dump.classes.size() != entries || dump.probs.size() != entries)
    throw std::invalid_argument("save_posterior_dump: entry count mismatch");
  for (std::size_t i = 0; i < entries; ++i) {
    write_u16(out, dump.classes[i]);
    write_f32(out, dump.probs[i]);
  }
  if (!out) throw std::runtime_error("save_posterior_dump: write failed for " + path.string());
}

std::vector<std::string> validate_raster(const LabelRaster& raster, const Taxonomy& taxonomy) {
  std::vector<std::string> violations;
  if (raster.labels.size() != static_cast<std::size_t>(raster.width) * raster.height)
    violations.push_back("label count does not match dimensions");
  for (std::size_t i = 0; i < raster.labels.size(); ++i) {
    if (raster.labels[i] != kVoidLabel && raster.labels[i] >= taxonomy.size()) {
      violations.push_back("out-of-range label " + std::to_string(raster.labels[i]) +
                           " at pixel " + std::to_string(i));
      break;  // one representative per raster keeps reports short
    }
  }
  return violations;
}

std::vector<std::string> validate_dump(const PosteriorDump& dump, std::size_t num_classes) {
  std::vector<std::string> violations;
  const std::size_t n = dump.pixels();
  if (dump.classes.size() != n * dump.top_k)
    violations.push_back("entry count does not match dimensions");
  for (std::size_t p = 0; p < n && violations.empty(); ++p) {
    auto cls = dump.pixel_classes(p);
    auto prb = dump.pixel_probs(p);
    double sum = 0.0;
    float prev = 1.0f;
    for (std::size_t k = 0; k < cls.size(); ++k) {
      if (cls[k] == kVoidLabel) {
        if (prb[k] != 0.0f)
          violations.push_back("padding slot with nonzero probability at pixel " +
                               std::to_string(p));
        continue;
      }
      if (cls[k] >= num_classes)
        violations.push_back("out-of-range class index at pixel " + std::to_string(p));
      if (prb[k] < 0.0f || prb[k] > 1.0f)
        violations.push_back("probability outside [0,1] at pixel " + std::to_string(p));
      if (prb[k] > prev)
        violations.push_back("probabilities not non-increasing at pixel " + std::to_string(p));
      for (std::size_t m = 0; m < k; ++m)
        if (cls[m] == cls[k])
          violations.push_back("repeated class index at pixel " + std::to_string(p));
      prev = prb[k];
      sum += prb[k];
    }
    if (sum > 1.0 + 1e-5)
      violations.push_back("probabilities sum above 1 at pixel " + std::to_string(p));
  }
  return violations;
}

}  // namespace unitax
