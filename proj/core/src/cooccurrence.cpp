#include "unitax/cooccurrence.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace unitax {

CooccurrenceMatrix CooccurrenceMatrix::zero(const Taxonomy& row_taxonomy,
                                            const Taxonomy& col_taxonomy) {
  if (row_taxonomy.dataset_id == col_taxonomy.dataset_id)
    throw std::invalid_argument("CooccurrenceMatrix: row and column taxonomies must differ");
  CooccurrenceMatrix m;
  m.row_taxonomy_id = row_taxonomy.dataset_id;
  m.col_taxonomy_id = col_taxonomy.dataset_id;
  m.rows = row_taxonomy.size();
  m.cols = col_taxonomy.size();
  m.counts.assign(m.rows * m.cols, 0);
  return m;
}

std::uint64_t CooccurrenceMatrix::row_total(std::size_t r) const {
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < cols; ++c) total += at(r, c);
  return total;
}

namespace {

void accumulate(const LabelRaster& row_side, const LabelRaster& col_side,
                CooccurrenceMatrix& acc, const char* who) {
  if (row_side.width != col_side.width || row_side.height != col_side.height)
    throw std::invalid_argument(std::string(who) + ": raster dimension mismatch");
  if (!row_side.taxonomy_id.empty() && row_side.taxonomy_id != acc.row_taxonomy_id)
    throw std::invalid_argument(std::string(who) + ": row taxonomy mismatch: " +
                                row_side.taxonomy_id + " vs " + acc.row_taxonomy_id);
  if (!col_side.taxonomy_id.empty() && col_side.taxonomy_id != acc.col_taxonomy_id)
    throw std::invalid_argument(std::string(who) + ": column taxonomy mismatch: " +
                                col_side.taxonomy_id + " vs " + acc.col_taxonomy_id);

  const std::size_t n = row_side.labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t r = row_side.labels[i];
    const std::uint16_t c = col_side.labels[i];
    if (r == kVoidLabel || c == kVoidLabel) continue;
    if (r >= acc.rows || c >= acc.cols)
      throw std::out_of_range(std::string(who) + ": out-of-range label at pixel " +
                              std::to_string(i));
    ++acc.at(r, c);
    ++acc.pixel_total;
  }
}

}  // namespace

void accumulate_cooccurrence(const LabelRaster& gt, const LabelRaster& foreign_pred,
                             CooccurrenceMatrix& acc) {
  accumulate(gt, foreign_pred, acc, "accumulate_cooccurrence");
}

void accumulate_coincidence(const LabelRaster& pred_row, const LabelRaster& pred_col,
                            CooccurrenceMatrix& acc) {
  accumulate(pred_row, pred_col, acc, "accumulate_coincidence");
}

void merge(CooccurrenceMatrix& acc, const CooccurrenceMatrix& other) {
  if (acc.rows != other.rows || acc.cols != other.cols ||
      acc.row_taxonomy_id != other.row_taxonomy_id ||
      acc.col_taxonomy_id != other.col_taxonomy_id)
    throw std::invalid_argument("merge: matrix shape or taxonomy mismatch");
  for (std::size_t i = 0; i < acc.counts.size(); ++i) acc.counts[i] += other.counts[i];
  acc.pixel_total += other.pixel_total;
}

CooccurrenceMatrix accumulate_parallel(
    const std::vector<std::pair<const LabelRaster*, const LabelRaster*>>& pairs,
    const Taxonomy& row_taxonomy, const Taxonomy& col_taxonomy, unsigned threads) {
  if (threads == 0) threads = 1;
  threads = std::min<unsigned>(threads, std::max<std::size_t>(pairs.size(), 1));

  std::vector<CooccurrenceMatrix> partials;
  partials.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    partials.push_back(CooccurrenceMatrix::zero(row_taxonomy, col_taxonomy));

  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < pairs.size(); i += threads)
          accumulate_cooccurrence(*pairs[i].first, *pairs[i].second, partials[t]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);

  CooccurrenceMatrix result = std::move(partials[0]);
  for (unsigned t = 1; t < threads; ++t) merge(result, partials[t]);
  return result;
}

namespace {

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_quote(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

void save_cooccurrence_csv(const CooccurrenceMatrix& m, const Taxonomy& row_taxonomy,
                           const Taxonomy& col_taxonomy, const std::filesystem::path& path) {
  if (m.rows != row_taxonomy.size() || m.cols != col_taxonomy.size())
    throw std::invalid_argument("save_cooccurrence_csv: taxonomy size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_cooccurrence_csv: cannot open " + path.string());

  out << csv_quote(m.row_taxonomy_id + "\\" + m.col_taxonomy_id);
  for (const auto& name : col_taxonomy.classes) out << ',' << csv_quote(name);
  out << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    out << csv_quote(row_taxonomy.classes[r]);
    for (std::size_t c = 0; c < m.cols; ++c) out << ',' << m.at(r, c);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_cooccurrence_csv: write failed for " + path.string());
}

CooccurrenceMatrix load_cooccurrence_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_cooccurrence_csv: cannot open " + path.string());
  const std::string context = "load_cooccurrence_csv: " + path.string();

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(context + ": empty file");
  const auto header = split_csv_row(line);
  if (header.size() < 2) throw std::runtime_error(context + ": malformed header");

  CooccurrenceMatrix m;
  const auto sep = header[0].rfind('\\');
  if (sep == std::string::npos)
    throw std::runtime_error(context + ": corner cell lacks row\\col taxonomy ids");
  m.row_taxonomy_id = header[0].substr(0, sep);
  m.col_taxonomy_id = header[0].substr(sep + 1);
  m.cols = header.size() - 1;

  std::vector<std::uint64_t> counts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() != m.cols + 1)
      throw std::runtime_error(context + ": malformed row with " +
                               std::to_string(fields.size() - 1) + " cells, expected " +
                               std::to_string(m.cols));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      std::uint64_t v = 0;
      const auto& f = fields[c];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw std::runtime_error(context + ": non-numeric cell '" + f + "'");
      counts.push_back(v);
    }
    ++m.rows;
  }
  if (m.rows == 0) throw std::runtime_error(context + ": no data rows");
  m.counts = std::move(counts);
  for (auto v : m.counts) m.pixel_total += v;
  return m;
}

}  // namespace unitax
