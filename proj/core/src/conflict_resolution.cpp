#include "unitax/conflict_resolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace unitax {

using nlohmann::json;

ConcatLayout ConcatLayout::of(const Taxonomy& a, const Taxonomy& b) {
  if (a.dataset_id == b.dataset_id)
    throw std::invalid_argument("ConcatLayout: datasets must differ");
  return {a.dataset_id, b.dataset_id, a.size(), b.size()};
}

Side ConcatLayout::side_of(const std::string& dataset_id) const {
  if (dataset_id == dataset_a) return Side::kA;
  if (dataset_id == dataset_b) return Side::kB;
  throw std::invalid_argument("ConcatLayout: unknown dataset " + dataset_id);
}

RelationSet::RelationSet(const ConcatLayout& layout)
    : layout_(layout), a_to_b_(layout.size_a), b_to_a_(layout.size_b) {}

void RelationSet::add(std::uint32_t a_class, std::uint32_t b_class) {
  if (a_class >= a_to_b_.size() || b_class >= b_to_a_.size())
    throw std::out_of_range("RelationSet::add: relation references unknown class");
  auto& fwd = a_to_b_[a_class];
  auto it = std::lower_bound(fwd.begin(), fwd.end(), b_class);
  if (it != fwd.end() && *it == b_class) return;  // already related
  fwd.insert(it, b_class);
  auto& rev = b_to_a_[b_class];
  rev.insert(std::lower_bound(rev.begin(), rev.end(), a_class), a_class);
  ++pairs_;
}

void RelationSet::add(const RelationHypothesis& h) {
  const Side subject_side = layout_.side_of(h.subject.dataset_id);
  const Side object_side = layout_.side_of(h.object.dataset_id);
  if (subject_side == object_side)
    throw std::invalid_argument("RelationSet::add: relation within one dataset");
  if (subject_side == Side::kA)
    add(h.subject.class_index, h.object.class_index);
  else
    add(h.object.class_index, h.subject.class_index);
}

bool RelationSet::related(std::uint32_t a_class, std::uint32_t b_class) const {
  if (a_class >= a_to_b_.size()) return false;
  const auto& fwd = a_to_b_[a_class];
  return std::binary_search(fwd.begin(), fwd.end(), b_class);
}

const std::vector<std::uint32_t>& RelationSet::partners(Side eval_side,
                                                        std::uint32_t foreign_class) const {
  const auto& table = eval_side == Side::kA ? b_to_a_ : a_to_b_;
  if (foreign_class >= table.size())
    throw std::out_of_range("RelationSet::partners: foreign class out of range");
  return table[foreign_class];
}

void score_concat(std::span<const float> posterior, const RelationSet& relations, Side eval_side,
                  std::span<double> out) {
  const auto& layout = relations.layout();
  if (posterior.size() != layout.total())
    throw std::invalid_argument("score_concat: posterior does not cover the concat space");
  const std::size_t eval_n = layout.size(eval_side);
  const std::size_t foreign_n = layout.size(other_side(eval_side));
  if (out.size() != eval_n) throw std::invalid_argument("score_concat: bad output size");

  for (std::size_t i = 0; i < eval_n; ++i)
    out[i] = posterior[layout.concat_index(eval_side, static_cast<std::uint32_t>(i))];
  for (std::size_t j = 0; j < foreign_n; ++j) {
    const double p =
        posterior[layout.concat_index(other_side(eval_side), static_cast<std::uint32_t>(j))];
    for (std::uint32_t i : relations.partners(eval_side, static_cast<std::uint32_t>(j)))
      out[i] += p;
  }
}

std::vector<double> score_concat(std::span<const float> posterior, const RelationSet& relations,
                                 Side eval_side) {
  std::vector<double> out(relations.layout().size(eval_side));
  score_concat(posterior, relations, eval_side, out);
  return out;
}

std::uint32_t argmax_score(std::span<const double> scores) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

namespace {

// Per-pixel scorer over the top-K dump. Produces exactly the scores of
// score_concat on the densified posterior: the intra entry seeds S(c), then
// foreign contributions accumulate in ascending foreign class index.
class SparseScorer {
 public:
  SparseScorer(const RelationSet& relations, Side eval_side)
      : relations_(relations),
        eval_side_(eval_side),
        eval_n_(relations.layout().size(eval_side)),
        scores_(eval_n_, 0.0),
        stamp_(eval_n_, 0) {}

  std::uint32_t predict(std::span<const std::uint16_t> classes, std::span<const float> probs) {
    const auto& layout = relations_.layout();
    ++epoch_;
    touched_.clear();
    foreign_.clear();

    const std::size_t lo = eval_side_ == Side::kA ? 0 : layout.size_a;
    const std::size_t hi = lo + eval_n_;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      const std::uint16_t c = classes[k];
      if (c == kVoidLabel) continue;  // padding slot
      if (c >= layout.total())
        throw std::out_of_range("evaluate_miou: dump entry outside the concat space");
      if (c >= lo && c < hi) {
        bump(static_cast<std::uint32_t>(c - lo), probs[k]);
      } else {
        const std::uint32_t local =
            static_cast<std::uint32_t>(eval_side_ == Side::kA ? c - layout.size_a : c);
        foreign_.push_back({local, probs[k]});
      }
    }
    // Ascending foreign index keeps per-class sums in the contract order.
    std::sort(foreign_.begin(), foreign_.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [foreign_class, prob] : foreign_) {
      const double p = prob;
      for (std::uint32_t i : relations_.partners(eval_side_, foreign_class)) bump(i, p);
    }

    // Argmax with untouched classes scoring an implicit 0, lowest index on
    // ties; equivalent to a dense ascending scan.
    std::sort(touched_.begin(), touched_.end());
    std::uint32_t first_untouched = 0;
    for (std::uint32_t t : touched_) {
      if (t != first_untouched) break;
      ++first_untouched;
    }
    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t best = first_untouched < eval_n_ ? first_untouched : kNone;
    double best_val = 0.0;
    for (std::uint32_t t : touched_) {
      const double v = scores_[t];
      if (best == kNone || v > best_val || (v == best_val && t < best)) {
        best_val = v;
        best = t;
      }
    }
    return best;
  }

 private:
  void bump(std::uint32_t eval_class, double p) {
    if (stamp_[eval_class] != epoch_) {
      stamp_[eval_class] = epoch_;
      scores_[eval_class] = p;
      touched_.push_back(eval_class);
    } else {
      scores_[eval_class] += p;
    }
  }

  const RelationSet& relations_;
  Side eval_side_;
  std::size_t eval_n_;
  std::vector<double> scores_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
  std::vector<std::uint32_t> touched_;
  std::vector<std::pair<std::uint32_t, float>> foreign_;
};

struct Confusion {
  std::size_t num_classes = 0;
  std::vector<std::uint64_t> counts;  // (num_classes) x (num_classes + 1), last col = void pred

  explicit Confusion(std::size_t n) : num_classes(n), counts(n * (n + 1), 0) {}
  std::uint64_t& at(std::size_t gt, std::size_t pred) { return counts[gt * (num_classes + 1) + pred]; }
  std::uint64_t at(std::size_t gt, std::size_t pred) const {
    return counts[gt * (num_classes + 1) + pred];
  }
  void merge(const Confusion& other) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  }
};

MiouResult iou_from_confusion(const Confusion& conf) {
  const std::size_t n = conf.num_classes;
  std::vector<std::uint64_t> row(n, 0), col(n, 0);
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t p = 0; p <= n; ++p) {
      row[g] += conf.at(g, p);
      if (p < n) col[p] += conf.at(g, p);
    }

  MiouResult result;
  result.per_class_iou.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.present.assign(n, 0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::uint64_t uni = row[c] + col[c] - conf.at(c, c);
    if (uni == 0) continue;  // absent from ground truth and predictions
    result.present[c] = 1;
    result.per_class_iou[c] = static_cast<double>(conf.at(c, c)) / static_cast<double>(uni);
    sum += result.per_class_iou[c];
    ++count;
  }
  result.miou = count == 0 ? 0.0 : sum / static_cast<double>(count);
  return result;
}

void accumulate_record(const EvalDataset& dataset, const EvalRecord& record,
                       const RelationSet& relations, SparseScorer& scorer, Confusion& conf) {
  if (record.gt.width != record.dump.width || record.gt.height != record.dump.height)
    throw std::invalid_argument("evaluate_miou: ground truth and dump dimensions differ");
  const std::size_t side_n = relations.layout().size(dataset.side);
  if (!dataset.projection.empty() && dataset.projection.size() != side_n)
    throw std::invalid_argument("evaluate_miou: projection size does not match side taxonomy");

  const std::size_t pixels = record.gt.pixels();
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::uint16_t gt = record.gt.labels[p];
    if (gt == kVoidLabel) continue;
    if (gt >= dataset.num_eval_classes)
      throw std::out_of_range("evaluate_miou: ground-truth label outside evaluation taxonomy");
    const std::uint32_t side_pred =
        scorer.predict(record.dump.pixel_classes(p), record.dump.pixel_probs(p));
    std::uint16_t pred;
    if (dataset.projection.empty()) {
      pred = static_cast<std::uint16_t>(side_pred);
    } else {
      pred = dataset.projection[side_pred];
    }
    conf.at(gt, pred == kVoidLabel ? dataset.num_eval_classes : pred) += 1;
  }
}

}  // namespace

MiouResult evaluate_miou(const EvalDataset& dataset, const RelationSet& relations,
                         unsigned threads) {
  if (dataset.records.empty())
    throw std::invalid_argument("evaluate_miou: empty record list for " + dataset.dataset_id);
  if (dataset.num_eval_classes == 0)
    throw std::invalid_argument("evaluate_miou: zero evaluation classes");
  if (dataset.projection.empty() &&
      dataset.num_eval_classes != relations.layout().size(dataset.side))
    throw std::invalid_argument(
        "evaluate_miou: identity projection requires the side taxonomy as evaluation taxonomy");

  if (threads == 0) threads = 1;
  threads = std::min<unsigned>(threads, dataset.records.size());

  if (threads == 1) {
    Confusion conf(dataset.num_eval_classes);
    SparseScorer scorer(relations, dataset.side);
    for (const auto& record : dataset.records)
      accumulate_record(dataset, record, relations, scorer, conf);
    return iou_from_confusion(conf);
  }

  std::vector<Confusion> partials(threads, Confusion(dataset.num_eval_classes));
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        SparseScorer scorer(relations, dataset.side);
        for (std::size_t i = t; i < dataset.records.size(); i += threads)
          accumulate_record(dataset, dataset.records[i], relations, scorer, partials[t]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
  for (unsigned t = 1; t < threads; ++t) partials[0].merge(partials[t]);
  return iou_from_confusion(partials[0]);
}

namespace {

void accumulate_raster_pair(const LabelRaster& prediction, const LabelRaster& gt,
                            Confusion& conf) {
  if (prediction.width != gt.width || prediction.height != gt.height)
    throw std::invalid_argument("evaluate_miou_rasters: dimension mismatch");
  const std::size_t num_classes = conf.num_classes;
  for (std::size_t p = 0; p < gt.pixels(); ++p) {
    const std::uint16_t g = gt.labels[p];
    if (g == kVoidLabel) continue;
    if (g >= num_classes)
      throw std::out_of_range("evaluate_miou_rasters: ground-truth label out of range");
    const std::uint16_t pr = prediction.labels[p];
    if (pr != kVoidLabel && pr >= num_classes)
      throw std::out_of_range("evaluate_miou_rasters: predicted label out of range");
    conf.at(g, pr == kVoidLabel ? num_classes : pr) += 1;
  }
}

}  // namespace

MiouResult evaluate_miou_rasters(const LabelRaster& prediction, const LabelRaster& gt,
                                 std::size_t num_classes) {
  Confusion conf(num_classes);
  accumulate_raster_pair(prediction, gt, conf);
  return iou_from_confusion(conf);
}

MiouResult evaluate_miou_rasters(const std::vector<LabelRaster>& predictions,
                                 const std::vector<LabelRaster>& gts, std::size_t num_classes) {
  if (predictions.size() != gts.size() || predictions.empty())
    throw std::invalid_argument("evaluate_miou_rasters: prediction/ground-truth list mismatch");
  Confusion conf(num_classes);
  for (std::size_t i = 0; i < predictions.size(); ++i)
    accumulate_raster_pair(predictions[i], gts[i], conf);
  return iou_from_confusion(conf);
}

RelationSet base_relations(const Classification& c, const ConcatLayout& layout) {
  RelationSet rel(layout);
  for (const auto& h : c.overlaps) rel.add(h);
  for (const auto& h : c.subsets) rel.add(h);
  return rel;
}

namespace {

// Canonical hypothesis order for the final tie-break.
bool canonical_less(const RelationHypothesis& x, const RelationHypothesis& y) {
  return std::tie(x.subject, x.object) < std::tie(y.subject, y.object);
}

}  // namespace

ResolutionResult resolve(const std::vector<ConflictPair>& conflicts, const RelationSet& base,
                         const std::vector<EvalDataset>& eval_data, unsigned threads) {
  ResolutionResult result;
  result.relations = base;

  // Deterministic tournament order: strongest combined evidence first.
  std::vector<const ConflictPair*> order;
  order.reserve(conflicts.size());
  for (const auto& c : conflicts) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const ConflictPair* x, const ConflictPair* y) {
    if (x->combined_support() != y->combined_support())
      return x->combined_support() > y->combined_support();
    return x->triplet < y->triplet;
  });

  enum class Decision { kAccepted, kRejected };
  std::map<ClassRef, Decision> decided;  // keyed by the hypothesis's outgoing edge

  for (const ConflictPair* pair : order) {
    const RelationHypothesis* candidates[2] = {&pair->hypothesis_a, &pair->hypothesis_b};
    CandidateEval evals[2];

    for (int c = 0; c < 2; ++c) {
      RelationSet with_candidate = result.relations;
      with_candidate.add(*candidates[c]);
      double sum = 0.0;
      for (const auto& dataset : eval_data) {
        const double miou = evaluate_miou(dataset, with_candidate, threads).miou;
        evals[c].per_dataset_miou.push_back(miou);
        sum += miou;
        ++result.evaluations;
      }
      evals[c].average = eval_data.empty() ? 0.0 : sum / static_cast<double>(eval_data.size());
    }

    const auto prior_a = decided.find(pair->hypothesis_a.subject);
    const auto prior_b = decided.find(pair->hypothesis_b.subject);
    int winner;
    bool forced = false;
    if (prior_a != decided.end() || prior_b != decided.end()) {
      forced = true;
      if (prior_a != decided.end() && prior_a->second == Decision::kAccepted)
        winner = 0;
      else if (prior_b != decided.end() && prior_b->second == Decision::kAccepted)
        winner = 1;
      else if (prior_a != decided.end() && prior_b != decided.end())
        winner = -1;  // both lost elsewhere; nothing to accept
      else
        winner = prior_a != decided.end() ? 1 : 0;  // the undecided side wins by default
    } else if (evals[0].average != evals[1].average) {
      winner = evals[0].average > evals[1].average ? 0 : 1;
    } else if (pair->hypothesis_a.support != pair->hypothesis_b.support) {
      winner = pair->hypothesis_a.support > pair->hypothesis_b.support ? 0 : 1;
    } else {
      winner = canonical_less(pair->hypothesis_a, pair->hypothesis_b) ? 0 : 1;
    }

    for (int c = 0; c < 2; ++c) {
      const auto& h = *candidates[c];
      if (decided.count(h.subject)) continue;
      if (c == winner) {
        decided.emplace(h.subject, Decision::kAccepted);
        result.relations.add(h);
        result.accepted.push_back(h);
      } else {
        decided.emplace(h.subject, Decision::kRejected);
        result.rejected.push_back(h);
      }
    }

    result.log.push_back(
        {*pair, evals[0], evals[1], winner, forced, result.evaluations});
  }
  return result;
}

void apply_resolution(BipartiteGraph& g, const ResolutionResult& r) {
  for (const auto& h : r.rejected)
    g.remove_edge(g.side_of(h.subject.dataset_id), h.subject.class_index);
}

namespace {

json hypothesis_json(const RelationHypothesis& h) {
  return {{"kind", h.kind == RelationKind::kOverlap ? "overlap" : "subset"},
          {"subject", {{"dataset", h.subject.dataset_id}, {"class", h.subject.class_index}}},
          {"object", {{"dataset", h.object.dataset_id}, {"class", h.object.class_index}}},
          {"support", h.support}};
}

json candidate_json(const CandidateEval& e, const std::vector<std::string>& dataset_ids) {
  json per = json::object();
  for (std::size_t d = 0; d < e.per_dataset_miou.size(); ++d)
    per[dataset_ids.at(d)] = e.per_dataset_miou[d];
  return {{"per_dataset_miou", per}, {"average", e.average}};
}

}  // namespace

std::string resolution_log_to_jsonl(const ResolutionResult& r,
                                    const std::vector<std::string>& dataset_ids) {
  std::ostringstream out;
  for (const auto& rec : r.log) {
    json j;
    j["hypothesis_a"] = hypothesis_json(rec.pair.hypothesis_a);
    j["hypothesis_b"] = hypothesis_json(rec.pair.hypothesis_b);
    j["candidate_a"] = candidate_json(rec.candidate_a, dataset_ids);
    j["candidate_b"] = candidate_json(rec.candidate_b, dataset_ids);
    j["winner"] = rec.winner == 0 ? "a" : (rec.winner == 1 ? "b" : "none");
    j["forced"] = rec.forced;
    j["evaluations"] = rec.evaluations_after;
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace unitax
