#include "unitax/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "unitax/universal_builder.hpp"

namespace unitax {

using nlohmann::json;

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t stream) : engine_(stream) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

 private:
  std::mt19937_64 engine_;
};

std::uint32_t draw_latent(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  return static_cast<std::uint32_t>(std::min(idx, cumulative.size() - 1));
}

std::vector<double> cumulative_prior(const LatentWorld& w) {
  std::vector<double> cum(w.prior.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.prior.size(); ++i) {
    acc += w.prior[i];
    cum[i] = acc;
  }
  return cum;
}

std::string group_name(const std::vector<std::uint32_t>& latents) {
  std::string name = "g";
  for (std::size_t i = 0; i < latents.size(); ++i) {
    if (i) name += "_";
    name += std::to_string(latents[i]);
  }
  return name;
}

}  // namespace

std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return mix64(mix64(seed ^ fnv1a(tag)) ^ index);
}

Taxonomy DatasetSpec::taxonomy() const {
  Taxonomy t;
  t.dataset_id = id;
  t.classes = class_names;
  return t;
}

std::size_t LatentWorld::dataset_index(const std::string& id) const {
  for (std::size_t i = 0; i < datasets.size(); ++i)
    if (datasets[i].id == id) return i;
  throw std::invalid_argument("LatentWorld: unknown dataset " + id);
}

std::vector<std::optional<std::uint32_t>> LatentWorld::latent_classes(
    std::size_t dataset_index) const {
  std::vector<std::optional<std::uint32_t>> map(num_latent);
  const auto& spec = datasets.at(dataset_index);
  for (std::uint32_t c = 0; c < spec.groups.size(); ++c)
    for (auto l : spec.groups[c]) {
      if (l >= num_latent) throw std::runtime_error("LatentWorld: latent id out of range");
      if (map[l]) throw std::runtime_error("LatentWorld: overlapping groups in " + spec.id);
      map[l] = c;
    }
  return map;
}

bool LatentWorld::latent_intersects(std::size_t d1, std::uint32_t c1, std::size_t d2,
                                    std::uint32_t c2) const {
  const auto& g1 = datasets.at(d1).groups.at(c1);
  const auto& g2 = datasets.at(d2).groups.at(c2);
  for (auto a : g1)
    for (auto b : g2)
      if (a == b) return true;
  return false;
}

namespace {

enum class Pattern { kOverlap, kSubset, kInterleave, kChain, kForeignOnly };

struct WorldBuilder {
  std::uint32_t num_datasets;
  std::vector<double> weights;
  std::vector<std::vector<std::vector<std::uint32_t>>> groups;  // per dataset
  std::uint32_t next_latent = 0;
  std::uint32_t rotation = 0;

  explicit WorldBuilder(std::uint32_t datasets) : num_datasets(datasets), groups(datasets) {}

  std::uint32_t take(double weight) {
    weights.push_back(weight);
    return next_latent++;
  }

  void add_group(std::uint32_t dataset, std::vector<std::uint32_t> latents) {
    groups[dataset].push_back(std::move(latents));
  }

  // Identical grouping in every dataset.
  void overlap_block(std::uint32_t size, Rng& rng) {
    std::vector<std::uint32_t> block;
    for (std::uint32_t i = 0; i < size; ++i) block.push_back(take(1.0 + 2.0 * rng.uniform()));
    for (std::uint32_t d = 0; d < num_datasets; ++d) add_group(d, block);
  }

  // One dataset keeps the whole block, the others split it into singletons.
  void subset_block(std::uint32_t size, Rng& rng) {
    const std::uint32_t whole = rotation++ % num_datasets;
    std::vector<std::uint32_t> block;
    for (std::uint32_t i = 0; i < size; ++i) block.push_back(take(1.0 + 2.0 * rng.uniform()));
    for (std::uint32_t d = 0; d < num_datasets; ++d) {
      if (d == whole) {
        add_group(d, block);
      } else {
        for (auto l : block) add_group(d, {l});
      }
    }
  }

  // Two fat classes share a dominant latent; each side also owns the other
  // side's extra as a singleton. The shared mass outweighs the extras, so
  // the fat classes form a 2-cycle and the extras attach as subsets.
  void interleave_block(Rng& rng) {
    const double base = 1.0 + rng.uniform();
    const std::uint32_t x = take(base);
    const std::uint32_t y = take(base * (0.8 + 0.4 * rng.uniform()));
    const double side_mass = weights[x] + weights[y];
    const std::uint32_t s = take(2.5 * side_mass);
    add_group(0, {s, x});
    add_group(0, {y});
    add_group(1, {s, y});
    add_group(1, {x});
  }

  // Interleaved split with skewed mass: the middle class's strongest column
  // does not point back, which yields an inconsistent triplet.
  void chain_block(Rng& rng) {
    const double base = 0.5 + 0.5 * rng.uniform();
    const std::uint32_t l1 = take(base);
    const std::uint32_t l2 = take(base * 2.0);
    const std::uint32_t l3 = take(base * 4.0);
    add_group(0, {l1, l2});
    add_group(0, {l3});
    add_group(1, {l2, l3});
    add_group(1, {l1});
  }

  // Content visible to one dataset only.
  void foreign_only_block(Rng& rng) {
    const std::uint32_t owner = rotation++ % num_datasets;
    const std::uint32_t l = take(0.5 + rng.uniform());
    add_group(owner, {l});
  }

  LatentWorld finish(const WorldParams& params, std::uint64_t seed) {
    LatentWorld world;
    world.num_latent = next_latent;
    world.noise = params.noise;
    world.seed = seed;
    world.image_width = params.image_width;
    world.image_height = params.image_height;

    double total = 0.0;
    for (double w : weights) total += w;
    world.prior.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) world.prior[i] = weights[i] / total;

    for (std::uint32_t d = 0; d < num_datasets; ++d) {
      DatasetSpec spec;
      spec.id = std::string("syn_") + static_cast<char>('a' + d);
      spec.groups = groups[d];
      for (const auto& g : spec.groups) spec.class_names.push_back(group_name(g));
      world.datasets.push_back(std::move(spec));
    }
    return world;
  }
};

}  // namespace

LatentWorld sample_world(const WorldParams& params, std::uint64_t seed) {
  if (params.num_latent < 1) throw std::invalid_argument("sample_world: num_latent must be >= 1");
  if (params.num_datasets < 2)
    throw std::invalid_argument("sample_world: at least two datasets required");
  if (params.noise < 0.0 || params.noise >= 1.0)
    throw std::invalid_argument("sample_world: noise must be in [0,1)");

  std::vector<Pattern> patterns;
  if (params.overlaps) patterns.push_back(Pattern::kOverlap);
  if (params.subset_splits) patterns.push_back(Pattern::kSubset);
  if (params.interleaved && params.num_datasets == 2) patterns.push_back(Pattern::kInterleave);
  if (params.conflict_chains && params.num_datasets == 2) patterns.push_back(Pattern::kChain);
  if (params.foreign_only) patterns.push_back(Pattern::kForeignOnly);
  if (patterns.empty()) patterns.push_back(Pattern::kOverlap);

  Rng rng(derive_stream(seed, "world", 0));
  WorldBuilder builder(params.num_datasets);

  std::size_t block = 0;
  while (builder.next_latent < params.num_latent) {
    const std::uint32_t remaining = params.num_latent - builder.next_latent;
    Pattern p = patterns[block % patterns.size()];
    ++block;
    if ((p == Pattern::kInterleave || p == Pattern::kChain) && remaining < 3)
      p = Pattern::kOverlap;
    if (p == Pattern::kSubset && remaining < 2) p = Pattern::kOverlap;

    switch (p) {
      case Pattern::kOverlap:
        builder.overlap_block(std::min<std::uint32_t>(remaining, 1 + rng.below(2)), rng);
        break;
      case Pattern::kSubset:
        builder.subset_block(std::min<std::uint32_t>(remaining, 2 + rng.below(2)), rng);
        break;
      case Pattern::kInterleave:
        builder.interleave_block(rng);
        break;
      case Pattern::kChain:
        builder.chain_block(rng);
        break;
      case Pattern::kForeignOnly:
        builder.foreign_only_block(rng);
        break;
    }
  }
  // Foreign-only blocks skip datasets; make sure nobody ended up classless.
  for (std::uint32_t d = 0; d < params.num_datasets; ++d)
    if (builder.groups[d].empty()) builder.overlap_block(1, rng);

  return builder.finish(params, seed);
}

LatentWorld make_conflict_world(std::uint32_t num_chains, std::uint64_t seed) {
  if (num_chains == 0) throw std::invalid_argument("make_conflict_world: need at least one chain");
  Rng rng(derive_stream(seed, "world", 0));
  WorldParams params;
  params.num_latent = 3 * num_chains;
  params.num_datasets = 2;
  WorldBuilder builder(2);
  for (std::uint32_t i = 0; i < num_chains; ++i) builder.chain_block(rng);
  return builder.finish(params, seed);
}

std::string world_to_json(const LatentWorld& w) {
  json j;
  j["num_latent"] = w.num_latent;
  j["prior"] = w.prior;
  j["noise"] = w.noise;
  j["intra_weight"] = w.intra_weight;
  j["seed"] = w.seed;
  j["image_width"] = w.image_width;
  j["image_height"] = w.image_height;
  j["datasets"] = json::array();
  for (const auto& d : w.datasets) {
    json classes = json::array();
    for (std::size_t c = 0; c < d.groups.size(); ++c)
      classes.push_back({{"name", d.class_names[c]}, {"latents", d.groups[c]}});
    j["datasets"].push_back({{"id", d.id}, {"classes", classes}});
  }
  return j.dump(2) + "\n";
}

LatentWorld world_from_json(const std::string& text) {
  const json j = json::parse(text);
  LatentWorld w;
  w.num_latent = j.at("num_latent").get<std::uint32_t>();
  w.prior = j.at("prior").get<std::vector<double>>();
  w.noise = j.at("noise").get<double>();
  w.intra_weight = j.value("intra_weight", 0.6);
  w.seed = j.at("seed").get<std::uint64_t>();
  w.image_width = j.value("image_width", 64u);
  w.image_height = j.value("image_height", 64u);
  for (const auto& jd : j.at("datasets")) {
    DatasetSpec spec;
    spec.id = jd.at("id").get<std::string>();
    for (const auto& jc : jd.at("classes")) {
      spec.class_names.push_back(jc.at("name").get<std::string>());
      spec.groups.push_back(jc.at("latents").get<std::vector<std::uint32_t>>());
    }
    w.datasets.push_back(std::move(spec));
  }
  return w;
}

LatentWorld load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_world: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return world_from_json(ss.str());
  } catch (const json::exception& e) {
    throw std::runtime_error("load_world: " + path.string() + ": " + e.what());
  }
}

void save_world(const LatentWorld& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_world: cannot open " + path.string());
  out << world_to_json(w);
}

NodeView leaf_view(const LatentWorld& world, std::size_t dataset_index) {
  NodeView view;
  view.taxonomy = world.datasets.at(dataset_index).taxonomy();
  view.latent_to_class = world.latent_classes(dataset_index);
  return view;
}

NodeView meta_view(const NodeView& a, const NodeView& b, const UniversalTaxonomy& pair_universal,
                   const Taxonomy& meta_taxonomy) {
  const std::size_t num_latent = a.latent_to_class.size();
  if (b.latent_to_class.size() != num_latent)
    throw std::invalid_argument("meta_view: latent space mismatch");
  auto side_view = [&](const std::string& dataset_id) -> const NodeView& {
    if (dataset_id == a.taxonomy.dataset_id) return a;
    if (dataset_id == b.taxonomy.dataset_id) return b;
    throw std::invalid_argument("meta_view: member dataset " + dataset_id + " not in the pair");
  };

  NodeView out;
  out.taxonomy = meta_taxonomy;
  out.latent_to_class.assign(num_latent, std::nullopt);
  std::vector<bool> covered(num_latent, false);

  // Multi-member classes cover their members' latent intersection.
  for (std::uint32_t ui = 0; ui < pair_universal.size(); ++ui) {
    const auto& members = pair_universal.classes[ui].members;
    if (members.size() < 2) continue;
    for (std::uint32_t l = 0; l < num_latent; ++l) {
      bool in_all = true;
      for (const auto& m : members) {
        const auto& cls = side_view(m.dataset_id).latent_to_class[l];
        if (!cls || *cls != m.class_index) {
          in_all = false;
          break;
        }
      }
      if (in_all) {
        out.latent_to_class[l] = ui;
        covered[l] = true;
      }
    }
  }
  // Singletons keep the residual of their vertex. A wrong recovery can make
  // two residuals compete for a latent; the lower universal index wins.
  for (std::uint32_t ui = 0; ui < pair_universal.size(); ++ui) {
    const auto& members = pair_universal.classes[ui].members;
    if (members.size() != 1) continue;
    const auto& view = side_view(members[0].dataset_id);
    for (std::uint32_t l = 0; l < num_latent; ++l) {
      if (covered[l] || out.latent_to_class[l]) continue;
      const auto& cls = view.latent_to_class[l];
      if (cls && *cls == members[0].class_index) out.latent_to_class[l] = ui;
    }
  }
  return out;
}

std::vector<std::uint32_t> sample_latents(const LatentWorld& w, std::uint64_t stream,
                                          std::size_t count) {
  const auto cum = cumulative_prior(w);
  Rng rng(stream);
  std::vector<std::uint32_t> latents(count);
  for (auto& l : latents) l = draw_latent(cum, rng);
  return latents;
}

LabelRaster ground_truth_raster(const std::vector<std::uint32_t>& latents, std::uint32_t width,
                                std::uint32_t height, const NodeView& view) {
  if (latents.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("ground_truth_raster: latent count mismatch");
  LabelRaster raster;
  raster.width = width;
  raster.height = height;
  raster.taxonomy_id = view.taxonomy.dataset_id;
  raster.labels.resize(latents.size());
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto& cls = view.latent_to_class[latents[i]];
    raster.labels[i] = cls ? static_cast<std::uint16_t>(*cls) : kVoidLabel;
  }
  return raster;
}

LabelRaster prediction_raster(const std::vector<std::uint32_t>& latents, std::uint32_t width,
                              std::uint32_t height, const NodeView& view, double noise,
                              std::uint64_t stream) {
  if (latents.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("prediction_raster: latent count mismatch");
  LabelRaster raster;
  raster.width = width;
  raster.height = height;
  raster.taxonomy_id = view.taxonomy.dataset_id;
  raster.labels.resize(latents.size());
  Rng rng(stream);
  const std::size_t n = view.taxonomy.size();
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto& correct = view.latent_to_class[latents[i]];
    const bool flip = noise > 0.0 && rng.uniform() < noise;
    if (!flip) {
      raster.labels[i] = correct ? static_cast<std::uint16_t>(*correct) : kVoidLabel;
    } else if (correct && n > 1) {
      auto r = rng.below(n - 1);
      if (r >= *correct) ++r;
      raster.labels[i] = static_cast<std::uint16_t>(r);
    } else {
      raster.labels[i] = static_cast<std::uint16_t>(rng.below(n));
    }
  }
  return raster;
}

PosteriorDump eval_dump(const std::vector<std::uint32_t>& latents, std::uint32_t width,
                        std::uint32_t height, const NodeView& view_a, const NodeView& view_b,
                        Side intra_side, double intra_weight, double noise, std::uint16_t top_k,
                        std::uint64_t stream) {
  if (latents.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("eval_dump: latent count mismatch");
  if (top_k == 0) throw std::invalid_argument("eval_dump: top_k must be positive");

  const std::size_t size_a = view_a.taxonomy.size();
  const std::size_t total = size_a + view_b.taxonomy.size();
  PosteriorDump dump;
  dump.width = width;
  dump.height = height;
  dump.top_k = top_k;
  dump.classes.assign(latents.size() * top_k, kVoidLabel);
  dump.probs.assign(latents.size() * top_k, 0.0f);

  Rng rng(stream);
  std::vector<std::pair<std::uint16_t, float>> entries;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const std::uint32_t l = latents[i];
    const auto& ca = view_a.latent_to_class[l];
    const auto& cb = view_b.latent_to_class[l];
    std::optional<std::uint16_t> own, foreign;
    if (ca) {
      auto idx = static_cast<std::uint16_t>(*ca);
      (intra_side == Side::kA ? own : foreign) = idx;
    }
    if (cb) {
      auto idx = static_cast<std::uint16_t>(size_a + *cb);
      (intra_side == Side::kB ? own : foreign) = idx;
    }

    entries.clear();
    const double correct_mass = 1.0 - noise;
    if (own && foreign) {
      entries.push_back({*own, static_cast<float>(intra_weight * correct_mass)});
      entries.push_back({*foreign, static_cast<float>((1.0 - intra_weight) * correct_mass)});
    } else if (own) {
      entries.push_back({*own, static_cast<float>(correct_mass)});
    } else if (foreign) {
      entries.push_back({*foreign, static_cast<float>(correct_mass)});
    } else {
      entries.push_back(
          {static_cast<std::uint16_t>(rng.below(total)), static_cast<float>(correct_mass)});
    }
    if (noise > 0.0) {
      for (int attempt = 0; attempt < 16; ++attempt) {
        const auto c = static_cast<std::uint16_t>(rng.below(total));
        bool used = false;
        for (const auto& e : entries) used |= e.first == c;
        if (!used) {
          entries.push_back({c, static_cast<float>(noise)});
          break;
        }
      }
    }
    std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
      if (x.second != y.second) return x.second > y.second;
      return x.first < y.first;
    });
    const std::size_t kept = std::min<std::size_t>(entries.size(), top_k);
    for (std::size_t k = 0; k < kept; ++k) {
      dump.classes[i * top_k + k] = entries[k].first;
      dump.probs[i * top_k + k] = entries[k].second;
    }
  }
  return dump;
}

std::map<std::string, DatasetFixtures> simulate(const LatentWorld& world, std::size_t num_images,
                                                std::uint16_t top_k) {
  if (world.datasets.size() < 2)
    throw std::invalid_argument("simulate: a world needs at least two datasets");
  const std::uint32_t w = world.image_width;
  const std::uint32_t h = world.image_height;
  const std::size_t pixels = static_cast<std::size_t>(w) * h;

  std::vector<NodeView> views;
  for (std::size_t d = 0; d < world.datasets.size(); ++d) views.push_back(leaf_view(world, d));

  std::map<std::string, DatasetFixtures> out;
  for (std::size_t d = 0; d < world.datasets.size(); ++d) {
    const std::string& id = world.datasets[d].id;
    DatasetFixtures fx;
    for (std::size_t i = 0; i < num_images; ++i) {
      const auto latents =
          sample_latents(world, derive_stream(world.seed, "img:" + id, i), pixels);
      fx.gt.push_back(ground_truth_raster(latents, w, h, views[d]));
      fx.intra_preds.push_back(prediction_raster(
          latents, w, h, views[d], world.noise,
          derive_stream(world.seed, "pred:" + id + ":" + id, i)));
      for (std::size_t e = 0; e < world.datasets.size(); ++e) {
        if (e == d) continue;
        const std::string& model = world.datasets[e].id;
        fx.foreign_preds[model].push_back(prediction_raster(
            latents, w, h, views[e], world.noise,
            derive_stream(world.seed, "pred:" + id + ":" + model, i)));
      }
      if (world.datasets.size() == 2) {
        fx.eval_dumps.push_back(eval_dump(latents, w, h, views[0], views[1],
                                          d == 0 ? Side::kA : Side::kB, world.intra_weight,
                                          world.noise, top_k,
                                          derive_stream(world.seed, "dump:" + id, i)));
      }
    }
    out[id] = std::move(fx);
  }
  return out;
}

namespace {

struct BuiltNode {
  MergeNode node;
  NodeView view;
};

BuiltNode build_recovery(const LatentWorld& world, const Schedule& schedule,
                         const RecoveryOptions& options, std::uint32_t width,
                         std::uint32_t height, RecoveryRun& run) {
  if (schedule.is_leaf()) {
    const std::size_t index = world.dataset_index(schedule.leaf);
    return {make_leaf(world.datasets[index].taxonomy()), leaf_view(world, index)};
  }
  BuiltNode left = build_recovery(world, *schedule.left, options, width, height, run);
  BuiltNode right = build_recovery(world, *schedule.right, options, width, height, run);
  const std::string tag = "(" + left.node.id + "+" + right.node.id + ")";
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const std::size_t evidence_images = (options.evidence_pixels + pixels - 1) / pixels;
  const std::size_t eval_images = (options.eval_pixels + pixels - 1) / pixels;

  CooccurrenceMatrix m_ab = CooccurrenceMatrix::zero(left.node.taxonomy, right.node.taxonomy);
  CooccurrenceMatrix m_ba = CooccurrenceMatrix::zero(right.node.taxonomy, left.node.taxonomy);
  // Row side: ground truth at the leaves, intra-domain predictions above
  // them (coincidence evidence; meta-datasets have no proper ground truth).
  struct Direction {
    const BuiltNode* row;
    const BuiltNode* col;
    CooccurrenceMatrix* acc;
    const char* salt;
  };
  for (const Direction dir : {Direction{&left, &right, &m_ab, "ev_a"},
                              Direction{&right, &left, &m_ba, "ev_b"}}) {
    for (std::size_t i = 0; i < evidence_images; ++i) {
      const auto latents = sample_latents(
          world, derive_stream(world.seed, std::string(dir.salt) + ":" + tag, i), pixels);
      LabelRaster rows =
          dir.row->node.is_leaf()
              ? ground_truth_raster(latents, width, height, dir.row->view)
              : prediction_raster(latents, width, height, dir.row->view, world.noise,
                                  derive_stream(world.seed,
                                                std::string(dir.salt) + "_row:" + tag, i));
      LabelRaster cols =
          prediction_raster(latents, width, height, dir.col->view, world.noise,
                            derive_stream(world.seed, std::string(dir.salt) + "_col:" + tag, i));
      accumulate_cooccurrence(rows, cols, *dir.acc);
    }
  }

  std::vector<EvalDataset> eval_data;
  for (auto [side, built] : {std::pair{Side::kA, &left}, std::pair{Side::kB, &right}}) {
    for (const auto& dataset_id : built->node.member_datasets) {
      const std::size_t index = world.dataset_index(dataset_id);
      EvalDataset ed;
      ed.dataset_id = dataset_id;
      ed.side = side;
      ed.num_eval_classes = world.datasets[index].groups.size();
      if (!built->node.is_leaf())
        ed.projection = dataset_projection(built->node.composed, dataset_id);
      const NodeView leaf = leaf_view(world, index);
      for (std::size_t i = 0; i < eval_images; ++i) {
        const auto latents = sample_latents(
            world, derive_stream(world.seed, "eval:" + tag + ":" + dataset_id, i), pixels);
        EvalRecord record;
        record.gt = ground_truth_raster(latents, width, height, leaf);
        record.dump = eval_dump(latents, width, height, left.view, right.view, side,
                                world.intra_weight, world.noise, options.top_k,
                                derive_stream(world.seed, "evaldump:" + tag + ":" + dataset_id, i));
        ed.records.push_back(std::move(record));
      }
      eval_data.push_back(std::move(ed));
    }
  }

  MergeOptions merge_options;
  merge_options.min_support = options.min_support;
  merge_options.threads = options.threads;
  MergeNode merged = merge_pair(std::move(left.node), std::move(right.node), m_ab, m_ba,
                                eval_data, merge_options);
  run.total_conflicts += merged.conflicts;
  run.total_evaluations += merged.evaluations;
  NodeView view = meta_view(left.view, right.view, merged.pair_universal, merged.taxonomy);
  return {std::move(merged), std::move(view)};
}

}  // namespace

RecoveryRun run_recovery(const LatentWorld& world, const Schedule& schedule,
                         const RecoveryOptions& options) {
  const std::uint32_t width = options.image_width ? options.image_width : world.image_width;
  const std::uint32_t height = options.image_height ? options.image_height : world.image_height;
  RecoveryRun run;
  BuiltNode root = build_recovery(world, schedule, options, width, height, run);
  run.root = std::move(root.node);
  return run;
}

double recovery_score(const UniversalTaxonomy& recovered, const LatentWorld& world) {
  for (const auto& spec : world.datasets) {
    auto it = recovered.mappings.find(spec.id);
    if (it == recovered.mappings.end())
      throw std::invalid_argument("recovery_score: dataset mismatch: missing " + spec.id);
    if (it->second.size() != spec.groups.size())
      throw std::invalid_argument("recovery_score: class count mismatch for " + spec.id);
  }

  auto share = [](const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y) {
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
      if (x[i] == y[j]) return true;
      if (x[i] < y[j])
        ++i;
      else
        ++j;
    }
    return false;
  };

  std::size_t total = 0;
  std::size_t matched = 0;
  for (std::size_t d1 = 0; d1 < world.datasets.size(); ++d1) {
    const auto& map1 = recovered.mappings.at(world.datasets[d1].id);
    for (std::size_t d2 = d1 + 1; d2 < world.datasets.size(); ++d2) {
      const auto& map2 = recovered.mappings.at(world.datasets[d2].id);
      for (std::uint32_t c1 = 0; c1 < map1.size(); ++c1) {
        for (std::uint32_t c2 = 0; c2 < map2.size(); ++c2) {
          const bool predicted = share(map1[c1], map2[c2]);
          const bool truth = world.latent_intersects(d1, c1, d2, c2);
          ++total;
          matched += predicted == truth;
        }
      }
    }
  }
  if (total == 0) throw std::invalid_argument("recovery_score: no cross-dataset class pairs");
  return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace unitax
