// Command line front end for the unitax pipeline. Every stage is a thin
// wrapper over the library that reads and writes plain files, so the
// expensive evidence accumulation can be cached and later stages rerun on
// saved intermediates.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "unitax/conflict_resolution.hpp"
#include "unitax/cooccurrence.hpp"
#include "unitax/multi_merge.hpp"
#include "unitax/raster.hpp"
#include "unitax/relation_graph.hpp"
#include "unitax/synthetic.hpp"
#include "unitax/taxonomy.hpp"
#include "unitax/universal_builder.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace unitax;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct ManifestImage {
  std::string dataset;
  fs::path gt;
  std::map<std::string, fs::path> preds;  // model id -> prediction raster
  std::optional<fs::path> eval_dump;
};

struct Manifest {
  fs::path dir;
  std::vector<std::string> datasets;
  std::map<std::string, fs::path> taxonomies;
  std::vector<ManifestImage> images;
};

Manifest load_manifest(const fs::path& path) {
  const json j = json::parse(read_text(path));
  Manifest m;
  m.dir = path.parent_path();
  m.datasets = j.at("datasets").get<std::vector<std::string>>();
  for (const auto& [id, rel] : j.at("taxonomies").items())
    m.taxonomies[id] = m.dir / rel.get<std::string>();
  for (const auto& ji : j.at("images")) {
    ManifestImage img;
    img.dataset = ji.at("dataset").get<std::string>();
    img.gt = m.dir / ji.at("gt").get<std::string>();
    for (const auto& [model, rel] : ji.at("preds").items())
      img.preds[model] = m.dir / rel.get<std::string>();
    if (ji.contains("eval_dump")) img.eval_dump = m.dir / ji.at("eval_dump").get<std::string>();
    m.images.push_back(std::move(img));
  }
  return m;
}

Taxonomy manifest_taxonomy(const Manifest& m, const std::string& id) {
  auto it = m.taxonomies.find(id);
  if (it == m.taxonomies.end())
    throw std::runtime_error("manifest has no taxonomy for dataset " + id);
  return load_taxonomy(it->second);
}

LabelRaster load_bound_raster(const fs::path& path, const Taxonomy& taxonomy) {
  LabelRaster raster = load_raster(path);
  raster.taxonomy_id = taxonomy.dataset_id;
  const auto violations = validate_raster(raster, taxonomy);
  if (!violations.empty())
    throw std::runtime_error(path.string() + ": " + violations.front());
  return raster;
}

std::string zero_pad(std::size_t value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", value);
  return buf;
}

WorldParams parse_patterns(const std::string& spec, WorldParams params) {
  params.overlaps = params.subset_splits = params.interleaved = false;
  params.conflict_chains = params.foreign_only = false;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token == "overlap")
      params.overlaps = true;
    else if (token == "subset")
      params.subset_splits = true;
    else if (token == "interleave")
      params.interleaved = true;
    else if (token == "chain")
      params.conflict_chains = true;
    else if (token == "foreign")
      params.foreign_only = true;
    else if (!token.empty())
      throw std::runtime_error("unknown pattern '" + token + "'");
  }
  return params;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::uint32_t latent = 8;
  std::uint32_t datasets = 2;
  std::size_t images = 8;
  std::uint32_t width = 64;
  std::uint32_t height = 64;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::uint16_t top_k = 4;
  std::string patterns = "overlap,subset,interleave";
  std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
  WorldParams params;
  params.num_latent = args.latent;
  params.num_datasets = args.datasets;
  params.noise = args.noise;
  params.image_width = args.width;
  params.image_height = args.height;
  params = parse_patterns(args.patterns, params);

  const LatentWorld world = sample_world(params, args.seed);
  const auto fixtures = simulate(world, args.images, args.top_k);

  const fs::path out(args.out);
  fs::create_directories(out);
  save_world(world, out / "world.json");

  json manifest;
  manifest["world"] = "world.json";
  manifest["datasets"] = json::array();
  manifest["taxonomies"] = json::object();
  manifest["images"] = json::array();
  for (const auto& spec : world.datasets) {
    manifest["datasets"].push_back(spec.id);
    const std::string tax_file = "taxonomy_" + spec.id + ".json";
    save_taxonomy(spec.taxonomy(), out / tax_file);
    manifest["taxonomies"][spec.id] = tax_file;
    fs::create_directories(out / "images" / spec.id);
  }

  for (const auto& spec : world.datasets) {
    const auto& fx = fixtures.at(spec.id);
    for (std::size_t i = 0; i < fx.gt.size(); ++i) {
      const fs::path dir = fs::path("images") / spec.id;
      json entry;
      entry["dataset"] = spec.id;
      const std::string gt_rel = (dir / ("gt_" + zero_pad(i) + ".segr")).string();
      save_raster(fx.gt[i], out / gt_rel);
      entry["gt"] = gt_rel;
      json preds = json::object();
      const std::string intra_rel =
          (dir / ("pred_" + spec.id + "_" + zero_pad(i) + ".segr")).string();
      save_raster(fx.intra_preds[i], out / intra_rel);
      preds[spec.id] = intra_rel;
      for (const auto& [model, rasters] : fx.foreign_preds) {
        const std::string rel = (dir / ("pred_" + model + "_" + zero_pad(i) + ".segr")).string();
        save_raster(rasters[i], out / rel);
        preds[model] = rel;
      }
      entry["preds"] = preds;
      if (!fx.eval_dumps.empty()) {
        const std::string rel = (dir / ("dump_" + zero_pad(i) + ".segp")).string();
        save_posterior_dump(fx.eval_dumps[i], out / rel);
        entry["eval_dump"] = rel;
      }
      manifest["images"].push_back(std::move(entry));
    }
  }
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "world: " << world.datasets.size() << " datasets, " << world.num_latent
            << " latent classes, noise " << world.noise << "\n"
            << "fixtures: " << args.images << " images per dataset under " << args.out << "\n";
  return 0;
}

struct CooccurArgs {
  std::string manifest;
  std::string a, b;
  std::size_t max_images = 0;
  std::string out;
  unsigned threads = 1;
  bool coincidence = false;
};

int cmd_cooccur(const CooccurArgs& args) {
  const Manifest manifest = load_manifest(args.manifest);
  if (manifest.datasets.size() < 2) throw std::runtime_error("manifest needs two datasets");
  const std::string a = args.a.empty() ? manifest.datasets[0] : args.a;
  const std::string b = args.b.empty() ? manifest.datasets[1] : args.b;
  const Taxonomy tax_a = manifest_taxonomy(manifest, a);
  const Taxonomy tax_b = manifest_taxonomy(manifest, b);

  CooccurrenceMatrix m_ab = CooccurrenceMatrix::zero(tax_a, tax_b);
  CooccurrenceMatrix m_ba = CooccurrenceMatrix::zero(tax_b, tax_a);
  std::size_t used_a = 0, used_b = 0;
  for (const auto& img : manifest.images) {
    const bool is_a = img.dataset == a;
    const bool is_b = img.dataset == b;
    if (!is_a && !is_b) continue;
    std::size_t& used = is_a ? used_a : used_b;
    if (args.max_images && used >= args.max_images) continue;
    const Taxonomy& own = is_a ? tax_a : tax_b;
    const Taxonomy& other = is_a ? tax_b : tax_a;
    auto pred_it = img.preds.find(other.dataset_id);
    if (pred_it == img.preds.end())
      throw std::runtime_error("image of " + img.dataset + " lacks predictions of " +
                               other.dataset_id);
    LabelRaster rows;
    if (args.coincidence) {
      auto intra_it = img.preds.find(own.dataset_id);
      if (intra_it == img.preds.end())
        throw std::runtime_error("image of " + img.dataset + " lacks intra-domain predictions");
      rows = load_bound_raster(intra_it->second, own);
    } else {
      rows = load_bound_raster(img.gt, own);
    }
    const LabelRaster cols = load_bound_raster(pred_it->second, other);
    if (args.coincidence)
      accumulate_coincidence(rows, cols, is_a ? m_ab : m_ba);
    else
      accumulate_cooccurrence(rows, cols, is_a ? m_ab : m_ba);
    ++used;
  }
  if (used_a == 0 || used_b == 0)
    throw std::runtime_error("no usable images for at least one dataset");

  const fs::path out(args.out);
  fs::create_directories(out);
  const std::string stem = args.coincidence ? "coincide" : "cooccur";
  save_cooccurrence_csv(m_ab, tax_a, tax_b, out / (stem + "_" + a + "_" + b + ".csv"));
  save_cooccurrence_csv(m_ba, tax_b, tax_a, out / (stem + "_" + b + "_" + a + ".csv"));
  std::cout << stem << ": " << used_a << " images of " << a << " (" << m_ab.pixel_total
            << " px), " << used_b << " images of " << b << " (" << m_ba.pixel_total << " px)\n";
  return 0;
}

struct HypothesizeArgs {
  std::string matrix_ab, matrix_ba;
  std::string taxonomy_a, taxonomy_b;
  double min_support = 0.0;
  std::string out;
};

int cmd_hypothesize(const HypothesizeArgs& args) {
  const Taxonomy tax_a = load_taxonomy(args.taxonomy_a);
  const Taxonomy tax_b = load_taxonomy(args.taxonomy_b);
  const CooccurrenceMatrix m_ab = load_cooccurrence_csv(args.matrix_ab);
  const CooccurrenceMatrix m_ba = load_cooccurrence_csv(args.matrix_ba);
  const BipartiteGraph graph = build_graph(m_ab, m_ba, tax_a, tax_b, args.min_support);
  const Classification cls = classify(graph);
  save_graph(graph, cls, args.out);
  std::cout << "graph: " << graph.edge_count() << " edges over " << tax_a.size() << "+"
            << tax_b.size() << " classes\n"
            << "overlaps: " << cls.overlaps.size() << "\nsubsets: " << cls.subsets.size()
            << "\nconflicts: " << cls.conflicts.size() << "\n";
  return 0;
}

struct ResolveArgs {
  std::string graph;
  std::string manifest;
  std::size_t max_images = 0;
  unsigned threads = 1;
  std::string out;
  std::string log;
};

int cmd_resolve(const ResolveArgs& args) {
  BipartiteGraph graph = load_graph(args.graph);
  const Classification cls = classify(graph);
  const ConcatLayout layout = ConcatLayout::of(graph.taxonomy_a, graph.taxonomy_b);
  const Manifest manifest = load_manifest(args.manifest);

  std::vector<EvalDataset> eval_data;
  std::vector<std::string> dataset_ids;
  for (Side side : {Side::kA, Side::kB}) {
    const Taxonomy& taxonomy = graph.taxonomy(side);
    EvalDataset ed;
    ed.dataset_id = taxonomy.dataset_id;
    ed.side = side;
    ed.num_eval_classes = taxonomy.size();
    for (const auto& img : manifest.images) {
      if (img.dataset != taxonomy.dataset_id || !img.eval_dump) continue;
      if (args.max_images && ed.records.size() >= args.max_images) break;
      EvalRecord record;
      record.gt = load_bound_raster(img.gt, taxonomy);
      record.dump = load_posterior_dump(*img.eval_dump);
      ed.records.push_back(std::move(record));
    }
    if (ed.records.empty())
      throw std::runtime_error("no evaluation records for dataset " + taxonomy.dataset_id);
    dataset_ids.push_back(ed.dataset_id);
    eval_data.push_back(std::move(ed));
  }

  const ResolutionResult result =
      resolve(cls.conflicts, base_relations(cls, layout), eval_data, args.threads);
  apply_resolution(graph, result);
  save_graph(graph, classify(graph), args.out);
  if (!args.log.empty()) write_text(args.log, resolution_log_to_jsonl(result, dataset_ids));

  std::printf("conflicts: %zu\ndatasets: %zu\nevaluations: %zu (2 x %zu x %zu)\n",
              cls.conflicts.size(), eval_data.size(), result.evaluations, cls.conflicts.size(),
              eval_data.size());
  for (const auto& h : result.accepted)
    std::cout << "accepted: " << h.subject.dataset_id << "[" << h.subject.class_index << "] in "
              << h.object.dataset_id << "[" << h.object.class_index << "]\n";
  return 0;
}

struct BuildArgs {
  std::string graph;
  std::string out;
};

int cmd_build(const BuildArgs& args) {
  const BipartiteGraph graph = load_graph(args.graph);
  const Classification cls = classify(graph);
  if (!cls.conflicts.empty())
    throw std::runtime_error("unresolved conflicts: " + std::to_string(cls.conflicts.size()));
  const UniversalTaxonomy universal = build_universal(graph);

  const fs::path out(args.out);
  fs::create_directories(out);
  save_universal(universal, out / "universal.json");
  for (const auto& matrix : partial_label_matrices(universal)) {
    const Taxonomy& taxonomy = matrix.dataset_id == graph.taxonomy_a.dataset_id
                                   ? graph.taxonomy_a
                                   : graph.taxonomy_b;
    save_partial_label_csv(matrix, taxonomy.classes, universal,
                           out / ("partial_" + matrix.dataset_id + ".csv"));
  }

  std::size_t mutual = 0;
  for (const auto& h : classify(graph).overlaps) (void)h, ++mutual;
  std::cout << "universal classes: " << universal.size() << " = " << graph.taxonomy_a.size()
            << " + " << graph.taxonomy_b.size() << " - " << mutual << " mutual pairs\n";
  return 0;
}

struct MergeArgs {
  std::string world;
  std::string schedule;
  std::string out;
  std::size_t evidence_pixels = 100000;
  std::size_t eval_pixels = 20000;
  double min_support = 0.0;
  std::uint16_t top_k = 4;
  unsigned threads = 1;
};

int cmd_merge(const MergeArgs& args) {
  if (args.world.empty())
    throw std::runtime_error(
        "merge needs --world; for file-based evidence run the pairwise stages "
        "(cooccur/coincide, hypothesize, resolve, build) per schedule node");
  const LatentWorld world = load_world(args.world);
  std::vector<std::string> ids;
  for (const auto& d : world.datasets) ids.push_back(d.id);
  const Schedule schedule =
      args.schedule.empty() ? default_schedule(ids) : parse_schedule(read_text(args.schedule));

  RecoveryOptions options;
  options.evidence_pixels = args.evidence_pixels;
  options.eval_pixels = args.eval_pixels;
  options.min_support = args.min_support;
  options.top_k = args.top_k;
  options.threads = args.threads;
  const RecoveryRun run = run_recovery(world, schedule, options);

  const fs::path out(args.out);
  fs::create_directories(out);
  save_universal(run.root.composed, out / "universal.json");
  for (const auto& matrix : partial_label_matrices(run.root.composed)) {
    const auto& spec = world.datasets[world.dataset_index(matrix.dataset_id)];
    save_partial_label_csv(matrix, spec.class_names, run.root.composed,
                           out / ("mapping_" + matrix.dataset_id + ".csv"));
  }

  json summary;
  summary["schedule"] = json::parse(schedule_to_json(schedule));
  summary["universal_classes"] = run.root.composed.size();
  summary["total_conflicts"] = run.total_conflicts;
  summary["total_evaluations"] = run.total_evaluations;
  summary["recovery_score"] = recovery_score(run.root.composed, world);
  json merges = json::array();
  std::function<void(const MergeNode&)> walk = [&](const MergeNode& node) {
    if (node.is_leaf()) return;
    walk(*node.left);
    walk(*node.right);
    merges.push_back({{"id", node.id},
                      {"classes", node.taxonomy.size()},
                      {"conflicts", node.conflicts},
                      {"evaluations", node.evaluations}});
  };
  walk(run.root);
  summary["merges"] = merges;
  write_text(out / "summary.json", summary.dump(2) + "\n");

  std::cout << "final universal classes: " << run.root.composed.size() << "\n"
            << "total conflicts: " << run.total_conflicts << "\n"
            << "total evaluations: " << run.total_evaluations << "\n"
            << "recovery score: " << summary["recovery_score"].get<double>() << "\n";
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> preds;
  std::vector<std::string> gts;
  std::string universal;
  std::string dataset;
  std::string taxonomy;
  std::string json_out;
};

int cmd_evaluate(const EvaluateArgs& args) {
  if (args.preds.size() != args.gts.size() || args.preds.empty())
    throw std::runtime_error("--pred and --gt must list the same number of files");

  std::vector<std::string> class_names;
  std::vector<LabelRaster> preds, gts;
  if (!args.universal.empty()) {
    // Universal-space predictions: map into the evaluation dataset, foreign
    // universal classes go to void.
    if (args.dataset.empty()) throw std::runtime_error("--universal requires --dataset");
    const UniversalTaxonomy universal = load_universal(args.universal);
    auto it = universal.mappings.find(args.dataset);
    if (it == universal.mappings.end())
      throw std::runtime_error("universal taxonomy has no mapping for " + args.dataset);
    for (std::size_t c = 0; c < it->second.size(); ++c)
      class_names.push_back(args.dataset + "[" + std::to_string(c) + "]");
    for (std::size_t i = 0; i < args.preds.size(); ++i) {
      preds.push_back(map_prediction(load_raster(args.preds[i]), universal, args.dataset));
      gts.push_back(load_raster(args.gts[i]));
    }
  } else {
    if (args.taxonomy.empty()) throw std::runtime_error("need --universal or --taxonomy");
    const Taxonomy taxonomy = load_taxonomy(args.taxonomy);
    class_names = taxonomy.classes;
    for (std::size_t i = 0; i < args.preds.size(); ++i) {
      preds.push_back(load_bound_raster(args.preds[i], taxonomy));
      gts.push_back(load_bound_raster(args.gts[i], taxonomy));
    }
  }

  const MiouResult result = evaluate_miou_rasters(preds, gts, class_names.size());
  std::printf("%-32s %8s\n", "class", "IoU");
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    if (result.present[c])
      std::printf("%-32s %8.3f\n", class_names[c].c_str(), result.per_class_iou[c]);
    else
      std::printf("%-32s %8s\n", class_names[c].c_str(), "absent");
  }
  std::printf("mIoU %.3f\n", result.miou);

  if (!args.json_out.empty()) {
    json report;
    report["miou"] = result.miou;
    report["per_class"] = json::object();
    for (std::size_t c = 0; c < class_names.size(); ++c)
      if (result.present[c]) report["per_class"][class_names[c]] = result.per_class_iou[c];
    write_text(args.json_out, report.dump(2) + "\n");
  }
  return 0;
}

struct ExportDotArgs {
  std::string graph;
  std::string out;
};

int cmd_export_dot(const ExportDotArgs& args) {
  const BipartiteGraph graph = load_graph(args.graph);
  write_text(args.out, graph_to_dot(graph, classify(graph)));
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unitax: automatic universal taxonomy construction from cross-dataset "
               "prediction co-occurrence"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic fixture directory");
  simulate_cmd->add_option("--latent", sim.latent, "number of latent classes");
  simulate_cmd->add_option("--datasets", sim.datasets, "number of datasets");
  simulate_cmd->add_option("--images", sim.images, "images per dataset");
  simulate_cmd->add_option("--width", sim.width, "image width");
  simulate_cmd->add_option("--height", sim.height, "image height");
  simulate_cmd->add_option("--noise", sim.noise, "prediction flip rate");
  simulate_cmd->add_option("--seed", sim.seed, "world seed");
  simulate_cmd->add_option("--top-k", sim.top_k, "posterior dump truncation");
  simulate_cmd->add_option("--patterns", sim.patterns,
                           "comma list of overlap,subset,interleave,chain,foreign");
  simulate_cmd->add_option("--out", sim.out, "output directory")->required();

  CooccurArgs cooccur;
  auto* cooccur_cmd =
      app.add_subcommand("cooccur", "accumulate ground-truth/foreign-prediction count matrices");
  cooccur_cmd->add_option("--manifest", cooccur.manifest, "fixture manifest")->required();
  cooccur_cmd->add_option("--a", cooccur.a, "row dataset of the first matrix");
  cooccur_cmd->add_option("--b", cooccur.b, "column dataset of the first matrix");
  cooccur_cmd->add_option("--max-images", cooccur.max_images, "cap images per dataset");
  cooccur_cmd->add_option("--out", cooccur.out, "output directory")->required();

  CooccurArgs coincide;
  auto* coincide_cmd = app.add_subcommand(
      "coincide", "accumulate coincidence matrices from intra-domain predictions");
  coincide_cmd->add_option("--manifest", coincide.manifest, "fixture manifest")->required();
  coincide_cmd->add_option("--a", coincide.a, "row dataset of the first matrix");
  coincide_cmd->add_option("--b", coincide.b, "column dataset of the first matrix");
  coincide_cmd->add_option("--max-images", coincide.max_images, "cap images per dataset");
  coincide_cmd->add_option("--out", coincide.out, "output directory")->required();

  HypothesizeArgs hyp;
  auto* hyp_cmd =
      app.add_subcommand("hypothesize", "build the mcfp graph and classify its patterns");
  hyp_cmd->add_option("--matrix-ab", hyp.matrix_ab, "co-occurrence CSV, rows = a")->required();
  hyp_cmd->add_option("--matrix-ba", hyp.matrix_ba, "co-occurrence CSV, rows = b")->required();
  hyp_cmd->add_option("--taxonomy-a", hyp.taxonomy_a, "taxonomy JSON of a")->required();
  hyp_cmd->add_option("--taxonomy-b", hyp.taxonomy_b, "taxonomy JSON of b")->required();
  hyp_cmd->add_option("--min-support", hyp.min_support,
                      "drop edges below this fraction of the row total");
  hyp_cmd->add_option("--out", hyp.out, "graph JSON output")->required();

  ResolveArgs res;
  auto* res_cmd =
      app.add_subcommand("resolve", "disambiguate conflict pairs by the train-mIoU tournament");
  res_cmd->add_option("--graph", res.graph, "graph JSON from hypothesize")->required();
  res_cmd->add_option("--manifest", res.manifest, "fixture manifest with eval dumps")->required();
  res_cmd->add_option("--max-images", res.max_images, "cap evaluation images per dataset");
  res_cmd->add_option("--threads", res.threads, "evaluation worker threads");
  res_cmd->add_option("--out", res.out, "disambiguated graph JSON")->required();
  res_cmd->add_option("--log", res.log, "resolution log (JSON lines)");

  BuildArgs build;
  auto* build_cmd = app.add_subcommand(
      "build", "assemble the universal taxonomy and partial-label matrices");
  build_cmd->add_option("--graph", build.graph, "disambiguated graph JSON")->required();
  build_cmd->add_option("--out", build.out, "output directory")->required();

  MergeArgs merge;
  auto* merge_cmd =
      app.add_subcommand("merge", "unify an arbitrary dataset tuple over a merge schedule");
  merge_cmd->add_option("--world", merge.world, "latent world JSON (oracle-backed evidence)");
  merge_cmd->add_option("--schedule", merge.schedule,
                        "schedule JSON (nested arrays); default pairs left to right");
  merge_cmd->add_option("--evidence-pixels", merge.evidence_pixels,
                        "evidence pixels per direction per merge");
  merge_cmd->add_option("--eval-pixels", merge.eval_pixels, "evaluation pixels per dataset");
  merge_cmd->add_option("--min-support", merge.min_support,
                        "drop edges below this fraction of the row total");
  merge_cmd->add_option("--top-k", merge.top_k, "posterior dump truncation");
  merge_cmd->add_option("--threads", merge.threads, "evaluation worker threads");
  merge_cmd->add_option("--out", merge.out, "output directory")->required();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "mIoU of predictions against ground truth");
  eval_cmd->add_option("--pred", eval.preds, "prediction rasters")->required();
  eval_cmd->add_option("--gt", eval.gts, "ground-truth rasters")->required();
  eval_cmd->add_option("--universal", eval.universal,
                       "universal taxonomy JSON (predictions are universal-space)");
  eval_cmd->add_option("--dataset", eval.dataset, "evaluation dataset id");
  eval_cmd->add_option("--taxonomy", eval.taxonomy,
                       "taxonomy JSON (predictions already dataset-space)");
  eval_cmd->add_option("--json", eval.json_out, "also write a JSON report");

  ExportDotArgs dot;
  auto* dot_cmd = app.add_subcommand("export-dot", "emit a Graphviz view of a relation graph");
  dot_cmd->add_option("--graph", dot.graph, "graph JSON")->required();
  dot_cmd->add_option("--out", dot.out, "DOT output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(sim);
    if (cooccur_cmd->parsed()) return cmd_cooccur(cooccur);
    if (coincide_cmd->parsed()) {
      coincide.coincidence = true;
      return cmd_cooccur(coincide);
    }
    if (hyp_cmd->parsed()) return cmd_hypothesize(hyp);
    if (res_cmd->parsed()) return cmd_resolve(res);
    if (build_cmd->parsed()) return cmd_build(build);
    if (merge_cmd->parsed()) return cmd_merge(merge);
    if (eval_cmd->parsed()) return cmd_evaluate(eval);
    if (dot_cmd->parsed()) return cmd_export_dot(dot);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
