#include <benchmark/benchmark.h>

#include "unitax/conflict_resolution.hpp"
#include "unitax/cooccurrence.hpp"
#include "unitax/relation_graph.hpp"
#include "unitax/synthetic.hpp"
#include "unitax/universal_builder.hpp"

namespace {

using namespace unitax;

LatentWorld bench_world(std::uint32_t latent, double noise) {
  WorldParams params;
  params.num_latent = latent;
  params.noise = noise;
  params.foreign_only = true;
  return sample_world(params, 99);
}

void BM_AccumulateCooccurrence(benchmark::State& state) {
  const LatentWorld world = bench_world(24, 0.1);
  const NodeView va = leaf_view(world, 0), vb = leaf_view(world, 1);
  const std::uint32_t w = 1024, h = 256;
  const auto latents = sample_latents(world, derive_stream(1, "bench", 0), std::size_t(w) * h);
  const LabelRaster gt = ground_truth_raster(latents, w, h, va);
  const LabelRaster pred = prediction_raster(latents, w, h, vb, world.noise, 7);
  CooccurrenceMatrix acc = CooccurrenceMatrix::zero(va.taxonomy, vb.taxonomy);
  for (auto _ : state) {
    accumulate_cooccurrence(gt, pred, acc);
    benchmark::DoNotOptimize(acc.pixel_total);
  }
  state.SetItemsProcessed(state.iterations() * gt.pixels());
}
BENCHMARK(BM_AccumulateCooccurrence);

void BM_ClassifyGraph(benchmark::State& state) {
  const LatentWorld world = bench_world(static_cast<std::uint32_t>(state.range(0)), 0.0);
  const NodeView va = leaf_view(world, 0), vb = leaf_view(world, 1);
  const std::uint32_t w = 256, h = 256;
  const auto latents = sample_latents(world, derive_stream(2, "bench", 0), std::size_t(w) * h);
  CooccurrenceMatrix m_ab = CooccurrenceMatrix::zero(va.taxonomy, vb.taxonomy);
  CooccurrenceMatrix m_ba = CooccurrenceMatrix::zero(vb.taxonomy, va.taxonomy);
  accumulate_cooccurrence(ground_truth_raster(latents, w, h, va),
                          prediction_raster(latents, w, h, vb, 0.0, 3), m_ab);
  accumulate_cooccurrence(ground_truth_raster(latents, w, h, vb),
                          prediction_raster(latents, w, h, va, 0.0, 4), m_ba);
  for (auto _ : state) {
    const BipartiteGraph g = build_graph(m_ab, m_ba, va.taxonomy, vb.taxonomy);
    benchmark::DoNotOptimize(classify(g).overlaps.size());
  }
}
BENCHMARK(BM_ClassifyGraph)->Arg(16)->Arg(64);

void BM_EvaluateMiou(benchmark::State& state) {
  const LatentWorld world = bench_world(16, 0.1);
  const NodeView va = leaf_view(world, 0), vb = leaf_view(world, 1);
  const std::uint32_t w = 256, h = 256;
  const ConcatLayout layout = ConcatLayout::of(va.taxonomy, vb.taxonomy);

  EvalDataset dataset;
  dataset.dataset_id = va.taxonomy.dataset_id;
  dataset.side = Side::kA;
  dataset.num_eval_classes = va.taxonomy.size();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto latents =
        sample_latents(world, derive_stream(3, "bench_eval", i), std::size_t(w) * h);
    EvalRecord rec;
    rec.gt = ground_truth_raster(latents, w, h, va);
    rec.dump = eval_dump(latents, w, h, va, vb, Side::kA, world.intra_weight, world.noise, 4,
                         derive_stream(3, "bench_dump", i));
    dataset.records.push_back(std::move(rec));
  }

  BipartiteGraph g;
  {
    CooccurrenceMatrix m_ab = CooccurrenceMatrix::zero(va.taxonomy, vb.taxonomy);
    CooccurrenceMatrix m_ba = CooccurrenceMatrix::zero(vb.taxonomy, va.taxonomy);
    const auto latents =
        sample_latents(world, derive_stream(3, "bench_ev", 0), std::size_t(w) * h);
    accumulate_cooccurrence(ground_truth_raster(latents, w, h, va),
                            prediction_raster(latents, w, h, vb, world.noise, 5), m_ab);
    accumulate_cooccurrence(ground_truth_raster(latents, w, h, vb),
                            prediction_raster(latents, w, h, va, world.noise, 6), m_ba);
    g = build_graph(m_ab, m_ba, va.taxonomy, vb.taxonomy);
  }
  const RelationSet relations = base_relations(classify(g), layout);

  for (auto _ : state) {
    const MiouResult r = evaluate_miou(dataset, relations);
    benchmark::DoNotOptimize(r.miou);
  }
  state.SetItemsProcessed(state.iterations() * dataset.records.size() * std::size_t(w) * h);
}
BENCHMARK(BM_EvaluateMiou);

}  // namespace
