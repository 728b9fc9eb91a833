#include <benchmark/benchmark.h>

#include <random>

#include "skyprobe/features.hpp"
#include "skyprobe/flows.hpp"
#include "skyprobe/metrics.hpp"
#include "skyprobe/siem_event.hpp"
#include "skyprobe/synth.hpp"
#include "skyprobe/tree.hpp"

using namespace skyprobe;

namespace {

const Ipv4Addr kHost{192, 168, 1, 200};

void BM_AssembleAndExtract(benchmark::State& state) {
  const auto pkts = generate_traffic(ClassLabel::Skype, kHost, static_cast<std::size_t>(state.range(0)), 0, 1);
  for (auto _ : state) {
    const auto flows = assemble_flows(pkts);
    for (const auto& f : flows)
      if (f.packet_count() >= 2) benchmark::DoNotOptimize(extract_features(f));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pkts.size()));
}
BENCHMARK(BM_AssembleAndExtract)->Arg(10)->Arg(100);

void BM_TrainTree(benchmark::State& state) {
  const auto corpus = generate_corpus(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(train_tree(corpus));
}
BENCHMARK(BM_TrainTree)->Arg(300)->Arg(1292)->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<ClassLabel> truth;
  std::vector<double> scores;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    truth.push_back(rng() % 2 ? ClassLabel::Skype : ClassLabel::Normal);
    scores.push_back(static_cast<double>(rng() % 1000) / 1000);
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_auc(truth, scores));
}
BENCHMARK(BM_RocAuc)->Arg(1'000)->Arg(100'000);

void BM_Normalize(benchmark::State& state) {
  constexpr std::string_view line =
      "Syslog ESkyPRO log: {syslog} Mon Jan 30 19:25:30 CET 2017 INFO SkypeSession "
      "ipAddr=192.168.1.200#timestamp=19:25:30";
  for (auto _ : state) benchmark::DoNotOptimize(normalize(line));
}
BENCHMARK(BM_Normalize);

}  // namespace
BENCHMARK_MAIN();
