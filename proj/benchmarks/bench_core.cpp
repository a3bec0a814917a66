#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "longdoc/chunker.hpp"
#include "longdoc/encoder.hpp"
#include "longdoc/metrics.hpp"
#include "longdoc/strategies.hpp"
#include "longdoc/tokenizer.hpp"

namespace {

using namespace longdoc;

std::string make_text(std::size_t words, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::string text;
  text.reserve(words * 7);
  for (std::size_t i = 0; i < words; ++i) {
    if (i) text.push_back(' ');
    text += "word" + std::to_string(gen() % 500);
    if (gen() % 9 == 0) text.push_back('.');
  }
  return text;
}

Document make_document(std::size_t length, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Document doc;
  doc.id = "bench";
  doc.token_ids.resize(length);
  for (auto& id : doc.token_ids) {
    id = static_cast<TokenId>(kNumSpecialIds + gen() % 500);
  }
  return doc;
}

void BM_Tokenize(benchmark::State& state) {
  std::string text = make_text(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tokenize(text));
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(1000)->Arg(8000);

void BM_StrideChunks(benchmark::State& state) {
  Document doc = make_document(static_cast<std::size_t>(state.range(0)), 2);
  StrideConfig cfg{64, kWindow, 6};
  for (auto _ : state) {
    benchmark::DoNotOptimize(stride_chunks(doc, cfg));
  }
}
BENCHMARK(BM_StrideChunks)->Arg(1024)->Arg(5000);

void BM_SummaryBudget(benchmark::State& state) {
  Document doc = make_document(static_cast<std::size_t>(state.range(0)), 3);
  LeadingTokensSummarizer reference;
  for (auto _ : state) {
    benchmark::DoNotOptimize(summarize(doc, summary_budget(doc.length()), reference));
  }
}
BENCHMARK(BM_SummaryBudget)->Arg(4096)->Arg(20000);

void BM_EncodeChunk(benchmark::State& state) {
  EncoderParams params =
      init_encoder(503, static_cast<std::size_t>(state.range(0)), kWindow, 4);
  Document doc = make_document(2048, 5);
  Chunk chunk = best_chunk(doc, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_chunk(chunk, params));
  }
}
BENCHMARK(BM_EncodeChunk)->Arg(16)->Arg(64);

void BM_WeightedMetrics(benchmark::State& state) {
  std::mt19937 gen(6);
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  std::vector<int> y_true(2000), y_pred(2000);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    y_true[i] = static_cast<int>(gen() % k);
    y_pred[i] = static_cast<int>(gen() % k);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(weighted_metrics(confusion(y_true, y_pred, k)));
  }
}
BENCHMARK(BM_WeightedMetrics)->Arg(15)->Arg(279);

void BM_TrainEpoch(benchmark::State& state) {
  std::mt19937_64 gen(7);
  Vocab vocab;
  for (int i = 0; i < 500; ++i) vocab.add("w" + std::to_string(i));
  std::vector<Document> docs;
  for (int i = 0; i < 64; ++i) {
    Document doc = make_document(1024 + gen() % 1024, 100 + i);
    doc.broad_y = i % 4;
    doc.fine_y = doc.broad_y;
    docs.push_back(std::move(doc));
  }
  StrategyConfig cfg;
  cfg.kind = static_cast<StrategyKind>(state.range(0));
  cfg.embed_dim = 32;
  cfg.task.name = TaskKind::kBroad;
  for (int c = 0; c < 4; ++c) cfg.task.label_names.push_back(std::to_string(c));
  cfg.hyper.epochs = 1;
  cfg.hyper.seed = 11;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(cfg, docs, vocab));
  }
}
BENCHMARK(BM_TrainEpoch)
    ->Arg(static_cast<int>(StrategyKind::kBest512))
    ->Arg(static_cast<int>(StrategyKind::kConcat512))
    ->Arg(static_cast<int>(StrategyKind::kStride));

}  // namespace

BENCHMARK_MAIN();
