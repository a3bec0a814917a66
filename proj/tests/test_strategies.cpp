#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "longdoc/errors.hpp"
#include "longdoc/strategies.hpp"
#include "oracles.hpp"

using namespace longdoc;

namespace {

TaskSpec toy_task(std::size_t k) {
  TaskSpec task;
  task.name = TaskKind::kBroad;
  for (std::size_t c = 0; c < k; ++c) {
    task.label_names.push_back("class" + std::to_string(c));
  }
  return task;
}

// Vocab with `extra` regular tokens; documents index ids directly.
Vocab toy_vocab(std::size_t extra) {
  Vocab vocab;
  for (std::size_t i = 0; i < extra; ++i) vocab.add("t" + std::to_string(i));
  return vocab;
}

// Separable corpus: the label's signal id sits at `signal_pos`, fillers
// elsewhere. Ids stay below 3 + num_fillers + k.
std::vector<Document> signal_docs(std::size_t n, std::size_t k,
                                  std::size_t length, std::size_t signal_pos,
                                  std::size_t num_fillers,
                                  std::uint64_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<TokenId> filler(
      kNumSpecialIds, static_cast<TokenId>(kNumSpecialIds + num_fillers - 1));
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    Document doc;
    doc.id = "doc" + std::to_string(i);
    doc.broad_y = static_cast<int>(i % k);
    doc.fine_y = doc.broad_y;
    doc.token_ids.resize(length);
    for (auto& id : doc.token_ids) id = filler(gen);
    doc.token_ids[signal_pos] =
        static_cast<TokenId>(kNumSpecialIds + num_fillers + doc.broad_y);
    docs.push_back(std::move(doc));
  }
  return docs;
}

StrategyConfig toy_config(StrategyKind kind, std::size_t k,
                          std::size_t embed_dim = 8) {
  StrategyConfig cfg;
  cfg.kind = kind;
  cfg.task = toy_task(k);
  cfg.embed_dim = embed_dim;
  cfg.hyper.seed = 7;
  cfg.hyper.learning_rate = 0.05;
  return cfg;
}

bool same_params(const TrainedModel& a, const TrainedModel& b) {
  if (a.stacks.size() != b.stacks.size()) return false;
  for (std::size_t s = 0; s < a.stacks.size(); ++s) {
    if (a.stacks[s].encoders.size() != b.stacks[s].encoders.size()) return false;
    for (std::size_t e = 0; e < a.stacks[s].encoders.size(); ++e) {
      if (a.stacks[s].encoders[e].embedding !=
          b.stacks[s].encoders[e].embedding) {
        return false;
      }
    }
    if (a.stacks[s].head.weight != b.stacks[s].head.weight) return false;
    if (a.stacks[s].head.bias != b.stacks[s].head.bias) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("head_forward is a stabilized softmax") {
  Head head;
  head.num_classes = 3;
  head.input_dim = 2;
  head.weight.assign(6, 0.0);
  head.bias.assign(3, 0.0);
  std::vector<double> x = {0.4, -0.2};

  std::vector<double> uniform = head_forward(x, head);
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3.0));

  head.bias = {10.0, 0.0, 0.0};
  std::vector<double> biased = head_forward(x, head);
  CHECK(argmax_lowest(biased) == 0);

  std::vector<double> bad = {std::nan(""), 0.0};
  CHECK_THROWS_AS(head_forward(bad, head), DataError);
}

TEST_CASE("head_forward matches the extended-precision oracle") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int round = 0; round < 100; ++round) {
    Head head;
    head.num_classes = 2 + gen() % 8;
    head.input_dim = 1 + gen() % 12;
    head.weight.resize(head.num_classes * head.input_dim);
    head.bias.resize(head.num_classes);
    for (double& w : head.weight) w = u(gen);
    for (double& b : head.bias) b = u(gen);
    std::vector<double> x(head.input_dim);
    for (double& v : x) v = u(gen);

    std::vector<double> probs = head_forward(x, head);
    std::vector<long double> expected = oracles::softmax_extended(head, x);
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
      CHECK(std::abs(probs[c] - static_cast<double>(expected[c])) <= 1e-12);
      sum += probs[c];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("cross_entropy matches the analytic values") {
  std::vector<double> onehot = {0.0, 1.0, 0.0};
  CHECK(cross_entropy(onehot, 1).loss == doctest::Approx(0.0).epsilon(1e-9));

  std::vector<double> uniform(15, 1.0 / 15.0);
  CHECK(cross_entropy(uniform, 4).loss ==
        doctest::Approx(std::log(15.0)).epsilon(1e-9));

  CHECK_THROWS_AS(cross_entropy(uniform, 15), DataError);
  CHECK_THROWS_AS(cross_entropy(uniform, -1), DataError);
}

TEST_CASE("cross_entropy gradient matches finite differences over logits") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double eps = 1e-6;
  double worst = 0.0;
  for (int round = 0; round < 100; ++round) {
    std::size_t k = 2 + gen() % 10;
    int y = static_cast<int>(gen() % k);
    std::vector<double> logits(k);
    for (double& l : logits) l = u(gen);

    auto softmax = [&] {
      double mx = *std::max_element(logits.begin(), logits.end());
      std::vector<double> p(k);
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        p[c] = std::exp(logits[c] - mx);
        sum += p[c];
      }
      for (double& v : p) v /= sum;
      return p;
    };
    auto loss = [&] { return cross_entropy(softmax(), y).loss; };

    std::vector<double> analytic = cross_entropy(softmax(), y).grad_logits;
    for (std::size_t c = 0; c < k; ++c) {
      double numeric = oracles::central_difference(loss, &logits[c], eps);
      worst = std::max(worst, oracles::relative_error(analytic[c], numeric));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("majority_vote follows the vote-sum argmax with low tie-break") {
  VoteMatrix unanimous(6, 6);
  for (std::size_t i = 0; i < 6; ++i) unanimous.cast(i, 5);
  CHECK(majority_vote(unanimous) == 5);

  VoteMatrix tie(4, 6);
  tie.cast(0, 1);
  tie.cast(1, 1);
  tie.cast(2, 2);
  tie.cast(3, 2);
  tie.cast(4, 3);  // voter 5 abstains
  CHECK(majority_vote(tie) == 1);

  VoteMatrix silent(4, 6);
  CHECK_THROWS_AS(majority_vote(silent), DataError);
}

TEST_CASE("majority_vote is invariant under voter permutation") {
  std::mt19937 gen(17);
  for (int round = 0; round < 200; ++round) {
    std::size_t k = 2 + gen() % 10;
    VoteMatrix votes(k, 6);
    std::vector<int> cast_order;
    for (std::size_t i = 0; i < 6; ++i) {
      if (gen() % 4 == 0) continue;
      votes.cast(i, static_cast<int>(gen() % k));
    }
    bool any = false;
    for (std::size_t i = 0; i < 6; ++i) any |= !votes.abstained(i);
    if (!any) continue;
    int base = majority_vote(votes);

    std::vector<std::size_t> perm = {0, 1, 2, 3, 4, 5};
    std::shuffle(perm.begin(), perm.end(), gen);
    VoteMatrix permuted(k, 6);
    for (std::size_t i = 0; i < 6; ++i) {
      int v = votes.vote_of(perm[i]);
      if (v >= 0) permuted.cast(i, v);
    }
    CHECK(majority_vote(permuted) == base);
  }
}

TEST_CASE("majority_vote matches the enumeration oracle") {
  std::mt19937 gen(19);
  for (int round = 0; round < 2000; ++round) {
    std::size_t k = 2 + gen() % 278;
    VoteMatrix votes(k, 6);
    bool any = false;
    for (std::size_t i = 0; i < 6; ++i) {
      if (gen() % 3 == 0) continue;  // abstain
      votes.cast(i, static_cast<int>(gen() % k));
      any = true;
    }
    if (!any) continue;
    CHECK(majority_vote(votes) == oracles::vote_argmax(votes));
  }
}

TEST_CASE("vote rows stay one-hot through recasting") {
  VoteMatrix votes(5, 6);
  votes.cast(2, 4);
  votes.cast(2, 1);  // re-cast replaces the previous vote
  std::size_t row_sum = 0;
  for (std::size_t t = 0; t < 5; ++t) row_sum += votes.entry(2, t);
  CHECK(row_sum == 1);
  CHECK(votes.vote_of(2) == 1);
  votes.clear(2);
  CHECK(votes.abstained(2));
  for (std::size_t t = 0; t < 5; ++t) CHECK(votes.entry(2, t) == 0);
}

TEST_CASE("training is bit-for-bit deterministic in the seed") {
  auto docs = signal_docs(40, 4, 160, 3, 10, 5);
  Vocab vocab = toy_vocab(20);
  StrategyConfig cfg = toy_config(StrategyKind::kBest512, 4);
  cfg.hyper.epochs = 2;
  TrainedModel a = train(cfg, docs, vocab, &docs);
  TrainedModel b = train(cfg, docs, vocab, &docs);
  CHECK(same_params(a, b));
  CHECK(a.epoch_loss == b.epoch_loss);
  REQUIRE(a.epoch_trace.size() == b.epoch_trace.size());
  for (std::size_t e = 0; e < a.epoch_trace.size(); ++e) {
    CHECK(a.epoch_trace[e].accuracy == b.epoch_trace[e].accuracy);
    CHECK(a.epoch_trace[e].weighted_f1 == b.epoch_trace[e].weighted_f1);
  }

  cfg.hyper.seed = 8;
  TrainedModel c = train(cfg, docs, vocab);
  CHECK_FALSE(same_params(a, c));
}

TEST_CASE("ensemble membership respects the chunk-existence boundary") {
  Vocab vocab = toy_vocab(15);
  StrategyConfig cfg = toy_config(StrategyKind::kEnsemble, 3);
  cfg.hyper.epochs = 1;

  // every document exactly one window long: chunk 2 never exists
  auto at_boundary = signal_docs(18, 3, 512, 2, 8, 13);
  TrainedModel below = train(cfg, at_boundary, vocab);
  CHECK(below.member_present[0]);
  CHECK_FALSE(below.member_present[1]);

  // one token past the boundary: chunk 2 exists with a single real token
  auto past_boundary = signal_docs(18, 3, 513, 2, 8, 14);
  TrainedModel above = train(cfg, past_boundary, vocab);
  CHECK(above.member_present[0]);
  CHECK(above.member_present[1]);
  CHECK_FALSE(above.member_present[2]);
}

TEST_CASE("training loss is non-increasing on a single document") {
  auto docs = signal_docs(1, 3, 90, 2, 8, 9);
  Vocab vocab = toy_vocab(15);
  StrategyConfig cfg = toy_config(StrategyKind::kBest512, 3);
  cfg.hyper.learning_rate = 1e-3;  // small step keeps the descent monotone
  cfg.hyper.epochs = 5;
  TrainedModel model = train(cfg, docs, vocab);
  REQUIRE(model.epoch_loss.size() == 5);
  for (std::size_t e = 1; e < model.epoch_loss.size(); ++e) {
    CHECK(model.epoch_loss[e] <= model.epoch_loss[e - 1] + 1e-12);
  }
}

TEST_CASE("train rejects an empty training set") {
  Vocab vocab = toy_vocab(5);
  StrategyConfig cfg = toy_config(StrategyKind::kBest512, 3);
  CHECK_THROWS_AS(train(cfg, {}, vocab), TrainError);
}

TEST_CASE("a separable corpus is learned") {
  auto docs = signal_docs(400, 5, 200, 7, 12, 21);
  Vocab vocab = toy_vocab(20);
  StrategyConfig cfg = toy_config(StrategyKind::kBest512, 5, 16);
  cfg.hyper.learning_rate = 0.1;
  cfg.hyper.epochs = 8;
  TrainedModel model = train(cfg, docs, vocab, &docs);
  REQUIRE(model.epoch_trace.size() == 8);
  CHECK(best_epoch(model.epoch_trace).report.accuracy >= 0.95);

  // the planted signal decides the class
  CHECK(predict(model, docs[0]) == docs[0].broad_y);
  CHECK(predict(model, docs[1]) == docs[1].broad_y);
}

TEST_CASE("predict_single breaks probability ties to the lowest class") {
  Vocab vocab = toy_vocab(5);
  StrategyConfig cfg = toy_config(StrategyKind::kBest512, 3);
  TrainedModel model;
  model.config = cfg;
  SlotStack stack;
  stack.encoders.push_back(init_encoder(vocab.size(), cfg.embed_dim, kWindow, 1));
  Rng rng(2);
  stack.head = init_head(3, cfg.embed_dim, rng);
  stack.head.weight.assign(stack.head.weight.size(), 0.0);
  stack.head.bias.assign(stack.head.bias.size(), 0.0);
  model.stacks.push_back(std::move(stack));
  model.member_present = {true};

  Document empty_doc;
  empty_doc.id = "empty";
  CHECK(predict_single(model, empty_doc) == 0);  // uniform probabilities

  std::vector<double> probs = {0.2, 0.5, 0.3};
  CHECK(argmax_lowest(probs) == 1);
}

TEST_CASE("argmax predictions are invariant to positive logit scaling") {
  auto docs = signal_docs(30, 3, 700, 5, 10, 33);
  Vocab vocab = toy_vocab(15);
  StrategyConfig cfg = toy_config(StrategyKind::kConcat512, 3);
  cfg.hyper.epochs = 2;
  TrainedModel model = train(cfg, docs, vocab);

  TrainedModel scaled = model;
  const double alpha = 3.5;
  for (double& w : scaled.stacks[0].head.weight) w *= alpha;
  for (double& b : scaled.stacks[0].head.bias) b *= alpha;
  for (const Document& doc : docs) {
    CHECK(predict(model, doc) == predict(scaled, doc));
  }
}

TEST_CASE("predict_concat zero-fills missing slots") {
  Vocab vocab = toy_vocab(10);
  std::mt19937 gen(27);

  // model A: 6-slot concat; model B: single-slot with the same first slot
  StrategyConfig cfg_a = toy_config(StrategyKind::kConcat512, 3);
  StrategyConfig cfg_b = toy_config(StrategyKind::kBest512, 3);

  TrainedModel a;
  a.config = cfg_a;
  SlotStack stack_a;
  for (int e = 0; e < 6; ++e) {
    stack_a.encoders.push_back(
        init_encoder(vocab.size(), cfg_a.embed_dim, kWindow, 100 + e));
  }
  Rng rng_a(1);
  stack_a.head = init_head(3, cfg_a.embed_dim * 6, rng_a);
  // zero the head blocks for slots 2..6 so only slot 1 matters
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t j = cfg_a.embed_dim; j < cfg_a.embed_dim * 6; ++j) {
      stack_a.head.weight[c * cfg_a.embed_dim * 6 + j] = 0.0;
    }
  }

  TrainedModel b;
  b.config = cfg_b;
  SlotStack stack_b;
  stack_b.encoders.push_back(stack_a.encoders[0]);
  Rng rng_b(1);
  stack_b.head = init_head(3, cfg_b.embed_dim, rng_b);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < cfg_b.embed_dim; ++j) {
      stack_b.head.weight[c * cfg_b.embed_dim + j] =
          stack_a.head.weight[c * cfg_a.embed_dim * 6 + j];
    }
  }
  stack_b.head.bias = stack_a.head.bias;

  a.stacks.push_back(std::move(stack_a));
  a.member_present = {true};
  b.stacks.push_back(std::move(stack_b));
  b.member_present = {true};

  for (int round = 0; round < 20; ++round) {
    Document doc = oracles::random_document(gen, gen() % 500, 10, 0, 0);
    CHECK(predict_concat(a, doc) == predict_single(b, doc));
  }
}

TEST_CASE("a stride model sees three slots for the worked example") {
  auto docs = signal_docs(16, 2, 1024, 0, 8, 44);
  Vocab vocab = toy_vocab(12);
  StrategyConfig cfg = toy_config(StrategyKind::kStride, 2);
  cfg.stride = 64;
  std::vector<TokenSeq> inputs = extract_inputs(cfg, docs[0]);
  REQUIRE(inputs.size() == 3);
  CHECK(inputs[0].real_count() == 512);
  CHECK(inputs[1].real_count() == 512);
  CHECK(inputs[2].real_count() == 128);
}

TEST_CASE("permuting slots and head columns together is a no-op") {
  Vocab vocab = toy_vocab(10);
  StrategyConfig cfg = toy_config(StrategyKind::kConcat512, 4);
  cfg.max_chunks = 3;
  std::mt19937 gen(55);
  Document doc = oracles::random_document(gen, 3 * kWindow, 10, 0, 0);
  std::vector<TokenSeq> inputs = extract_inputs(cfg, doc);
  REQUIRE(inputs.size() == 3);

  SlotStack stack;
  for (int e = 0; e < 3; ++e) {
    stack.encoders.push_back(
        init_encoder(vocab.size(), cfg.embed_dim, kWindow, 200 + e));
  }
  Rng rng(9);
  stack.head = init_head(4, cfg.embed_dim * 3, rng);
  std::vector<double> base = stack_probabilities(stack, inputs, 3);

  const std::size_t perm[3] = {2, 0, 1};
  SlotStack permuted;
  std::vector<TokenSeq> perm_inputs;
  permuted.head = stack.head;
  for (std::size_t s = 0; s < 3; ++s) {
    permuted.encoders.push_back(stack.encoders[perm[s]]);
    perm_inputs.push_back(inputs[perm[s]]);
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t j = 0; j < cfg.embed_dim; ++j) {
        permuted.head.weight[c * cfg.embed_dim * 3 + s * cfg.embed_dim + j] =
            stack.head.weight[c * cfg.embed_dim * 3 + perm[s] * cfg.embed_dim +
                              j];
      }
    }
  }
  std::vector<double> moved = stack_probabilities(permuted, perm_inputs, 3);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(moved[c] == doctest::Approx(base[c]).epsilon(1e-12));
  }
}

TEST_CASE("ensemble votes follow chunk existence") {
  auto train_set = signal_docs(60, 3, 3100, 2, 8, 66);
  Vocab vocab = toy_vocab(15);
  StrategyConfig cfg = toy_config(StrategyKind::kEnsemble, 3);
  cfg.hyper.epochs = 1;
  TrainedModel model = train(cfg, train_set, vocab);
  REQUIRE(model.stacks.size() == 6);
  for (bool present : model.member_present) CHECK(present);

  Document short_doc = train_set[0];
  short_doc.token_ids.resize(600);
  VoteMatrix votes = ensemble_votes(model, short_doc);
  CHECK_FALSE(votes.abstained(0));
  CHECK_FALSE(votes.abstained(1));
  for (std::size_t m = 2; m < 6; ++m) CHECK(votes.abstained(m));

  VoteMatrix full = ensemble_votes(model, train_set[0]);  // length 3100
  for (std::size_t m = 0; m < 6; ++m) CHECK_FALSE(full.abstained(m));

  // one-hot discipline on every row
  for (std::size_t m = 0; m < 6; ++m) {
    std::size_t row = 0;
    for (std::size_t t = 0; t < 3; ++t) row += full.entry(m, t);
    CHECK(row == (full.abstained(m) ? 0u : 1u));
  }
}

TEST_CASE("ensemble members without data abstain and the rest decide") {
  auto short_docs = signal_docs(30, 3, 400, 2, 8, 77);  // one chunk each
  Vocab vocab = toy_vocab(15);
  StrategyConfig cfg = toy_config(StrategyKind::kEnsemble, 3);
  cfg.hyper.epochs = 2;
  cfg.hyper.learning_rate = 0.1;
  TrainedModel model = train(cfg, short_docs, vocab);
  CHECK(model.member_present[0]);
  for (std::size_t m = 1; m < 6; ++m) CHECK_FALSE(model.member_present[m]);

  int prediction = predict_ensemble(model, short_docs[0]);
  CHECK(prediction >= 0);
  CHECK(prediction < 3);

  // a zero-length document reaches the member-1 fallback
  Document empty_doc;
  empty_doc.id = "empty";
  CHECK_NOTHROW(predict_ensemble(model, empty_doc));
}

TEST_CASE("lsm sees the same tokens as best512 on tiny documents") {
  Vocab vocab = toy_vocab(10);
  std::mt19937 gen(88);

  StrategyConfig lsm_cfg = toy_config(StrategyKind::kLsm, 3);
  StrategyConfig best_cfg = toy_config(StrategyKind::kBest512, 3);

  EncoderParams enc512 = init_encoder(vocab.size(), 8, kWindow, 4);
  EncoderParams enc4096 = enc512;
  enc4096.window = kLsmWindow;
  Rng rng(5);
  Head head = init_head(3, 8, rng);

  TrainedModel lsm;
  lsm.config = lsm_cfg;
  lsm.stacks.push_back(SlotStack{{enc4096}, head});
  lsm.member_present = {true};

  TrainedModel best;
  best.config = best_cfg;
  best.stacks.push_back(SlotStack{{enc512}, head});
  best.member_present = {true};

  for (int round = 0; round < 20; ++round) {
    Document doc = oracles::random_document(gen, 10, 10, 0, 0);
    CHECK(predict_lsm(lsm, doc) == predict_single(best, doc));
  }

  // tokens beyond the lsm window are ignored
  Document long_doc = oracles::random_document(gen, 5000, 10, 0, 0);
  Document cut = long_doc;
  cut.token_ids.resize(kLsmWindow);
  CHECK(predict_lsm(lsm, long_doc) == predict_lsm(lsm, cut));
}

TEST_CASE("end-to-end gradients match finite differences per strategy") {
  std::mt19937 gen(99);
  Vocab vocab = toy_vocab(20);
  const double eps = 1e-5;

  for (StrategyKind kind :
       {StrategyKind::kBest512, StrategyKind::kSummarization512,
        StrategyKind::kConcat512, StrategyKind::kEnsemble,
        StrategyKind::kStride, StrategyKind::kLsm}) {
    StrategyConfig cfg = toy_config(kind, 4, 4);
    double worst = 0.0;
    for (int fixture = 0; fixture < 10; ++fixture) {
      Document doc =
          oracles::random_document(gen, gen() % 1400, 20, gen() % 4, 0);
      std::vector<TokenSeq> all_inputs = extract_inputs(cfg, doc);
      std::size_t slots = cfg.kind == StrategyKind::kEnsemble
                              ? 1
                              : cfg.slot_count();
      std::span<const TokenSeq> inputs(all_inputs);
      if (cfg.kind == StrategyKind::kEnsemble) {
        inputs = inputs.subspan(gen() % all_inputs.size(), 1);
      }

      SlotStack stack;
      std::size_t n_enc = slots;
      for (std::size_t e = 0; e < n_enc; ++e) {
        stack.encoders.push_back(init_encoder(
            vocab.size(), cfg.embed_dim, cfg.window(), 500 + fixture * 7 + e));
      }
      Rng rng(600 + fixture);
      stack.head = init_head(4, cfg.embed_dim * slots, rng);

      const int y = doc.broad_y;
      StackGradients grads;
      grads.init_for(stack);
      stack_backward(stack, inputs, slots, y, grads, 1.0);

      auto loss = [&] {
        return cross_entropy(stack_probabilities(stack, inputs, slots), y)
            .loss;
      };
      for (int probe = 0; probe < 6; ++probe) {
        std::size_t e = gen() % stack.encoders.size();
        std::size_t coord = gen() % stack.encoders[e].embedding.size();
        double numeric = oracles::central_difference(
            loss, &stack.encoders[e].embedding[coord], eps);
        worst = std::max(
            worst,
            oracles::relative_error(grads.encoder_grads[e][coord], numeric));
      }
      for (int probe = 0; probe < 4; ++probe) {
        std::size_t coord = gen() % stack.head.weight.size();
        double numeric = oracles::central_difference(
            loss, &stack.head.weight[coord], eps);
        worst = std::max(
            worst, oracles::relative_error(grads.weight_grad[coord], numeric));
      }
      {
        std::size_t coord = gen() % stack.head.bias.size();
        double numeric =
            oracles::central_difference(loss, &stack.head.bias[coord], eps);
        worst = std::max(
            worst, oracles::relative_error(grads.bias_grad[coord], numeric));
      }
    }
    INFO("kind = ", strategy_kind_name(kind));
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("shared-encoder stacks pool slot gradients into one table") {
  Vocab vocab = toy_vocab(20);
  std::mt19937 gen(222);
  const double eps = 1e-5;

  StrategyConfig cfg = toy_config(StrategyKind::kConcat512, 4, 4);
  cfg.shared_encoders = true;

  // gradient check against finite differences on the shared table
  double worst = 0.0;
  for (int fixture = 0; fixture < 10; ++fixture) {
    Document doc = oracles::random_document(gen, 200 + gen() % 1400, 20,
                                            static_cast<int>(gen() % 4), 0);
    std::vector<TokenSeq> inputs = extract_inputs(cfg, doc);
    SlotStack stack;
    stack.encoders.push_back(
        init_encoder(vocab.size(), cfg.embed_dim, kWindow, 700 + fixture));
    Rng rng(800 + fixture);
    stack.head = init_head(4, cfg.embed_dim * cfg.slot_count(), rng);

    StackGradients grads;
    grads.init_for(stack);
    stack_backward(stack, inputs, cfg.slot_count(), doc.broad_y, grads, 1.0);
    auto loss = [&] {
      return cross_entropy(
                 stack_probabilities(stack, inputs, cfg.slot_count()),
                 doc.broad_y)
          .loss;
    };
    for (int probe = 0; probe < 10; ++probe) {
      std::size_t coord = gen() % stack.encoders[0].embedding.size();
      double numeric = oracles::central_difference(
          loss, &stack.encoders[0].embedding[coord], eps);
      worst = std::max(worst, oracles::relative_error(
                                  grads.encoder_grads[0][coord], numeric));
    }
  }
  CHECK(worst <= 1e-4);

  // training in shared mode keeps a single table and stays deterministic
  auto docs = signal_docs(40, 4, 1200, 2, 10, 99);
  cfg.hyper.epochs = 2;
  TrainedModel model = train(cfg, docs, vocab);
  REQUIRE(model.stacks.size() == 1);
  CHECK(model.stacks[0].encoders.size() == 1);
  TrainedModel again = train(cfg, docs, vocab);
  CHECK(same_params(model, again));
  CHECK_NOTHROW(predict(model, docs[0]));
}

TEST_CASE("zero-length documents train and predict as all-pad windows") {
  Vocab vocab = toy_vocab(15);
  auto docs = signal_docs(8, 2, 300, 2, 8, 31);
  docs[3].token_ids.clear();  // one empty document in the training set
  for (StrategyKind kind :
       {StrategyKind::kBest512, StrategyKind::kSummarization512,
        StrategyKind::kConcat512, StrategyKind::kEnsemble, StrategyKind::kLsm}) {
    StrategyConfig cfg = toy_config(kind, 2);
    cfg.hyper.epochs = 1;
    TrainedModel model = train(cfg, docs, vocab, &docs);
    CHECK(model.epoch_trace.size() == 1);
    int prediction = predict(model, docs[3]);
    CHECK(prediction >= 0);
    CHECK(prediction < 2);
  }
}

TEST_CASE("model checkpoints restore identical predictions") {
  namespace fs = std::filesystem;
  Vocab vocab = toy_vocab(15);
  std::mt19937 gen(111);

  for (StrategyKind kind : {StrategyKind::kStride, StrategyKind::kEnsemble}) {
    auto docs = signal_docs(40, 3, 1200, 2, 8, 123);
    StrategyConfig cfg = toy_config(kind, 3);
    cfg.stride = 128;
    cfg.hyper.epochs = 1;
    TrainedModel model = train(cfg, docs, vocab);

    fs::path dir = fs::temp_directory_path() /
                   ("longdoc_ckpt_" + std::string(strategy_kind_name(kind)));
    fs::remove_all(dir);
    save_model(model, dir.string());
    TrainedModel loaded = load_model(dir.string());

    CHECK(loaded.config.kind == cfg.kind);
    CHECK(loaded.config.task.label_names == cfg.task.label_names);
    CHECK(same_params(model, loaded));
    for (int round = 0; round < 10; ++round) {
      Document doc = oracles::random_document(gen, gen() % 2000, 15,
                                              static_cast<int>(gen() % 3), 0);
      CHECK(predict(model, doc) == predict(loaded, doc));
    }
    fs::remove_all(dir);
  }
}

TEST_CASE("strategy configs validate their kind-specific fields") {
  StrategyConfig cfg = toy_config(StrategyKind::kBest512, 3);
  cfg.chunk_index = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = toy_config(StrategyKind::kStride, 3);
  cfg.stride = 600;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = toy_config(StrategyKind::kConcat512, 3);
  cfg.max_chunks = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = toy_config(StrategyKind::kLsm, 1);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  CHECK(toy_config(StrategyKind::kStride, 3).display_name() == "Stride-64");
  CHECK(toy_config(StrategyKind::kBest512, 3).display_name() == "Best-512[c1]");
  CHECK(parse_strategy_kind("concat512") == StrategyKind::kConcat512);
  CHECK_THROWS_AS(parse_strategy_kind("nope"), ConfigError);
}
