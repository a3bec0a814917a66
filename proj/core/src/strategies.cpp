#include "longdoc/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "longdoc/errors.hpp"

namespace longdoc {

namespace fs = std::filesystem;

std::string_view strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kBest512:
      return "best512";
    case StrategyKind::kSummarization512:
      return "summarization512";
    case StrategyKind::kConcat512:
      return "concat512";
    case StrategyKind::kEnsemble:
      return "ensemble";
    case StrategyKind::kStride:
      return "stride";
    case StrategyKind::kLsm:
      return "lsm";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  if (name == "best512") return StrategyKind::kBest512;
  if (name == "summarization512") return StrategyKind::kSummarization512;
  if (name == "concat512") return StrategyKind::kConcat512;
  if (name == "ensemble") return StrategyKind::kEnsemble;
  if (name == "stride") return StrategyKind::kStride;
  if (name == "lsm") return StrategyKind::kLsm;
  throw ConfigError("unknown strategy kind '" + std::string(name) + "'");
}

void HyperParams::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
}

void StrategyConfig::validate() const {
  hyper.validate();
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (task.num_classes() < 2) {
    throw ConfigError("task needs at least 2 classes");
  }
  if (max_chunks < 1) throw ConfigError("max_chunks must be >= 1");
  if (kind == StrategyKind::kBest512 && chunk_index < 1) {
    throw ConfigError("best512 chunk index must be >= 1");
  }
  if (kind == StrategyKind::kStride) {
    StrideConfig{stride, kWindow, max_chunks}.validate();
  }
}

std::string StrategyConfig::display_name() const {
  switch (kind) {
    case StrategyKind::kBest512:
      return "Best-512[c" + std::to_string(chunk_index) + "]";
    case StrategyKind::kSummarization512:
      return "Summarization-512";
    case StrategyKind::kConcat512:
      return "Concat-512";
    case StrategyKind::kEnsemble:
      return "Ensemble";
    case StrategyKind::kStride:
      return "Stride-" + std::to_string(stride);
    case StrategyKind::kLsm:
      return "LSM";
  }
  return "unknown";
}

std::size_t StrategyConfig::slot_count() const {
  return (kind == StrategyKind::kConcat512 || kind == StrategyKind::kStride)
             ? static_cast<std::size_t>(max_chunks)
             : 1;
}

std::size_t StrategyConfig::window() const {
  return kind == StrategyKind::kLsm ? kLsmWindow : kWindow;
}

Head init_head(std::size_t num_classes, std::size_t input_dim, Rng& rng) {
  Head head;
  head.num_classes = num_classes;
  head.input_dim = input_dim;
  head.weight.resize(num_classes * input_dim);
  head.bias.resize(num_classes);
  for (double& w : head.weight) w = rng.next_uniform(-0.05, 0.05);
  for (double& b : head.bias) b = rng.next_uniform(-0.05, 0.05);
  return head;
}

std::vector<double> head_forward(std::span<const double> x, const Head& head) {
  if (x.size() != head.input_dim) {
    throw DataError("head input dimension mismatch");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("non-finite head input");
  }
  std::vector<double> logits(head.num_classes);
  for (std::size_t c = 0; c < head.num_classes; ++c) {
    double acc = head.bias[c];
    const double* row = head.weight.data() + c * head.input_dim;
    for (std::size_t j = 0; j < head.input_dim; ++j) acc += row[j] * x[j];
    logits[c] = acc;
  }
  double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  return logits;
}

CrossEntropyResult cross_entropy(std::span<const double> probs, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= probs.size()) {
    throw DataError("cross_entropy: label " + std::to_string(y) +
                    " out of range");
  }
  constexpr double kClip = 1e-12;
  CrossEntropyResult result;
  result.loss = -std::log(probs[static_cast<std::size_t>(y)] + kClip);
  result.grad_logits.assign(probs.begin(), probs.end());
  result.grad_logits[static_cast<std::size_t>(y)] -= 1.0;
  return result;
}

VoteMatrix::VoteMatrix(std::size_t num_classes, std::size_t num_voters)
    : num_classes_(num_classes),
      num_voters_(num_voters),
      entries_(num_classes * num_voters, 0),
      abstain_(num_voters, 1) {
  if (num_classes < 1 || num_voters < 1) {
    throw ConfigError("vote matrix needs at least one class and one voter");
  }
}

void VoteMatrix::cast(std::size_t voter, int cls) {
  if (voter >= num_voters_ || cls < 0 ||
      static_cast<std::size_t>(cls) >= num_classes_) {
    throw DataError("vote out of range");
  }
  clear(voter);
  entries_[voter * num_classes_ + static_cast<std::size_t>(cls)] = 1;
  abstain_[voter] = 0;
}

void VoteMatrix::clear(std::size_t voter) {
  if (voter >= num_voters_) throw DataError("voter out of range");
  std::fill_n(entries_.begin() + voter * num_classes_, num_classes_, 0);
  abstain_[voter] = 1;
}

bool VoteMatrix::abstained(std::size_t voter) const {
  return abstain_.at(voter) != 0;
}

int VoteMatrix::vote_of(std::size_t voter) const {
  if (abstained(voter)) return -1;
  for (std::size_t c = 0; c < num_classes_; ++c) {
    if (entries_[voter * num_classes_ + c]) return static_cast<int>(c);
  }
  return -1;
}

std::uint8_t VoteMatrix::entry(std::size_t voter, std::size_t cls) const {
  return entries_.at(voter * num_classes_ + cls);
}

int majority_vote(const VoteMatrix& votes) {
  bool any = false;
  for (std::size_t i = 0; i < votes.num_voters(); ++i) {
    if (!votes.abstained(i)) any = true;
  }
  if (!any) throw DataError("majority_vote: all voters abstained");

  int best = 0;
  std::size_t best_count = 0;
  for (std::size_t t = 0; t < votes.num_classes(); ++t) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < votes.num_voters(); ++i) {
      count += votes.entry(i, t);
    }
    if (count > best_count) {  // strict: ties keep the lowest class
      best_count = count;
      best = static_cast<int>(t);
    }
  }
  return best;
}

const EncoderParams& SlotStack::encoder_for_slot(std::size_t slot) const {
  return encoders.size() == 1 ? encoders.front() : encoders.at(slot);
}

int label_of(const Document& doc, TaskKind kind) {
  return kind == TaskKind::kBroad ? doc.broad_y : doc.fine_y;
}

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw DataError("argmax over empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<TokenSeq> extract_inputs(const StrategyConfig& config,
                                     const Document& doc) {
  std::vector<TokenSeq> inputs;
  switch (config.kind) {
    case StrategyKind::kBest512:
      inputs.push_back(best_chunk(doc, config.chunk_index).seq);
      break;
    case StrategyKind::kSummarization512: {
      SummarySpec spec = summary_budget(doc.length());
      LeadingTokensSummarizer reference;
      inputs.push_back(pad_or_truncate(summarize(doc, spec, reference), kWindow));
      break;
    }
    case StrategyKind::kConcat512:
    case StrategyKind::kEnsemble:
      for (Chunk& chunk : disjoint_chunks(doc, config.max_chunks)) {
        inputs.push_back(std::move(chunk.seq));
      }
      break;
    case StrategyKind::kStride: {
      StrideConfig cfg{config.stride, kWindow, config.max_chunks};
      for (Chunk& chunk : stride_chunks(doc, cfg)) {
        inputs.push_back(std::move(chunk.seq));
      }
      break;
    }
    case StrategyKind::kLsm: {
      TokenSeq seq;
      std::size_t keep = std::min(doc.length(), kLsmWindow);
      seq.ids.assign(doc.token_ids.begin(), doc.token_ids.begin() + keep);
      seq.mask.assign(keep, 1);
      inputs.push_back(pad_or_truncate(seq, kLsmWindow));
      break;
    }
  }
  return inputs;
}

namespace {

struct StackForward {
  std::vector<ChunkVector> slots;
  std::vector<double> x;  // concatenated slot vectors
  std::vector<double> probs;
};

StackForward stack_forward(const SlotStack& stack,
                           std::span<const TokenSeq> inputs,
                           std::size_t slot_count) {
  const std::size_t d = stack.encoders.front().embed_dim;
  StackForward fwd;
  fwd.slots.resize(slot_count);
  fwd.x.assign(slot_count * d, 0.0);
  for (std::size_t s = 0; s < slot_count; ++s) {
    if (s < inputs.size()) {
      fwd.slots[s] = encode_chunk(inputs[s], stack.encoder_for_slot(s));
      std::copy(fwd.slots[s].values.begin(), fwd.slots[s].values.end(),
                fwd.x.begin() + s * d);
    }
  }
  fwd.probs = head_forward(fwd.x, stack.head);
  return fwd;
}

struct AdamState {
  std::vector<double> m, v;
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
};

void adam_step(std::vector<double>& param, const std::vector<double>& grad,
               AdamState& state, const HyperParams& hp) {
  state.beta1_t *= hp.beta1;
  state.beta2_t *= hp.beta2;
  const double corr1 = 1.0 - state.beta1_t;
  const double corr2 = 1.0 - state.beta2_t;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = state.m[i] / corr1;
    const double v_hat = state.v[i] / corr2;
    param[i] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
  }
}

// One training unit: a stack plus the docs it sees. Non-ensemble models have
// a single unit over the whole training set; ensemble member i trains on
// documents whose chunk i exists (member 1 sees all).
struct TrainUnit {
  std::vector<std::size_t> doc_indices;
  StackGradients grads;
  std::vector<AdamState> enc_state;
  AdamState w_state, b_state;
};

}  // namespace

void StackGradients::init_for(const SlotStack& stack) {
  encoder_grads.clear();
  for (const EncoderParams& enc : stack.encoders) {
    encoder_grads.emplace_back(enc.embedding.size(), 0.0);
  }
  weight_grad.assign(stack.head.weight.size(), 0.0);
  bias_grad.assign(stack.head.bias.size(), 0.0);
}

void StackGradients::zero() {
  for (auto& g : encoder_grads) std::fill(g.begin(), g.end(), 0.0);
  std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
  std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
}

double stack_backward(const SlotStack& stack, std::span<const TokenSeq> inputs,
                      std::size_t slot_count, int y, StackGradients& grads,
                      double scale) {
  if (grads.encoder_grads.size() != stack.encoders.size() ||
      grads.weight_grad.size() != stack.head.weight.size()) {
    throw DataError("gradient buffers do not match the stack");
  }
  const std::size_t k = stack.head.num_classes;
  const std::size_t d_in = stack.head.input_dim;
  const std::size_t d = stack.encoders.front().embed_dim;

  StackForward fwd = stack_forward(stack, inputs, slot_count);
  CrossEntropyResult ce = cross_entropy(fwd.probs, y);

  for (std::size_t c = 0; c < k; ++c) {
    const double g = ce.grad_logits[c] * scale;
    double* w_row = grads.weight_grad.data() + c * d_in;
    for (std::size_t j = 0; j < d_in; ++j) w_row[j] += g * fwd.x[j];
    grads.bias_grad[c] += g;
  }

  std::vector<double> gx(d_in, 0.0);  // W^T grad_logits
  for (std::size_t c = 0; c < k; ++c) {
    const double g = ce.grad_logits[c] * scale;
    const double* w_row = stack.head.weight.data() + c * d_in;
    for (std::size_t j = 0; j < d_in; ++j) gx[j] += g * w_row[j];
  }
  for (std::size_t s = 0; s < slot_count && s < inputs.size(); ++s) {
    fwd.slots[s].grad =
        std::vector<double>(gx.begin() + s * d, gx.begin() + (s + 1) * d);
    const std::size_t enc_i = stack.encoders.size() == 1 ? 0 : s;
    encode_chunk_backward(inputs[s], stack.encoders[enc_i],
                          *fwd.slots[s].grad, grads.encoder_grads[enc_i]);
  }
  return ce.loss;
}

TrainedModel train(const StrategyConfig& config,
                   const std::vector<Document>& train_docs, const Vocab& vocab,
                   const std::vector<Document>* eval_docs) {
  config.validate();
  if (train_docs.empty()) throw TrainError("empty training set");

  const bool is_ensemble = config.kind == StrategyKind::kEnsemble;
  const std::size_t num_stacks =
      is_ensemble ? static_cast<std::size_t>(config.max_chunks) : 1;
  const std::size_t slot_count = is_ensemble ? 1 : config.slot_count();
  const std::size_t num_encoders = config.shared_encoders ? 1 : slot_count;
  const std::size_t k = config.task.num_classes();
  const std::size_t d = config.embed_dim;
  const std::size_t d_in = d * slot_count;

  TrainedModel model;
  model.config = config;

  Rng rng(config.hyper.seed);
  for (std::size_t stack_i = 0; stack_i < num_stacks; ++stack_i) {
    SlotStack stack;
    for (std::size_t e = 0; e < num_encoders; ++e) {
      stack.encoders.push_back(
          init_encoder(vocab.size(), d, config.window(), rng.next_u64()));
    }
    stack.head = init_head(k, d_in, rng);
    model.stacks.push_back(std::move(stack));
  }

  // Window inputs are pure in the document; extract once.
  std::vector<std::vector<TokenSeq>> doc_inputs(train_docs.size());
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    doc_inputs[i] = extract_inputs(config, train_docs[i]);
  }

  std::vector<TrainUnit> units(num_stacks);
  for (std::size_t m = 0; m < num_stacks; ++m) {
    TrainUnit& unit = units[m];
    for (std::size_t i = 0; i < train_docs.size(); ++i) {
      if (is_ensemble) {
        // chunk m+1 exists iff length >= m*512 + 1; member 1 also takes
        // zero-length documents (their single all-pad chunk)
        if (m == 0 || train_docs[i].length() >= m * kWindow + 1) {
          unit.doc_indices.push_back(i);
        }
      } else {
        unit.doc_indices.push_back(i);
      }
    }
    unit.grads.init_for(model.stacks[m]);
    unit.enc_state.resize(num_encoders);
    for (std::size_t e = 0; e < num_encoders; ++e) {
      unit.enc_state[e].init(unit.grads.encoder_grads[e].size());
    }
    unit.w_state.init(unit.grads.weight_grad.size());
    unit.b_state.init(unit.grads.bias_grad.size());
  }
  model.member_present.resize(num_stacks);
  for (std::size_t m = 0; m < num_stacks; ++m) {
    model.member_present[m] = !units[m].doc_indices.empty();
  }

  for (std::size_t epoch = 1; epoch <= config.hyper.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t m = 0; m < num_stacks; ++m) {
      TrainUnit& unit = units[m];
      if (unit.doc_indices.empty()) continue;
      SlotStack& stack = model.stacks[m];

      std::vector<std::size_t> order = unit.doc_indices;
      rng.shuffle(order);

      for (std::size_t begin = 0; begin < order.size();
           begin += config.hyper.batch_size) {
        const std::size_t end =
            std::min(begin + config.hyper.batch_size, order.size());
        const double inv_batch = 1.0 / static_cast<double>(end - begin);

        unit.grads.zero();
        for (std::size_t bi = begin; bi < end; ++bi) {
          const std::size_t doc_i = order[bi];
          const std::vector<TokenSeq>& inputs = doc_inputs[doc_i];
          std::span<const TokenSeq> stack_inputs;
          if (is_ensemble) {
            if (m >= inputs.size()) continue;
            stack_inputs = std::span<const TokenSeq>(&inputs[m], 1);
          } else {
            stack_inputs = inputs;
          }
          const int y = label_of(train_docs[doc_i], config.task.name);
          loss_sum += stack_backward(stack, stack_inputs, slot_count, y,
                                     unit.grads, inv_batch);
          ++loss_count;
        }

        for (std::size_t e = 0; e < num_encoders; ++e) {
          adam_step(stack.encoders[e].embedding, unit.grads.encoder_grads[e],
                    unit.enc_state[e], config.hyper);
        }
        adam_step(stack.head.weight, unit.grads.weight_grad, unit.w_state,
                  config.hyper);
        adam_step(stack.head.bias, unit.grads.bias_grad, unit.b_state,
                  config.hyper);
      }
    }
    model.epoch_loss.push_back(loss_count > 0
                                   ? loss_sum / static_cast<double>(loss_count)
                                   : 0.0);
    if (eval_docs != nullptr) {
      model.epoch_trace.push_back(evaluate(model, *eval_docs));
    }
  }
  return model;
}

std::vector<double> stack_probabilities(const SlotStack& stack,
                                        std::span<const TokenSeq> inputs,
                                        std::size_t slot_count) {
  return stack_forward(stack, inputs, slot_count).probs;
}

int predict_single(const TrainedModel& model, const Document& doc) {
  if (model.config.kind != StrategyKind::kBest512 &&
      model.config.kind != StrategyKind::kSummarization512) {
    throw ConfigError("predict_single requires a single-window strategy");
  }
  std::vector<TokenSeq> inputs = extract_inputs(model.config, doc);
  std::vector<double> probs =
      stack_probabilities(model.stacks.front(), inputs, 1);
  return argmax_lowest(probs);
}

int predict_concat(const TrainedModel& model, const Document& doc) {
  if (model.config.kind != StrategyKind::kConcat512 &&
      model.config.kind != StrategyKind::kStride) {
    throw ConfigError("predict_concat requires the concat architecture");
  }
  std::vector<TokenSeq> inputs = extract_inputs(model.config, doc);
  std::vector<double> probs = stack_probabilities(
      model.stacks.front(), inputs, model.config.slot_count());
  return argmax_lowest(probs);
}

VoteMatrix ensemble_votes(const TrainedModel& model, const Document& doc) {
  if (model.config.kind != StrategyKind::kEnsemble) {
    throw ConfigError("ensemble_votes requires an ensemble model");
  }
  std::vector<TokenSeq> inputs = extract_inputs(model.config, doc);
  VoteMatrix votes(model.config.task.num_classes(), model.stacks.size());
  for (std::size_t m = 0; m < model.stacks.size(); ++m) {
    if (!model.member_present[m]) continue;
    if (m >= inputs.size() || inputs[m].real_count() == 0) continue;
    std::span<const TokenSeq> one(&inputs[m], 1);
    std::vector<double> probs =
        stack_probabilities(model.stacks[m], one, 1);
    votes.cast(m, argmax_lowest(probs));
  }
  return votes;
}

int predict_ensemble(const TrainedModel& model, const Document& doc) {
  VoteMatrix votes = ensemble_votes(model, doc);
  bool any = false;
  for (std::size_t m = 0; m < votes.num_voters(); ++m) {
    if (!votes.abstained(m)) any = true;
  }
  if (!any) {
    // all abstained (e.g. a zero-length document): member 1 decides from
    // its own probabilities
    std::size_t first = 0;
    while (first < model.stacks.size() && !model.member_present[first]) {
      ++first;
    }
    if (first == model.stacks.size()) {
      throw DataError("ensemble has no trained members");
    }
    std::vector<TokenSeq> inputs = extract_inputs(model.config, doc);
    std::span<const TokenSeq> one(&inputs[std::min(first, inputs.size() - 1)],
                                  1);
    return argmax_lowest(stack_probabilities(model.stacks[first], one, 1));
  }
  return majority_vote(votes);
}

int predict_lsm(const TrainedModel& model, const Document& doc) {
  if (model.config.kind != StrategyKind::kLsm) {
    throw ConfigError("predict_lsm requires an lsm model");
  }
  std::vector<TokenSeq> inputs = extract_inputs(model.config, doc);
  std::vector<double> probs =
      stack_probabilities(model.stacks.front(), inputs, 1);
  return argmax_lowest(probs);
}

int predict(const TrainedModel& model, const Document& doc) {
  switch (model.config.kind) {
    case StrategyKind::kBest512:
    case StrategyKind::kSummarization512:
      return predict_single(model, doc);
    case StrategyKind::kConcat512:
    case StrategyKind::kStride:
      return predict_concat(model, doc);
    case StrategyKind::kEnsemble:
      return predict_ensemble(model, doc);
    case StrategyKind::kLsm:
      return predict_lsm(model, doc);
  }
  throw ConfigError("unknown strategy kind");
}

EvalReport evaluate(const TrainedModel& model,
                    const std::vector<Document>& docs) {
  std::vector<int> y_true, y_pred;
  y_true.reserve(docs.size());
  y_pred.reserve(docs.size());
  for (const Document& doc : docs) {
    y_true.push_back(label_of(doc, model.config.task.name));
    y_pred.push_back(predict(model, doc));
  }
  return weighted_metrics(
      confusion(y_true, y_pred, model.config.task.num_classes()));
}

namespace {

void write_kv(std::ostream& out, std::string_view key, const std::string& value) {
  out << key << " = " << value << '\n';
}

std::map<std::string, std::string> read_kv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(key);
    trim(value);
    kv[key] = value;
  }
  return kv;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_head(const Head& head, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << head.num_classes << ' ' << head.input_dim << '\n';
  for (std::size_t c = 0; c < head.num_classes; ++c) {
    for (std::size_t j = 0; j < head.input_dim; ++j) {
      if (j) out << ' ';
      out << head.weight[c * head.input_dim + j];
    }
    out << '\n';
  }
  for (std::size_t c = 0; c < head.num_classes; ++c) {
    if (c) out << ' ';
    out << head.bias[c];
  }
  out << '\n';
}

Head load_head(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Head head;
  if (!(in >> head.num_classes >> head.input_dim)) {
    throw DataError("malformed head checkpoint " + path.string());
  }
  head.weight.resize(head.num_classes * head.input_dim);
  head.bias.resize(head.num_classes);
  for (double& w : head.weight) {
    if (!(in >> w)) throw DataError("truncated head checkpoint");
  }
  for (double& b : head.bias) {
    if (!(in >> b)) throw DataError("truncated head checkpoint");
  }
  return head;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path base(dir);

  std::ofstream manifest(base / "manifest.txt");
  if (!manifest) throw DataError("cannot write manifest in " + dir);
  const StrategyConfig& cfg = model.config;
  write_kv(manifest, "kind", std::string(strategy_kind_name(cfg.kind)));
  write_kv(manifest, "task", std::string(task_kind_name(cfg.task.name)));
  write_kv(manifest, "num_classes", std::to_string(cfg.task.num_classes()));
  write_kv(manifest, "chunk_index", std::to_string(cfg.chunk_index));
  write_kv(manifest, "stride", std::to_string(cfg.stride));
  write_kv(manifest, "max_chunks", std::to_string(cfg.max_chunks));
  write_kv(manifest, "shared_encoders", cfg.shared_encoders ? "1" : "0");
  write_kv(manifest, "embed_dim", std::to_string(cfg.embed_dim));
  write_kv(manifest, "batch_size", std::to_string(cfg.hyper.batch_size));
  write_kv(manifest, "epochs", std::to_string(cfg.hyper.epochs));
  write_kv(manifest, "learning_rate", format_double(cfg.hyper.learning_rate));
  write_kv(manifest, "beta1", format_double(cfg.hyper.beta1));
  write_kv(manifest, "beta2", format_double(cfg.hyper.beta2));
  write_kv(manifest, "epsilon", format_double(cfg.hyper.epsilon));
  write_kv(manifest, "seed", std::to_string(cfg.hyper.seed));
  write_kv(manifest, "stacks", std::to_string(model.stacks.size()));
  std::string present;
  for (std::size_t m = 0; m < model.member_present.size(); ++m) {
    if (m) present += ',';
    present += model.member_present[m] ? '1' : '0';
  }
  write_kv(manifest, "member_present", present);

  std::ofstream labels(base / "labels.txt");
  for (const std::string& name : cfg.task.label_names) labels << name << '\n';

  for (std::size_t s = 0; s < model.stacks.size(); ++s) {
    const SlotStack& stack = model.stacks[s];
    for (std::size_t e = 0; e < stack.encoders.size(); ++e) {
      std::ofstream out(base / ("stack" + std::to_string(s) + "_encoder" +
                                std::to_string(e) + ".txt"));
      if (!out) throw DataError("cannot write encoder checkpoint in " + dir);
      save_encoder(stack.encoders[e], out);
    }
    save_head(stack.head, base / ("stack" + std::to_string(s) + "_head.txt"));
  }
}

TrainedModel load_model(const std::string& dir) {
  const fs::path base(dir);
  auto kv = read_kv(base / "manifest.txt");
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw DataError("manifest is missing key '" + std::string(key) + "'");
    }
    return it->second;
  };

  TrainedModel model;
  StrategyConfig& cfg = model.config;
  cfg.kind = parse_strategy_kind(need("kind"));
  cfg.task.name = parse_task_kind(need("task"));
  cfg.chunk_index = std::stoi(need("chunk_index"));
  cfg.stride = std::stoi(need("stride"));
  cfg.max_chunks = std::stoi(need("max_chunks"));
  cfg.shared_encoders = need("shared_encoders") == "1";
  cfg.embed_dim = std::stoul(need("embed_dim"));
  cfg.hyper.batch_size = std::stoul(need("batch_size"));
  cfg.hyper.epochs = std::stoul(need("epochs"));
  cfg.hyper.learning_rate = std::stod(need("learning_rate"));
  cfg.hyper.beta1 = std::stod(need("beta1"));
  cfg.hyper.beta2 = std::stod(need("beta2"));
  cfg.hyper.epsilon = std::stod(need("epsilon"));
  cfg.hyper.seed = std::stoull(need("seed"));

  std::ifstream labels(base / "labels.txt");
  if (!labels) throw DataError("cannot open labels in " + dir);
  std::string line;
  while (std::getline(labels, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) cfg.task.label_names.push_back(line);
  }
  if (cfg.task.label_names.size() != std::stoul(need("num_classes"))) {
    throw DataError("labels.txt does not match num_classes");
  }

  const std::size_t num_stacks = std::stoul(need("stacks"));
  const std::string present = need("member_present");
  model.member_present.assign(num_stacks, true);
  {
    std::istringstream in(present);
    std::string flag;
    std::size_t m = 0;
    while (std::getline(in, flag, ',') && m < num_stacks) {
      model.member_present[m++] = flag == "1";
    }
  }

  for (std::size_t s = 0; s < num_stacks; ++s) {
    SlotStack stack;
    for (std::size_t e = 0;; ++e) {
      fs::path enc_path = base / ("stack" + std::to_string(s) + "_encoder" +
                                  std::to_string(e) + ".txt");
      if (!fs::exists(enc_path)) break;
      std::ifstream in(enc_path);
      stack.encoders.push_back(load_encoder(in));
    }
    if (stack.encoders.empty()) {
      throw DataError("stack " + std::to_string(s) + " has no encoders in " +
                      dir);
    }
    stack.head =
        load_head(base / ("stack" + std::to_string(s) + "_head.txt"));
    model.stacks.push_back(std::move(stack));
  }
  cfg.validate();
  return model;
}

}  // namespace longdoc
