#ifndef LONGDOC_STRATEGIES_HPP
#define LONGDOC_STRATEGIES_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "longdoc/chunker.hpp"
#include "longdoc/corpus.hpp"
#include "longdoc/encoder.hpp"
#include "longdoc/metrics.hpp"
#include "longdoc/rng.hpp"

namespace longdoc {

// Window for the longer-sequence baseline; the document is fed unchunked.
inline constexpr std::size_t kLsmWindow = 4096;

enum class StrategyKind {
  kBest512,
  kSummarization512,
  kConcat512,
  kEnsemble,
  kStride,
  kLsm,
};

std::string_view strategy_kind_name(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);

struct HyperParams {
  std::size_t batch_size = 8;
  std::size_t epochs = 5;
  // Default tuned for the mean-pool encoder; the 3e-5 preset used with
  // pre-trained encoders ships in configs/.
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kBest512;
  int chunk_index = 1;  // best512 only
  int stride = 64;      // stride only
  int max_chunks = kDefaultMaxChunks;
  bool shared_encoders = false;  // concat/stride: one table for all slots
  std::size_t embed_dim = 64;
  TaskSpec task;
  HyperParams hyper;

  void validate() const;
  // "Best-512[c1]", "Stride-64", "Concat-512", ...
  std::string display_name() const;
  // Parallel encoder slots feeding the head: max_chunks for the concat
  // architecture, 1 otherwise.
  std::size_t slot_count() const;
  std::size_t window() const;  // kLsmWindow for lsm, kWindow otherwise
};

// Dense layer with softmax activation.
struct Head {
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  std::vector<double> weight;  // num_classes x input_dim, row-major
  std::vector<double> bias;    // num_classes
};

Head init_head(std::size_t num_classes, std::size_t input_dim, Rng& rng);

// softmax(Wx + b), stabilized by max subtraction. Non-finite inputs raise
// DataError.
std::vector<double> head_forward(std::span<const double> x, const Head& head);

struct CrossEntropyResult {
  double loss = 0.0;
  std::vector<double> grad_logits;  // probs - onehot(y)
};

CrossEntropyResult cross_entropy(std::span<const double> probs, int y);

// One-hot votes of up to six per-chunk models. Voters start out abstaining
// (all-zero rows).
class VoteMatrix {
 public:
  VoteMatrix(std::size_t num_classes, std::size_t num_voters = 6);

  void cast(std::size_t voter, int cls);
  void clear(std::size_t voter);
  bool abstained(std::size_t voter) const;
  int vote_of(std::size_t voter) const;  // -1 when abstaining
  std::uint8_t entry(std::size_t voter, std::size_t cls) const;

  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_voters() const { return num_voters_; }

 private:
  std::size_t num_classes_;
  std::size_t num_voters_;
  std::vector<std::uint8_t> entries_;  // voters x classes
  std::vector<std::uint8_t> abstain_;
};

// argmax_t of the per-class vote sums; ties break to the lowest class
// index. All voters abstaining raises DataError.
int majority_vote(const VoteMatrix& votes);

// Encoder slots plus one softmax head. Non-ensemble models have one stack;
// the ensemble has one single-slot stack per member.
struct SlotStack {
  std::vector<EncoderParams> encoders;  // one entry when encoders are shared
  Head head;

  const EncoderParams& encoder_for_slot(std::size_t slot) const;
};

struct TrainedModel {
  StrategyConfig config;
  std::vector<SlotStack> stacks;
  // Ensemble members with an empty training subset are absent and abstain.
  std::vector<bool> member_present;
  std::vector<double> epoch_loss;       // mean training loss per epoch
  std::vector<EvalReport> epoch_trace;  // filled when eval docs are attached
};

// The window inputs a strategy feeds its encoder slots, padded to the
// strategy window. Ensemble extraction matches concat (disjoint chunks).
std::vector<TokenSeq> extract_inputs(const StrategyConfig& config,
                                     const Document& doc);

// Deterministic for a fixed seed: seeded init, fixed epoch shuffles, fixed
// batch order. Per-epoch eval reports are recorded when eval_docs is given.
TrainedModel train(const StrategyConfig& config,
                   const std::vector<Document>& train_docs, const Vocab& vocab,
                   const std::vector<Document>* eval_docs = nullptr);

int predict(const TrainedModel& model, const Document& doc);
int predict_single(const TrainedModel& model, const Document& doc);
int predict_concat(const TrainedModel& model, const Document& doc);
int predict_ensemble(const TrainedModel& model, const Document& doc);
int predict_lsm(const TrainedModel& model, const Document& doc);

// Member votes for predict_ensemble: member i votes iff it exists and
// chunk i has at least one real token.
VoteMatrix ensemble_votes(const TrainedModel& model, const Document& doc);

// Class probabilities for one stack over the extracted slot inputs;
// missing slots contribute zero vectors.
std::vector<double> stack_probabilities(const SlotStack& stack,
                                        std::span<const TokenSeq> inputs,
                                        std::size_t slot_count);

// Gradient buffers matching one stack's trainable tensors.
struct StackGradients {
  std::vector<std::vector<double>> encoder_grads;
  std::vector<double> weight_grad;
  std::vector<double> bias_grad;

  void init_for(const SlotStack& stack);
  void zero();
};

// Cross-entropy loss of one (inputs, label) example through a stack;
// gradients scaled by `scale` accumulate into `grads`. Returns the loss.
double stack_backward(const SlotStack& stack, std::span<const TokenSeq> inputs,
                      std::size_t slot_count, int y, StackGradients& grads,
                      double scale);

EvalReport evaluate(const TrainedModel& model,
                    const std::vector<Document>& docs);

int label_of(const Document& doc, TaskKind kind);

// Lowest index wins ties.
int argmax_lowest(std::span<const double> values);

// Checkpoint directory: manifest.txt + labels.txt + per-stack encoder and
// head dumps.
void save_model(const TrainedModel& model, const std::string& dir);
TrainedModel load_model(const std::string& dir);

}  // namespace longdoc

#endif  // LONGDOC_STRATEGIES_HPP
