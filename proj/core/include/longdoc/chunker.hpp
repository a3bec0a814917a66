#ifndef LONGDOC_CHUNKER_HPP
#define LONGDOC_CHUNKER_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "longdoc/corpus.hpp"
#include "longdoc/tokenizer.hpp"

namespace longdoc {

// Encoder window size; every chunk is padded to exactly this length.
inline constexpr std::size_t kWindow = 512;

// Documents longer than max_chunks * kWindow are truncated to their first
// max_chunks windows (the corpus median sits near 3000 tokens).
inline constexpr int kDefaultMaxChunks = 6;

struct Chunk {
  TokenSeq seq;                  // length kWindow, padded
  std::size_t origin_start = 0;  // token offsets into the source document
  std::size_t origin_end = 0;
  int index = 1;                 // 1-based chunk number
};

// The i-th disjoint window [(i-1)*512, i*512) when the document reaches it;
// otherwise the last 512 tokens (all tokens when i == 1). A zero-length
// document yields an all-pad chunk with origin [0, 0).
Chunk best_chunk(const Document& doc, int i);

// Windows at offsets 0, 512, 1024, ... until the document is exhausted or
// max_chunks is reached. A zero-length document yields one all-pad chunk.
std::vector<Chunk> disjoint_chunks(const Document& doc, int max_chunks);

struct StrideConfig {
  int stride = 64;  // tokens shared between consecutive windows
  std::size_t window = kWindow;
  int max_chunks = kDefaultMaxChunks;

  void validate() const;  // ConfigError unless 0 < stride < window
};

// Chunk k starts at (k-1) * (window - stride). Chunks are emitted while the
// start lies inside the document and the previous window has not already
// reached the document end, capped at max_chunks.
std::vector<Chunk> stride_chunks(const Document& doc, const StrideConfig& cfg);

struct SummarySpec {
  std::size_t splits = 1;            // n_i
  std::size_t per_split_budget = 1;  // nw_i
  // Contiguous [start, end) ranges partitioning [0, length).
  std::vector<std::pair<std::size_t, std::size_t>> split_boundaries;
};

// splits = max(1, floor(length / 1024)), per-split budget floor(512 / splits),
// boundaries near-equal (sizes differ by at most 1). Splits are capped at 512
// so the budget never drops below one token.
SummarySpec summary_budget(std::size_t length);

class Summarizer {
 public:
  virtual ~Summarizer() = default;

  // At most `budget` token ids drawn from the given split.
  virtual std::vector<TokenId> summarize_split(std::span<const TokenId> split,
                                               std::size_t budget) const = 0;
};

// Reference extractor: the first `budget` tokens of each split.
class LeadingTokensSummarizer final : public Summarizer {
 public:
  std::vector<TokenId> summarize_split(std::span<const TokenId> split,
                                       std::size_t budget) const override;
};

// Per-split summaries concatenated in split order; total length <= 512.
// A summarizer returning more than its budget raises DataError.
TokenSeq summarize(const Document& doc, const SummarySpec& spec,
                   const Summarizer& summarizer);

}  // namespace longdoc

#endif  // LONGDOC_CHUNKER_HPP
