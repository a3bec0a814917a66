#include "longdoc/chunker.hpp"

#include <algorithm>

#include "longdoc/errors.hpp"

namespace longdoc {

namespace {

// Window over doc tokens [start, end), padded to `window` positions.
Chunk make_chunk(const Document& doc, std::size_t start, std::size_t end,
                 int index, std::size_t window) {
  Chunk chunk;
  chunk.origin_start = start;
  chunk.origin_end = end;
  chunk.index = index;
  chunk.seq.ids.reserve(window);
  chunk.seq.ids.assign(doc.token_ids.begin() + start,
                       doc.token_ids.begin() + end);
  chunk.seq.mask.assign(end - start, 1);
  chunk.seq.ids.resize(window, kPadId);
  chunk.seq.mask.resize(window, 0);
  return chunk;
}

}  // namespace

Chunk best_chunk(const Document& doc, int i) {
  if (i < 1) throw ConfigError("chunk index must be >= 1");
  const std::size_t length = doc.length();
  const std::size_t idx = static_cast<std::size_t>(i);
  std::size_t start = 0;
  std::size_t end = 0;
  if (length >= idx * kWindow) {
    start = (idx - 1) * kWindow;
    end = idx * kWindow;
  } else if (i > 1) {
    // short document: fall back to the last 512 (or fewer) tokens
    start = length > kWindow ? length - kWindow : 0;
    end = length;
  } else {
    end = length;  // i == 1, shorter than one window
  }
  return make_chunk(doc, start, end, i, kWindow);
}

std::vector<Chunk> disjoint_chunks(const Document& doc, int max_chunks) {
  if (max_chunks < 1) throw ConfigError("max_chunks must be >= 1");
  const std::size_t length = doc.length();
  std::vector<Chunk> chunks;
  if (length == 0) {
    chunks.push_back(make_chunk(doc, 0, 0, 1, kWindow));
    return chunks;
  }
  for (int k = 1; k <= max_chunks; ++k) {
    std::size_t start = static_cast<std::size_t>(k - 1) * kWindow;
    if (start >= length) break;
    std::size_t end = std::min(start + kWindow, length);
    chunks.push_back(make_chunk(doc, start, end, k, kWindow));
  }
  return chunks;
}

void StrideConfig::validate() const {
  if (stride <= 0 || static_cast<std::size_t>(stride) >= window) {
    throw ConfigError("stride must satisfy 0 < stride < window");
  }
  if (max_chunks < 1) throw ConfigError("max_chunks must be >= 1");
}

std::vector<Chunk> stride_chunks(const Document& doc,
                                 const StrideConfig& cfg) {
  cfg.validate();
  const std::size_t length = doc.length();
  const std::size_t step = cfg.window - static_cast<std::size_t>(cfg.stride);
  std::vector<Chunk> chunks;
  if (length == 0) {
    chunks.push_back(make_chunk(doc, 0, 0, 1, cfg.window));
    return chunks;
  }
  std::size_t prev_end = 0;
  for (int k = 1; k <= cfg.max_chunks; ++k) {
    std::size_t start = static_cast<std::size_t>(k - 1) * step;
    // stop once the document is out of range or already fully covered
    if (start >= length) break;
    if (k > 1 && prev_end >= length) break;
    std::size_t end = std::min(start + cfg.window, length);
    chunks.push_back(make_chunk(doc, start, end, k, cfg.window));
    prev_end = end;
  }
  return chunks;
}

SummarySpec summary_budget(std::size_t length) {
  SummarySpec spec;
  // n_i = floor(l_i / 1024), floored at 1; capped so nw_i stays >= 1
  spec.splits = std::max<std::size_t>(1, length / 1024);
  spec.splits = std::min<std::size_t>(spec.splits, kWindow);
  spec.per_split_budget = kWindow / spec.splits;

  const std::size_t base = length / spec.splits;
  const std::size_t extra = length % spec.splits;  // first `extra` ranges get +1
  std::size_t start = 0;
  for (std::size_t s = 0; s < spec.splits; ++s) {
    std::size_t size = base + (s < extra ? 1 : 0);
    spec.split_boundaries.emplace_back(start, start + size);
    start += size;
  }
  return spec;
}

std::vector<TokenId> LeadingTokensSummarizer::summarize_split(
    std::span<const TokenId> split, std::size_t budget) const {
  std::size_t keep = std::min(split.size(), budget);
  return std::vector<TokenId>(split.begin(), split.begin() + keep);
}

TokenSeq summarize(const Document& doc, const SummarySpec& spec,
                   const Summarizer& summarizer) {
  if (spec.split_boundaries.size() != spec.splits ||
      (!spec.split_boundaries.empty() &&
       spec.split_boundaries.back().second != doc.length())) {
    throw DataError("summary spec does not match the document length");
  }
  TokenSeq out;
  for (const auto& [start, end] : spec.split_boundaries) {
    std::span<const TokenId> split(doc.token_ids.data() + start, end - start);
    std::vector<TokenId> piece =
        summarizer.summarize_split(split, spec.per_split_budget);
    if (piece.size() > spec.per_split_budget) {
      throw DataError("summarizer returned " + std::to_string(piece.size()) +
                      " tokens against a budget of " +
                      std::to_string(spec.per_split_budget));
    }
    out.ids.insert(out.ids.end(), piece.begin(), piece.end());
  }
  out.mask.assign(out.ids.size(), 1);
  return out;
}

}  // namespace longdoc
