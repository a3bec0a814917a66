#ifndef LONGDOC_ENCODER_HPP
#define LONGDOC_ENCODER_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "longdoc/chunker.hpp"

namespace longdoc {

// Masked-mean pooling encoder over a trainable embedding table. It stands in
// for a pre-trained transformer: one fixed-dimension vector per window, with
// gradients flowing back into the table.
struct EncoderParams {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t window = kWindow;
  std::uint64_t seed = 0;
  std::vector<double> embedding;  // vocab_size x embed_dim, row-major

  std::span<const double> row(TokenId id) const;
  std::span<double> row(TokenId id);
};

// Seeded uniform init in [-0.05, 0.05]; the PAD row stays all-zero and is
// never updated.
EncoderParams init_encoder(std::size_t vocab_size, std::size_t embed_dim,
                           std::size_t window, std::uint64_t seed);

struct ChunkVector {
  std::vector<double> values;
  std::optional<std::vector<double>> grad;  // upstream gradient, if attached
};

// Mean of embedding rows over mask-1 positions; an all-pad input is the zero
// vector. Ids must be < vocab_size and the sequence must fit the window.
ChunkVector encode_chunk(const TokenSeq& seq, const EncoderParams& params);
ChunkVector encode_chunk(const Chunk& chunk, const EncoderParams& params);

// Accumulates d(loss)/d(embedding) into embedding_grad (same shape as the
// table): upstream / real_count added to each contributing row.
void encode_chunk_backward(const TokenSeq& seq, const EncoderParams& params,
                           std::span<const double> upstream_grad,
                           std::vector<double>& embedding_grad);
void encode_chunk_backward(const Chunk& chunk, const EncoderParams& params,
                           std::span<const double> upstream_grad,
                           std::vector<double>& embedding_grad);

// Feature-hashed bag of ids: deterministic in (ids, dim, seed), order
// independent, no trainable state. Each token touches one signed coordinate.
ChunkVector hash_encode(const Chunk& chunk, std::size_t dim,
                        std::uint64_t seed);

// Text dump. Header line: vocab_size embed_dim window seed; one row per line.
void save_encoder(const EncoderParams& params, std::ostream& out);
EncoderParams load_encoder(std::istream& in);

}  // namespace longdoc

#endif  // LONGDOC_ENCODER_HPP
