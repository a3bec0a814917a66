#include "longdoc/encoder.hpp"

#include <istream>
#include <ostream>

#include "longdoc/errors.hpp"
#include "longdoc/rng.hpp"

namespace longdoc {

std::span<const double> EncoderParams::row(TokenId id) const {
  return {embedding.data() + static_cast<std::size_t>(id) * embed_dim,
          embed_dim};
}

std::span<double> EncoderParams::row(TokenId id) {
  return {embedding.data() + static_cast<std::size_t>(id) * embed_dim,
          embed_dim};
}

EncoderParams init_encoder(std::size_t vocab_size, std::size_t embed_dim,
                           std::size_t window, std::uint64_t seed) {
  if (vocab_size == 0 || embed_dim == 0 || window == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  EncoderParams params;
  params.vocab_size = vocab_size;
  params.embed_dim = embed_dim;
  params.window = window;
  params.seed = seed;
  params.embedding.resize(vocab_size * embed_dim);
  Rng rng(seed);
  for (double& w : params.embedding) w = rng.next_uniform(-0.05, 0.05);
  for (double& w : params.row(kPadId)) w = 0.0;  // PAD contributes nothing
  return params;
}

ChunkVector encode_chunk(const TokenSeq& seq, const EncoderParams& params) {
  if (seq.size() > params.window) {
    throw DataError("sequence of length " + std::to_string(seq.size()) +
                    " exceeds the encoder window " +
                    std::to_string(params.window));
  }
  ChunkVector out;
  out.values.assign(params.embed_dim, 0.0);
  std::size_t count = 0;
  for (std::size_t pos = 0; pos < seq.size(); ++pos) {
    if (!seq.mask[pos]) continue;
    TokenId id = seq.ids[pos];
    if (id >= params.vocab_size) {
      throw DataError("token id " + std::to_string(id) +
                      " out of range for vocab of " +
                      std::to_string(params.vocab_size));
    }
    std::span<const double> row = params.row(id);
    for (std::size_t d = 0; d < params.embed_dim; ++d) out.values[d] += row[d];
    ++count;
  }
  if (count > 0) {
    for (double& v : out.values) v /= static_cast<double>(count);
  }
  return out;
}

ChunkVector encode_chunk(const Chunk& chunk, const EncoderParams& params) {
  return encode_chunk(chunk.seq, params);
}

void encode_chunk_backward(const TokenSeq& seq, const EncoderParams& params,
                           std::span<const double> upstream_grad,
                           std::vector<double>& embedding_grad) {
  if (upstream_grad.size() != params.embed_dim) {
    throw DataError("upstream gradient dimension mismatch");
  }
  if (embedding_grad.size() != params.embedding.size()) {
    throw DataError("embedding gradient shape mismatch");
  }
  std::size_t count = seq.real_count();
  if (count == 0) return;  // all-pad: the forward output is constant zero
  const double scale = 1.0 / static_cast<double>(count);
  for (std::size_t pos = 0; pos < seq.size(); ++pos) {
    if (!seq.mask[pos]) continue;
    double* row =
        embedding_grad.data() + static_cast<std::size_t>(seq.ids[pos]) * params.embed_dim;
    for (std::size_t d = 0; d < params.embed_dim; ++d) {
      row[d] += upstream_grad[d] * scale;
    }
  }
}

void encode_chunk_backward(const Chunk& chunk, const EncoderParams& params,
                           std::span<const double> upstream_grad,
                           std::vector<double>& embedding_grad) {
  encode_chunk_backward(chunk.seq, params, upstream_grad, embedding_grad);
}

ChunkVector hash_encode(const Chunk& chunk, std::size_t dim,
                        std::uint64_t seed) {
  if (dim < 1) throw ConfigError("hash dimension must be >= 1");
  ChunkVector out;
  out.values.assign(dim, 0.0);
  for (std::size_t pos = 0; pos < chunk.seq.size(); ++pos) {
    if (!chunk.seq.mask[pos]) continue;
    std::uint64_t h = mix64(seed ^ mix64(chunk.seq.ids[pos] + 1));
    std::size_t coord = static_cast<std::size_t>(h % dim);
    double sign = (h >> 63) ? 1.0 : -1.0;
    out.values[coord] += sign;
  }
  return out;
}

void save_encoder(const EncoderParams& params, std::ostream& out) {
  out.precision(17);
  out << params.vocab_size << ' ' << params.embed_dim << ' ' << params.window
      << ' ' << params.seed << '\n';
  for (std::size_t r = 0; r < params.vocab_size; ++r) {
    std::span<const double> row = params.row(static_cast<TokenId>(r));
    for (std::size_t d = 0; d < params.embed_dim; ++d) {
      if (d) out << ' ';
      out << row[d];
    }
    out << '\n';
  }
}

EncoderParams load_encoder(std::istream& in) {
  EncoderParams params;
  if (!(in >> params.vocab_size >> params.embed_dim >> params.window >>
        params.seed)) {
    throw DataError("malformed encoder checkpoint header");
  }
  params.embedding.resize(params.vocab_size * params.embed_dim);
  for (double& w : params.embedding) {
    if (!(in >> w)) throw DataError("truncated encoder checkpoint");
  }
  return params;
}

}  // namespace longdoc
