#ifndef LONGDOC_SYNTH_HPP
#define LONGDOC_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "longdoc/corpus.hpp"

namespace longdoc {

// Planted-signal corpus generator. Every document is filler tokens plus
// signal_count occurrences of its class token, planted at offsets drawn
// from [signal_lo, min(signal_hi, length)).
struct SynthSpec {
  std::size_t num_classes = 15;
  std::size_t num_docs = 1000;
  std::size_t min_length = 1600;
  std::size_t max_length = 3000;
  std::size_t signal_lo = 0;
  std::size_t signal_hi = 512;
  std::size_t signal_count = 1;
  std::size_t filler_vocab = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

// Deterministic in the SynthSpec; classes are balanced (doc i gets class
// i % num_classes) and both label levels carry the class name.
std::vector<RawRecord> synth_corpus(const SynthSpec& spec);

}  // namespace longdoc

#endif  // LONGDOC_SYNTH_HPP
