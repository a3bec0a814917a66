#include "longdoc/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "longdoc/errors.hpp"
#include "longdoc/rng.hpp"

namespace longdoc {

namespace {

std::string padded_number(std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, value);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synth: need at least 2 classes");
  if (num_docs < num_classes) {
    throw ConfigError("synth: need at least one document per class");
  }
  if (min_length == 0 || min_length > max_length) {
    throw ConfigError("synth: need 0 < min_length <= max_length");
  }
  if (signal_lo >= signal_hi) {
    throw ConfigError("synth: need signal_lo < signal_hi");
  }
  if (signal_lo >= min_length) {
    throw ConfigError("synth: signal_lo must fall inside every document");
  }
  if (signal_count < 1) throw ConfigError("synth: signal_count must be >= 1");
  if (filler_vocab < 1) throw ConfigError("synth: filler_vocab must be >= 1");
}

std::vector<RawRecord> synth_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<std::string> class_names;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    class_names.push_back("class" + padded_number(c, 3));
  }
  std::vector<std::string> fillers;
  for (std::size_t f = 0; f < spec.filler_vocab; ++f) {
    fillers.push_back("w" + padded_number(f, 3));
  }

  std::vector<RawRecord> records;
  records.reserve(spec.num_docs);
  for (std::size_t i = 0; i < spec.num_docs; ++i) {
    const std::size_t cls = i % spec.num_classes;  // balanced classes
    const std::size_t length =
        spec.min_length + rng.next_index(spec.max_length - spec.min_length + 1);

    std::vector<std::size_t> token_choice(length);
    for (std::size_t t = 0; t < length; ++t) {
      token_choice[t] = rng.next_index(spec.filler_vocab);
    }
    const std::size_t hi = std::min(spec.signal_hi, length);
    std::vector<std::size_t> planted;
    for (std::size_t s = 0; s < spec.signal_count; ++s) {
      // distinct offsets; the offset range is never smaller than the count
      // by more than retries can absorb, so cap the attempts
      std::size_t pos = 0;
      for (int attempt = 0; attempt < 64; ++attempt) {
        pos = spec.signal_lo + rng.next_index(hi - spec.signal_lo);
        if (std::find(planted.begin(), planted.end(), pos) == planted.end()) {
          break;
        }
      }
      planted.push_back(pos);
    }

    std::string text;
    text.reserve(length * 5);
    for (std::size_t t = 0; t < length; ++t) {
      if (t) text.push_back(' ');
      if (std::find(planted.begin(), planted.end(), t) != planted.end()) {
        text += "sig" + padded_number(cls, 3);
      } else {
        text += fillers[token_choice[t]];
      }
    }

    RawRecord record;
    record.id = "doc" + padded_number(i, 6);
    record.text = std::move(text);
    record.broad_label = class_names[cls];
    record.fine_label = class_names[cls];
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace longdoc
