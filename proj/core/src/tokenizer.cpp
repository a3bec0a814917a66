#include "longdoc/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>

#include "longdoc/errors.hpp"

namespace longdoc {

namespace {

const std::string kPadName = "<pad>";
const std::string kUnkName = "<unk>";
const std::string kClsName = "<cls>";

bool is_space_byte(unsigned char c) { return c < 128 && std::isspace(c); }
bool is_word_byte(unsigned char c) {
  return c >= 128 || std::isalnum(c);  // non-ASCII bytes stay inside words
}

}  // namespace

std::size_t TokenSeq::real_count() const {
  std::size_t n = 0;
  for (std::uint8_t m : mask) n += m;
  return n;
}

bool TokenSeq::mask_is_prefix() const {
  if (mask.size() != ids.size()) return false;
  bool seen_pad = false;
  for (std::uint8_t m : mask) {
    if (m == 0) {
      seen_pad = true;
    } else if (seen_pad) {
      return false;
    }
  }
  return true;
}

TokenId Vocab::lookup(std::string_view token) const {
  auto it = to_id_.find(std::string(token));
  return it == to_id_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return to_id_.count(std::string(token)) > 0;
}

const std::string& Vocab::token_of(TokenId id) const {
  switch (id) {
    case kPadId:
      return kPadName;
    case kUnkId:
      return kUnkName;
    case kClsId:
      return kClsName;
    default:
      break;
  }
  std::size_t slot = id - kNumSpecialIds;
  if (slot >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[slot];
}

TokenId Vocab::add(std::string token) {
  if (token.empty()) throw DataError("cannot add empty token");
  if (to_id_.count(token) > 0) {
    throw DataError("duplicate token '" + token + "'");
  }
  TokenId id = static_cast<TokenId>(kNumSpecialIds + tokens_.size());
  to_id_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

void Vocab::save(std::ostream& out) const {
  for (const std::string& token : tokens_) {
    out << token << '\n';
  }
}

Vocab Vocab::load(std::istream& in) {
  Vocab vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    vocab.add(line);
  }
  return vocab;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back(word);
      word.clear();
    }
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (is_space_byte(c)) {
      flush();
    } else if (is_word_byte(c)) {
      word.push_back(static_cast<char>(c < 128 ? std::tolower(c) : c));
    } else {
      flush();
      tokens.emplace_back(1, raw);  // punctuation as a single-char token
    }
  }
  flush();
  return tokens;
}

Vocab build_vocab(const std::vector<std::string>& texts, std::size_t max_size,
                  std::size_t min_freq) {
  if (max_size < kNumSpecialIds + 1) {
    throw ConfigError("vocab max_size must be at least 4");
  }
  // std::map keeps candidates sorted so ties already break lexicographically.
  std::map<std::string, std::size_t> freq;
  for (const std::string& text : texts) {
    for (std::string& token : tokenize(text)) {
      ++freq[std::move(token)];
    }
  }

  std::vector<std::pair<std::string_view, std::size_t>> candidates;
  candidates.reserve(freq.size());
  for (const auto& [token, count] : freq) {
    if (count >= min_freq) candidates.emplace_back(token, count);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;  // frequency, then lexicographic
                   });

  Vocab vocab;
  std::size_t capacity = max_size - kNumSpecialIds;
  for (const auto& [token, count] : candidates) {
    if (capacity == 0) break;
    vocab.add(std::string(token));
    --capacity;
  }
  return vocab;
}

TokenSeq encode(const std::vector<std::string>& tokens, const Vocab& vocab,
                bool prepend_cls) {
  TokenSeq seq;
  seq.ids.reserve(tokens.size() + (prepend_cls ? 1 : 0));
  if (prepend_cls) seq.ids.push_back(kClsId);
  for (const std::string& token : tokens) {
    seq.ids.push_back(vocab.lookup(token));
  }
  seq.mask.assign(seq.ids.size(), 1);
  return seq;
}

std::vector<std::string> decode(const TokenSeq& seq, const Vocab& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(seq.ids.size());
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (seq.mask[i]) tokens.push_back(vocab.token_of(seq.ids[i]));
  }
  return tokens;
}

TokenSeq pad_or_truncate(const TokenSeq& seq, std::size_t target_len) {
  if (target_len < 1) throw ConfigError("target_len must be at least 1");
  TokenSeq out;
  out.ids.reserve(target_len);
  out.mask.reserve(target_len);
  std::size_t keep = std::min(seq.ids.size(), target_len);
  out.ids.assign(seq.ids.begin(), seq.ids.begin() + keep);
  out.mask.assign(seq.mask.begin(), seq.mask.begin() + keep);
  out.ids.resize(target_len, kPadId);
  out.mask.resize(target_len, 0);
  return out;
}

}  // namespace longdoc
