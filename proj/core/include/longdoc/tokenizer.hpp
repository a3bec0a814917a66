#ifndef LONGDOC_TOKENIZER_HPP
#define LONGDOC_TOKENIZER_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace longdoc {

using TokenId = std::uint32_t;

// Reserved ids. PAD is 0 so a zero-initialized buffer is valid padding.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kNumSpecialIds = 3;

// A token id sequence with its attention mask. The mask is always a prefix
// of 1s followed by 0s; mask-0 positions hold PAD.
struct TokenSeq {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;

  std::size_t size() const { return ids.size(); }
  std::size_t real_count() const;
  bool mask_is_prefix() const;
};

class Vocab {
 public:
  Vocab() = default;  // specials only

  std::size_t size() const { return kNumSpecialIds + tokens_.size(); }

  // Returns UNK for tokens outside the vocabulary.
  TokenId lookup(std::string_view token) const;
  bool contains(std::string_view token) const;

  // Valid for any id < size(); specials map to "<pad>", "<unk>", "<cls>".
  const std::string& token_of(TokenId id) const;

  // Appends a token with the next free id; rejects duplicates and specials.
  TokenId add(std::string token);

  // One token per line, line number = id - 3 (specials implicit).
  void save(std::ostream& out) const;
  static Vocab load(std::istream& in);

 private:
  std::unordered_map<std::string, TokenId> to_id_;
  std::vector<std::string> tokens_;
};

// Lowercases and splits on whitespace and punctuation boundaries;
// punctuation characters become single-character tokens.
std::vector<std::string> tokenize(std::string_view text);

// Keeps the most frequent tokens (at least min_freq occurrences) up to
// max_size - 3 regular entries; frequency ties break lexicographically.
// max_size must leave room for the specials (>= 4).
Vocab build_vocab(const std::vector<std::string>& texts, std::size_t max_size,
                  std::size_t min_freq);

// Unknown tokens map to UNK; when prepend_cls, position 0 is CLS.
TokenSeq encode(const std::vector<std::string>& tokens, const Vocab& vocab,
                bool prepend_cls);

// Token strings for the mask-1 positions.
std::vector<std::string> decode(const TokenSeq& seq, const Vocab& vocab);

// Output length is exactly target_len: truncation keeps the prefix,
// padding appends PAD with mask 0. target_len must be >= 1.
TokenSeq pad_or_truncate(const TokenSeq& seq, std::size_t target_len);

}  // namespace longdoc

#endif  // LONGDOC_TOKENIZER_HPP
