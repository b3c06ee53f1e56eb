#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "topicshift/corpus.hpp"
#include "topicshift/prompts.hpp"

namespace topicshift {

/// Token ids of a serialized dialogue plus the positions of its separators.
struct EncodedInput {
  std::vector<int> ids;
  std::vector<int> separator_positions;
};

/// Token <-> id map. Ids 0..8 are reserved: padding, end of sequence,
/// separator, unknown, the two verbalizer words, and one decoder start token
/// per granularity. Verbalizer ids are only produced for the label slot of a
/// target sentence, never for ordinary text.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEos = 1;
  static constexpr int kSeparator = 2;
  static constexpr int kUnknown = 3;
  static constexpr int kShift = 4;
  static constexpr int kNonShift = 5;
  static constexpr int kLabelStart = 6;
  static constexpr int kTopicStart = 7;
  static constexpr int kTurnStart = 8;
  static constexpr int kReservedCount = 9;

  /// Token the shared decoder starts from when generating granularity `g`.
  static int start_token(Granularity g);

  Vocabulary(Language language, std::string separator, const Verbalizer& verbalizer);
  /// Rebuilds a vocabulary from its full token list (as stored in checkpoints).
  static Vocabulary from_tokens(Language language, std::span<const std::string> tokens);

  Language language() const { return language_; }
  const std::string& separator() const { return tokens_[kSeparator]; }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::span<const std::string> tokens() const { return tokens_; }
  /// Id of an ordinary token; kUnknown when absent.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  /// Appends an ordinary token if new; returns its id.
  int add(std::string_view token);

  /// Ordinary-text tokenization (reserved markers recognised).
  std::vector<std::string> tokenize(std::string_view text) const;
  std::vector<int> encode_text(std::string_view text) const;
  EncodedInput encode_input(std::string_view serialized) const;

  /// Encodes a filled target sentence: the verbalizer word in the label slot
  /// becomes kShift / kNonShift, and kEos is appended.
  std::vector<int> encode_target(std::string_view target, const TemplateSet& templates,
                                 Granularity granularity) const;

  std::string decode(std::span<const int> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_ && language_ == other.language_; }

 private:
  Language language_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> markers_;
};

/// Reserved tokens first, then every token of `texts` by descending
/// frequency (ties lexicographic). Throws ValidationError on empty input.
Vocabulary build_vocabulary(std::span<const std::string> texts, Language language,
                            std::string_view separator = kDefaultSeparator);
Vocabulary build_vocabulary(std::span<const Dialogue> corpus, Language language,
                            std::string_view separator = kDefaultSeparator);

}  // namespace topicshift
