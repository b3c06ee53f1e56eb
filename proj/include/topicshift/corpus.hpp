#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicshift/text.hpp"

namespace topicshift {

/// Structural separator placed before every utterance and after the last one.
inline constexpr std::string_view kDefaultSeparator = "<s>";

/// Strings reserved by the model vocabulary; corpus text may not contain them.
std::span<const std::string> reserved_markers();

struct Utterance {
  std::size_t index = 0;
  std::string speaker;
  std::string text;
  int shift = 0;  // 0 = non-shift, 1 = shift
};

struct Dialogue {
  std::string id;
  Language language = Language::English;
  std::vector<Utterance> utterances;
  /// Optional published split ("train" / "dev" / "test").
  std::optional<std::string> split;
};

struct TopicBlock {
  std::size_t block_index = 0;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::optional<std::string> keyword;
  /// Set when the keyword came from the automatic fallback.
  bool needs_review = false;
};

enum class Granularity { Label, Topic, Turn };
inline constexpr Granularity kAllGranularities[] = {Granularity::Label, Granularity::Topic,
                                                    Granularity::Turn};
/// "label" / "topic" / "turn".
std::string_view granularity_key(Granularity g);
/// "Label" / "Topic" / "Turn".
std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view key);

struct DetectionExample {
  std::string dialogue_id;
  Language language = Language::English;
  std::size_t response_index = 0;
  int gold_label = 0;
  std::string serialized_input;
  std::map<Granularity, std::string> targets;
  std::optional<std::string> split;

  /// "<dialogue_id>#<response_index>"
  std::string id() const;
};

/// Checks every Dialogue invariant; throws ValidationError naming the dialogue.
void validate_dialogue(const Dialogue& dialogue, std::string_view separator = kDefaultSeparator);

/// Parses one canonical JSONL record. `line` is only used for messages.
Dialogue parse_dialogue(std::string_view json_line, std::size_t line = 0);
std::string dialogue_to_json(const Dialogue& dialogue);

/// Reads canonical JSONL. Blank lines are skipped. Every dialogue must carry
/// the requested language.
std::vector<Dialogue> load_corpus(std::istream& in, Language language,
                                  std::string_view separator = kDefaultSeparator);
std::vector<Dialogue> load_corpus(const std::filesystem::path& path, Language language,
                                  std::string_view separator = kDefaultSeparator);
void write_corpus(std::ostream& out, std::span<const Dialogue> dialogues);

std::vector<TopicBlock> derive_topic_blocks(const Dialogue& dialogue);
/// Index of the block containing utterance `utterance_index`.
std::size_t block_of(std::span<const TopicBlock> blocks, std::size_t utterance_index);
/// Utterance texts of a block joined with single spaces (speakers dropped).
std::string block_text(const Dialogue& dialogue, const TopicBlock& block);

/// separator + " " + text_1 + " " + separator + ... + " " + separator.
/// Throws ValidationError on an empty list or a text containing the separator.
std::string serialize_context(std::span<const std::string> utterances,
                              std::string_view separator = kDefaultSeparator);
/// Inverse of serialize_context.
std::vector<std::string> split_serialized(std::string_view serialized,
                                          std::string_view separator = kDefaultSeparator);

/// One example per response utterance 1..n-1; targets are left empty.
std::vector<DetectionExample> extract_pairs(const Dialogue& dialogue,
                                            std::string_view separator = kDefaultSeparator);

}  // namespace topicshift
