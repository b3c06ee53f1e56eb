#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "topicshift/corpus.hpp"

namespace topicshift {

struct Verbalizer {
  Language language = Language::English;
  std::string shift_word;
  std::string nonshift_word;

  /// Throws ValidationError when the words cannot be told apart by
  /// parse_generated_label (equal, or the non-shift word inside the shift word).
  void validate() const;
};

/// Slot markers used in template strings.
inline constexpr std::string_view kLabelSlot = "{LABEL}";
inline constexpr std::string_view kPrevSlot = "{PREV}";
inline constexpr std::string_view kCurSlot = "{CUR}";

/// A template split at its slots: literals.size() == slots.size() + 1.
struct TemplateParts {
  std::vector<std::string> literals;
  std::vector<std::string> slots;  // slot markers in order of appearance
};

struct TemplateSet {
  Language language = Language::English;
  std::string label_template;
  std::string topic_template;
  std::string turn_template;
  Verbalizer verbalizer;

  const std::string& for_granularity(Granularity g) const;
  /// Checks that each template holds exactly its declared slots.
  void validate() const;

  /// Templates compiled into the library from resources/templates.json.
  static const TemplateSet& builtin(Language language);
  /// Loads one language from a resource file with the same layout.
  static TemplateSet load(const std::string& path, Language language);
  static TemplateSet from_json(std::string_view resource, Language language);
};

TemplateParts split_template(std::string_view tmpl);

/// 1 -> shift word, 0 -> non-shift word; anything else throws ValidationError.
std::string verbalize_label(int label, const TemplateSet& templates);
std::string verbalize_label(int label, Language language);

std::string build_label_target(int label, const TemplateSet& templates);
std::string build_topic_target(std::string_view prev_keyword, std::string_view cur_keyword,
                               int label, const TemplateSet& templates);
std::string build_turn_target(std::string_view prev_info, std::string_view cur_info, int label,
                              const TemplateSet& templates);

std::string build_label_target(int label, Language language);
std::string build_topic_target(std::string_view prev_keyword, std::string_view cur_keyword,
                               int label, Language language);
std::string build_turn_target(std::string_view prev_info, std::string_view cur_info, int label,
                              Language language);

/// The template with every slot rendered as "[MASK]" (for docs and debugging).
std::string masked_template(Granularity g, const TemplateSet& templates);

/// Reads the label back from the tail of a generated sentence (the text
/// after its last comma). Non-shift word is checked first. nullopt = unknown.
std::optional<int> parse_generated_label(std::string_view generated, const TemplateSet& templates);
std::optional<int> parse_generated_label(std::string_view generated, Language language);

}  // namespace topicshift
