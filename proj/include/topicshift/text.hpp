#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topicshift {

enum class Language { English, Chinese };

/// "en" / "zh".
std::string_view language_tag(Language language);
/// Throws ValidationError for any other tag.
Language parse_language(std::string_view tag);

namespace text {

/// Splits UTF-8 into code points, each returned as its own byte string.
/// Invalid lead bytes are passed through one byte at a time.
std::vector<std::string> utf8_chars(std::string_view s);

bool is_space(std::string_view ch);
/// ASCII punctuation plus CJK / full-width / general punctuation blocks.
bool is_punctuation(std::string_view ch);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(std::span<const std::string> parts, std::string_view glue);

/// Model-level tokenizer. Reserved strings are matched first and emitted
/// whole. English: runs of word characters (letters, digits, apostrophes,
/// non-ASCII bytes) form tokens and every ASCII punctuation mark is its own
/// token. Chinese: each non-ASCII code point is a token, ASCII word runs
/// stay together.
std::vector<std::string> tokenize(std::string_view s, Language language,
                                  std::span<const std::string> reserved = {});

/// Joins model tokens back into surface text (space separated for English,
/// space only between adjacent ASCII words for Chinese).
std::string detokenize(std::span<const std::string> tokens, Language language);

/// Unit used by the 10-token limit on turn information: whitespace tokens
/// for English, non-space code points for Chinese.
std::vector<std::string> length_units(std::string_view s, Language language);
std::size_t length_in_units(std::string_view s, Language language);
/// Keeps at most `limit` units; English units are re-joined with single spaces.
std::string truncate_units(std::string_view s, Language language, std::size_t limit);

bool is_stopword(std::string_view lowered_token, Language language);
/// Lowercased content terms: stopwords, punctuation and pure numbers dropped.
/// English yields words; Chinese yields single characters.
std::vector<std::string> content_terms(std::string_view s, Language language);

}  // namespace text
}  // namespace topicshift
