#include "topicshift/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "topicshift/error.hpp"

namespace topicshift {

std::string_view language_tag(Language language) {
  return language == Language::English ? "en" : "zh";
}

Language parse_language(std::string_view tag) {
  if (tag == "en") return Language::English;
  if (tag == "zh") return Language::Chinese;
  throw ValidationError("unknown language tag '" + std::string(tag) + "' (expected en or zh)");
}

namespace text {
namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

char32_t decode(std::string_view ch) {
  const auto* b = reinterpret_cast<const unsigned char*>(ch.data());
  switch (ch.size()) {
    case 1: return b[0];
    case 2: return ((b[0] & 0x1F) << 6) | (b[1] & 0x3F);
    case 3: return ((b[0] & 0x0F) << 12) | ((b[1] & 0x3F) << 6) | (b[2] & 0x3F);
    case 4:
      return ((b[0] & 0x07) << 18) | ((b[1] & 0x3F) << 12) | ((b[2] & 0x3F) << 6) | (b[3] & 0x3F);
    default: return 0xFFFD;
  }
}

bool is_ascii_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '_';
}

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) && c != '\'' && c != '_';
}

const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and",
      "any", "are", "aren't", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "can", "can't", "cannot", "could", "couldn't", "did",
      "didn't", "do", "does", "doesn't", "doing", "don't", "down", "during", "each", "else",
      "ever", "every", "few", "for", "from", "further", "get", "got", "had", "hadn't", "has",
      "hasn't", "have", "haven't", "having", "he", "he'd", "he'll", "he's", "her", "here",
      "here's", "hers", "herself", "him", "himself", "his", "how", "how's", "i", "i'd", "i'll",
      "i'm", "i've", "if", "in", "into", "is", "isn't", "it", "it's", "its", "itself", "just",
      "let's", "like", "lot", "many", "may", "me", "might", "more", "most", "much", "must",
      "mustn't", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "one",
      "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own", "really",
      "same", "shan't", "she", "she'd", "she'll", "she's", "should", "shouldn't", "so", "some",
      "such", "than", "that", "that's", "the", "their", "theirs", "them", "themselves", "then",
      "there", "there's", "these", "they", "they'd", "they'll", "they're", "they've", "thing",
      "things", "this", "those", "three", "through", "to", "too", "two", "under", "until", "up",
      "us", "very", "was", "wasn't", "we", "we'd", "we'll", "we're", "we've", "well", "were",
      "weren't", "what", "what's", "when", "when's", "where", "where's", "which", "while", "who",
      "who's", "whom", "why", "why's", "will", "with", "won't", "would", "wouldn't", "yes",
      "you", "you'd", "you'll", "you're", "you've", "your", "yours", "yourself", "yourselves",
      // conversational fillers
      "ah", "aw", "bye", "cool", "hello", "hey", "hi", "haha", "hmm", "lol", "nice", "oh", "ok",
      "okay", "sure", "thanks", "thank", "um", "uh", "wow", "yeah", "yep", "great", "good",
      "love", "know", "think", "want", "go", "going", "make", "say", "said", "see", "time",
      "im", "dont", "u", "ur", "best", "favorite", "do", "does", "near", "better", "worse",
      "yesterday", "today", "tomorrow", "talk", "talked", "talking", "enjoy", "loves", "saw"};
  return words;
}

const std::unordered_set<std::string>& chinese_stopwords() {
  static const std::unordered_set<std::string> chars = {
      "的", "了", "是", "我", "你", "他", "她", "它", "们", "在", "有", "和", "就", "不",
      "也", "都", "这", "那", "吗", "呢", "吧", "啊", "呀", "哦", "嗯", "很", "还", "要",
      "会", "说", "一", "个", "着", "过", "对", "把", "被", "让", "给", "得", "地", "么",
      "什", "怎", "样", "哪", "谁", "没", "而", "且", "但", "所", "以", "因", "为", "如",
      "果", "可", "能", "去", "来", "到", "上", "下", "里", "中", "多", "少", "些", "又",
      "再", "才", "只", "太", "真", "好", "哈", "嘛", "啦", "哇", "诶", "喔", "唉", "其",
      "之", "与", "及", "或", "自", "己", "已", "经"};
  return chars;
}

}  // namespace

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = utf8_length(static_cast<unsigned char>(s[i]));
    if (i + len > s.size()) len = 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

bool is_space(std::string_view ch) {
  if (ch.size() == 1) return std::isspace(static_cast<unsigned char>(ch[0])) != 0;
  const char32_t cp = decode(ch);
  return cp == 0x3000 || cp == 0x00A0;
}

bool is_punctuation(std::string_view ch) {
  if (ch.size() == 1) return is_ascii_punct(ch[0]);
  const char32_t cp = decode(ch);
  return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65) ||
         (cp >= 0xFE30 && cp <= 0xFE4F);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join(std::span<const std::string> parts, std::string_view glue) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += glue;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s, Language language,
                                  std::span<const std::string> reserved) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };

  std::size_t i = 0;
  while (i < s.size()) {
    bool matched = false;
    for (const auto& r : reserved) {
      if (!r.empty() && s.substr(i, r.size()) == r) {
        flush();
        tokens.push_back(r);
        i += r.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;

    const char c = s[i];
    const auto uc = static_cast<unsigned char>(c);
    if (uc < 0x80) {
      if (std::isspace(uc)) {
        flush();
      } else if (is_ascii_word_char(c)) {
        word.push_back(c);
      } else {
        flush();
        tokens.emplace_back(1, c);
      }
      ++i;
      continue;
    }

    std::size_t len = utf8_length(uc);
    if (i + len > s.size()) len = 1;
    const std::string_view ch = s.substr(i, len);
    i += len;
    if (is_space(ch)) {
      flush();
    } else if (language == Language::Chinese || is_punctuation(ch)) {
      flush();
      tokens.emplace_back(ch);
    } else {
      word.append(ch);
    }
  }
  flush();
  return tokens;
}

std::string detokenize(std::span<const std::string> tokens, Language language) {
  if (language == Language::English) return join(tokens, " ");
  std::string out;
  bool prev_ascii_word = false;
  for (const auto& t : tokens) {
    const bool ascii_word = !t.empty() && static_cast<unsigned char>(t[0]) < 0x80 &&
                            is_ascii_word_char(t[0]);
    if (prev_ascii_word && ascii_word) out += ' ';
    out += t;
    prev_ascii_word = ascii_word;
  }
  return out;
}

std::vector<std::string> length_units(std::string_view s, Language language) {
  if (language == Language::English) return split_whitespace(s);
  std::vector<std::string> out;
  for (auto& ch : utf8_chars(s)) {
    if (!is_space(ch)) out.push_back(std::move(ch));
  }
  return out;
}

std::size_t length_in_units(std::string_view s, Language language) {
  return length_units(s, language).size();
}

std::string truncate_units(std::string_view s, Language language, std::size_t limit) {
  if (language == Language::English) {
    auto words = split_whitespace(s);
    if (words.size() > limit) words.resize(limit);
    return join(words, " ");
  }
  std::string out;
  std::size_t kept = 0;
  for (const auto& ch : utf8_chars(trim(s))) {
    if (is_space(ch)) {
      if (kept < limit) out += ch;
      continue;
    }
    if (kept == limit) break;
    out += ch;
    ++kept;
  }
  return trim(out);
}

bool is_stopword(std::string_view lowered_token, Language language) {
  const std::string key(lowered_token);
  return language == Language::English ? english_stopwords().contains(key)
                                       : chinese_stopwords().contains(key);
}

std::vector<std::string> content_terms(std::string_view s, Language language) {
  std::vector<std::string> out;
  for (auto& token : tokenize(s, language)) {
    std::string lowered = to_lower_ascii(token);
    const auto chars = utf8_chars(lowered);
    if (chars.size() == 1 && (is_punctuation(chars[0]) || is_space(chars[0]))) continue;
    if (std::all_of(lowered.begin(), lowered.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      continue;
    }
    if (std::all_of(lowered.begin(), lowered.end(), [](char c) { return c == '\''; })) continue;
    if (is_stopword(lowered, language)) continue;
    out.push_back(std::move(lowered));
  }
  return out;
}

}  // namespace text
}  // namespace topicshift
