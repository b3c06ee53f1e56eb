#include "topicshift/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "topicshift/error.hpp"

namespace topicshift {

Vocabulary::Vocabulary(Language language, std::string separator, const Verbalizer& verbalizer)
    : language_(language) {
  if (separator.empty()) throw ValidationError("separator token must be non-empty");
  tokens_ = {"<pad>", "</s>", std::move(separator), "<unk>", verbalizer.shift_word,
             verbalizer.nonshift_word, "<label>", "<topic>", "<turn>"};
  for (int i = 0; i < kReservedCount; ++i) {
    if (i == kShift || i == kNonShift) continue;
    index_.emplace(tokens_[static_cast<std::size_t>(i)], i);
    markers_.push_back(tokens_[static_cast<std::size_t>(i)]);
  }
}

int Vocabulary::start_token(Granularity g) {
  switch (g) {
    case Granularity::Label: return kLabelStart;
    case Granularity::Topic: return kTopicStart;
    case Granularity::Turn: return kTurnStart;
  }
  return kLabelStart;
}

Vocabulary Vocabulary::from_tokens(Language language, std::span<const std::string> tokens) {
  if (tokens.size() < static_cast<std::size_t>(kReservedCount)) {
    throw ValidationError("vocabulary token list is shorter than the reserved block");
  }
  Verbalizer verbalizer{language, tokens[kShift], tokens[kNonShift]};
  Vocabulary vocab(language, tokens[kSeparator], verbalizer);
  for (std::size_t i = kReservedCount; i < tokens.size(); ++i) {
    if (vocab.add(tokens[i]) != static_cast<int>(i)) {
      throw ValidationError("duplicate token '" + tokens[i] + "' in vocabulary");
    }
  }
  return vocab;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

int Vocabulary::add(std::string_view token) {
  auto [it, inserted] = index_.emplace(std::string(token), size());
  if (inserted) tokens_.emplace_back(token);
  return it->second;
}

std::vector<std::string> Vocabulary::tokenize(std::string_view text) const {
  return text::tokenize(text, language_, markers_);
}

std::vector<int> Vocabulary::encode_text(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

EncodedInput Vocabulary::encode_input(std::string_view serialized) const {
  EncodedInput out;
  out.ids = encode_text(serialized);
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    if (out.ids[i] == kSeparator) out.separator_positions.push_back(static_cast<int>(i));
  }
  if (out.separator_positions.size() < 2) {
    throw ValidationError("serialized input needs at least two separators");
  }
  return out;
}

std::vector<int> Vocabulary::encode_target(std::string_view target, const TemplateSet& templates,
                                           Granularity granularity) const {
  const auto parts = split_template(templates.for_granularity(granularity));
  const std::string& tail = parts.literals.back();
  if (!target.ends_with(tail)) {
    throw ValidationError("target does not end with the template's closing text: " +
                          std::string(target));
  }
  std::string_view head = target.substr(0, target.size() - tail.size());
  int label_id = kUnknown;
  const auto& verbalizer = templates.verbalizer;
  if (head.ends_with(verbalizer.nonshift_word)) {
    label_id = kNonShift;
    head.remove_suffix(verbalizer.nonshift_word.size());
  } else if (head.ends_with(verbalizer.shift_word)) {
    label_id = kShift;
    head.remove_suffix(verbalizer.shift_word.size());
  } else {
    throw ValidationError("target has no verbalized label in its label slot: " +
                          std::string(target));
  }
  std::vector<int> ids = encode_text(head);
  ids.push_back(label_id);
  for (int t : encode_text(tail)) ids.push_back(t);
  ids.push_back(kEos);
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> parts;
  for (int i : ids) parts.push_back(token(i));
  return text::detokenize(parts, language_);
}

Vocabulary build_vocabulary(std::span<const std::string> texts, Language language,
                            std::string_view separator) {
  if (texts.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
  const auto& templates = TemplateSet::builtin(language);
  Vocabulary vocab(language, std::string(separator), templates.verbalizer);
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (const auto& tok : vocab.tokenize(t)) {
      if (vocab.contains(tok) && vocab.id(tok) < Vocabulary::kReservedCount) continue;
      ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [tok, count] : ranked) vocab.add(tok);
  return vocab;
}

Vocabulary build_vocabulary(std::span<const Dialogue> corpus, Language language,
                            std::string_view separator) {
  std::vector<std::string> texts;
  for (const auto& d : corpus) {
    for (const auto& u : d.utterances) texts.push_back(u.text);
  }
  return build_vocabulary(texts, language, separator);
}

}  // namespace topicshift
