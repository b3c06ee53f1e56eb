#include "topicshift/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "topicshift/error.hpp"

namespace topicshift {

using nlohmann::json;

std::span<const std::string> reserved_markers() {
  static const std::vector<std::string> markers = {"<pad>", "</s>", "<s>", "<unk>",
                                                     "<label>", "<topic>", "<turn>"};
  return markers;
}

std::string_view granularity_key(Granularity g) {
  switch (g) {
    case Granularity::Label: return "label";
    case Granularity::Topic: return "topic";
    case Granularity::Turn: return "turn";
  }
  return "label";
}

std::string_view granularity_name(Granularity g) {
  switch (g) {
    case Granularity::Label: return "Label";
    case Granularity::Topic: return "Topic";
    case Granularity::Turn: return "Turn";
  }
  return "Label";
}

Granularity parse_granularity(std::string_view key) {
  for (auto g : kAllGranularities) {
    if (key == granularity_key(g) || key == granularity_name(g)) return g;
  }
  throw ValidationError("unknown granularity '" + std::string(key) + "'");
}

std::string DetectionExample::id() const {
  return dialogue_id + "#" + std::to_string(response_index);
}

void validate_dialogue(const Dialogue& dialogue, std::string_view separator) {
  const std::string where = "dialogue '" + dialogue.id + "'";
  if (dialogue.id.empty()) throw ValidationError("dialogue with empty id");
  if (dialogue.utterances.size() < 2) {
    throw ValidationError(where + " has fewer than 2 utterances");
  }
  for (std::size_t i = 0; i < dialogue.utterances.size(); ++i) {
    const auto& u = dialogue.utterances[i];
    if (u.index != i) {
      throw ValidationError(where + ": utterance indices are not contiguous from 0");
    }
    if (u.shift != 0 && u.shift != 1) {
      throw ValidationError(where + ": utterance " + std::to_string(i) + " has shift label " +
                            std::to_string(u.shift) + " (expected 0 or 1)");
    }
    if (!separator.empty() && u.text.find(separator) != std::string::npos) {
      throw ValidationError(where + ": utterance " + std::to_string(i) +
                            " contains the separator token '" + std::string(separator) + "'");
    }
    for (const auto& marker : reserved_markers()) {
      if (u.text.find(marker) != std::string::npos) {
        throw ValidationError(where + ": utterance " + std::to_string(i) +
                              " contains the reserved token '" + marker + "'");
      }
    }
  }
  if (dialogue.utterances.front().shift != 0) {
    throw ValidationError(where + ": the first utterance must have shift = 0");
  }
}

Dialogue parse_dialogue(std::string_view json_line, std::size_t line) {
  json record;
  try {
    record = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!record.is_object()) throw ParseError("record is not a JSON object", line);

  Dialogue dialogue;
  try {
    dialogue.id = record.at("id").get<std::string>();
    const auto lang = record.at("lang").get<std::string>();
    try {
      dialogue.language = parse_language(lang);
    } catch (const ValidationError& e) {
      throw ValidationError("dialogue '" + dialogue.id + "': " + e.what());
    }
    if (record.contains("split") && !record["split"].is_null()) {
      dialogue.split = record["split"].get<std::string>();
    }
    const auto& utterances = record.at("utterances");
    if (!utterances.is_array()) throw ParseError("'utterances' is not an array", line);
    for (std::size_t i = 0; i < utterances.size(); ++i) {
      const auto& u = utterances[i];
      Utterance utterance;
      utterance.index = i;
      utterance.speaker = u.at("speaker").get<std::string>();
      utterance.text = u.at("text").get<std::string>();
      utterance.shift = u.at("shift").get<int>();
      dialogue.utterances.push_back(std::move(utterance));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema violation: ") + e.what(), line);
  }
  return dialogue;
}

std::string dialogue_to_json(const Dialogue& dialogue) {
  json record;
  record["id"] = dialogue.id;
  record["lang"] = std::string(language_tag(dialogue.language));
  if (dialogue.split) record["split"] = *dialogue.split;
  json utterances = json::array();
  for (const auto& u : dialogue.utterances) {
    utterances.push_back({{"speaker", u.speaker}, {"text", u.text}, {"shift", u.shift}});
  }
  record["utterances"] = std::move(utterances);
  return record.dump();
}

std::vector<Dialogue> load_corpus(std::istream& in, Language language,
                                  std::string_view separator) {
  std::vector<Dialogue> dialogues;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    Dialogue dialogue = parse_dialogue(line, line_number);
    if (dialogue.language != language) {
      throw ValidationError("dialogue '" + dialogue.id + "' has language '" +
                            std::string(language_tag(dialogue.language)) +
                            "' but the corpus was loaded as '" +
                            std::string(language_tag(language)) + "'");
    }
    validate_dialogue(dialogue, separator);
    dialogues.push_back(std::move(dialogue));
  }
  return dialogues;
}

std::vector<Dialogue> load_corpus(const std::filesystem::path& path, Language language,
                                  std::string_view separator) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return load_corpus(in, language, separator);
}

void write_corpus(std::ostream& out, std::span<const Dialogue> dialogues) {
  for (const auto& d : dialogues) out << dialogue_to_json(d) << '\n';
}

std::vector<TopicBlock> derive_topic_blocks(const Dialogue& dialogue) {
  std::vector<TopicBlock> blocks;
  const std::size_t n = dialogue.utterances.size();
  std::size_t start = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || dialogue.utterances[i].shift == 1) {
      TopicBlock block;
      block.block_index = blocks.size();
      block.start = start;
      block.end = i;
      blocks.push_back(std::move(block));
      start = i;
    }
  }
  return blocks;
}

std::size_t block_of(std::span<const TopicBlock> blocks, std::size_t utterance_index) {
  for (const auto& b : blocks) {
    if (utterance_index >= b.start && utterance_index < b.end) return b.block_index;
  }
  throw ValidationError("utterance " + std::to_string(utterance_index) + " is not in any block");
}

std::string block_text(const Dialogue& dialogue, const TopicBlock& block) {
  std::string out;
  for (std::size_t i = block.start; i < block.end; ++i) {
    if (i > block.start) out += ' ';
    out += dialogue.utterances.at(i).text;
  }
  return out;
}

std::string serialize_context(std::span<const std::string> utterances,
                              std::string_view separator) {
  if (utterances.empty()) throw ValidationError("serialize_context needs at least one utterance");
  std::string out(separator);
  for (const auto& u : utterances) {
    if (u.find(separator) != std::string::npos) {
      throw ValidationError("utterance text contains the separator token '" +
                            std::string(separator) + "'");
    }
    out += ' ';
    out += u;
    out += ' ';
    out += separator;
  }
  return out;
}

std::vector<std::string> split_serialized(std::string_view serialized,
                                          std::string_view separator) {
  std::vector<std::string> pieces;
  std::size_t pos = serialized.find(separator);
  if (pos == std::string_view::npos) {
    throw ValidationError("serialized input contains no separator");
  }
  if (!text::trim(serialized.substr(0, pos)).empty()) {
    throw ValidationError("serialized input must start with the separator");
  }
  while (true) {
    const std::size_t begin = pos + separator.size();
    const std::size_t next = serialized.find(separator, begin);
    if (next == std::string_view::npos) {
      if (!text::trim(serialized.substr(begin)).empty()) {
        throw ValidationError("serialized input must end with the separator");
      }
      break;
    }
    pieces.push_back(text::trim(serialized.substr(begin, next - begin)));
    pos = next;
  }
  if (pieces.empty()) throw ValidationError("serialized input holds no utterance");
  return pieces;
}

std::vector<DetectionExample> extract_pairs(const Dialogue& dialogue,
                                            std::string_view separator) {
  std::vector<DetectionExample> examples;
  std::vector<std::string> texts;
  for (const auto& u : dialogue.utterances) texts.push_back(u.text);
  for (std::size_t r = 1; r < dialogue.utterances.size(); ++r) {
    DetectionExample ex;
    ex.dialogue_id = dialogue.id;
    ex.language = dialogue.language;
    ex.response_index = r;
    ex.gold_label = dialogue.utterances[r].shift;
    ex.serialized_input =
        serialize_context(std::span<const std::string>(texts.data(), r + 1), separator);
    ex.split = dialogue.split;
    examples.push_back(std::move(ex));
  }
  return examples;
}

}  // namespace topicshift
