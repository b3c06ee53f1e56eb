#include "topicshift/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

#include "topicshift/error.hpp"

namespace topicshift {

using nlohmann::json;

EnrichedDialogue enrich_dialogue(const Dialogue& dialogue, const KeywordProvider& keywords,
                                 const SrlProvider& srl) {
  EnrichedDialogue out;
  out.dialogue = dialogue;
  auto blocks = derive_topic_blocks(dialogue);
  std::vector<std::vector<KeywordCandidate>> candidates;
  candidates.reserve(blocks.size());
  for (const auto& b : blocks) {
    candidates.push_back(keyword_candidates(keywords, block_text(dialogue, b), dialogue.language));
  }
  out.blocks = assign_block_keywords(dialogue, std::move(blocks), candidates);
  for (const auto& u : dialogue.utterances) {
    auto tuples = ingest_tuples(u.text, srl.extract(u.text, dialogue.language));
    out.turns.push_back(select_turn_info(u, dialogue.language, tuples));
  }
  return out;
}

std::vector<ReviewFlag> review_flags(const EnrichedDialogue& enriched) {
  std::vector<ReviewFlag> flags;
  for (const auto& b : enriched.blocks) {
    if (b.needs_review) flags.push_back({enriched.dialogue.id, "keyword", b.block_index, *b.keyword});
  }
  for (const auto& t : enriched.turns) {
    if (t.provenance == TurnInfoSource::Fallback) {
      flags.push_back({enriched.dialogue.id, "turn_info", t.utterance_index, t.info});
    }
  }
  return flags;
}

std::vector<DetectionExample> build_examples(const EnrichedDialogue& enriched,
                                             const TemplateSet& templates,
                                             std::string_view separator) {
  auto examples = extract_pairs(enriched.dialogue, separator);
  for (auto& ex : examples) {
    const std::size_t r = ex.response_index;
    const std::size_t cur = block_of(enriched.blocks, r);
    const std::size_t prev = cur == 0 ? 0 : cur - 1;
    ex.targets[Granularity::Label] = build_label_target(ex.gold_label, templates);
    ex.targets[Granularity::Topic] = build_topic_target(*enriched.blocks[prev].keyword,
                                                        *enriched.blocks[cur].keyword,
                                                        ex.gold_label, templates);
    ex.targets[Granularity::Turn] = build_turn_target(enriched.turns.at(r - 1).info,
                                                      enriched.turns.at(r).info, ex.gold_label,
                                                      templates);
  }
  return examples;
}

PreprocessResult preprocess(std::span<const Dialogue> corpus, KeywordProvider& keywords,
                            const SrlProvider& srl, const PreprocessOptions& options) {
  PreprocessResult result;
  if (corpus.empty()) return result;
  const Language language = corpus.front().language;
  const auto& templates = TemplateSet::builtin(language);

  if (options.fit_keyword_weights) {
    if (auto* frequency = dynamic_cast<FrequencyKeywordProvider*>(&keywords)) {
      std::vector<std::string> texts;
      for (const auto& d : corpus) {
        for (const auto& b : derive_topic_blocks(d)) texts.push_back(block_text(d, b));
      }
      frequency->fit(texts, language);
    }
  }

  struct Slot {
    std::vector<DetectionExample> examples;
    std::vector<ReviewFlag> flags;
    std::string error;
  };
  std::vector<Slot> slots(corpus.size());
  auto work = [&](std::size_t i) {
    try {
      validate_dialogue(corpus[i], options.separator);
      const auto enriched = enrich_dialogue(corpus[i], keywords, srl);
      slots[i].examples = build_examples(enriched, templates, options.separator);
      slots[i].flags = review_flags(enriched);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  };

  const std::size_t workers =
      (keywords.concurrent() && srl.concurrent()) ? std::max<std::size_t>(1, options.workers) : 1;
  if (workers == 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) work(i);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        for (std::size_t i = w; i < corpus.size(); i += workers) work(i);
      });
    }
    for (auto& t : threads) t.join();
  }

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& slot = slots[i];
    if (!slot.error.empty()) {
      if (!options.lenient) {
        throw Error("preprocessing dialogue '" + corpus[i].id + "' failed: " + slot.error);
      }
      result.skipped.push_back(corpus[i].id + ": " + slot.error);
      continue;
    }
    std::move(slot.examples.begin(), slot.examples.end(), std::back_inserter(result.examples));
    std::move(slot.flags.begin(), slot.flags.end(), std::back_inserter(result.flags));
  }
  return result;
}

std::string example_to_json(const DetectionExample& example) {
  json targets = json::object();
  for (const auto& [g, t] : example.targets) targets[std::string(granularity_key(g))] = t;
  json record{{"dialogue_id", example.dialogue_id},
              {"lang", std::string(language_tag(example.language))},
              {"response_index", example.response_index},
              {"gold_label", example.gold_label},
              {"serialized_input", example.serialized_input},
              {"targets", targets}};
  if (example.split) record["split"] = *example.split;
  return record.dump();
}

DetectionExample example_from_json(std::string_view line, std::size_t line_number) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
  DetectionExample ex;
  try {
    ex.dialogue_id = record.at("dialogue_id").get<std::string>();
    ex.language = parse_language(record.at("lang").get<std::string>());
    ex.response_index = record.at("response_index").get<std::size_t>();
    ex.gold_label = record.at("gold_label").get<int>();
    ex.serialized_input = record.at("serialized_input").get<std::string>();
    if (record.contains("targets")) {
      for (const auto& [key, value] : record.at("targets").items()) {
        ex.targets[parse_granularity(key)] = value.get<std::string>();
      }
    }
    if (record.contains("split") && !record["split"].is_null()) ex.split = record["split"].get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema violation: ") + e.what(), line_number);
  }
  if (ex.gold_label != 0 && ex.gold_label != 1) {
    throw ValidationError("example " + ex.id() + " has gold label " + std::to_string(ex.gold_label));
  }
  if (ex.response_index < 1) throw ValidationError("example " + ex.id() + " has response index 0");
  return ex;
}

void write_examples(std::ostream& out, std::span<const DetectionExample> examples) {
  for (const auto& ex : examples) out << example_to_json(ex) << '\n';
}

std::vector<DetectionExample> read_examples(std::istream& in) {
  std::vector<DetectionExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    out.push_back(example_from_json(line, n));
  }
  return out;
}

std::vector<DetectionExample> read_examples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open example file " + path.string());
  return read_examples(in);
}

bool is_example_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      return json::parse(line).contains("serialized_input");
    } catch (const json::exception&) {
      return false;
    }
  }
  return false;
}

void assign_splits(std::vector<DetectionExample>& examples, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& ex : examples) {
    if (!ex.split && std::find(ids.begin(), ids.end(), ex.dialogue_id) == ids.end()) {
      ids.push_back(ex.dialogue_id);
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t n = ids.size();
  const std::size_t n_train = (n * 8) / 10;
  const std::size_t n_dev = n / 10;
  std::map<std::string, std::string> split;
  for (std::size_t i = 0; i < n; ++i) {
    split[ids[i]] = i < n_train ? "train" : (i < n_train + n_dev ? "dev" : "test");
  }
  for (auto& ex : examples) {
    if (!ex.split) ex.split = split.at(ex.dialogue_id);
  }
}

std::vector<DetectionExample> select_split(std::span<const DetectionExample> examples,
                                           std::string_view split) {
  std::vector<DetectionExample> out;
  for (const auto& ex : examples) {
    if (ex.split && *ex.split == split) out.push_back(ex);
  }
  return out;
}

}  // namespace topicshift
