#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "topicshift/corpus.hpp"
#include "topicshift/enrichment.hpp"
#include "topicshift/prompts.hpp"

namespace topicshift {

/// An automatic decision a human may want to double-check.
struct ReviewFlag {
  std::string dialogue_id;
  std::string kind;  // "keyword" or "turn_info"
  std::size_t index = 0;  // block index or utterance index
  std::string value;
};

struct EnrichedDialogue {
  Dialogue dialogue;
  std::vector<TopicBlock> blocks;  // keywords set
  std::vector<TurnInfo> turns;     // one per utterance
};

EnrichedDialogue enrich_dialogue(const Dialogue& dialogue, const KeywordProvider& keywords,
                                 const SrlProvider& srl);
std::vector<ReviewFlag> review_flags(const EnrichedDialogue& enriched);

/// Pairs of the dialogue with all three gold targets rendered.
std::vector<DetectionExample> build_examples(const EnrichedDialogue& enriched,
                                             const TemplateSet& templates,
                                             std::string_view separator = kDefaultSeparator);

struct PreprocessOptions {
  bool lenient = false;
  /// Fit the frequency keyword provider's IDF table on the corpus blocks first.
  bool fit_keyword_weights = true;
  std::size_t workers = 1;
  std::string separator = std::string(kDefaultSeparator);
};

struct PreprocessResult {
  std::vector<DetectionExample> examples;
  std::vector<ReviewFlag> flags;
  std::vector<std::string> skipped;  // "<dialogue id>: <reason>" (lenient mode only)
};

/// Enriches every dialogue and renders its examples; output order follows
/// input order whatever the worker count. Provider failures abort unless
/// `lenient`, in which case the dialogue is skipped and reported.
PreprocessResult preprocess(std::span<const Dialogue> corpus, KeywordProvider& keywords,
                            const SrlProvider& srl, const PreprocessOptions& options = {});

std::string example_to_json(const DetectionExample& example);
DetectionExample example_from_json(std::string_view line, std::size_t line_number = 0);
void write_examples(std::ostream& out, std::span<const DetectionExample> examples);
std::vector<DetectionExample> read_examples(std::istream& in);
std::vector<DetectionExample> read_examples(const std::filesystem::path& path);

/// True when the first non-blank line of the file is an example record
/// rather than a canonical dialogue.
bool is_example_file(const std::filesystem::path& path);

/// Examples whose `split` is unset receive a seeded 80/10/10 split by dialogue.
void assign_splits(std::vector<DetectionExample>& examples, std::uint64_t seed);
std::vector<DetectionExample> select_split(std::span<const DetectionExample> examples,
                                           std::string_view split);

}  // namespace topicshift
