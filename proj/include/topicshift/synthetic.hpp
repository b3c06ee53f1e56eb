#pragma once

#include <cstdint>
#include <vector>

#include "topicshift/corpus.hpp"

namespace topicshift {

struct SyntheticOptions {
  std::size_t dialogues = 200;
  std::size_t min_utterances = 4;
  std::size_t max_utterances = 7;
  double shift_probability = 0.35;
  std::uint64_t seed = 7;
};

/// English dialogues over a fixed set of topics, each with its own word
/// pool. A shift switches to a different topic, so shifts show up as a
/// change of vocabulary between consecutive utterances.
std::vector<Dialogue> synthetic_corpus(const SyntheticOptions& options);

/// Four three-utterance dialogues whose pairs give four shift and four
/// non-shift examples with disjoint topic words.
std::vector<Dialogue> toy_corpus();

}  // namespace topicshift
