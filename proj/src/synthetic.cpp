#include "topicshift/synthetic.hpp"

#include <array>
#include <random>

#include "topicshift/error.hpp"

namespace topicshift {

namespace {

struct Topic {
  const char* name;
  std::array<const char*, 8> words;
};

constexpr std::array<Topic, 8> kTopics{{
    {"pets", {"cats", "dogs", "kitten", "puppy", "leash", "vet", "fur", "parrot"}},
    {"food", {"pizza", "pasta", "noodles", "cheese", "soup", "bread", "salad", "dessert"}},
    {"music", {"guitar", "piano", "concert", "songs", "drums", "album", "band", "violin"}},
    {"sports", {"soccer", "tennis", "football", "match", "goal", "stadium", "coach", "team"}},
    {"travel", {"flight", "beach", "hotel", "passport", "island", "museum", "train", "luggage"}},
    {"weather", {"rain", "snow", "storm", "sunshine", "clouds", "wind", "thunder", "umbrella"}},
    {"work", {"office", "meeting", "boss", "deadline", "project", "salary", "manager", "desk"}},
    {"movies", {"film", "actor", "cinema", "director", "comedy", "thriller", "scene", "sequel"}},
}};

constexpr std::array<const char*, 8> kPatterns{
    "i really like the {a} and the {b}",
    "we talked about {a} yesterday",
    "my friend has a {a} and a {b}",
    "do you enjoy {a} too",
    "the {a} is better than the {b}",
    "i saw a {a} near the {b}",
    "what do you think about {a}",
    "my sister loves {a}",
};

std::string fill(std::string pattern, const std::string& a, const std::string& b) {
  auto replace = [&](std::string_view slot, const std::string& value) {
    const auto pos = pattern.find(slot);
    if (pos != std::string::npos) pattern.replace(pos, slot.size(), value);
  };
  replace("{a}", a);
  replace("{b}", b);
  return pattern;
}

std::string utterance(std::size_t topic, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> word(0, kTopics[topic].words.size() - 1);
  std::uniform_int_distribution<std::size_t> pattern(0, kPatterns.size() - 1);
  const std::size_t a = word(rng);
  std::size_t b = word(rng);
  if (b == a) b = (b + 1) % kTopics[topic].words.size();
  return fill(kPatterns[pattern(rng)], kTopics[topic].words[a], kTopics[topic].words[b]);
}

}  // namespace

std::vector<Dialogue> synthetic_corpus(const SyntheticOptions& options) {
  if (options.dialogues == 0) throw ValidationError("synthetic corpus needs at least one dialogue");
  if (options.min_utterances < 2 || options.max_utterances < options.min_utterances) {
    throw ValidationError("synthetic corpus needs 2 <= min_utterances <= max_utterances");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> length(options.min_utterances, options.max_utterances);
  std::uniform_int_distribution<std::size_t> topic_pick(0, kTopics.size() - 1);
  std::uniform_int_distribution<std::size_t> other_pick(1, kTopics.size() - 1);
  std::bernoulli_distribution shift(options.shift_probability);

  std::vector<Dialogue> corpus;
  for (std::size_t d = 0; d < options.dialogues; ++d) {
    Dialogue dialogue;
    dialogue.id = "synth-" + std::to_string(d);
    dialogue.language = Language::English;
    std::size_t topic = topic_pick(rng);
    const std::size_t n = length(rng);
    for (std::size_t i = 0; i < n; ++i) {
      int label = 0;
      if (i > 0 && shift(rng)) {
        topic = (topic + other_pick(rng)) % kTopics.size();
        label = 1;
      }
      dialogue.utterances.push_back({i, i % 2 == 0 ? "A" : "B", utterance(topic, rng), label});
    }
    corpus.push_back(std::move(dialogue));
  }
  return corpus;
}

std::vector<Dialogue> toy_corpus() {
  const std::array<std::array<const char*, 3>, 4> texts{{
      {"i really like the cats and the dogs", "my kitten loves the puppy", "the pizza is better than the pasta"},
      {"we talked about guitar yesterday", "the piano is better than the drums", "i saw a soccer near the stadium"},
      {"do you enjoy rain too", "i saw a flight near the beach", "my friend has a hotel and a passport"},
      {"what do you think about film", "my sister loves comedy", "the office is better than the desk"},
  }};
  const std::array<std::array<int, 3>, 4> labels{{{0, 0, 1}, {0, 0, 1}, {0, 1, 0}, {0, 0, 1}}};
  std::vector<Dialogue> corpus;
  for (std::size_t d = 0; d < texts.size(); ++d) {
    Dialogue dialogue;
    dialogue.id = "toy-" + std::to_string(d);
    dialogue.language = Language::English;
    for (std::size_t i = 0; i < 3; ++i) {
      dialogue.utterances.push_back({i, i % 2 == 0 ? "A" : "B", texts[d][i], labels[d][i]});
    }
    corpus.push_back(std::move(dialogue));
  }
  return corpus;
}

}  // namespace topicshift
