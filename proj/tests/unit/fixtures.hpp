#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "topicshift/corpus.hpp"
#include "topicshift/model.hpp"
#include "topicshift/training.hpp"

namespace fixtures {

using namespace topicshift;

// The worked dialogue: four turns on cats, then two on a weakness.
inline Dialogue table_dialogue() {
  Dialogue d;
  d.id = "table";
  d.language = Language::English;
  const std::vector<std::pair<std::string, int>> turns{
      {"hey ! do you love cats ?", 0},
      {"hey . . . i am a dog person , i have two.", 0},
      {"ah that is cool , i have two cats and got a collection of 1000 hats for them !", 0},
      {"wow !!! that is a lot lol", 0},
      {"yeah , i have a weakness for cats and vanilla ice cream , they are the best !", 1},
      {"my weakness is eating when i am bored", 0},
  };
  for (std::size_t i = 0; i < turns.size(); ++i) {
    d.utterances.push_back({i, i % 2 == 0 ? "A" : "B", turns[i].first, turns[i].second});
  }
  return d;
}

inline Dialogue make_dialogue(std::string id, std::vector<std::string> texts, std::vector<int> shifts,
                              Language language = Language::English) {
  Dialogue d;
  d.id = std::move(id);
  d.language = language;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    d.utterances.push_back({i, i % 2 == 0 ? "A" : "B", texts[i], shifts[i]});
  }
  return d;
}

inline ModelConfig tiny_model() {
  ModelConfig c;
  c.d_model = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.heads = 2;
  c.feedforward_dim = 32;
  c.max_sequence_len = 256;
  c.classifier_recurrent_layers = 1;
  c.classifier_hidden = 8;
  c.dropout = 0.0;
  return c;
}

inline TrainingConfig tiny_training(int epochs = 3) {
  TrainingConfig t;
  t.epochs = epochs;
  t.peak_learning_rate = 3e-3;
  t.model = tiny_model();
  return t;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("topicshift-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
