#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "topicshift/autograd.hpp"
#include "topicshift/corpus.hpp"
#include "topicshift/prompts.hpp"
#include "topicshift/vocabulary.hpp"

namespace topicshift {

struct ModelConfig {
  int d_model = 64;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int feedforward_dim = 128;
  int max_sequence_len = 512;
  int classifier_recurrent_layers = 2;
  int classifier_hidden = 64;
  double dropout = 0.1;
  std::string backbone = "reference";

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Which loss components a run optimises.
struct AblationSpec {
  std::set<Granularity> enabled{Granularity::Label, Granularity::Topic, Granularity::Turn};
  bool use_classifier = true;

  void validate() const;
  /// "+Label+Topic" style name; "cla" when no granularity is enabled.
  std::string name() const;
  nlohmann::json to_json() const;
  static AblationSpec from_json(const nlohmann::json& j);
};

struct RunMode {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout
};

/// Named parameter handles, in registration order.
class ParameterSet {
 public:
  void add(std::string name, ag::Var var);
  std::span<const std::pair<std::string, ag::Var>> entries() const { return entries_; }
  std::size_t count() const;  // scalar parameter count
  void zero_grad();

 private:
  std::vector<std::pair<std::string, ag::Var>> entries_;
};

class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, std::mt19937_64& rng, bool bias = true);
  ag::Var operator()(const ag::Var& x) const;
  void collect(ParameterSet& params, const std::string& prefix) const;

  ag::Var weight;  // in x out
  ag::Var bias;    // 1 x out, may be undefined
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int width);
  ag::Var operator()(const ag::Var& x) const;
  void collect(ParameterSet& params, const std::string& prefix) const;

  ag::Var gain;
  ag::Var bias;
};

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(int d_model, int heads, std::mt19937_64& rng);
  ag::Var operator()(const ag::Var& queries, const ag::Var& keys_values, bool causal) const;
  void collect(ParameterSet& params, const std::string& prefix) const;

 private:
  Linear q_, k_, v_, o_;
  int heads_ = 1;
};

class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(int d_model, int hidden, std::mt19937_64& rng);
  ag::Var operator()(const ag::Var& x) const;
  void collect(ParameterSet& params, const std::string& prefix) const;

 private:
  Linear in_, out_;
};

/// Encoder-decoder network the detection heads sit on. Implementations
/// register by name with register_backbone().
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual int hidden_size() const = 0;
  virtual int max_sequence_len() const = 0;
  /// L ids -> L x hidden_size states.
  virtual ag::Var encode(std::span<const int> ids, const RunMode& mode) const = 0;
  /// Causal decoding over `decoder_inputs` with cross-attention to
  /// `encoder_hidden`; returns one vocabulary-sized score row per input.
  virtual ag::Var decode(std::span<const int> decoder_inputs, const ag::Var& encoder_hidden,
                         const RunMode& mode) const = 0;
  /// Address of the decoder parameter object (one object for every granularity).
  virtual const void* decoder_identity() const = 0;
  virtual void collect(ParameterSet& params) const = 0;
};

using BackboneFactory =
    std::function<std::unique_ptr<Backbone>(const ModelConfig&, int vocab_size, std::mt19937_64&)>;
void register_backbone(const std::string& name, BackboneFactory factory);
std::unique_ptr<Backbone> make_backbone(const ModelConfig& config, int vocab_size,
                                        std::mt19937_64& rng);

/// Stack of bidirectional LSTM layers over the span sequence; the last
/// forward state and the last backward state (at position 0) feed a linear
/// map to two logits.
class BiLstmClassifier {
 public:
  BiLstmClassifier() = default;
  BiLstmClassifier(int input, int hidden, int layers, std::mt19937_64& rng);
  /// n x input -> 1 x 2
  ag::Var operator()(const ag::Var& spans, const RunMode& mode, double dropout) const;
  void collect(ParameterSet& params, const std::string& prefix) const;

  const Linear& output() const { return output_; }

 private:
  struct Direction {
    ag::Var input_weight;      // in x 4h
    ag::Var recurrent_weight;  // h x 4h
    ag::Var bias;              // 1 x 4h
  };
  std::vector<ag::Var> run(const Direction& dir, const ag::Var& inputs, bool reverse) const;

  int hidden_ = 0;
  std::vector<std::pair<Direction, Direction>> layers_;
  Linear output_;
};

/// Model-ready view of a DetectionExample.
struct EncodedExample {
  std::string id;
  EncodedInput input;
  int gold_label = 0;
  std::map<Granularity, std::vector<int>> targets;
};

EncodedExample encode_example(const DetectionExample& example, const Vocabulary& vocab,
                              const TemplateSet& templates);

struct ForwardOptions {
  bool classifier = true;
  std::set<Granularity> granularities{Granularity::Label, Granularity::Topic, Granularity::Turn};
};

struct ForwardOutput {
  ag::Var encoder_hidden;                       // L x d
  ag::Var span_reps;                            // n x 2d
  ag::Var class_logits;                         // 1 x 2, undefined when the classifier is off
  std::map<Granularity, ag::Var> gen_logits;    // T x V per decoded granularity
};

struct LossBreakdown {
  std::optional<double> classification;
  std::map<Granularity, double> generation;
  double total = 0.0;
};

struct LossTerms {
  ag::Var classification;                    // undefined when absent
  std::map<Granularity, ag::Var> generation;
  ag::Var total;                             // sum of every present component

  LossBreakdown breakdown() const;
};

/// Cross-entropy of the class logits plus mean token cross-entropy of each
/// decoded granularity against its gold ids, summed without weights.
LossTerms total_loss(const ForwardOutput& output, int gold_label,
                     const std::map<Granularity, std::vector<int>>& gold_targets);

/// Sum restricted to the enabled components. Throws when nothing is enabled.
double ablation_mask(const LossBreakdown& components, const std::set<Granularity>& enabled,
                     bool use_classifier);
ag::Var ablation_mask(const LossTerms& components, const AblationSpec& spec);

class TopicShiftModel {
 public:
  TopicShiftModel(ModelConfig config, Vocabulary vocabulary, std::uint64_t seed);
  TopicShiftModel(const TopicShiftModel&) = delete;
  TopicShiftModel& operator=(const TopicShiftModel&) = delete;
  TopicShiftModel(TopicShiftModel&&) = default;
  TopicShiftModel& operator=(TopicShiftModel&&) = default;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const Backbone& backbone() const { return *backbone_; }
  const BiLstmClassifier& classifier_head() const { return classifier_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// Throws ShapeError when the input exceeds max_sequence_len.
  ag::Var encode(std::span<const int> ids, const RunMode& mode = {}) const;
  /// Row i = [hidden[sep[i]], hidden[sep[i+1]]].
  static ag::Var span_representations(const ag::Var& hidden, std::span<const int> separator_positions);
  ag::Var classify(const ag::Var& span_reps, const RunMode& mode = {}) const;
  /// Teacher-forced decoding of gold ids: position t sees the granularity's
  /// start token and targets < t.
  ag::Var decode(Granularity g, std::span<const int> target_ids, const ag::Var& encoder_hidden,
                 const RunMode& mode = {}) const;
  /// Scores for the next token after `prefix` (no gradient recording needed).
  Eigen::RowVectorXd next_token_scores(Granularity g, std::span<const int> prefix,
                                       const ag::Var& encoder_hidden) const;

  ForwardOutput forward(const EncodedExample& example, const ForwardOptions& options,
                        const RunMode& mode = {}) const;

  /// Decoder parameter object used for granularity `g` (the same for all).
  const void* decoder_for(Granularity g) const;

  std::vector<ag::Matrix> snapshot() const;
  void restore(const std::vector<ag::Matrix>& values);

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  std::unique_ptr<Backbone> backbone_;
  BiLstmClassifier classifier_;
  ParameterSet params_;
};

}  // namespace topicshift
