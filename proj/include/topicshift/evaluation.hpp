#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "topicshift/corpus.hpp"
#include "topicshift/model.hpp"
#include "topicshift/prompts.hpp"

namespace topicshift {

/// Probabilities are ordered (non-shift, shift) so the index is the label.
using LabelProbs = std::array<double, 2>;

enum class FusionMode { Classifier, Generator, Average };
std::string_view fusion_name(FusionMode mode);
FusionMode parse_fusion(std::string_view name);
/// generator when the classifier is off, classifier when no granularity is
/// decoded, average otherwise.
FusionMode default_fusion(const AblationSpec& spec);

enum class PredictionSource { Classifier, Generator, Fused };
std::string_view source_name(PredictionSource source);

struct Prediction {
  std::string example_id;
  std::optional<LabelProbs> class_probs;
  std::map<Granularity, std::optional<int>> gen_labels;  // nullopt = unknown
  std::map<Granularity, LabelProbs> gen_probs;
  std::map<Granularity, std::string> gen_texts;
  int final_label = 0;
  PredictionSource source = PredictionSource::Classifier;

  nlohmann::json to_json() const;
};

struct Fusion {
  int label = 0;
  PredictionSource source = PredictionSource::Classifier;
};

/// Averages the classifier with the mean of the available generator
/// probabilities (or uses one side only, per `mode`), falling back to
/// whichever side is present. Ties go to non-shift.
Fusion combine_predictions(const std::optional<LabelProbs>& class_probs,
                           const std::vector<LabelProbs>& gen_probs,
                           FusionMode mode = FusionMode::Average);

struct PredictOptions {
  FusionMode fusion = FusionMode::Average;
  bool classifier = true;
  std::set<Granularity> granularities{Granularity::Label, Granularity::Topic, Granularity::Turn};
  int max_slot_tokens = 12;

  static PredictOptions for_ablation(const AblationSpec& spec);
};

/// Runs the classifier and constrained greedy decoding: template literals
/// are forced, content slots are decoded greedily until the next literal
/// begins, and the label slot compares the two verbalizer scores.
Prediction predict(const TopicShiftModel& model, const TemplateSet& templates,
                   std::string_view example_id, const EncodedInput& input,
                   const PredictOptions& options = {});
Prediction predict(const TopicShiftModel& model, const TemplateSet& templates,
                   const DetectionExample& example, const PredictOptions& options = {});

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;  // predicted count
};

struct MetricsReport {
  ClassMetrics nonshift;
  ClassMetrics shift;
  double macro_f1 = 0.0;
  double precision = 0.0;  // shift class
  double recall = 0.0;     // shift class
  std::size_t count = 0;
  /// Some class has no gold or no predicted items.
  bool degenerate = false;

  nlohmann::json to_json() const;
};

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> golds);

struct EvaluationResult {
  std::vector<Prediction> predictions;
  MetricsReport report;
};

EvaluationResult evaluate(const TopicShiftModel& model, const TemplateSet& templates,
                          std::span<const DetectionExample> examples,
                          const PredictOptions& options = {});

/// Metrics of always predicting the majority label of `reference`
/// (non-shift on ties) against `examples`.
MetricsReport majority_baseline(std::span<const DetectionExample> reference,
                                std::span<const DetectionExample> examples);

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace topicshift
