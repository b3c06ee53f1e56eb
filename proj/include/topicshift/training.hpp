#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "topicshift/corpus.hpp"
#include "topicshift/model.hpp"

namespace topicshift {

struct TrainingConfig {
  int batch_size = 2;
  int epochs = 20;
  double peak_learning_rate = 3e-4;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  double max_grad_norm = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 13;
  /// Stop after this many optimizer steps (0 = run every epoch). The
  /// schedule is laid out over the shorter horizon.
  std::size_t max_steps = 0;
  AblationSpec ablation;
  ModelConfig model;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainingConfig from_json(const nlohmann::json& j);
};

std::size_t warmup_steps(std::size_t total_steps, double warmup_fraction);

/// Linear ramp from 0 to the peak over the warm-up steps, then linear
/// decay to 0 at `total_steps`.
double learning_rate_at(std::size_t step, std::size_t total_steps, const TrainingConfig& config);

/// Adam with decoupled weight decay. Biases and layer-norm gains are not decayed.
class AdamW {
 public:
  AdamW(ParameterSet& params, const TrainingConfig& config);
  void step(double learning_rate);
  std::size_t steps() const { return t_; }

 private:
  struct Slot {
    ag::Var param;
    ag::Matrix m;
    ag::Matrix v;
    bool decay = true;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
};

/// Rescales gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_gradients(ParameterSet& params, double max_norm);

struct EpochLog {
  int epoch = 0;
  std::optional<double> class_loss;
  std::map<Granularity, std::optional<double>> generation_loss;
  double total_loss = 0.0;
  std::optional<double> dev_macro_f1;

  /// {epoch, L_Class, L_Label, L_Topic, L_Turn, dev_macro_f1}; disabled
  /// components are null.
  nlohmann::json to_json() const;
};

struct TrainingResult {
  std::vector<EpochLog> log;
  std::size_t steps = 0;
  int best_epoch = 0;
  std::vector<ag::Matrix> best_parameters;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Vocabulary over the inputs and targets of the examples.
Vocabulary build_example_vocabulary(std::span<const DetectionExample> examples, Language language,
                                    std::string_view separator = kDefaultSeparator);

/// Fresh model seeded from `config.seed` with a vocabulary built from the examples.
TopicShiftModel initial_model(std::span<const DetectionExample> train_examples,
                              const TrainingConfig& config,
                              std::string_view separator = kDefaultSeparator);

/// Trains `model` in place (it ends in its final state). The best epoch by
/// dev macro-F1 is kept in the result; earlier epochs win ties, and the
/// last epoch is used when there is no dev set.
TrainingResult train(TopicShiftModel& model, std::span<const DetectionExample> train_examples,
                     std::span<const DetectionExample> dev_examples, const TrainingConfig& config,
                     const EpochCallback& on_epoch = {});

/// Mean losses over `examples` with the model frozen.
EpochLog measure_losses(const TopicShiftModel& model, std::span<const DetectionExample> examples,
                        const AblationSpec& spec);

}  // namespace topicshift
