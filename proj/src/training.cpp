#include "topicshift/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "topicshift/error.hpp"
#include "topicshift/evaluation.hpp"

namespace topicshift {

using nlohmann::json;
using ag::Matrix;
using ag::Var;

void TrainingConfig::validate() const {
  if (batch_size < 1) throw ValidationError("training: batch_size must be at least 1");
  if (epochs < 1) throw ValidationError("training: epochs must be at least 1");
  if (!(peak_learning_rate > 0.0)) throw ValidationError("training: peak_learning_rate must be positive");
  if (weight_decay < 0.0) throw ValidationError("training: weight_decay must be non-negative");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw ValidationError("training: warmup_fraction must lie strictly between 0 and 1");
  }
  if (!(max_grad_norm > 0.0)) throw ValidationError("training: max_grad_norm must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("training: Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError("training: adam_epsilon must be positive");
  ablation.validate();
  model.validate();
}

json TrainingConfig::to_json() const {
  return json{{"batch_size", batch_size},
              {"epochs", epochs},
              {"peak_learning_rate", peak_learning_rate},
              {"weight_decay", weight_decay},
              {"warmup_fraction", warmup_fraction},
              {"max_grad_norm", max_grad_norm},
              {"adam_beta1", adam_beta1},
              {"adam_beta2", adam_beta2},
              {"adam_epsilon", adam_epsilon},
              {"seed", seed},
              {"max_steps", max_steps},
              {"ablation", ablation.to_json()},
              {"model", model.to_json()}};
}

TrainingConfig TrainingConfig::from_json(const json& j) {
  if (!j.is_object()) throw ParseError("training config must be a JSON object");
  TrainingConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "peak_learning_rate") c.peak_learning_rate = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "warmup_fraction") c.warmup_fraction = value.get<double>();
      else if (key == "max_grad_norm") c.max_grad_norm = value.get<double>();
      else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
      else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "max_steps") c.max_steps = value.get<std::size_t>();
      else if (key == "ablation") c.ablation = AblationSpec::from_json(value);
      else if (key == "model") c.model = ModelConfig::from_json(value);
      else throw ValidationError("training config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t warmup_steps(std::size_t total_steps, double warmup_fraction) {
  return static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
}

double learning_rate_at(std::size_t step, std::size_t total_steps, const TrainingConfig& config) {
  if (total_steps == 0) throw ValidationError("learning_rate_at: total_steps must be positive");
  if (step > total_steps) {
    throw ValidationError("learning_rate_at: step " + std::to_string(step) + " exceeds total " +
                          std::to_string(total_steps));
  }
  const std::size_t warmup = warmup_steps(total_steps, config.warmup_fraction);
  const double peak = config.peak_learning_rate;
  if (step <= warmup) return peak * static_cast<double>(step) / static_cast<double>(warmup);
  return peak * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

namespace {

bool decayed(const std::string& name) {
  return !(name.ends_with(".bias") || name.ends_with(".gain"));
}

}  // namespace

AdamW::AdamW(ParameterSet& params, const TrainingConfig& config)
    : beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_epsilon),
      weight_decay_(config.weight_decay) {
  for (const auto& [name, var] : params.entries()) {
    slots_.push_back({var, Matrix::Zero(var.rows(), var.cols()), Matrix::Zero(var.rows(), var.cols()),
                      decayed(name)});
  }
}

void AdamW::step(double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& s : slots_) {
    if (!s.param.has_grad()) continue;
    const Matrix g = s.param.grad();
    s.m = beta1_ * s.m + (1.0 - beta1_) * g;
    s.v = beta2_ * s.v + (1.0 - beta2_) * g.cwiseProduct(g);
    Matrix& p = s.param.mutable_value();
    if (s.decay && weight_decay_ > 0.0) p *= 1.0 - learning_rate * weight_decay_;
    p.array() -= learning_rate * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps_);
  }
}

double clip_gradients(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, var] : params.entries()) {
    if (var.has_grad()) sq += var.node()->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / (norm + 1e-12);
    for (const auto& [name, var] : params.entries()) {
      if (var.has_grad()) var.node()->grad *= factor;
    }
  }
  return norm;
}

json EpochLog::to_json() const {
  json j{{"epoch", epoch}, {"L_Class", class_loss ? json(*class_loss) : json(nullptr)}};
  for (auto g : kAllGranularities) {
    auto it = generation_loss.find(g);
    const bool present = it != generation_loss.end() && it->second;
    j["L_" + std::string(granularity_name(g))] = present ? json(*it->second) : json(nullptr);
  }
  j["dev_macro_f1"] = dev_macro_f1 ? json(*dev_macro_f1) : json(nullptr);
  return j;
}

Vocabulary build_example_vocabulary(std::span<const DetectionExample> examples, Language language,
                                    std::string_view separator) {
  std::vector<std::string> texts;
  for (const auto& ex : examples) {
    texts.push_back(ex.serialized_input);
    for (const auto& [g, t] : ex.targets) texts.push_back(t);
  }
  return build_vocabulary(texts, language, separator);
}

TopicShiftModel initial_model(std::span<const DetectionExample> train_examples,
                              const TrainingConfig& config, std::string_view separator) {
  if (train_examples.empty()) throw ValidationError("train: no training examples");
  const Language language = train_examples.front().language;
  return TopicShiftModel(config.model, build_example_vocabulary(train_examples, language, separator),
                         config.seed);
}

namespace {

std::vector<EncodedExample> encode_all(const TopicShiftModel& model,
                                       std::span<const DetectionExample> examples,
                                       const AblationSpec& spec) {
  const auto& templates = TemplateSet::builtin(model.vocabulary().language());
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    for (auto g : spec.enabled) {
      if (!ex.targets.contains(g)) {
        throw ValidationError("example " + ex.id() + " has no " + std::string(granularity_name(g)) +
                              " target");
      }
    }
    out.push_back(encode_example(ex, model.vocabulary(), templates));
  }
  return out;
}

struct LossAccumulator {
  double classification = 0.0;
  std::map<Granularity, double> generation;
  double total = 0.0;
  std::size_t count = 0;

  void add(const LossBreakdown& b) {
    if (b.classification) classification += *b.classification;
    for (const auto& [g, v] : b.generation) generation[g] += v;
    total += b.total;
    ++count;
  }

  EpochLog finish(int epoch, const AblationSpec& spec) const {
    EpochLog log;
    log.epoch = epoch;
    const double n = static_cast<double>(std::max<std::size_t>(count, 1));
    if (spec.use_classifier) log.class_loss = classification / n;
    for (auto g : kAllGranularities) {
      if (spec.enabled.contains(g)) log.generation_loss[g] = generation.at(g) / n;
      else log.generation_loss[g] = std::nullopt;
    }
    log.total_loss = total / n;
    return log;
  }
};

ForwardOptions forward_options(const AblationSpec& spec) {
  ForwardOptions options;
  options.classifier = spec.use_classifier;
  options.granularities = spec.enabled;
  return options;
}

}  // namespace

TrainingResult train(TopicShiftModel& model, std::span<const DetectionExample> train_examples,
                     std::span<const DetectionExample> dev_examples, const TrainingConfig& config,
                     const EpochCallback& on_epoch) {
  config.validate();
  if (train_examples.empty()) throw ValidationError("train: no training examples");
  const AblationSpec& spec = config.ablation;
  const auto encoded = encode_all(model, train_examples, spec);
  const auto options = forward_options(spec);
  const auto predict_options = PredictOptions::for_ablation(spec);
  const auto& templates = TemplateSet::builtin(model.vocabulary().language());

  const std::size_t n = encoded.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.epochs);
  if (config.max_steps > 0) total_steps = std::min(total_steps, config.max_steps);

  std::mt19937_64 order_rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0x14057b7ef767814fULL);
  RunMode mode{true, &dropout_rng};
  AdamW optimizer(model.parameters(), config);

  TrainingResult result;
  std::optional<double> best_f1;
  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= config.epochs && result.steps < total_steps; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), order_rng);
    LossAccumulator acc;
    for (std::size_t start = 0; start < n && result.steps < total_steps; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const double weight = 1.0 / static_cast<double>(end - start);
      model.parameters().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = encoded[order[k]];
        const auto output = model.forward(ex, options, mode);
        const auto terms = total_loss(output, ex.gold_label, ex.targets);
        const Var loss = ablation_mask(terms, spec);
        ag::backward(ag::scale(loss, weight));
        acc.add(terms.breakdown());
      }
      clip_gradients(model.parameters(), config.max_grad_norm);
      optimizer.step(learning_rate_at(result.steps + 1, total_steps, config));
      ++result.steps;
    }
    model.parameters().zero_grad();

    EpochLog log = acc.finish(epoch, spec);
    if (!dev_examples.empty()) {
      log.dev_macro_f1 = evaluate(model, templates, dev_examples, predict_options).report.macro_f1;
    }
    const bool better = log.dev_macro_f1 ? (!best_f1 || *log.dev_macro_f1 > *best_f1)
                                         : dev_examples.empty();
    if (better) {
      if (log.dev_macro_f1) best_f1 = log.dev_macro_f1;
      result.best_epoch = epoch;
      result.best_parameters = model.snapshot();
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

EpochLog measure_losses(const TopicShiftModel& model, std::span<const DetectionExample> examples,
                        const AblationSpec& spec) {
  ag::NoGradGuard guard;
  const auto encoded = encode_all(model, examples, spec);
  const auto options = forward_options(spec);
  LossAccumulator acc;
  for (const auto& ex : encoded) {
    const auto output = model.forward(ex, options);
    acc.add(total_loss(output, ex.gold_label, ex.targets).breakdown());
  }
  return acc.finish(0, spec);
}

}  // namespace topicshift
