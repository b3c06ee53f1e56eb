#include "topicshift/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "topicshift/error.hpp"

namespace topicshift {

using nlohmann::json;

std::string_view fusion_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::Classifier: return "classifier";
    case FusionMode::Generator: return "generator";
    case FusionMode::Average: return "average";
  }
  return "average";
}

FusionMode parse_fusion(std::string_view name) {
  if (name == "classifier") return FusionMode::Classifier;
  if (name == "generator") return FusionMode::Generator;
  if (name == "average") return FusionMode::Average;
  throw ValidationError("unknown fusion mode '" + std::string(name) +
                        "' (expected classifier, generator or average)");
}

FusionMode default_fusion(const AblationSpec& spec) {
  if (!spec.use_classifier) return FusionMode::Generator;
  if (spec.enabled.empty()) return FusionMode::Classifier;
  return FusionMode::Average;
}

std::string_view source_name(PredictionSource source) {
  switch (source) {
    case PredictionSource::Classifier: return "classifier";
    case PredictionSource::Generator: return "generator";
    case PredictionSource::Fused: return "fused";
  }
  return "fused";
}

json Prediction::to_json() const {
  json gen_labels_json = json::object();
  json gen_probs_json = json::object();
  json gen_texts_json = json::object();
  for (const auto& [g, l] : gen_labels) {
    gen_labels_json[std::string(granularity_key(g))] = l ? json(*l) : json(nullptr);
  }
  for (const auto& [g, p] : gen_probs) gen_probs_json[std::string(granularity_key(g))] = p;
  for (const auto& [g, t] : gen_texts) gen_texts_json[std::string(granularity_key(g))] = t;
  return json{{"id", example_id},
              {"final_label", final_label},
              {"source", std::string(source_name(source))},
              {"class_probs", class_probs ? json(*class_probs) : json(nullptr)},
              {"gen_labels", gen_labels_json},
              {"gen_probs", gen_probs_json},
              {"gen_texts", gen_texts_json}};
}

namespace {

int argmax(const LabelProbs& p) { return p[1] > p[0] ? 1 : 0; }

std::optional<LabelProbs> mean_of(const std::vector<LabelProbs>& probs) {
  if (probs.empty()) return std::nullopt;
  LabelProbs m{0.0, 0.0};
  for (const auto& p : probs) {
    m[0] += p[0];
    m[1] += p[1];
  }
  m[0] /= static_cast<double>(probs.size());
  m[1] /= static_cast<double>(probs.size());
  return m;
}

}  // namespace

Fusion combine_predictions(const std::optional<LabelProbs>& class_probs,
                           const std::vector<LabelProbs>& gen_probs, FusionMode mode) {
  const auto gen = mean_of(gen_probs);
  if (mode == FusionMode::Classifier || !gen) {
    if (class_probs) return {argmax(*class_probs), PredictionSource::Classifier};
    if (gen) return {argmax(*gen), PredictionSource::Generator};
    return {0, PredictionSource::Classifier};
  }
  if (mode == FusionMode::Generator || !class_probs) {
    return {argmax(*gen), PredictionSource::Generator};
  }
  const LabelProbs fused{((*class_probs)[0] + (*gen)[0]) / 2.0, ((*class_probs)[1] + (*gen)[1]) / 2.0};
  return {argmax(fused), PredictionSource::Fused};
}

PredictOptions PredictOptions::for_ablation(const AblationSpec& spec) {
  PredictOptions options;
  options.fusion = default_fusion(spec);
  options.classifier = spec.use_classifier;
  options.granularities = spec.enabled;
  return options;
}

namespace {

struct Decoded {
  std::optional<int> label;
  std::optional<LabelProbs> probs;
  std::string text;
};

Decoded decode_constrained(const TopicShiftModel& model, const TemplateSet& templates, Granularity g,
                           const ag::Var& encoder_hidden, int max_slot_tokens) {
  const Vocabulary& vocab = model.vocabulary();
  const auto parts = split_template(templates.for_granularity(g));
  std::vector<std::vector<int>> literal_ids;
  for (const auto& lit : parts.literals) literal_ids.push_back(vocab.encode_text(lit));

  Decoded out;
  std::vector<int> prefix;
  for (std::size_t i = 0; i < parts.slots.size(); ++i) {
    prefix.insert(prefix.end(), literal_ids[i].begin(), literal_ids[i].end());
    out.text += parts.literals[i];
    if (parts.slots[i] == kLabelSlot) {
      const auto scores = model.next_token_scores(g, prefix, encoder_hidden);
      const double s_shift = scores(Vocabulary::kShift);
      const double s_non = scores(Vocabulary::kNonShift);
      const double p_shift = 1.0 / (1.0 + std::exp(s_non - s_shift));
      out.probs = LabelProbs{1.0 - p_shift, p_shift};
      if (s_shift != s_non) out.label = s_shift > s_non ? 1 : 0;
      const int chosen = s_shift > s_non ? Vocabulary::kShift : Vocabulary::kNonShift;
      prefix.push_back(chosen);
      out.text += vocab.token(chosen);
      continue;
    }
    const auto& next = literal_ids[i + 1];
    const int stop = next.empty() ? -1 : next.front();
    std::vector<int> slot;
    for (int step = 0; step < max_slot_tokens; ++step) {
      auto scores = model.next_token_scores(g, prefix, encoder_hidden);
      for (int banned = 0; banned < Vocabulary::kReservedCount; ++banned) {
        if (banned != Vocabulary::kEos && banned != Vocabulary::kUnknown) {
          scores(banned) = -std::numeric_limits<double>::infinity();
        }
      }
      Eigen::Index best = 0;
      scores.maxCoeff(&best);
      const int id = static_cast<int>(best);
      if (id == stop || id == Vocabulary::kEos) break;
      slot.push_back(id);
      prefix.push_back(id);
    }
    out.text += vocab.decode(slot);
  }
  out.text += parts.literals.back();
  return out;
}

}  // namespace

Prediction predict(const TopicShiftModel& model, const TemplateSet& templates,
                   std::string_view example_id, const EncodedInput& input,
                   const PredictOptions& options) {
  if (templates.language != model.vocabulary().language()) {
    throw ValidationError("templates and checkpoint vocabulary are for different languages");
  }
  ag::NoGradGuard guard;
  Prediction p;
  p.example_id = std::string(example_id);
  const auto hidden = model.encode(input.ids);
  if (options.classifier) {
    const auto spans = TopicShiftModel::span_representations(hidden, input.separator_positions);
    const auto probs = ag::softmax_rows(model.classify(spans).value());
    p.class_probs = LabelProbs{probs(0, 0), probs(0, 1)};
  }
  std::vector<LabelProbs> available;
  for (auto g : options.granularities) {
    auto d = decode_constrained(model, templates, g, hidden, options.max_slot_tokens);
    p.gen_labels[g] = d.label;
    p.gen_texts[g] = std::move(d.text);
    if (d.probs) p.gen_probs[g] = *d.probs;
    if (d.label) available.push_back(*d.probs);
  }
  const auto fused = combine_predictions(p.class_probs, available, options.fusion);
  p.final_label = fused.label;
  p.source = fused.source;
  return p;
}

Prediction predict(const TopicShiftModel& model, const TemplateSet& templates,
                   const DetectionExample& example, const PredictOptions& options) {
  return predict(model, templates, example.id(),
                 model.vocabulary().encode_input(example.serialized_input), options);
}

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.support = tp + fn;
  m.predicted = tp + fp;
  m.precision = m.predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(m.predicted);
  m.recall = m.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(m.support);
  const double denom = m.precision + m.recall;
  m.f1 = denom == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / denom;
  return m;
}

json class_json(const ClassMetrics& m) {
  return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
              {"support", m.support}, {"predicted", m.predicted}};
}

}  // namespace

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> golds) {
  if (predictions.size() != golds.size()) {
    throw ValidationError("compute_metrics: " + std::to_string(predictions.size()) +
                          " predictions for " + std::to_string(golds.size()) + " golds");
  }
  if (golds.empty()) throw ValidationError("compute_metrics: no predictions");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int p = predictions[i], g = golds[i];
    if ((p != 0 && p != 1) || (g != 0 && g != 1)) {
      throw ValidationError("compute_metrics: labels must be 0 or 1");
    }
    if (p == 1 && g == 1) ++tp;
    else if (p == 1) ++fp;
    else if (g == 1) ++fn;
    else ++tn;
  }
  MetricsReport r;
  r.shift = class_metrics(tp, fp, fn);
  r.nonshift = class_metrics(tn, fn, fp);
  r.macro_f1 = (r.shift.f1 + r.nonshift.f1) / 2.0;
  r.precision = r.shift.precision;
  r.recall = r.shift.recall;
  r.count = golds.size();
  r.degenerate = r.shift.support == 0 || r.nonshift.support == 0 || r.shift.predicted == 0 ||
                 r.nonshift.predicted == 0;
  return r;
}

json MetricsReport::to_json() const {
  return json{{"precision", precision}, {"recall", recall}, {"macro_f1", macro_f1},
              {"count", count}, {"degenerate", degenerate},
              {"shift", class_json(shift)}, {"nonshift", class_json(nonshift)}};
}

EvaluationResult evaluate(const TopicShiftModel& model, const TemplateSet& templates,
                          std::span<const DetectionExample> examples, const PredictOptions& options) {
  EvaluationResult result;
  std::vector<int> predicted, golds;
  for (const auto& ex : examples) {
    result.predictions.push_back(predict(model, templates, ex, options));
    predicted.push_back(result.predictions.back().final_label);
    golds.push_back(ex.gold_label);
  }
  result.report = compute_metrics(predicted, golds);
  return result;
}

MetricsReport majority_baseline(std::span<const DetectionExample> reference,
                                std::span<const DetectionExample> examples) {
  std::size_t shifts = 0;
  for (const auto& ex : reference) shifts += ex.gold_label == 1 ? 1 : 0;
  const int majority = 2 * shifts > reference.size() ? 1 : 0;
  std::vector<int> predicted(examples.size(), majority), golds;
  for (const auto& ex : examples) golds.push_back(ex.gold_label);
  return compute_metrics(predicted, golds);
}

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t width = 6;
  for (const auto& [name, r] : rows) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Model" << "  " << std::right
      << std::setw(6) << "P" << "  " << std::setw(6) << "R" << "  " << std::setw(6) << "F1" << '\n';
  out << std::string(width + 24, '-') << '\n';
  out << std::fixed << std::setprecision(1);
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << name << "  " << std::right
        << std::setw(6) << 100.0 * r.precision << "  " << std::setw(6) << 100.0 * r.recall << "  "
        << std::setw(6) << 100.0 * r.macro_f1 << '\n';
  }
  return out.str();
}

}  // namespace topicshift
