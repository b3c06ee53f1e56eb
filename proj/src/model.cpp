#include "topicshift/model.hpp"

#include <cmath>
#include <mutex>

#include "topicshift/error.hpp"

namespace topicshift {

using ag::Matrix;
using ag::Var;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ValidationError(std::string("model config: ") + name + " must be positive");
  };
  positive(d_model, "d_model");
  positive(encoder_layers, "encoder_layers");
  positive(decoder_layers, "decoder_layers");
  positive(heads, "heads");
  positive(feedforward_dim, "feedforward_dim");
  positive(max_sequence_len, "max_sequence_len");
  positive(classifier_recurrent_layers, "classifier_recurrent_layers");
  positive(classifier_hidden, "classifier_hidden");
  if (d_model % heads != 0) throw ValidationError("model config: d_model must be divisible by heads");
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("model config: dropout must be in [0, 1)");
}

json ModelConfig::to_json() const {
  return json{{"d_model", d_model},
              {"encoder_layers", encoder_layers},
              {"decoder_layers", decoder_layers},
              {"heads", heads},
              {"feedforward_dim", feedforward_dim},
              {"max_sequence_len", max_sequence_len},
              {"classifier_recurrent_layers", classifier_recurrent_layers},
              {"classifier_hidden", classifier_hidden},
              {"dropout", dropout},
              {"backbone", backbone}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "d_model") c.d_model = value.get<int>();
      else if (key == "encoder_layers") c.encoder_layers = value.get<int>();
      else if (key == "decoder_layers") c.decoder_layers = value.get<int>();
      else if (key == "heads") c.heads = value.get<int>();
      else if (key == "feedforward_dim") c.feedforward_dim = value.get<int>();
      else if (key == "max_sequence_len") c.max_sequence_len = value.get<int>();
      else if (key == "classifier_recurrent_layers") c.classifier_recurrent_layers = value.get<int>();
      else if (key == "classifier_hidden") c.classifier_hidden = value.get<int>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "backbone") c.backbone = value.get<std::string>();
      else throw ValidationError("model config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

void AblationSpec::validate() const {
  if (enabled.empty() && !use_classifier) {
    throw ValidationError("ablation: at least one loss component must be enabled");
  }
}

std::string AblationSpec::name() const {
  if (enabled.empty()) return "cla";
  std::string out;
  for (auto g : kAllGranularities) {
    if (enabled.contains(g)) out += "+" + std::string(granularity_name(g));
  }
  return out;
}

json AblationSpec::to_json() const {
  json list = json::array();
  for (auto g : kAllGranularities) {
    if (enabled.contains(g)) list.push_back(std::string(granularity_key(g)));
  }
  return json{{"granularities", list}, {"use_classifier", use_classifier}};
}

AblationSpec AblationSpec::from_json(const json& j) {
  AblationSpec spec;
  try {
    if (j.contains("granularities")) {
      spec.enabled.clear();
      for (const auto& g : j.at("granularities")) spec.enabled.insert(parse_granularity(g.get<std::string>()));
    }
    if (j.contains("use_classifier")) spec.use_classifier = j.at("use_classifier").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("ablation: ") + e.what());
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Parameters and layers

void ParameterSet::add(std::string name, Var var) { entries_.emplace_back(std::move(name), std::move(var)); }

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : entries_) n += static_cast<std::size_t>(v.value().size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [name, v] : entries_) {
    Var handle = v;
    handle.zero_grad();
  }
}

namespace {

Matrix xavier(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Var maybe_dropout(const Var& x, const RunMode& mode, double p) {
  if (!mode.training || p <= 0.0) return x;
  if (!mode.rng) throw Error("training with dropout requires a random generator");
  return ag::dropout(x, p, *mode.rng);
}

}  // namespace

Linear::Linear(int in, int out, std::mt19937_64& rng, bool bias)
    : weight(Var::parameter(xavier(in, out, rng))) {
  if (bias) this->bias = Var::parameter(Matrix::Zero(1, out));
}

Var Linear::operator()(const Var& x) const {
  Var y = ag::matmul(x, weight);
  return bias.defined() ? ag::add_row(y, bias) : y;
}

void Linear::collect(ParameterSet& params, const std::string& prefix) const {
  params.add(prefix + ".weight", weight);
  if (bias.defined()) params.add(prefix + ".bias", bias);
}

LayerNorm::LayerNorm(int width)
    : gain(Var::parameter(Matrix::Ones(1, width))), bias(Var::parameter(Matrix::Zero(1, width))) {}

Var LayerNorm::operator()(const Var& x) const { return ag::layer_norm(x, gain, bias); }

void LayerNorm::collect(ParameterSet& params, const std::string& prefix) const {
  params.add(prefix + ".gain", gain);
  params.add(prefix + ".bias", bias);
}

MultiHeadAttention::MultiHeadAttention(int d_model, int heads, std::mt19937_64& rng)
    : q_(d_model, d_model, rng), k_(d_model, d_model, rng), v_(d_model, d_model, rng),
      o_(d_model, d_model, rng), heads_(heads) {}

Var MultiHeadAttention::operator()(const Var& queries, const Var& keys_values, bool causal) const {
  Var q = q_(queries);
  Var k = k_(keys_values);
  Var v = v_(keys_values);
  return o_(ag::attention(q, k, v, heads_, causal));
}

void MultiHeadAttention::collect(ParameterSet& params, const std::string& prefix) const {
  q_.collect(params, prefix + ".query");
  k_.collect(params, prefix + ".key");
  v_.collect(params, prefix + ".value");
  o_.collect(params, prefix + ".output");
}

FeedForward::FeedForward(int d_model, int hidden, std::mt19937_64& rng)
    : in_(d_model, hidden, rng), out_(hidden, d_model, rng) {}

Var FeedForward::operator()(const Var& x) const { return out_(ag::relu(in_(x))); }

void FeedForward::collect(ParameterSet& params, const std::string& prefix) const {
  in_.collect(params, prefix + ".in");
  out_.collect(params, prefix + ".out");
}

// ---------------------------------------------------------------------------
// Reference transformer backbone

namespace {

Matrix sinusoidal_positions(int length, int width) {
  Matrix pe(length, width);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / width);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

struct EncoderLayer {
  LayerNorm norm1, norm2;
  MultiHeadAttention attention;
  FeedForward ffn;
};

struct DecoderLayer {
  LayerNorm norm1, norm2, norm3;
  MultiHeadAttention self_attention, cross_attention;
  FeedForward ffn;
};

// Shared by the three granularities.
class TransformerDecoder {
 public:
  TransformerDecoder(const ModelConfig& c, Var embedding, int vocab_size, std::mt19937_64& rng)
      : embedding_(std::move(embedding)), final_norm_(c.d_model),
        generator_(c.d_model, vocab_size, rng), dropout_(c.dropout),
        scale_(std::sqrt(static_cast<double>(c.d_model))) {
    for (int i = 0; i < c.decoder_layers; ++i) {
      layers_.push_back(DecoderLayer{LayerNorm(c.d_model), LayerNorm(c.d_model), LayerNorm(c.d_model),
                                     MultiHeadAttention(c.d_model, c.heads, rng),
                                     MultiHeadAttention(c.d_model, c.heads, rng),
                                     FeedForward(c.d_model, c.feedforward_dim, rng)});
    }
  }

  Var operator()(std::span<const int> inputs, const Var& memory, const Matrix& positions,
                 const RunMode& mode) const {
    Var x = ag::scale(ag::gather_rows(embedding_, inputs), scale_);
    x = ag::add_constant(x, positions.topRows(static_cast<Eigen::Index>(inputs.size())));
    x = maybe_dropout(x, mode, dropout_);
    for (const auto& layer : layers_) {
      Var h = layer.norm1(x);
      x = ag::add(x, maybe_dropout(layer.self_attention(h, h, true), mode, dropout_));
      x = ag::add(x, maybe_dropout(layer.cross_attention(layer.norm2(x), memory, false), mode, dropout_));
      x = ag::add(x, maybe_dropout(layer.ffn(layer.norm3(x)), mode, dropout_));
    }
    return generator_(final_norm_(x));
  }

  void collect(ParameterSet& params) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const std::string p = "decoder.layer" + std::to_string(i);
      layers_[i].norm1.collect(params, p + ".norm1");
      layers_[i].self_attention.collect(params, p + ".self_attention");
      layers_[i].norm2.collect(params, p + ".norm2");
      layers_[i].cross_attention.collect(params, p + ".cross_attention");
      layers_[i].norm3.collect(params, p + ".norm3");
      layers_[i].ffn.collect(params, p + ".ffn");
    }
    final_norm_.collect(params, "decoder.final_norm");
    generator_.collect(params, "decoder.generator");
  }

 private:
  Var embedding_;
  std::vector<DecoderLayer> layers_;
  LayerNorm final_norm_;
  Linear generator_;
  double dropout_;
  double scale_;
};

class TransformerBackbone final : public Backbone {
 public:
  TransformerBackbone(const ModelConfig& c, int vocab_size, std::mt19937_64& rng)
      : config_(c),
        embedding_(Var::parameter(xavier(vocab_size, c.d_model, rng))),
        positions_(sinusoidal_positions(c.max_sequence_len, c.d_model)),
        encoder_norm_(c.d_model),
        scale_(std::sqrt(static_cast<double>(c.d_model))) {
    for (int i = 0; i < c.encoder_layers; ++i) {
      encoder_.push_back(EncoderLayer{LayerNorm(c.d_model), LayerNorm(c.d_model),
                                      MultiHeadAttention(c.d_model, c.heads, rng),
                                      FeedForward(c.d_model, c.feedforward_dim, rng)});
    }
    decoder_ = std::make_unique<TransformerDecoder>(c, embedding_, vocab_size, rng);
  }

  int hidden_size() const override { return config_.d_model; }
  int max_sequence_len() const override { return config_.max_sequence_len; }

  Var encode(std::span<const int> ids, const RunMode& mode) const override {
    Var x = ag::scale(ag::gather_rows(embedding_, ids), scale_);
    x = ag::add_constant(x, positions_.topRows(static_cast<Eigen::Index>(ids.size())));
    x = maybe_dropout(x, mode, config_.dropout);
    for (const auto& layer : encoder_) {
      Var h = layer.norm1(x);
      x = ag::add(x, maybe_dropout(layer.attention(h, h, false), mode, config_.dropout));
      x = ag::add(x, maybe_dropout(layer.ffn(layer.norm2(x)), mode, config_.dropout));
    }
    return encoder_norm_(x);
  }

  Var decode(std::span<const int> inputs, const Var& memory, const RunMode& mode) const override {
    return (*decoder_)(inputs, memory, positions_, mode);
  }

  const void* decoder_identity() const override { return decoder_.get(); }

  void collect(ParameterSet& params) const override {
    params.add("embedding", embedding_);
    for (std::size_t i = 0; i < encoder_.size(); ++i) {
      const std::string p = "encoder.layer" + std::to_string(i);
      encoder_[i].norm1.collect(params, p + ".norm1");
      encoder_[i].attention.collect(params, p + ".attention");
      encoder_[i].norm2.collect(params, p + ".norm2");
      encoder_[i].ffn.collect(params, p + ".ffn");
    }
    encoder_norm_.collect(params, "encoder.final_norm");
    decoder_->collect(params);
  }

 private:
  ModelConfig config_;
  Var embedding_;
  Matrix positions_;
  std::vector<EncoderLayer> encoder_;
  LayerNorm encoder_norm_;
  std::unique_ptr<TransformerDecoder> decoder_;
  double scale_;
};

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BackboneFactory>& registry() {
  static std::map<std::string, BackboneFactory> r = {
      {"reference", [](const ModelConfig& c, int vocab, std::mt19937_64& rng) -> std::unique_ptr<Backbone> {
         return std::make_unique<TransformerBackbone>(c, vocab, rng);
       }}};
  return r;
}

}  // namespace

void register_backbone(const std::string& name, BackboneFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::unique_ptr<Backbone> make_backbone(const ModelConfig& config, int vocab_size,
                                        std::mt19937_64& rng) {
  BackboneFactory factory;
  {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(config.backbone);
    if (it == registry().end()) throw ValidationError("unknown backbone '" + config.backbone + "'");
    factory = it->second;
  }
  return factory(config, vocab_size, rng);
}

// ---------------------------------------------------------------------------
// BiLSTM classifier

BiLstmClassifier::BiLstmClassifier(int input, int hidden, int layers, std::mt19937_64& rng)
    : hidden_(hidden) {
  auto make_direction = [&](int in) {
    Direction d;
    d.input_weight = Var::parameter(xavier(in, 4 * hidden, rng));
    d.recurrent_weight = Var::parameter(xavier(hidden, 4 * hidden, rng));
    Matrix b = Matrix::Zero(1, 4 * hidden);
    b.middleCols(hidden, hidden).setOnes();  // forget gate
    d.bias = Var::parameter(std::move(b));
    return d;
  };
  int in = input;
  for (int l = 0; l < layers; ++l) {
    Direction fwd = make_direction(in);
    Direction bwd = make_direction(in);
    layers_.emplace_back(std::move(fwd), std::move(bwd));
    in = 2 * hidden;
  }
  output_ = Linear(2 * hidden, 2, rng);
}

std::vector<Var> BiLstmClassifier::run(const Direction& dir, const Var& inputs, bool reverse) const {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index h = hidden_;
  Var projected = ag::add_row(ag::matmul(inputs, dir.input_weight), dir.bias);
  Var state_h = Var::constant(Matrix::Zero(1, h));
  Var state_c = Var::constant(Matrix::Zero(1, h));
  std::vector<Var> outputs(static_cast<std::size_t>(n));
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index t = reverse ? n - 1 - step : step;
    Var gates = ag::add(ag::slice_rows(projected, t, 1), ag::matmul(state_h, dir.recurrent_weight));
    Var i = ag::sigmoid(ag::slice_cols(gates, 0, h));
    Var f = ag::sigmoid(ag::slice_cols(gates, h, h));
    Var g = ag::tanh(ag::slice_cols(gates, 2 * h, h));
    Var o = ag::sigmoid(ag::slice_cols(gates, 3 * h, h));
    state_c = ag::add(ag::mul(f, state_c), ag::mul(i, g));
    state_h = ag::mul(o, ag::tanh(state_c));
    outputs[static_cast<std::size_t>(t)] = state_h;
  }
  return outputs;
}

Var BiLstmClassifier::operator()(const Var& spans, const RunMode& mode, double dropout) const {
  if (spans.rows() == 0) throw ShapeError("classifier needs at least one span");
  Var inputs = spans;
  Var last_forward;
  Var last_backward;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto fwd = run(layers_[l].first, inputs, false);
    auto bwd = run(layers_[l].second, inputs, true);
    std::vector<Var> rows;
    rows.reserve(fwd.size());
    for (std::size_t t = 0; t < fwd.size(); ++t) {
      const Var pair[] = {fwd[t], bwd[t]};
      rows.push_back(ag::concat_cols(pair));
    }
    inputs = ag::concat_rows(rows);
    if (l + 1 < layers_.size()) inputs = maybe_dropout(inputs, mode, dropout);
    last_forward = fwd.back();
    last_backward = bwd.front();
  }
  const Var final_state[] = {last_forward, last_backward};
  return output_(ag::concat_cols(final_state));
}

void BiLstmClassifier::collect(ParameterSet& params, const std::string& prefix) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    for (int side = 0; side < 2; ++side) {
      const Direction& d = side == 0 ? layers_[l].first : layers_[l].second;
      const std::string q = p + (side == 0 ? ".forward" : ".backward");
      params.add(q + ".input_weight", d.input_weight);
      params.add(q + ".recurrent_weight", d.recurrent_weight);
      params.add(q + ".bias", d.bias);
    }
  }
  output_.collect(params, prefix + ".output");
}

// ---------------------------------------------------------------------------
// Examples and losses

EncodedExample encode_example(const DetectionExample& example, const Vocabulary& vocab,
                              const TemplateSet& templates) {
  EncodedExample out;
  out.id = example.id();
  out.input = vocab.encode_input(example.serialized_input);
  out.gold_label = example.gold_label;
  for (const auto& [g, target] : example.targets) {
    out.targets[g] = vocab.encode_target(target, templates, g);
  }
  return out;
}

LossBreakdown LossTerms::breakdown() const {
  LossBreakdown b;
  if (classification.defined()) b.classification = classification.item();
  for (const auto& [g, v] : generation) b.generation[g] = v.item();
  b.total = total.defined() ? total.item() : 0.0;
  return b;
}

LossTerms total_loss(const ForwardOutput& output, int gold_label,
                     const std::map<Granularity, std::vector<int>>& gold_targets) {
  LossTerms terms;
  std::vector<Var> parts;
  if (output.class_logits.defined()) {
    if (output.class_logits.rows() != 1 || output.class_logits.cols() != 2) {
      throw ShapeError("class logits must be 1 x 2");
    }
    if (gold_label != 0 && gold_label != 1) throw ValidationError("gold label must be 0 or 1");
    const int label[] = {gold_label};
    terms.classification = ag::cross_entropy(output.class_logits, label);
    parts.push_back(terms.classification);
  }
  for (const auto& [g, logits] : output.gen_logits) {
    auto it = gold_targets.find(g);
    if (it == gold_targets.end()) {
      throw ShapeError("no gold target for granularity " + std::string(granularity_name(g)));
    }
    if (static_cast<std::size_t>(logits.rows()) != it->second.size()) {
      throw ShapeError("generation logits for " + std::string(granularity_name(g)) + " have " +
                       std::to_string(logits.rows()) + " rows but the target has " +
                       std::to_string(it->second.size()) + " tokens");
    }
    terms.generation[g] = ag::cross_entropy(logits, it->second);
    parts.push_back(terms.generation[g]);
  }
  terms.total = parts.empty() ? Var::constant(Matrix::Zero(1, 1)) : ag::sum_all(parts);
  return terms;
}

double ablation_mask(const LossBreakdown& components, const std::set<Granularity>& enabled,
                     bool use_classifier) {
  if (enabled.empty() && !use_classifier) {
    throw ValidationError("ablation: at least one loss component must be enabled");
  }
  double total = 0.0;
  if (use_classifier) {
    if (!components.classification) throw ValidationError("ablation: classifier loss is missing");
    total += *components.classification;
  }
  for (auto g : enabled) {
    auto it = components.generation.find(g);
    if (it == components.generation.end()) {
      throw ValidationError("ablation: " + std::string(granularity_name(g)) + " loss is missing");
    }
    total += it->second;
  }
  return total;
}

Var ablation_mask(const LossTerms& components, const AblationSpec& spec) {
  spec.validate();
  std::vector<Var> parts;
  if (spec.use_classifier) {
    if (!components.classification.defined()) throw ValidationError("ablation: classifier loss is missing");
    parts.push_back(components.classification);
  }
  for (auto g : spec.enabled) {
    auto it = components.generation.find(g);
    if (it == components.generation.end()) {
      throw ValidationError("ablation: " + std::string(granularity_name(g)) + " loss is missing");
    }
    parts.push_back(it->second);
  }
  return ag::sum_all(parts);
}

// ---------------------------------------------------------------------------
// TopicShiftModel

TopicShiftModel::TopicShiftModel(ModelConfig config, Vocabulary vocabulary, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocabulary)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  backbone_ = make_backbone(config_, vocab_.size(), rng);
  classifier_ = BiLstmClassifier(2 * backbone_->hidden_size(), config_.classifier_hidden,
                                 config_.classifier_recurrent_layers, rng);
  backbone_->collect(params_);
  classifier_.collect(params_, "classifier");
}

Var TopicShiftModel::encode(std::span<const int> ids, const RunMode& mode) const {
  if (ids.empty()) throw ShapeError("cannot encode an empty input");
  if (static_cast<int>(ids.size()) > backbone_->max_sequence_len()) {
    throw ShapeError("input of " + std::to_string(ids.size()) + " tokens exceeds max_sequence_len " +
                     std::to_string(backbone_->max_sequence_len()));
  }
  return backbone_->encode(ids, mode);
}

Var TopicShiftModel::span_representations(const Var& hidden, std::span<const int> separator_positions) {
  if (separator_positions.size() < 2) {
    throw ShapeError("span representations need at least two separator positions");
  }
  for (std::size_t i = 0; i < separator_positions.size(); ++i) {
    if (separator_positions[i] < 0 || separator_positions[i] >= hidden.rows()) {
      throw ShapeError("separator position " + std::to_string(separator_positions[i]) +
                       " is outside the encoded sequence");
    }
    if (i > 0 && separator_positions[i] <= separator_positions[i - 1]) {
      throw ShapeError("separator positions must be strictly increasing");
    }
  }
  std::vector<int> left(separator_positions.begin(), separator_positions.end() - 1);
  std::vector<int> right(separator_positions.begin() + 1, separator_positions.end());
  const Var halves[] = {ag::gather_rows(hidden, left), ag::gather_rows(hidden, right)};
  return ag::concat_cols(halves);
}

Var TopicShiftModel::classify(const Var& span_reps, const RunMode& mode) const {
  return classifier_(span_reps, mode, config_.dropout);
}

Var TopicShiftModel::decode(Granularity g, std::span<const int> target_ids, const Var& encoder_hidden,
                            const RunMode& mode) const {
  if (target_ids.empty()) throw ShapeError("cannot decode an empty target");
  if (static_cast<int>(target_ids.size()) > backbone_->max_sequence_len()) {
    throw ShapeError("target of " + std::to_string(target_ids.size()) +
                     " tokens exceeds max_sequence_len " + std::to_string(backbone_->max_sequence_len()));
  }
  std::vector<int> inputs;
  inputs.reserve(target_ids.size());
  inputs.push_back(Vocabulary::start_token(g));
  inputs.insert(inputs.end(), target_ids.begin(), target_ids.end() - 1);
  return backbone_->decode(inputs, encoder_hidden, mode);
}

Eigen::RowVectorXd TopicShiftModel::next_token_scores(Granularity g, std::span<const int> prefix,
                                                      const Var& encoder_hidden) const {
  ag::NoGradGuard guard;
  std::vector<int> inputs;
  inputs.push_back(Vocabulary::start_token(g));
  inputs.insert(inputs.end(), prefix.begin(), prefix.end());
  if (static_cast<int>(inputs.size()) > backbone_->max_sequence_len()) {
    throw ShapeError("decoding prefix exceeds max_sequence_len");
  }
  Var logits = backbone_->decode(inputs, encoder_hidden, RunMode{});
  return logits.value().row(logits.rows() - 1);
}

ForwardOutput TopicShiftModel::forward(const EncodedExample& example, const ForwardOptions& options,
                                       const RunMode& mode) const {
  ForwardOutput out;
  out.encoder_hidden = encode(example.input.ids, mode);
  out.span_reps = span_representations(out.encoder_hidden, example.input.separator_positions);
  if (options.classifier) out.class_logits = classify(out.span_reps, mode);
  for (auto g : options.granularities) {
    auto it = example.targets.find(g);
    if (it == example.targets.end()) {
      throw ValidationError("example " + example.id + " has no " + std::string(granularity_name(g)) +
                            " target");
    }
    out.gen_logits[g] = decode(g, it->second, out.encoder_hidden, mode);
  }
  return out;
}

const void* TopicShiftModel::decoder_for(Granularity) const { return backbone_->decoder_identity(); }

std::vector<Matrix> TopicShiftModel::snapshot() const {
  std::vector<Matrix> values;
  for (const auto& [name, v] : params_.entries()) values.push_back(v.value());
  return values;
}

void TopicShiftModel::restore(const std::vector<Matrix>& values) {
  const auto entries = params_.entries();
  if (values.size() != entries.size()) throw ShapeError("snapshot does not match the model");
  for (std::size_t i = 0; i < values.size(); ++i) {
    Var handle = entries[i].second;
    if (handle.rows() != values[i].rows() || handle.cols() != values[i].cols()) {
      throw ShapeError("snapshot tensor " + entries[i].first + " has the wrong shape");
    }
    handle.mutable_value() = values[i];
  }
}

}  // namespace topicshift
