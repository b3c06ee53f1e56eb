#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "topicshift/ablation.hpp"
#include "topicshift/enrichment.hpp"
#include "topicshift/error.hpp"
#include "topicshift/evaluation.hpp"
#include "topicshift/pipeline.hpp"
#include "topicshift/synthetic.hpp"

using namespace topicshift;

namespace {

// Independent confusion-matrix oracle: counts per (gold, predicted) cell.
struct Oracle {
  double p[2], r[2], f[2], macro;
};

Oracle oracle(const std::vector<int>& pred, const std::vector<int>& gold) {
  double cell[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < pred.size(); ++i) cell[gold[i]][pred[i]] += 1;
  Oracle o{};
  for (int c = 0; c < 2; ++c) {
    const double tp = cell[c][c];
    const double predicted = cell[0][c] + cell[1][c];
    const double actual = cell[c][0] + cell[c][1];
    o.p[c] = predicted > 0 ? tp / predicted : 0.0;
    o.r[c] = actual > 0 ? tp / actual : 0.0;
    o.f[c] = o.p[c] + o.r[c] > 0 ? 2 * o.p[c] * o.r[c] / (o.p[c] + o.r[c]) : 0.0;
  }
  o.macro = (o.f[0] + o.f[1]) / 2;
  return o;
}

}  // namespace

TEST_CASE("worked confusion example") {
  // TP=3, FP=1, FN=1, TN=5
  std::vector<int> pred{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  std::vector<int> gold{1, 1, 1, 0, 1, 0, 0, 0, 0, 0};
  const auto r = compute_metrics(pred, gold);
  CHECK(r.shift.precision == doctest::Approx(0.75));
  CHECK(r.shift.recall == doctest::Approx(0.75));
  CHECK(r.shift.f1 == doctest::Approx(0.75));
  CHECK(r.nonshift.precision == doctest::Approx(5.0 / 6.0));
  CHECK(r.nonshift.f1 == doctest::Approx(5.0 / 6.0));
  CHECK(r.macro_f1 == doctest::Approx(0.7917).epsilon(1e-4));
  CHECK(r.precision == r.shift.precision);
  CHECK(r.recall == r.shift.recall);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("metrics edge cases") {
  const std::vector<int> all{0, 1, 1, 0};
  const auto perfect = compute_metrics(all, all);
  CHECK(perfect.macro_f1 == 1.0);
  CHECK(perfect.shift.precision == 1.0);

  const std::vector<int> zeros{0, 0, 0};
  const auto none = compute_metrics(zeros, zeros);
  CHECK(none.shift.f1 == 0.0);
  CHECK(none.macro_f1 == doctest::Approx(0.5));
  CHECK(none.degenerate);

  CHECK_THROWS_AS(compute_metrics(std::vector<int>{1}, std::vector<int>{1, 0}), ValidationError);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}), ValidationError);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{2}, std::vector<int>{1}), ValidationError);
}

TEST_CASE("metrics agree with the oracle and are symmetric under relabelling") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> pred(n), gold(n), pred_s(n), gold_s(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng() % 2);
      gold[i] = static_cast<int>(rng() % 2);
      pred_s[i] = 1 - pred[i];
      gold_s[i] = 1 - gold[i];
    }
    const auto r = compute_metrics(pred, gold);
    const auto o = oracle(pred, gold);
    CHECK(std::abs(r.shift.precision - o.p[1]) < 1e-9);
    CHECK(std::abs(r.shift.recall - o.r[1]) < 1e-9);
    CHECK(std::abs(r.nonshift.f1 - o.f[0]) < 1e-9);
    CHECK(std::abs(r.macro_f1 - o.macro) < 1e-9);
    CHECK(std::abs(compute_metrics(pred_s, gold_s).macro_f1 - r.macro_f1) < 1e-12);
    CHECK(r.macro_f1 >= 0.0);
    CHECK(r.macro_f1 <= 1.0);
  }
}

TEST_CASE("fusion rules") {
  CHECK(combine_predictions(LabelProbs{0.6, 0.4}, {LabelProbs{0.6, 0.4}}).label == 0);
  CHECK(combine_predictions(LabelProbs{0.5, 0.5}, {}).label == 0);
  const auto fused = combine_predictions(LabelProbs{0.2, 0.8}, {LabelProbs{0.4, 0.6}});
  CHECK(fused.label == 1);
  CHECK(fused.source == PredictionSource::Fused);
  CHECK(combine_predictions(LabelProbs{0.1, 0.9}, {}).source == PredictionSource::Classifier);
  CHECK(combine_predictions(LabelProbs{0.9, 0.1}, {LabelProbs{0.2, 0.8}}, FusionMode::Generator).label == 1);
  CHECK(combine_predictions(LabelProbs{0.9, 0.1}, {LabelProbs{0.2, 0.8}}, FusionMode::Classifier).label == 0);
  CHECK(combine_predictions(std::nullopt, {}, FusionMode::Generator).label == 0);
  // Averaging two generator probabilities first, then with the classifier.
  CHECK(combine_predictions(LabelProbs{0.45, 0.55}, {LabelProbs{0.9, 0.1}, LabelProbs{0.1, 0.9}}).label == 1);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double p = u(rng);
    const LabelProbs probs{1.0 - p, p};
    CHECK(combine_predictions(probs, {probs}).label == combine_predictions(probs, {}, FusionMode::Classifier).label);
  }
  CHECK(parse_fusion("average") == FusionMode::Average);
  CHECK_THROWS_AS(parse_fusion("vote"), ValidationError);
}

TEST_CASE("predictions are deterministic and well formed") {
  FrequencyKeywordProvider kw;
  HeuristicSrlProvider srl;
  const auto examples = preprocess(toy_corpus(), kw, srl).examples;
  auto config = fixtures::tiny_training(1);
  auto model = initial_model(examples, config);
  const auto& templates = TemplateSet::builtin(Language::English);
  for (const auto& ex : examples) {
    const auto a = predict(model, templates, ex);
    const auto b = predict(model, templates, ex);
    CHECK(a.to_json() == b.to_json());
    CHECK((a.final_label == 0 || a.final_label == 1));
    REQUIRE(a.class_probs.has_value());
    CHECK((*a.class_probs)[0] + (*a.class_probs)[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(a.gen_labels.size() == 3);
    for (const auto& [g, p] : a.gen_probs) CHECK(p[0] + p[1] == doctest::Approx(1.0));
    const auto& text = a.gen_texts.at(Granularity::Label);
    CHECK(text.starts_with("Relative to the above, the topic of the current discourse has "));
    CHECK(text.ends_with("."));
    CHECK(parse_generated_label(text, templates) == a.gen_labels.at(Granularity::Label));
  }
  PredictOptions cls_only;
  cls_only.fusion = FusionMode::Classifier;
  cls_only.granularities.clear();
  const auto p = predict(model, templates, examples.front(), cls_only);
  CHECK(p.gen_labels.empty());
  CHECK(p.source == PredictionSource::Classifier);
  CHECK_THROWS_AS(predict(model, TemplateSet::builtin(Language::Chinese), examples.front()), ValidationError);
}

TEST_CASE("majority baseline") {
  std::vector<DetectionExample> ref(5), eval(4);
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i].gold_label = i < 3 ? 0 : 1;
  for (std::size_t i = 0; i < eval.size(); ++i) eval[i].gold_label = i % 2;
  const auto r = majority_baseline(ref, eval);
  CHECK(r.nonshift.recall == 1.0);
  CHECK(r.shift.recall == 0.0);
  CHECK(r.macro_f1 == doctest::Approx((2.0 / 3.0) / 2.0));
}

TEST_CASE("ablation grid structure") {
  const auto grid = ablation_grid();
  REQUIRE(grid.size() == 10);
  std::vector<std::string> names;
  for (const auto& row : grid) names.push_back(row.name);
  CHECK(names == std::vector<std::string>{"gen", "cla", "gen+cls", "+Label", "+Topic", "+Turn", "+Label+Topic",
                                          "+Label+Turn", "+Topic+Turn", "+Label+Topic+Turn"});
  CHECK(grid[0].fusion == FusionMode::Generator);
  CHECK_FALSE(grid[0].spec.use_classifier);
  CHECK(grid[1].fusion == FusionMode::Classifier);
  CHECK(grid[1].spec.enabled.empty());
  CHECK(grid[2].fusion == FusionMode::Average);
}

TEST_CASE("metrics table text") {
  const std::vector<int> v{0, 1};
  const auto table = format_metrics_table({{"gen+cls", compute_metrics(v, v)}});
  CHECK(table.find("gen+cls") != std::string::npos);
  CHECK(table.find("100.0") != std::string::npos);
}
