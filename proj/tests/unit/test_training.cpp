#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "topicshift/enrichment.hpp"
#include "topicshift/error.hpp"
#include "topicshift/pipeline.hpp"
#include "topicshift/synthetic.hpp"
#include "topicshift/training.hpp"

using namespace topicshift;
using ag::Matrix;
using ag::Var;

namespace {

std::vector<DetectionExample> toy_examples() {
  FrequencyKeywordProvider kw;
  HeuristicSrlProvider srl;
  return preprocess(toy_corpus(), kw, srl).examples;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  TrainingConfig c;
  c.peak_learning_rate = 1e-3;
  c.warmup_fraction = 0.1;
  CHECK(warmup_steps(100, 0.1) == 10);
  CHECK(warmup_steps(95, 0.1) == 10);
  CHECK(learning_rate_at(0, 100, c) == 0.0);
  CHECK(learning_rate_at(5, 100, c) == doctest::Approx(5e-4));
  CHECK(learning_rate_at(10, 100, c) == doctest::Approx(1e-3));
  CHECK(learning_rate_at(55, 100, c) == doctest::Approx(5e-4));
  CHECK(learning_rate_at(100, 100, c) == 0.0);
  CHECK_THROWS_AS(learning_rate_at(101, 100, c), ValidationError);
  CHECK_THROWS_AS(learning_rate_at(0, 0, c), ValidationError);
  for (std::size_t s = 1; s <= 100; ++s) {
    const double lr = learning_rate_at(s, 100, c);
    CHECK(lr >= 0.0);
    CHECK(lr <= c.peak_learning_rate + 1e-15);
  }
}

TEST_CASE("training config defaults and JSON") {
  TrainingConfig c;
  CHECK(c.batch_size == 2);
  CHECK(c.epochs == 20);
  CHECK(c.weight_decay == 0.01);
  CHECK(c.warmup_fraction == 0.1);
  const auto back = TrainingConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(TrainingConfig::from_json(nlohmann::json{{"warmup_fraction", 1.0}}), ValidationError);
  CHECK_THROWS_AS(TrainingConfig::from_json(nlohmann::json{{"epochs", 0}}), ValidationError);
  CHECK_THROWS_AS(TrainingConfig::from_json(nlohmann::json{{"learning_rate", 1e-3}}), ValidationError);
  const auto partial = TrainingConfig::from_json(nlohmann::json{{"epochs", 3}, {"model", {{"d_model", 32}}}});
  CHECK(partial.epochs == 3);
  CHECK(partial.model.d_model == 32);
  CHECK(partial.batch_size == 2);
}

TEST_CASE("AdamW step matches a hand computation") {
  ParameterSet params;
  auto w = Var::parameter(Matrix::Constant(1, 2, 1.0));
  auto b = Var::parameter(Matrix::Constant(1, 1, 1.0));
  params.add("layer.weight", w);
  params.add("layer.bias", b);
  TrainingConfig c;
  c.weight_decay = 0.1;
  AdamW opt(params, c);
  w.node()->grad = Matrix::Constant(1, 2, 0.5);
  b.node()->grad = Matrix::Constant(1, 1, -2.0);
  opt.step(0.01);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * sign(g) (up to eps).
  const double eps_term = 0.5 / (0.5 + 1e-8);
  CHECK(w.value()(0, 0) == doctest::Approx(1.0 * (1.0 - 0.01 * 0.1) - 0.01 * eps_term).epsilon(1e-12));
  CHECK(b.value()(0, 0) == doctest::Approx(1.0 + 0.01 * (2.0 / (2.0 + 1e-8))).epsilon(1e-12));
  CHECK(opt.steps() == 1);
}

TEST_CASE("gradient clipping") {
  ParameterSet params;
  auto a = Var::parameter(Matrix::Zero(1, 2));
  params.add("a", a);
  a.node()->grad = (Matrix(1, 2) << 3.0, 4.0).finished();
  CHECK(clip_gradients(params, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad().norm() == doctest::Approx(1.0));
  CHECK(clip_gradients(params, 10.0) == doctest::Approx(1.0));
  CHECK(a.grad().norm() == doctest::Approx(1.0));
}

TEST_CASE("toy training lowers the loss and is reproducible") {
  const auto examples = toy_examples();
  REQUIRE(examples.size() == 8);
  auto config = fixtures::tiny_training(4);
  auto m1 = initial_model(examples, config);
  auto m2 = initial_model(examples, config);
  const auto r1 = train(m1, examples, {}, config);
  const auto r2 = train(m2, examples, {}, config);
  REQUIRE(r1.log.size() == 4);
  CHECK(r1.steps == 16);
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].to_json() == r2.log[i].to_json());
    CHECK_FALSE(r1.log[i].dev_macro_f1.has_value());
  }
  CHECK(m1.snapshot() == m2.snapshot());
  CHECK(r1.log[2].total_loss <= r1.log[0].total_loss);
  CHECK(r1.best_epoch == 4);
  CHECK(r1.best_parameters == m1.snapshot());
}

TEST_CASE("label-only ablation logs the other components as null") {
  const auto examples = toy_examples();
  auto config = fixtures::tiny_training(1);
  config.ablation.enabled = {Granularity::Label};
  config.ablation.use_classifier = false;
  auto model = initial_model(examples, config);
  const auto r = train(model, examples, examples, config);
  const auto j = r.log.at(0).to_json();
  CHECK(j["L_Topic"].is_null());
  CHECK(j["L_Turn"].is_null());
  CHECK(j["L_Class"].is_null());
  CHECK(j["L_Label"].get<double>() > 0.0);
  CHECK(j["dev_macro_f1"].is_number());
  CHECK(j.contains("epoch"));
}

TEST_CASE("max_steps caps training") {
  const auto examples = toy_examples();
  auto config = fixtures::tiny_training(10);
  config.max_steps = 5;
  auto model = initial_model(examples, config);
  CHECK(train(model, examples, {}, config).steps == 5);
}

TEST_CASE("training errors") {
  auto examples = toy_examples();
  auto config = fixtures::tiny_training(1);
  CHECK_THROWS_AS(initial_model({}, config), ValidationError);
  auto model = initial_model(examples, config);
  CHECK_THROWS_AS(train(model, {}, {}, config), ValidationError);
  examples[3].targets.erase(Granularity::Turn);
  try {
    train(model, examples, {}, config);
    FAIL("expected a missing-target error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(examples[3].id()) != std::string::npos);
  }
}
