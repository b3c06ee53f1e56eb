#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <json.hpp>

#include "topicshift/checkpoint.hpp"
#include "topicshift/cli.hpp"
#include "topicshift/corpus.hpp"
#include "topicshift/enrichment.hpp"
#include "topicshift/error.hpp"
#include "topicshift/evaluation.hpp"
#include "topicshift/pipeline.hpp"
#include "topicshift/prompts.hpp"
#include "topicshift/synthetic.hpp"
#include "topicshift/training.hpp"

namespace py = pybind11;
namespace ts = topicshift;
using nlohmann::json;

namespace {

// Dialogues and examples cross the boundary as JSON text; the Python
// package converts them to and from dicts.

std::vector<std::string> preprocess_json(const std::vector<std::string>& dialogues,
                                         const std::string& keyword_provider,
                                         const std::string& srl_provider, bool lenient) {
  std::vector<ts::Dialogue> corpus;
  for (std::size_t i = 0; i < dialogues.size(); ++i) corpus.push_back(ts::parse_dialogue(dialogues[i], i + 1));
  auto keywords = ts::make_keyword_provider(keyword_provider);
  auto srl = ts::make_srl_provider(srl_provider);
  ts::PreprocessOptions options;
  options.lenient = lenient;
  std::vector<std::string> out;
  for (const auto& ex : ts::preprocess(corpus, *keywords, *srl, options).examples) {
    out.push_back(ts::example_to_json(ex));
  }
  return out;
}

std::vector<std::string> synthetic_json(std::size_t dialogues, std::uint64_t seed) {
  ts::SyntheticOptions options;
  options.dialogues = dialogues;
  options.seed = seed;
  std::vector<std::string> out;
  for (const auto& d : ts::synthetic_corpus(options)) out.push_back(ts::dialogue_to_json(d));
  return out;
}

std::string metrics_json(const std::vector<int>& predictions, const std::vector<int>& golds) {
  return ts::compute_metrics(predictions, golds).to_json().dump();
}

int combine(std::optional<std::array<double, 2>> class_probs,
            const std::vector<std::array<double, 2>>& gen_probs, const std::string& fusion) {
  return ts::combine_predictions(class_probs, gen_probs, ts::parse_fusion(fusion)).label;
}

double lr_at(std::size_t step, std::size_t total, double peak, double warmup_fraction) {
  ts::TrainingConfig config;
  config.peak_learning_rate = peak;
  config.warmup_fraction = warmup_fraction;
  return ts::learning_rate_at(step, total, config);
}

std::tuple<int, std::string, std::string> cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = ts::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Detector {
 public:
  explicit Detector(const std::string& path) : loaded_(ts::load_checkpoint(path)) {}

  std::string predict(const std::vector<std::string>& context, const std::string& response,
                      const std::string& fusion) const {
    if (context.empty()) throw ts::ValidationError("context must hold at least one utterance");
    std::vector<std::string> utterances = context;
    utterances.push_back(response);
    const auto& model = loaded_.model;
    ts::AblationSpec spec;
    if (loaded_.metadata.contains("training")) {
      spec = ts::AblationSpec::from_json(loaded_.metadata["training"]["ablation"]);
    }
    auto options = ts::PredictOptions::for_ablation(spec);
    if (!fusion.empty()) options.fusion = ts::parse_fusion(fusion);
    const auto input =
        model.vocabulary().encode_input(ts::serialize_context(utterances, model.vocabulary().separator()));
    const auto& templates = ts::TemplateSet::builtin(model.vocabulary().language());
    return ts::predict(model, templates, "request", input, options).to_json().dump();
  }

  std::string language() const { return std::string(ts::language_tag(loaded_.model.vocabulary().language())); }
  int vocabulary_size() const { return loaded_.model.vocabulary().size(); }

 private:
  ts::LoadedCheckpoint loaded_;
};

}  // namespace

PYBIND11_MODULE(_topicshift, m) {
  m.doc() = "Topic shift detection core";
  m.attr("__version__") = TOPICSHIFT_VERSION;

  // Translators run newest first, so the base class goes in first.
  py::register_exception<ts::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ts::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ts::ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("serialize_context", [](const std::vector<std::string>& utterances) {
    return ts::serialize_context(utterances);
  });
  m.def("build_label_target", [](int label, const std::string& lang) {
    return ts::build_label_target(label, ts::parse_language(lang));
  }, py::arg("label"), py::arg("lang") = "en");
  m.def("build_topic_target", [](const std::string& prev, const std::string& cur, int label, const std::string& lang) {
    return ts::build_topic_target(prev, cur, label, ts::parse_language(lang));
  }, py::arg("prev"), py::arg("cur"), py::arg("label"), py::arg("lang") = "en");
  m.def("build_turn_target", [](const std::string& prev, const std::string& cur, int label, const std::string& lang) {
    return ts::build_turn_target(prev, cur, label, ts::parse_language(lang));
  }, py::arg("prev"), py::arg("cur"), py::arg("label"), py::arg("lang") = "en");
  m.def("parse_generated_label", [](const std::string& text, const std::string& lang) {
    return ts::parse_generated_label(text, ts::parse_language(lang));
  }, py::arg("text"), py::arg("lang") = "en");

  m.def("_preprocess", &preprocess_json, py::arg("dialogues"), py::arg("keyword_provider") = "frequency",
        py::arg("srl_provider") = "heuristic", py::arg("lenient") = false);
  m.def("_synthetic_corpus", &synthetic_json, py::arg("dialogues") = 200, py::arg("seed") = 7);
  m.def("_compute_metrics", &metrics_json, py::arg("predictions"), py::arg("golds"));
  m.def("combine_predictions", &combine, py::arg("class_probs"), py::arg("gen_probs"),
        py::arg("fusion") = "average");
  m.def("learning_rate_at", &lr_at, py::arg("step"), py::arg("total_steps"),
        py::arg("peak") = 3e-4, py::arg("warmup_fraction") = 0.1);
  m.def("_run_cli", &cli, py::arg("args"), py::call_guard<py::gil_scoped_release>());

  py::class_<Detector>(m, "_Detector")
      .def(py::init<const std::string&>())
      .def("predict", &Detector::predict, py::arg("context"), py::arg("response"), py::arg("fusion") = "")
      .def_property_readonly("language", &Detector::language)
      .def_property_readonly("vocabulary_size", &Detector::vocabulary_size);
}
