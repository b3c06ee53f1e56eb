#include "topicshift/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "topicshift/ablation.hpp"
#include "topicshift/checkpoint.hpp"
#include "topicshift/corpus.hpp"
#include "topicshift/enrichment.hpp"
#include "topicshift/error.hpp"
#include "topicshift/evaluation.hpp"
#include "topicshift/pipeline.hpp"
#include "topicshift/synthetic.hpp"
#include "topicshift/training.hpp"

namespace fs = std::filesystem;

namespace topicshift {

using nlohmann::json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  char buffer[1 << 16];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void RunManifest::add_input(const fs::path& path) { inputs[path.string()] = sha256_file(path); }

json RunManifest::to_json() const {
  return json{{"command", command},
              {"arguments", arguments},
              {"config", config},
              {"inputs", inputs},
              {"seed", seed ? json(*seed) : json(nullptr)},
              {"version", version},
              {"started_at", started_at},
              {"finished_at", finished_at.empty() ? json(nullptr) : json(finished_at)}};
}

void RunManifest::write(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << to_json().dump(2) << '\n';
}

namespace {

fs::path sidecar_manifest(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// convert

std::string normalise_split(const std::string& name) {
  if (name == "valid" || name == "validation" || name == "dev") return "dev";
  if (name == "train" || name == "test") return name;
  throw ValidationError("unknown split '" + name + "'");
}

/// Drops dialogues too short to yield a pair and forces the first label to 0.
void finish_dialogue(Dialogue d, std::vector<Dialogue>& out, std::ostream& err) {
  if (d.utterances.size() < 2) {
    err << "convert: dropping dialogue '" << d.id << "' with " << d.utterances.size()
        << " utterance(s)\n";
    return;
  }
  d.utterances.front().shift = 0;
  out.push_back(std::move(d));
}

int parse_shift(const json& value, const std::string& where) {
  int v = 0;
  if (value.is_boolean()) v = value.get<bool>() ? 1 : 0;
  else if (value.is_number_integer()) v = value.get<int>();
  else if (value.is_string()) v = std::stoi(value.get<std::string>());
  else throw ValidationError(where + ": segmentation label must be 0 or 1");
  if (v != 0 && v != 1) throw ValidationError(where + ": segmentation label must be 0 or 1");
  return v;
}

// Released TIAGE / CNTD layout:
// {"dial_data": {"<split>": [{"dial_id": ..., "turns": [{"utterance": ..., "segmentation_label": 0|1}]}]}}
std::vector<Dialogue> convert_released_json(const json& root, Language language, std::ostream& err) {
  if (!root.is_object() || !root.contains("dial_data") || !root["dial_data"].is_object()) {
    throw ParseError("expected an object with a \"dial_data\" map of splits");
  }
  std::vector<Dialogue> out;
  for (const auto& [split_name, dialogues] : root["dial_data"].items()) {
    const std::string split = normalise_split(split_name);
    std::size_t i = 0;
    for (const auto& dj : dialogues) {
      Dialogue d;
      d.language = language;
      d.split = split;
      d.id = dj.contains("dial_id") ? (dj["dial_id"].is_string() ? dj["dial_id"].get<std::string>()
                                                                  : dj["dial_id"].dump())
                                    : split + "-" + std::to_string(i);
      if (!dj.contains("turns") || !dj["turns"].is_array()) {
        throw ParseError("dialogue '" + d.id + "' has no \"turns\" array");
      }
      std::size_t index = 0;
      for (const auto& turn : dj["turns"]) {
        const std::string where = "dialogue '" + d.id + "' turn " + std::to_string(index);
        if (!turn.contains("utterance")) throw ParseError(where + " has no \"utterance\"");
        Utterance u;
        u.index = index;
        u.speaker = turn.contains("speaker") ? turn["speaker"].get<std::string>()
                                             : (index % 2 == 0 ? "A" : "B");
        u.text = text::trim(turn["utterance"].get<std::string>());
        u.shift = turn.contains("segmentation_label") ? parse_shift(turn["segmentation_label"], where) : 0;
        d.utterances.push_back(std::move(u));
        ++index;
      }
      finish_dialogue(std::move(d), out, err);
      ++i;
    }
  }
  return out;
}

// Tab-separated rows: dialogue_id, speaker, text, shift[, split]. Rows of
// one dialogue are consecutive; a header row starting with "dialogue_id" is skipped.
std::vector<Dialogue> convert_tsv(std::istream& in, Language language, std::ostream& err) {
  std::vector<Dialogue> out;
  std::optional<Dialogue> current;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || (n == 1 && line.starts_with("dialogue_id"))) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() < 4 || cols.size() > 5) {
      throw ParseError("expected 4 or 5 tab-separated columns, found " + std::to_string(cols.size()), n);
    }
    if (!current || current->id != cols[0]) {
      if (current) finish_dialogue(std::move(*current), out, err);
      current = Dialogue{};
      current->id = cols[0];
      current->language = language;
      if (cols.size() == 5) current->split = normalise_split(cols[4]);
    }
    Utterance u;
    u.index = current->utterances.size();
    u.speaker = cols[1];
    u.text = text::trim(cols[2]);
    try {
      u.shift = parse_shift(json(cols[3]), "row " + std::to_string(n));
    } catch (const std::invalid_argument&) {
      throw ParseError("shift column must be 0 or 1", n);
    }
    current->utterances.push_back(std::move(u));
  }
  if (current) finish_dialogue(std::move(*current), out, err);
  return out;
}

// ---------------------------------------------------------------------------
// shared helpers

std::vector<DetectionExample> load_examples(const fs::path& path, Language language,
                                            std::uint64_t seed, std::ostream& err) {
  std::vector<DetectionExample> examples;
  if (is_example_file(path)) {
    examples = read_examples(path);
    for (const auto& ex : examples) {
      if (ex.language != language) {
        throw ValidationError("example " + ex.id() + " is '" + std::string(language_tag(ex.language)) +
                              "' but --lang is '" + std::string(language_tag(language)) + "'");
      }
    }
  } else {
    const auto corpus = load_corpus(path, language);
    FrequencyKeywordProvider keywords;
    HeuristicSrlProvider srl;
    auto result = preprocess(corpus, keywords, srl);
    if (!result.flags.empty()) {
      err << "preprocess: " << result.flags.size() << " fallback value(s) used; run `preprocess` to review\n";
    }
    examples = std::move(result.examples);
  }
  if (examples.empty()) throw ValidationError(path.string() + " yields no examples");
  assign_splits(examples, seed);
  return examples;
}

fs::path checkpoint_file(const fs::path& path) {
  if (fs::is_directory(path)) return path / "best.ckpt";
  return path;
}

AblationSpec checkpoint_ablation(const json& metadata) {
  if (metadata.contains("training") && metadata["training"].contains("ablation")) {
    return AblationSpec::from_json(metadata["training"]["ablation"]);
  }
  return AblationSpec{};
}

std::uint64_t checkpoint_seed(const json& metadata) {
  return metadata.contains("seed") ? metadata["seed"].get<std::uint64_t>() : TrainingConfig{}.seed;
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  auto out = open_output(path);
  for (const auto& r : rows) out << r.dump() << '\n';
}

struct Context {
  std::vector<std::string> arguments;
  std::ostream& out;
  std::ostream& err;

  RunManifest manifest(const std::string& command) const {
    RunManifest m;
    m.command = command;
    m.arguments = arguments;
    m.version = TOPICSHIFT_VERSION;
    m.started_at = utc_now();
    return m;
  }
};

// ---------------------------------------------------------------------------
// subcommands

struct ConvertArgs {
  std::string input, format, lang, output;
};

void run_convert(const ConvertArgs& a, const Context& ctx) {
  const Language language = parse_language(a.lang);
  auto manifest = ctx.manifest("convert");
  manifest.config = json{{"format", a.format}, {"lang", a.lang}};
  manifest.add_input(a.input);
  const fs::path output(a.output);
  manifest.write(sidecar_manifest(output));

  std::vector<Dialogue> dialogues;
  if (a.format == "tsv") {
    std::ifstream in(a.input);
    if (!in) throw Error("cannot open " + a.input);
    dialogues = convert_tsv(in, language, ctx.err);
  } else {
    dialogues = convert_released_json(read_json_file(a.input), language, ctx.err);
  }
  for (const auto& d : dialogues) validate_dialogue(d);
  auto out = open_output(output);
  write_corpus(out, dialogues);
  ctx.err << "convert: wrote " << dialogues.size() << " dialogue(s) to " << output.string() << '\n';
  manifest.finished_at = utc_now();
  manifest.write(sidecar_manifest(output));
}

struct PreprocessArgs {
  std::string corpus, lang, output, keyword_provider = "frequency", srl_provider = "heuristic";
  std::string review_log;
  bool lenient = false;
  std::size_t workers = 1;
};

void run_preprocess(const PreprocessArgs& a, const Context& ctx) {
  const Language language = parse_language(a.lang);
  const fs::path output(a.output);
  const fs::path review = a.review_log.empty() ? fs::path(a.output + ".review.jsonl") : fs::path(a.review_log);
  auto manifest = ctx.manifest("preprocess");
  manifest.config = json{{"lang", a.lang}, {"keyword_provider", a.keyword_provider},
                         {"srl_provider", a.srl_provider}, {"lenient", a.lenient},
                         {"workers", a.workers}, {"review_log", review.string()}};
  manifest.add_input(a.corpus);
  manifest.write(sidecar_manifest(output));

  auto keywords = make_keyword_provider(a.keyword_provider);
  auto srl = make_srl_provider(a.srl_provider);
  const auto corpus = load_corpus(a.corpus, language);
  PreprocessOptions options;
  options.lenient = a.lenient;
  options.workers = a.workers;
  const auto result = preprocess(corpus, *keywords, *srl, options);

  auto out = open_output(output);
  write_examples(out, result.examples);
  std::vector<json> flags;
  for (const auto& f : result.flags) {
    flags.push_back(json{{"dialogue_id", f.dialogue_id}, {"kind", f.kind}, {"index", f.index}, {"value", f.value}});
  }
  for (const auto& s : result.skipped) flags.push_back(json{{"kind", "skipped"}, {"reason", s}});
  write_jsonl(review, flags);
  for (const auto& s : result.skipped) ctx.err << "preprocess: skipped " << s << '\n';
  ctx.err << "preprocess: wrote " << result.examples.size() << " example(s), " << result.flags.size()
          << " review flag(s)\n";
  manifest.finished_at = utc_now();
  manifest.write(sidecar_manifest(output));
}

TrainingConfig load_training_config(const std::string& path, std::optional<std::uint64_t> seed,
                                    const std::string& backbone) {
  TrainingConfig config = path.empty() ? TrainingConfig{} : TrainingConfig::from_json(read_json_file(path));
  if (seed) config.seed = *seed;
  if (!backbone.empty()) config.model.backbone = backbone;
  return config;
}

struct TrainArgs {
  std::string corpus, lang, config, output, backbone;
  std::optional<std::uint64_t> seed;
};

void run_train(const TrainArgs& a, const Context& ctx) {
  const Language language = parse_language(a.lang);
  const TrainingConfig config = load_training_config(a.config, a.seed, a.backbone);
  const fs::path dir(a.output);
  fs::create_directories(dir);
  auto manifest = ctx.manifest("train");
  manifest.config = config.to_json();
  manifest.seed = config.seed;
  manifest.add_input(a.corpus);
  if (!a.config.empty()) manifest.add_input(a.config);
  manifest.write(dir / "manifest.json");

  const auto examples = load_examples(a.corpus, language, config.seed, ctx.err);
  const auto train_set = select_split(examples, "train");
  const auto dev_set = select_split(examples, "dev");
  if (train_set.empty()) throw ValidationError("the corpus has no training examples");
  ctx.err << "train: " << train_set.size() << " train / " << dev_set.size() << " dev examples\n";

  auto model = initial_model(train_set, config);
  std::vector<json> log_rows;
  const auto result = train(model, train_set, dev_set, config, [&](const EpochLog& log) {
    log_rows.push_back(log.to_json());
    ctx.err << "epoch " << log.epoch << ": loss " << log.total_loss;
    if (log.dev_macro_f1) ctx.err << ", dev macro-F1 " << *log.dev_macro_f1;
    ctx.err << '\n';
  });
  write_jsonl(dir / "train_log.jsonl", log_rows);

  json metadata{{"seed", config.seed}, {"training", config.to_json()}, {"steps", result.steps}};
  metadata["kind"] = "final";
  metadata["epoch"] = result.log.empty() ? 0 : result.log.back().epoch;
  save_checkpoint(dir / "final.ckpt", model, metadata);
  model.restore(result.best_parameters);
  metadata["kind"] = "best";
  metadata["epoch"] = result.best_epoch;
  save_checkpoint(dir / "best.ckpt", model, metadata);
  ctx.err << "train: best epoch " << result.best_epoch << ", checkpoints in " << dir.string() << '\n';
  manifest.finished_at = utc_now();
  manifest.write(dir / "manifest.json");
}

struct PredictArgs {
  std::string checkpoint, input = "-", fusion;
};

void run_predict(const PredictArgs& a, const Context& ctx) {
  const fs::path ckpt = checkpoint_file(a.checkpoint);
  if (!fs::exists(ckpt)) throw Error("checkpoint not found: " + ckpt.string());
  json request;
  try {
    if (a.input == "-") {
      request = json::parse(std::cin);
    } else {
      request = read_json_file(a.input);
    }
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request: ") + e.what());
  }
  if (!request.is_object()) throw ValidationError("request must be a JSON object");
  if (!request.contains("response") || !request["response"].is_string()) {
    throw ValidationError("request needs a string \"response\" field");
  }
  if (!request.contains("context") || !request["context"].is_array() || request["context"].empty()) {
    throw ValidationError("request needs a non-empty \"context\" list of utterances");
  }
  std::vector<std::string> utterances;
  for (const auto& c : request["context"]) {
    if (!c.is_string()) throw ValidationError("context entries must be strings");
    utterances.push_back(c.get<std::string>());
  }
  utterances.push_back(request["response"].get<std::string>());

  auto loaded = load_checkpoint(ckpt);
  const auto& model = loaded.model;
  auto options = PredictOptions::for_ablation(checkpoint_ablation(loaded.metadata));
  if (!a.fusion.empty()) options.fusion = parse_fusion(a.fusion);
  const auto input = model.vocabulary().encode_input(serialize_context(utterances, model.vocabulary().separator()));
  const auto& templates = TemplateSet::builtin(model.vocabulary().language());
  const auto p = predict(model, templates, "request", input, options);
  json gen_labels = json::object();
  for (const auto& [g, l] : p.gen_labels) gen_labels[std::string(granularity_key(g))] = l ? json(*l) : json(nullptr);
  ctx.out << json{{"final_label", p.final_label},
                  {"class_probs", p.class_probs ? json(*p.class_probs) : json(nullptr)},
                  {"gen_labels", gen_labels},
                  {"source", std::string(source_name(p.source))}}
                 .dump()
          << '\n';
}

struct EvaluateArgs {
  std::string checkpoint, corpus, lang, split = "test", fusion, output;
  std::optional<std::uint64_t> seed;
};

void run_evaluate(const EvaluateArgs& a, const Context& ctx) {
  const Language language = parse_language(a.lang);
  const fs::path ckpt = checkpoint_file(a.checkpoint);
  if (!fs::exists(ckpt)) throw Error("checkpoint not found: " + ckpt.string());
  std::optional<RunManifest> manifest;
  auto loaded = load_checkpoint(ckpt);
  const auto& model = loaded.model;
  if (model.vocabulary().language() != language) {
    throw ValidationError("checkpoint language does not match --lang");
  }
  const std::uint64_t seed = a.seed ? *a.seed : checkpoint_seed(loaded.metadata);
  auto options = PredictOptions::for_ablation(checkpoint_ablation(loaded.metadata));
  if (!a.fusion.empty()) options.fusion = parse_fusion(a.fusion);
  if (!a.output.empty()) {
    fs::create_directories(a.output);
    manifest = ctx.manifest("evaluate");
    manifest->config = json{{"split", a.split}, {"fusion", std::string(fusion_name(options.fusion))}, {"lang", a.lang}};
    manifest->seed = seed;
    manifest->add_input(ckpt);
    manifest->add_input(a.corpus);
    manifest->write(fs::path(a.output) / "manifest.json");
  }

  const auto examples = load_examples(a.corpus, language, seed, ctx.err);
  const auto subset = a.split == "all" ? examples : select_split(examples, a.split);
  if (subset.empty()) throw ValidationError("split '" + a.split + "' has no examples");
  const auto result = evaluate(model, TemplateSet::builtin(language), subset, options);
  json report = result.report.to_json();
  report["split"] = a.split;
  report["fusion"] = std::string(fusion_name(options.fusion));
  const std::string table = format_metrics_table({{"model", result.report}});
  ctx.out << report.dump(2) << '\n';
  ctx.err << table;
  if (manifest) {
    const fs::path dir(a.output);
    open_output(dir / "report.json") << report.dump(2) << '\n';
    open_output(dir / "report.txt") << table;
    std::vector<json> rows;
    for (const auto& p : result.predictions) rows.push_back(p.to_json());
    write_jsonl(dir / "predictions.jsonl", rows);
    manifest->finished_at = utc_now();
    manifest->write(dir / "manifest.json");
  }
}

struct AblateArgs {
  std::string corpus, lang, config, output, backbone;
  std::optional<std::uint64_t> seed;
};

void run_ablate(const AblateArgs& a, const Context& ctx) {
  const Language language = parse_language(a.lang);
  const TrainingConfig config = load_training_config(a.config, a.seed, a.backbone);
  const fs::path dir(a.output);
  fs::create_directories(dir);
  auto manifest = ctx.manifest("ablate");
  manifest.config = config.to_json();
  manifest.seed = config.seed;
  manifest.add_input(a.corpus);
  if (!a.config.empty()) manifest.add_input(a.config);
  manifest.write(dir / "manifest.json");

  const auto examples = load_examples(a.corpus, language, config.seed, ctx.err);
  const auto train_set = select_split(examples, "train");
  const auto dev_set = select_split(examples, "dev");
  const auto test_set = select_split(examples, "test");
  if (train_set.empty() || test_set.empty()) {
    throw ValidationError("ablate needs non-empty train and test splits");
  }
  const auto table = run_ablation(train_set, dev_set, test_set, config, [&](const AblationRow& row) {
    ctx.err << "ablate: " << row.name << " macro-F1 " << row.report.macro_f1 << '\n';
  });
  open_output(dir / "ablation.json") << table.to_json().dump(2) << '\n';
  open_output(dir / "ablation.txt") << table.to_text();
  ctx.out << table.to_text();
  manifest.finished_at = utc_now();
  manifest.write(dir / "manifest.json");
}

struct SynthArgs {
  std::string output;
  std::size_t dialogues = 200;
  std::uint64_t seed = 7;
};

void run_synth(const SynthArgs& a, const Context& ctx) {
  const fs::path output(a.output);
  auto manifest = ctx.manifest("synth");
  manifest.config = json{{"dialogues", a.dialogues}};
  manifest.seed = a.seed;
  manifest.write(sidecar_manifest(output));
  SyntheticOptions options;
  options.dialogues = a.dialogues;
  options.seed = a.seed;
  const auto corpus = synthetic_corpus(options);
  auto out = open_output(output);
  write_corpus(out, corpus);
  manifest.finished_at = utc_now();
  manifest.write(sidecar_manifest(output));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-granularity prompt-based topic shift detection", "topicshift"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TOPICSHIFT_VERSION));
  const std::vector<std::string> languages{"en", "zh"};

  ConvertArgs convert;
  auto* c = app.add_subcommand("convert", "Convert a released corpus to canonical JSONL");
  c->add_option("--input", convert.input, "Released corpus file")->required()->check(CLI::ExistingFile);
  c->add_option("--format", convert.format, "Input layout")->required()->check(CLI::IsMember({"tiage", "cntd", "tsv"}));
  c->add_option("--lang", convert.lang, "Corpus language")->required()->check(CLI::IsMember(languages));
  c->add_option("--out", convert.output, "Canonical JSONL output")->required();

  PreprocessArgs prep;
  auto* p = app.add_subcommand("preprocess", "Enrich dialogues and render example targets");
  p->add_option("--corpus", prep.corpus, "Canonical corpus JSONL")->required()->check(CLI::ExistingFile);
  p->add_option("--lang", prep.lang, "Corpus language")->required()->check(CLI::IsMember(languages));
  p->add_option("--out", prep.output, "Example JSONL output")->required();
  p->add_option("--keyword-provider", prep.keyword_provider, "frequency | precomputed:<path>");
  p->add_option("--srl-provider", prep.srl_provider, "heuristic | precomputed:<path>");
  p->add_option("--review-log", prep.review_log, "Review flag JSONL (default <out>.review.jsonl)");
  p->add_option("--workers", prep.workers, "Worker threads")->check(CLI::PositiveNumber);
  p->add_flag("--lenient", prep.lenient, "Skip dialogues whose enrichment fails");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--corpus", tr.corpus, "Canonical corpus or example JSONL")->required()->check(CLI::ExistingFile);
  t->add_option("--lang", tr.lang, "Corpus language")->required()->check(CLI::IsMember(languages));
  t->add_option("--config", tr.config, "Training config JSON")->check(CLI::ExistingFile);
  t->add_option("--out", tr.output, "Output directory")->required();
  t->add_option("--seed", tr.seed, "Seed for splits, initialisation, order and dropout");
  t->add_option("--backbone", tr.backbone, "Registered backbone name (overrides the config)");

  PredictArgs pr;
  auto* d = app.add_subcommand("predict", "Classify one response given its context");
  d->add_option("--checkpoint", pr.checkpoint, "Checkpoint file or training directory")->required();
  d->add_option("--input", pr.input, "Request JSON file, - for standard input");
  d->add_option("--fusion", pr.fusion, "classifier | generator | average");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on a corpus split");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file or training directory")->required();
  e->add_option("--corpus", ev.corpus, "Canonical corpus or example JSONL")->required()->check(CLI::ExistingFile);
  e->add_option("--lang", ev.lang, "Corpus language")->required()->check(CLI::IsMember(languages));
  e->add_option("--split", ev.split, "train | dev | test | all")->check(CLI::IsMember({"train", "dev", "test", "all"}));
  e->add_option("--fusion", ev.fusion, "classifier | generator | average");
  e->add_option("--out", ev.output, "Directory for report and predictions");
  e->add_option("--seed", ev.seed, "Split seed (default: the checkpoint's)");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Train and score the ablation grid");
  a->add_option("--corpus", ab.corpus, "Canonical corpus or example JSONL")->required()->check(CLI::ExistingFile);
  a->add_option("--lang", ab.lang, "Corpus language")->required()->check(CLI::IsMember(languages));
  a->add_option("--config", ab.config, "Base training config JSON")->check(CLI::ExistingFile);
  a->add_option("--out", ab.output, "Output directory")->required();
  a->add_option("--seed", ab.seed, "Seed for every run");
  a->add_option("--backbone", ab.backbone, "Registered backbone name (overrides the config)");

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "Write a synthetic English corpus");
  s->add_option("--out", sy.output, "Canonical JSONL output")->required();
  s->add_option("--dialogues", sy.dialogues, "Number of dialogues")->check(CLI::PositiveNumber);
  s->add_option("--seed", sy.seed, "Generator seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Context ctx{args, out, err};
  try {
    if (*c) run_convert(convert, ctx);
    else if (*p) run_preprocess(prep, ctx);
    else if (*t) run_train(tr, ctx);
    else if (*d) run_predict(pr, ctx);
    else if (*e) run_evaluate(ev, ctx);
    else if (*a) run_ablate(ab, ctx);
    else if (*s) run_synth(sy, ctx);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace topicshift
