#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "topicshift/cli.hpp"
#include "topicshift/pipeline.hpp"

using namespace topicshift;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kTinyConfig = R"({"epochs": 2, "peak_learning_rate": 0.003,
  "model": {"d_model": 16, "encoder_layers": 1, "decoder_layers": 1, "heads": 2, "feedforward_dim": 32,
            "classifier_hidden": 8, "classifier_recurrent_layers": 1, "dropout": 0.0}})";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--lang", "en"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("convert released JSON and TSV layouts") {
  fixtures::TempDir dir;
  write(dir / "tiage.json", R"({"dial_data": {"train": [
      {"dial_id": "d1", "turns": [{"utterance": "hi there", "segmentation_label": 1},
                                   {"utterance": "hello", "segmentation_label": 0},
                                   {"utterance": "cats?", "segmentation_label": 1}]},
      {"dial_id": "d2", "turns": [{"utterance": "alone", "segmentation_label": 0}]}],
    "valid": [{"dial_id": "d3", "turns": [{"utterance": "a", "segmentation_label": 0},
                                          {"utterance": "b", "segmentation_label": 0}]}]}})");
  auto r = cli({"convert", "--input", (dir / "tiage.json").string(), "--format", "tiage", "--lang", "en", "--out",
                (dir / "out.jsonl").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("dropping dialogue 'd2'") != std::string::npos);
  const auto corpus = load_corpus(dir / "out.jsonl", Language::English);
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].utterances[0].shift == 0);
  CHECK(corpus[0].utterances[2].shift == 1);
  CHECK(corpus[1].split == "dev");
  const auto manifest = json::parse(slurp(dir / "out.jsonl.manifest.json"));
  CHECK(manifest["command"] == "convert");
  CHECK(manifest["inputs"].begin().value().get<std::string>().size() == 64);

  write(dir / "c.tsv", "dialogue_id\tspeaker\ttext\tshift\nx\tA\t你好\t0\nx\tB\t猫很可爱\t1\n");
  r = cli({"convert", "--input", (dir / "c.tsv").string(), "--format", "tsv", "--lang", "zh", "--out",
           (dir / "zh.jsonl").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(load_corpus(dir / "zh.jsonl", Language::Chinese).at(0).utterances.size() == 2);

  write(dir / "bad.tsv", "x\tA\tonly three\n");
  CHECK(cli({"convert", "--input", (dir / "bad.tsv").string(), "--format", "tsv", "--lang", "en", "--out",
             (dir / "bad.jsonl").string()})
            .code == kExitUsage);
}

TEST_CASE("preprocess is strict, counts records, and is idempotent") {
  fixtures::TempDir dir;
  const auto d = fixtures::table_dialogue();
  write(dir / "corpus.jsonl", dialogue_to_json(d) + "\n");
  const auto args = [&](const std::string& out) {
    return std::vector<std::string>{"preprocess", "--corpus", (dir / "corpus.jsonl").string(), "--lang", "en",
                                    "--out", (dir / out).string()};
  };
  REQUIRE(cli(args("a.jsonl")).code == kExitOk);
  REQUIRE(cli(args("b.jsonl")).code == kExitOk);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  const auto examples = read_examples(dir / "a.jsonl");
  CHECK(examples.size() == 5);
  CHECK(examples[0].targets.at(Granularity::Label) ==
        "Relative to the above, the topic of the current discourse has not shifted.");
  CHECK(std::filesystem::exists(dir / "a.jsonl.review.jsonl"));
  CHECK(std::filesystem::exists(dir / "a.jsonl.manifest.json"));

  write(dir / "corrupt.jsonl", dialogue_to_json(d) + "\n{oops\n");
  const auto r = cli({"preprocess", "--corpus", (dir / "corrupt.jsonl").string(), "--lang", "en", "--out",
                      (dir / "c.jsonl").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("train, predict and evaluate") {
  fixtures::TempDir dir;
  REQUIRE(cli({"synth", "--out", (dir / "corpus.jsonl").string(), "--dialogues", "12", "--seed", "2"}).code == kExitOk);
  write(dir / "config.json", kTinyConfig);
  const std::vector<std::string> train{"train", "--corpus", (dir / "corpus.jsonl").string(), "--lang", "en",
                                       "--config", (dir / "config.json").string(), "--seed", "4"};
  auto with_out = [&](std::vector<std::string> a, const std::string& out) {
    a.push_back("--out");
    a.push_back((dir / out).string());
    return a;
  };
  REQUIRE(cli(with_out(train, "run1")).code == kExitOk);
  REQUIRE(cli(with_out(train, "run2")).code == kExitOk);
  for (const char* f : {"best.ckpt", "final.ckpt", "train_log.jsonl"}) {
    CHECK(slurp(dir / "run1" / f) == slurp(dir / "run2" / f));
  }
  const auto manifest = json::parse(slurp(dir / "run1" / "manifest.json"));
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["config"]["epochs"] == 2);
  CHECK_FALSE(manifest["finished_at"].is_null());
  CHECK(manifest["config"]["model"]["backbone"] == "reference");

  auto unknown = with_out(train, "run3");
  unknown.insert(unknown.end(), {"--backbone", "no-such-backbone"});
  const auto bad = cli(unknown);
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("no-such-backbone") != std::string::npos);

  std::istringstream log(slurp(dir / "run1" / "train_log.jsonl"));
  std::string line;
  int epochs = 0;
  while (std::getline(log, line)) {
    const auto j = json::parse(line);
    for (const char* key : {"epoch", "L_Class", "L_Label", "L_Topic", "L_Turn", "dev_macro_f1"}) CHECK(j.contains(key));
    ++epochs;
  }
  CHECK(epochs == 2);

  write(dir / "request.json", R"({"context": ["i really like the cats and the dogs"], "response": "my kitten loves the puppy"})");
  auto r = cli({"predict", "--checkpoint", (dir / "run1").string(), "--input", (dir / "request.json").string()});
  REQUIRE(r.code == kExitOk);
  const auto pred = json::parse(r.out);
  CHECK((pred["final_label"] == 0 || pred["final_label"] == 1));
  CHECK(pred["class_probs"].size() == 2);
  CHECK(pred["gen_labels"].contains("topic"));

  write(dir / "no_response.json", R"({"context": ["hello"]})");
  CHECK(cli({"predict", "--checkpoint", (dir / "run1").string(), "--input", (dir / "no_response.json").string()})
            .code == kExitUsage);
  CHECK(cli({"predict", "--checkpoint", (dir / "nowhere").string(), "--input", (dir / "request.json").string()})
            .code == kExitUsage);

  r = cli({"evaluate", "--checkpoint", (dir / "run1" / "best.ckpt").string(), "--corpus",
           (dir / "corpus.jsonl").string(), "--lang", "en", "--split", "all", "--fusion", "classifier", "--out",
           (dir / "eval").string()});
  REQUIRE(r.code == kExitOk);
  const auto report = json::parse(r.out);
  CHECK(report["macro_f1"].get<double>() >= 0.0);
  CHECK(report["fusion"] == "classifier");
  CHECK(std::filesystem::exists(dir / "eval" / "predictions.jsonl"));
  CHECK(std::filesystem::exists(dir / "eval" / "manifest.json"));
  CHECK(cli({"evaluate", "--checkpoint", (dir / "run1").string(), "--corpus", (dir / "corpus.jsonl").string(),
             "--lang", "zh"})
            .code == kExitUsage);
}

TEST_CASE("sha256 of a known string") {
  fixtures::TempDir dir;
  write(dir / "abc.txt", "abc");
  CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
