#include <doctest.h>

#include <fstream>
#include <iterator>

#include "fixtures.hpp"
#include "topicshift/checkpoint.hpp"
#include "topicshift/error.hpp"

using namespace topicshift;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TopicShiftModel small_model(std::uint64_t seed) {
  const std::vector<Dialogue> corpus{fixtures::table_dialogue()};
  return TopicShiftModel(fixtures::tiny_model(), build_vocabulary(corpus, Language::English), seed);
}

}  // namespace

TEST_CASE("checkpoint round trip preserves parameters and outputs") {
  fixtures::TempDir dir;
  const auto model = small_model(4);
  const nlohmann::json meta{{"seed", 4}, {"note", "x"}};
  save_checkpoint(dir / "a.ckpt", model, meta);
  const auto loaded = load_checkpoint(dir / "a.ckpt");
  CHECK(loaded.metadata == meta);
  CHECK(loaded.model.snapshot() == model.snapshot());
  CHECK(loaded.model.vocabulary() == model.vocabulary());
  CHECK(loaded.model.config().to_json() == model.config().to_json());

  const auto ids = model.vocabulary().encode_input("<s> hey ! do you love cats ? <s> my weakness <s>").ids;
  CHECK(loaded.model.encode(ids).value() == model.encode(ids).value());

  save_checkpoint(dir / "b.ckpt", loaded.model, loaded.metadata);
  CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
}

TEST_CASE("checkpoint errors") {
  fixtures::TempDir dir;
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
  {
    std::ofstream out(dir / "junk.ckpt", std::ios::binary);
    out << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), ValidationError);

  save_checkpoint(dir / "ok.ckpt", small_model(1));
  auto bytes = slurp(dir / "ok.ckpt");
  bytes.resize(bytes.size() - 16);
  {
    std::ofstream out(dir / "short.ckpt", std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), ValidationError);
}
