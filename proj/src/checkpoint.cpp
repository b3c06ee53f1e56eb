#include "topicshift/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "topicshift/error.hpp"

namespace topicshift {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "TOPICSHIFT-CHECKPOINT\n";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian hosts");

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  std::memcpy(bytes, &v, 8);
  out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char bytes[8];
  if (!in.read(bytes, 8)) throw ValidationError("checkpoint is truncated");
  std::uint64_t v = 0;
  std::memcpy(&v, bytes, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TopicShiftModel& model,
                     const json& metadata) {
  json header;
  header["format"] = std::string(kCheckpointFormat);
  header["version"] = kCheckpointVersion;
  header["language"] = std::string(language_tag(model.vocabulary().language()));
  header["model_config"] = model.config().to_json();
  header["vocabulary"] = std::vector<std::string>(model.vocabulary().tokens().begin(),
                                                  model.vocabulary().tokens().end());
  json tensors = json::array();
  for (const auto& [name, v] : model.parameters().entries()) {
    tensors.push_back({{"name", name}, {"rows", v.rows()}, {"cols", v.cols()}});
  }
  header["tensors"] = std::move(tensors);
  header["metadata"] = metadata;
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, v] : model.parameters().entries()) {
    out.write(reinterpret_cast<const char*>(v.value().data()),
              static_cast<std::streamsize>(v.value().size() * sizeof(double)));
  }
  if (!out) throw Error("failed while writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::string magic(kMagic.size(), '\0');
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kMagic) {
    throw ValidationError(path.string() + " is not a topicshift checkpoint");
  }
  const std::uint64_t length = read_u64(in);
  if (length > (1ull << 32)) throw ValidationError("checkpoint header is implausibly large");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw ValidationError("checkpoint is truncated");
  }

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }
  try {
    if (header.at("format").get<std::string>() != kCheckpointFormat) {
      throw ValidationError("unknown checkpoint format tag");
    }
    if (header.at("version").get<int>() != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint version " + header.at("version").dump());
    }
    const Language language = parse_language(header.at("language").get<std::string>());
    const auto tokens = header.at("vocabulary").get<std::vector<std::string>>();
    ModelConfig config = ModelConfig::from_json(header.at("model_config"));
    TopicShiftModel model(config, Vocabulary::from_tokens(language, tokens), 0);

    const auto& tensors = header.at("tensors");
    const auto entries = model.parameters().entries();
    if (tensors.size() != entries.size()) {
      throw ValidationError("checkpoint holds " + std::to_string(tensors.size()) +
                            " tensors but the model expects " + std::to_string(entries.size()));
    }
    std::vector<ag::Matrix> values;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& t = tensors[i];
      const auto& [name, var] = entries[i];
      if (t.at("name").get<std::string>() != name || t.at("rows").get<Eigen::Index>() != var.rows() ||
          t.at("cols").get<Eigen::Index>() != var.cols()) {
        throw ValidationError("checkpoint tensor " + t.at("name").get<std::string>() +
                              " does not match the model/vocabulary (expected " + name + ")");
      }
      ag::Matrix m(var.rows(), var.cols());
      if (!in.read(reinterpret_cast<char*>(m.data()),
                   static_cast<std::streamsize>(m.size() * sizeof(double)))) {
        throw ValidationError("checkpoint is truncated");
      }
      values.push_back(std::move(m));
    }
    model.restore(values);
    json metadata = header.value("metadata", json::object());
    return LoadedCheckpoint{std::move(model), std::move(metadata)};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }
}

}  // namespace topicshift
