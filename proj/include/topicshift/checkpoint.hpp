#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "topicshift/model.hpp"

namespace topicshift {

inline constexpr std::string_view kCheckpointFormat = "topicshift-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Binary layout: a magic line, an 8-byte little-endian header length, a
/// JSON header (format tag, model config, vocabulary, tensor directory,
/// caller metadata), then every tensor as row-major little-endian doubles.
/// Identical models and metadata always produce identical bytes.
void save_checkpoint(const std::filesystem::path& path, const TopicShiftModel& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  TopicShiftModel model;
  nlohmann::json metadata;
};

/// Throws Error for a missing file and ValidationError for a malformed or
/// mismatched archive.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace topicshift
