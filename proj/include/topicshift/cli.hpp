#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace topicshift {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Run record written next to every output: command line, resolved config,
/// input hashes, seed, tool version, start and finish times.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();  // path -> sha256
  std::optional<std::uint64_t> seed;
  std::string version;
  std::string started_at;
  std::string finished_at;

  void add_input(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// Entry point of the command-line tool. Returns 0 on success, 1 on an
/// internal error and 2 on a usage or input error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace topicshift
