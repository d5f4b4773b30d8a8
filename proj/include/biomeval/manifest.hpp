#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace biomeval {

inline constexpr std::string_view kToolVersion = "0.3.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI invocation, written next to its outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;  // normalized flag=value list
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::uint64_t> seeds;
  std::string started_at;  // UTC, ISO-8601
  double wall_clock_seconds = 0.0;

  /// SHA-256 over the command and normalized arguments.
  std::string config_hash() const;

  /// JSON with inputs/outputs annotated by their SHA-256 (directories are
  /// hashed over the sorted relative paths and contents of their files).
  std::string to_json() const;
};

std::string utc_timestamp();

}  // namespace biomeval
