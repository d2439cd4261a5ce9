#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace atp {

inline constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Provenance record written next to every command output. Two runs with
// identical manifests (timestamps aside) must produce byte-identical
// outputs.
struct RunManifest {
  std::string command;                          // argv joined
  std::string config_digest;                    // sha256 of the config blob
  std::map<std::string, std::string> inputs;    // path -> sha256
  std::map<std::string, std::string> outputs;   // path -> sha256
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

}  // namespace atp
