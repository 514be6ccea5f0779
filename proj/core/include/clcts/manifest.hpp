#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace clcts {

std::string library_version();

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);
/// Digest of a file's contents; throws ValidationError if unreadable.
std::string sha256_file(const std::string& path);

/// Provenance record embedded in every report.
struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> inputs;  // path -> sha256
  std::string version = library_version();
  std::string policy;                          // tokenization policy id, when relevant
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> settings;  // other flags that affect output
  std::map<std::string, std::string> outputs;   // artifact file name -> sha256
  std::string timestamp;                        // UTC, ISO 8601

  void add_input(const std::string& path) { inputs[path] = sha256_file(path); }
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ", or SOURCE_DATE_EPOCH when
/// that variable is set, so builds of reports can be reproduced bit for bit.
std::string manifest_timestamp();

struct VerifyResult {
  bool ok = true;
  std::map<std::string, std::string> mismatched;  // path -> problem
};

/// Re-hashes every input named in the manifest, and every output relative
/// to `output_dir`.
VerifyResult verify_manifest(const RunManifest& manifest, const std::string& output_dir = ".");

}  // namespace clcts
