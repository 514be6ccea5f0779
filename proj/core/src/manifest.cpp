#include "clcts/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "clcts/error.hpp"

#ifndef CLCTS_VERSION
#define CLCTS_VERSION "0.0.0"
#endif

namespace clcts {

std::string library_version() { return CLCTS_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j = {{"subcommand", subcommand}, {"inputs", inputs},     {"version", version},
                      {"policy", policy},         {"seeds", seeds},       {"settings", settings},
                      {"timestamp", timestamp}};
  if (!outputs.empty()) j["outputs"] = outputs;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.subcommand = j.at("subcommand").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.version = j.at("version").get<std::string>();
    m.policy = j.value("policy", "");
    m.seeds = j.value("seeds", std::map<std::string, std::uint64_t>{});
    m.settings = j.value("settings", std::map<std::string, std::string>{});
    m.timestamp = j.value("timestamp", "");
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string manifest_timestamp() {
  std::time_t t{};
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (*end != '\0' || v < 0) throw ValidationError("SOURCE_DATE_EPOCH must be a non-negative integer");
    t = static_cast<std::time_t>(v);
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

VerifyResult verify_manifest(const RunManifest& manifest, const std::string& output_dir) {
  VerifyResult r;
  auto check = [&](const std::string& path, const std::string& label, const std::string& digest) {
    try {
      const auto actual = sha256_file(path);
      if (actual != digest) r.mismatched[label] = "digest changed: expected " + digest + ", found " + actual;
    } catch (const ValidationError& e) {
      r.mismatched[label] = e.what();
    }
  };
  for (const auto& [path, digest] : manifest.inputs) check(path, path, digest);
  for (const auto& [name, digest] : manifest.outputs)
    check((std::filesystem::path(output_dir) / name).string(), name, digest);
  r.ok = r.mismatched.empty();
  return r;
}

}  // namespace clcts
