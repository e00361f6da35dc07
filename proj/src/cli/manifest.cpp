#include "duel/cli/manifest.hpp"

#include "duel/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>

#ifndef DUEL_VERSION
#define DUEL_VERSION "0.0.0"
#endif

namespace duel::cli {

std::string version_string() { return DUEL_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

Manifest::Manifest(std::filesystem::path dir, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw InvalidArgument(fmt::format("cannot create output directory '{}'", dir_.string()));
  }
}

void Manifest::write_file(const std::string& name, std::string_view bytes) {
  auto path = dir_ / name;
  {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  }
  std::string digest = sha256_hex(bytes);
  std::lock_guard lock(mutex_);
  artifacts_.push_back({name, std::move(digest), bytes.size()});
}

std::string Manifest::finish() {
  std::lock_guard lock(mutex_);
  // worker threads finish in any order
  std::sort(artifacts_.begin(), artifacts_.end(),
            [](const Artifact& a, const Artifact& b) { return a.name < b.name; });

  std::string joined;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& a : artifacts_) {
    joined += fmt::format("{}  {}\n", a.sha256, a.name);
    files.push_back({{"path", a.name}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  std::string content_hash = sha256_hex(joined);

  nlohmann::ordered_json doc;
  doc["tool"] = "duel";
  doc["version"] = version_string();
  doc["command"] = command_;
  doc["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nlohmann::ordered_json(nullptr);
  doc["config"] = config_;
  doc["files"] = std::move(files);
  doc["content_hash"] = content_hash;

  std::ofstream out(dir_ / "manifest.json", std::ios::binary);
  out << doc.dump(2) << '\n';
  if (!out) throw Error("cannot write manifest.json");
  return content_hash;
}

}  // namespace duel::cli
