#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duel::cli {

std::string sha256_hex(std::string_view bytes);

/// Collects the artifacts of one command and writes manifest.json next to
/// them: tool version, command line, seed, resolved config, and a SHA-256
/// per file plus one over the whole set. No timestamps, so identical runs
/// produce identical manifests.
class Manifest {
 public:
  Manifest(std::filesystem::path dir, std::string command);

  /// Writes `bytes` to dir/name and records its hash. Thread-safe.
  void write_file(const std::string& name, std::string_view bytes);

  void set_seed(std::optional<std::uint64_t> seed) { seed_ = seed; }
  void set_config(std::string yaml) { config_ = std::move(yaml); }

  /// Writes manifest.json and returns the content hash.
  std::string finish();

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  struct Artifact {
    std::string name;
    std::string sha256;
    std::size_t bytes;
  };

  std::filesystem::path dir_;
  std::string command_;
  std::optional<std::uint64_t> seed_;
  std::string config_;
  std::vector<Artifact> artifacts_;
  std::mutex mutex_;
};

std::string version_string();

}  // namespace duel::cli
