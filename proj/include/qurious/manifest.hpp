#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace qurious {

/// 64-bit FNV-1a over a file's bytes, as 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

/// Record of one command run: configuration, input and output digests,
/// seed and per-stage wall times. Everything except `timings_ms` is a pure
/// function of the inputs and the seed.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  nlohmann::json& config() noexcept { return config_; }
  nlohmann::json& results() noexcept { return results_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  const std::vector<std::pair<std::string, std::string>>& outputs() const noexcept { return outputs_; }

  /// Runs `fn`, recording its wall time under `stage`.
  template <typename Fn>
  decltype(auto) time(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      RunManifest* self;
      const std::string& stage;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
        self->timings_.emplace_back(stage, ms.count());
      }
    } record{this, stage, start};
    return fn();
  }

  nlohmann::json to_json() const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json results_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, std::string>> inputs_;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs_;  // path, digest
  std::vector<std::pair<std::string, double>> timings_;
};

}  // namespace qurious
