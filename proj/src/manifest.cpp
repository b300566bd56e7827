#include "qurious/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "qurious/error.hpp"

namespace qurious {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), file_digest(path));
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.emplace_back(path.string(), file_digest(path));
}

nlohmann::json RunManifest::to_json() const {
  using nlohmann::json;
  json j;
  j["command"] = command_;
  j["config"] = config_;
  j["seed"] = seed_;
  j["inputs"] = json::array();
  for (const auto& [p, d] : inputs_) j["inputs"].push_back({{"path", p}, {"digest", d}});
  j["outputs"] = json::array();
  for (const auto& [p, d] : outputs_) j["outputs"].push_back({{"path", p}, {"digest", d}});
  j["results"] = results_;
  j["timings_ms"] = json::object();
  for (const auto& [stage, ms] : timings_) j["timings_ms"][stage] = ms;
  return j;
}

}  // namespace qurious
