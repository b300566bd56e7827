// Client side of the /embed protocol:
//   POST /embed  {"texts": [...]} -> 200 {"dim": d, "embeddings": [[...], ...]}
//   GET  /health -> {"status": "ok", "dim": d, ...}
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qurious/embedding.hpp"
#include "qurious/error.hpp"

namespace qurious::embedding {

using nlohmann::json;

namespace {

httplib::Client make_client(const EmbedderConfig& config) {
  httplib::Client cli(*config.endpoint);
  if (!cli.is_valid()) throw DomainError("invalid endpoint: " + *config.endpoint);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  return cli;
}

// Runs `call` up to max_attempts times while it fails below the HTTP layer
// (timeout, refused connection). An HTTP response of any status ends the loop.
template <typename Call>
httplib::Result with_retries(const EmbedderConfig& config, const char* what, Call&& call) {
  auto delay = config.backoff;
  const int attempts = std::max(1, config.max_attempts);
  for (int attempt = 1;; ++attempt) {
    httplib::Result res = call();
    if (res) return res;
    if (attempt >= attempts) {
      throw TransportError(std::string(what) + " failed after " + std::to_string(attempts) +
                               " attempts: " + httplib::to_string(res.error()),
                           0, "", true);
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

json parse_body(const httplib::Result& res, const char* what) {
  if (res->status != 200) {
    throw TransportError(std::string(what) + " returned HTTP " + std::to_string(res->status) +
                             ": " + res->body,
                         res->status, res->body, false);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string(what) + " returned invalid JSON: " + e.what());
  }
}

}  // namespace

EmbeddingMatrix remote_embed(const EmbedderConfig& config, const std::vector<std::string>& ids,
                             const std::vector<std::string>& texts) {
  if (config.provider != Provider::http || !config.endpoint) {
    throw DomainError("remote_embed requires the http provider with an endpoint");
  }
  config.validate();
  if (ids.size() != texts.size()) throw DomainError("remote_embed: ids and texts differ in length");

  EmbeddingMatrix out(config.dim);
  if (texts.empty()) return out;
  httplib::Client cli = make_client(config);

  for (std::size_t begin = 0; begin < texts.size(); begin += config.batch_size) {
    const std::size_t end = std::min(texts.size(), begin + config.batch_size);
    const json request = {{"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                                             texts.begin() + static_cast<std::ptrdiff_t>(end))}};
    const std::string body = request.dump();
    auto res = with_retries(config, "POST /embed",
                            [&] { return cli.Post("/embed", body, "application/json"); });
    const json reply = parse_body(res, "POST /embed");

    std::size_t dim = 0;
    try {
      dim = reply.at("dim").get<std::size_t>();
    } catch (const json::exception& e) {
      throw ContractError(std::string("/embed reply lacks integer \"dim\": ") + e.what());
    }
    if (dim != config.dim) {
      throw ContractError("/embed returned dim " + std::to_string(dim) + ", configured " +
                          std::to_string(config.dim));
    }
    const auto rows = reply.find("embeddings");
    if (rows == reply.end() || !rows->is_array()) {
      throw ContractError("/embed reply lacks array \"embeddings\"");
    }
    if (rows->size() != end - begin) {
      throw ContractError("/embed returned " + std::to_string(rows->size()) + " rows for " +
                          std::to_string(end - begin) + " texts");
    }
    std::vector<float> values(dim);
    for (std::size_t r = 0; r < rows->size(); ++r) {
      const json& row = (*rows)[r];
      if (!row.is_array() || row.size() != dim) {
        throw ContractError("/embed row " + std::to_string(begin + r) + " has wrong length");
      }
      for (std::size_t c = 0; c < dim; ++c) {
        if (!row[c].is_number()) throw ContractError("/embed row contains a non-number");
        values[c] = row[c].get<float>();
      }
      out.append(ids[begin + r], values);
    }
  }
  out.l2_normalize();
  return out;
}

HealthInfo remote_health(const EmbedderConfig& config) {
  if (!config.endpoint) throw DomainError("remote_health requires an endpoint");
  httplib::Client cli = make_client(config);
  auto res = with_retries(config, "GET /health", [&] { return cli.Get("/health"); });
  const json reply = parse_body(res, "GET /health");
  HealthInfo info;
  try {
    info.status = reply.at("status").get<std::string>();
    info.dim = reply.at("dim").get<std::size_t>();
    if (const auto it = reply.find("pooling"); it != reply.end() && it->is_string()) {
      info.pooling = it->get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ContractError(std::string("/health reply malformed: ") + e.what());
  }
  return info;
}

}  // namespace qurious::embedding
