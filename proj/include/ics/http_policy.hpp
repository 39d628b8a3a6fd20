#pragma once

/**
 * HTTP policy endpoint speaking the chat-completions JSON dialect.
 *
 * One POST per completion. Transient failures (connect errors, timeouts,
 * 5xx) are retried with exponential backoff up to retry_budget; 4xx means
 * the request itself is wrong and fails immediately. The API key is read
 * from an environment variable named in the config and is never written
 * into logs or run records.
 *
 * Stop sequences are both sent to the server and enforced client-side, so
 * providers that echo the stop marker or ignore the parameter still yield
 * text free of stop sequences.
 *
 * Kept in its own header so translation units that only need the scripted
 * policy do not pay for the HTTP stack.
 */

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ics/errors.hpp"
#include "ics/policy_client.hpp"

namespace ics {

struct HttpPolicyConfig {
  std::string base_url;    // e.g. "http://localhost:8000"
  std::string model;       // required, server-side model name
  std::string chat_path = "/v1/chat/completions";
  std::optional<std::string> system_prompt;
  std::string api_key_env = "ICS_API_KEY";  // name of the env var, not the key
  int timeout_s = 120;
  int retry_budget = 3;
  int backoff_base_ms = 1000;  // doubles per retry
  bool sleep_between_retries = true;  // tests turn this off
};

class HttpPolicy final : public PolicyEndpoint {
 public:
  explicit HttpPolicy(HttpPolicyConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw std::invalid_argument("http policy needs a base_url");
    if (config_.model.empty()) throw std::invalid_argument("http policy needs a model name");
  }

  CompletionResult complete(const CompletionRequest& request) override {
    const std::string body = build_body(request).dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retry_budget; ++attempt) {
      if (attempt > 0 && config_.sleep_between_retries) {
        auto delay = std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 1));
        std::this_thread::sleep_for(delay);
      }
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(config_.timeout_s);
      client.set_read_timeout(config_.timeout_s);
      httplib::Headers headers;
      if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

      auto res = client.Post(config_.chat_path, headers, body, "application/json");
      if (!res) {
        last_error = "transport: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server status " + std::to_string(res->status);
        continue;
      }
      if (res->status >= 400)
        throw EndpointUnavailable("endpoint rejected request (status " + std::to_string(res->status) +
                                  "): " + res->body);
      CompletionResult out = parse_response(res->body, request);
      out.retries_used = attempt;
      return out;
    }
    throw EndpointUnavailable("retries exhausted (" + std::to_string(config_.retry_budget) +
                              "): " + last_error);
  }

  const HttpPolicyConfig& config() const { return config_; }

 private:
  nlohmann::json build_body(const CompletionRequest& request) const {
    nlohmann::json messages = nlohmann::json::array();
    if (config_.system_prompt)
      messages.push_back({{"role", "system"}, {"content", *config_.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    nlohmann::json body = {{"model", config_.model},
                           {"messages", std::move(messages)},
                           {"temperature", request.params.temperature},
                           {"top_p", request.params.top_p},
                           {"top_k", request.params.top_k},
                           {"max_tokens", request.params.max_tokens}};
    if (!request.params.stop_sequences.empty()) body["stop"] = request.params.stop_sequences;
    return body;
  }

  static CompletionResult parse_response(const std::string& body, const CompletionRequest& request) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw EndpointUnavailable("endpoint returned non-JSON body");
    CompletionResult out;
    try {
      const nlohmann::json& choice = j.at("choices").at(0);
      out.text = choice.at("message").at("content").get<std::string>();
      std::string finish = choice.value("finish_reason", "stop");
      out.stop_reason = finish == "length" ? StopReason::Length : StopReason::EndOfText;
      if (j.contains("usage")) {
        out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0u);
        out.usage.completion_tokens = j["usage"].value("completion_tokens", 0u);
      }
    } catch (const nlohmann::json::exception& e) {
      throw EndpointUnavailable(std::string("malformed chat completion response: ") + e.what());
    }

    // Client-side stop enforcement: truncate at the earliest configured stop.
    std::size_t stop_at = std::string::npos;
    for (const std::string& stop : request.params.stop_sequences) {
      if (stop.empty()) continue;
      std::size_t pos = out.text.find(stop);
      if (pos != std::string::npos && pos < stop_at) stop_at = pos;
    }
    if (stop_at != std::string::npos) {
      out.text.erase(stop_at);
      out.stop_reason = StopReason::StopSequence;
    }
    if (out.usage.completion_tokens == 0) out.usage.completion_tokens = approx_token_count(out.text);
    if (out.usage.prompt_tokens == 0) out.usage.prompt_tokens = approx_token_count(request.prompt);
    return out;
  }

  HttpPolicyConfig config_;
};

}  // namespace ics
