#pragma once

#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "accident/alerts/prompt.hpp"

namespace accident::alerts {

class AlertClient {
 public:
  virtual ~AlertClient() = default;
  /// Returns the model's alert text. Raises DeliveryError or RemoteError.
  virtual std::string request(const PromptBundle& bundle) = 0;
};

/// Deterministic, offline. Never touches the network.
class MockClient final : public AlertClient {
 public:
  std::string request(const PromptBundle& bundle) override { return mock_alert(bundle); }
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct HttpClientConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model = "alert-model";
  int max_tokens = 128;
  double timeout_seconds = 10.0;
  int retries = 2;
  double backoff_seconds = 0.5;  // doubled after every failed attempt
  std::string token_env = "ALERT_API_TOKEN";
};

/// JSON body {model, messages: [system, user], max_tokens}.
nlohmann::json wire_request(const PromptBundle& bundle, const std::string& model, int max_tokens);
/// choices[0].message.content, or RemoteError with a body excerpt.
std::string parse_wire_response(const std::string& body);

/// Chat-completions style client. A transport returns std::nullopt on a
/// connection failure or timeout; such failures and 5xx responses are
/// retried with exponential backoff, anything else fails immediately.
class HttpClient final : public AlertClient {
 public:
  using Transport = std::function<std::optional<HttpResponse>(const std::string& body, const std::string& token)>;
  using Sleeper = std::function<void(double seconds)>;

  /// Empty transport/sleeper select the real HTTP transport and sleep.
  explicit HttpClient(HttpClientConfig config, Transport transport = {}, Sleeper sleeper = {});

  std::string request(const PromptBundle& bundle) override;
  /// Retries spent by the most recent request.
  int last_retries() const { return last_retries_; }

 private:
  HttpClientConfig config_;
  Transport transport_;
  Sleeper sleeper_;
  int last_retries_ = 0;
};

/// Sends `bundle` through `client`.
std::string request_alert(const PromptBundle& bundle, AlertClient& client);

}  // namespace accident::alerts
