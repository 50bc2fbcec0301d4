#include "accident/alerts/client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "accident/errors.hpp"

namespace accident::alerts {

namespace {

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("alert endpoint must be an absolute URL: " + url);
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

HttpClient::Transport http_transport(const HttpClientConfig& config) {
  const Url url = split_url(config.endpoint);
  const double timeout = config.timeout_seconds;
  return [url, timeout](const std::string& body, const std::string& token) -> std::optional<HttpResponse> {
    httplib::Client cli(url.origin);
    const auto sec = static_cast<time_t>(timeout);
    const auto usec = static_cast<time_t>((timeout - static_cast<double>(sec)) * 1e6);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = cli.Post(url.path, headers, body, "application/json");
    if (!res) return std::nullopt;
    return HttpResponse{res->status, res->body};
  };
}

}  // namespace

nlohmann::json wire_request(const PromptBundle& bundle, const std::string& model, int max_tokens) {
  return {{"model", model},
          {"messages",
           {{{"role", "system"}, {"content", bundle.system_text}}, {{"role", "user"}, {"content", bundle.user_text}}}},
          {"max_tokens", max_tokens}};
}

std::string parse_wire_response(const std::string& body) {
  try {
    const nlohmann::json j = nlohmann::json::parse(body);
    const nlohmann::json& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw RemoteError("alert response content is not a string: " + excerpt(body));
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw RemoteError("malformed alert response: " + excerpt(body));
  }
}

HttpClient::HttpClient(HttpClientConfig config, Transport transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (config_.retries < 0) throw ConfigError("alert retries must be non-negative");
  if (!(config_.timeout_seconds > 0.0)) throw ConfigError("alert timeout must be positive");
  if (!transport_) transport_ = http_transport(config_);
  if (!sleeper_) {
    sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
}

std::string HttpClient::request(const PromptBundle& bundle) {
  const std::string body = wire_request(bundle, config_.model, config_.max_tokens).dump();
  const char* token = std::getenv(config_.token_env.c_str());
  const std::string bearer = token != nullptr ? token : "";
  double backoff = config_.backoff_seconds;
  last_retries_ = 0;
  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      ++last_retries_;
      sleeper_(backoff);
      backoff *= 2.0;
    }
    std::optional<HttpResponse> res = transport_(body, bearer);
    if (!res) {
      last_failure = "transport failure contacting " + config_.endpoint;
      continue;
    }
    if (res->status >= 200 && res->status < 300) return parse_wire_response(res->body);
    if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
      if (attempt == config_.retries) throw RemoteError(last_failure);
      continue;
    }
    throw RemoteError("HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
  }
  throw DeliveryError(last_failure + " after " + std::to_string(config_.retries) + " retries");
}

std::string request_alert(const PromptBundle& bundle, AlertClient& client) { return client.request(bundle); }

}  // namespace accident::alerts
