// Live backend: OpenAI-compatible chat completions over HTTP(S).

#include <cstdlib>

#include <httplib.h>

#include "llmdrive/error.hpp"
#include "llmdrive/gateway.hpp"

namespace llmdrive {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // path prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("base_url needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ValidationError("unsupported scheme in base_url: " + scheme);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ValidationError("this build has no TLS support; use an http:// base_url");
#endif
  const auto path_begin = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_begin);
  ep.path = path_begin == std::string::npos ? "" : url.substr(path_begin);
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  return ep;
}

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(const GatewayConfig& cfg) : cfg_(cfg), endpoint_(split_url(cfg.base_url)) {
    const char* key = std::getenv(cfg.api_key_env_var.c_str());
    if (key == nullptr || *key == '\0') {
      throw GatewayError(GatewayErrorKind::missing_api_key, "*",
                         "environment variable " + cfg.api_key_env_var + " is not set");
    }
    api_key_ = key;
  }

  BackendKind kind() const override { return BackendKind::live; }

  std::string complete(const ChatRequest& req) override {
    httplib::Client client(endpoint_.origin);
    const auto secs = static_cast<time_t>(cfg_.timeout_s);
    const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    nlohmann::json body;
    body["model"] = req.model_name;
    body["temperature"] = req.temperature;
    body["messages"] = nlohmann::json::array();
    if (!req.system_prompt.empty()) body["messages"].push_back({{"role", "system"}, {"content", req.system_prompt}});
    body["messages"].push_back({{"role", "user"}, {"content", req.user_prompt}});

    const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto res = client.Post(endpoint_.path + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      throw TransientError(timed_out ? GatewayErrorKind::timeout : GatewayErrorKind::connection,
                           "request failed: " + httplib::to_string(err));
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw GatewayError(GatewayErrorKind::auth, req.scenario_id, "endpoint rejected the credentials", status);
    }
    if (status == 408 || status == 429 || status >= 500) {
      throw TransientError(status == 408 ? GatewayErrorKind::timeout : GatewayErrorKind::http,
                           "HTTP " + std::to_string(status), status);
    }
    if (status != 200) {
      throw GatewayError(GatewayErrorKind::http, req.scenario_id, "HTTP " + std::to_string(status), status);
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (!content.is_string()) throw std::runtime_error("content is not a string");
      return content.get<std::string>();
    } catch (const std::exception& e) {
      throw GatewayError(GatewayErrorKind::malformed_response, req.scenario_id,
                         std::string("cannot read completion: ") + e.what(), status);
    }
  }

 private:
  GatewayConfig cfg_;
  Endpoint endpoint_;
  std::string api_key_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_http_backend(const GatewayConfig& cfg) {
  cfg.validate();
  return std::make_unique<HttpChatBackend>(cfg);
}

}  // namespace llmdrive
