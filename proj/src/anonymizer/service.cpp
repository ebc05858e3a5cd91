#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "sc2tools/anonymizer.hpp"
#include "sc2tools/error.hpp"

namespace sc2tools::anon {

using nlohmann::json;

BindAddress parse_bind_address(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(Errc::InvalidConfig, std::string(address), "expected host:port");
  }
  BindAddress out;
  out.host = std::string(address.substr(0, colon));
  const std::string port(address.substr(colon + 1));
  char* end = nullptr;
  const long value = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || value < 0 || value > 65535) {
    throw Error(Errc::InvalidConfig, std::string(address), "bad port");
  }
  out.port = static_cast<int>(value);
  return out;
}

std::string default_bind_address() {
  if (const char* env = std::getenv(kBindEnvVar); env && *env) return env;
  return std::string(kDefaultBindAddress);
}

namespace {

void reply_error(httplib::Response& res, int status, const std::string& reason) {
  res.status = status;
  res.set_content(json{{"error", reason}}.dump(), "application/json");
}

}  // namespace

AnonymizerService::AnonymizerService(AnonymizationStore& store)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
  server_->Post("/anonymize", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return reply_error(res, 400, "request body is not valid JSON");
    }
    if (!body.is_object() || !body.contains("nickname")) {
      return reply_error(res, 400, "missing field 'nickname'");
    }
    if (!body["nickname"].is_string()) return reply_error(res, 400, "'nickname' must be a string");
    try {
      const std::string id = store_.get_or_assign(body["nickname"].get<std::string>());
      res.set_content(json{{"id", id}}.dump(), "application/json");
    } catch (const Error& e) {
      const bool client_fault = e.code() == Errc::EmptyNickname || e.code() == Errc::InvalidValue;
      reply_error(res, client_fault ? 400 : 500, e.what());
    }
  });
  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
}

AnonymizerService::~AnonymizerService() { stop(); }

int AnonymizerService::bind(const BindAddress& address) {
  const int port = address.port == 0 ? server_->bind_to_any_port(address.host)
                                     : (server_->bind_to_port(address.host, address.port) ? address.port : -1);
  if (port < 0) {
    throw Error(Errc::Io, address.host + ":" + std::to_string(address.port), "cannot bind");
  }
  bound_ = true;
  return port;
}

void AnonymizerService::run() {
  server_->listen_after_bind();
  bound_ = false;
}

void AnonymizerService::start() {
  thread_ = std::thread([this] { run(); });
  server_->wait_until_ready();
}

void AnonymizerService::stop() {
  // httplib only closes the listening socket from a running loop.
  if (bound_.exchange(false) && !thread_.joinable()) start();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

HttpAnonymizerClient::HttpAnonymizerClient(std::string address) {
  const BindAddress parsed = parse_bind_address(address);
  host_ = parsed.host;
  port_ = parsed.port;
}

std::string HttpAnonymizerClient::anonymize(std::string_view nickname) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  const auto res = client.Post("/anonymize", json{{"nickname", nickname}}.dump(), "application/json");
  if (!res) {
    throw Error(Errc::AnonymizerUnavailable, host_ + ":" + std::to_string(port_),
                httplib::to_string(res.error()));
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception&) {
    throw Error(Errc::AnonymizerUnavailable, {}, "malformed reply");
  }
  if (res->status == 400 && body.contains("error")) {
    const std::string reason = body["error"].is_string() ? body["error"].get<std::string>() : "";
    if (reason.rfind("EmptyNickname", 0) == 0) throw Error(Errc::EmptyNickname);
    throw Error(Errc::InvalidValue, "nickname", reason);
  }
  if (res->status != 200 || !body.contains("id") || !body["id"].is_string()) {
    throw Error(Errc::AnonymizerUnavailable, {}, "status " + std::to_string(res->status));
  }
  return body["id"].get<std::string>();
}

}  // namespace sc2tools::anon
