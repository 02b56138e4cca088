#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include "themescope/backend.hpp"
#include "themescope/error.hpp"

using namespace themescope;
using json = nlohmann::json;

namespace {

// Local chat-completion endpoint driven by a handler.
class MockServer {
 public:
  explicit MockServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply(const std::string& content) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

BackendConfig config_for(const std::string& url) {
  BackendConfig cfg;
  cfg.annotator_id = "t";
  cfg.endpoint_url = url;
  cfg.model_name = "m";
  cfg.timeout = std::chrono::milliseconds(2000);
  cfg.max_retries = 2;
  cfg.retry_base_delay = std::chrono::milliseconds(0);
  return cfg;
}

const QueryContext kNoSleep{"", [](std::chrono::milliseconds) {}};

}  // namespace

TEST_CASE("wire format of a text request") {
  ChatRequest r{"m", {{"system", "S", {}}, {"user", "U", {}}}, 0.0, 8};
  const auto w = to_wire(r);
  CHECK(w["model"] == "m");
  CHECK(w["max_tokens"] == 8);
  CHECK(w["temperature"] == 0.0);
  CHECK(w["messages"][0] == json{{"role", "system"}, {"content", "S"}});
  CHECK(w["messages"][1]["content"] == "U");
}

TEST_CASE("wire format with images uses content parts") {
  ChatRequest r{"m", {{"user", "P", {{"image/png", "QUJD"}}}}, 0.0, 256};
  const auto content = to_wire(r)["messages"][0]["content"];
  REQUIRE(content.is_array());
  CHECK(content[0] == json{{"type", "text"}, {"text", "P"}});
  CHECK(content[1]["type"] == "image_url");
  CHECK(content[1]["image_url"]["url"] == "data:image/png;base64,QUJD");
}

TEST_CASE("parse_wire_response") {
  CHECK(parse_wire_response(reply("13")) == "13");
  for (const char* bad : {"{}", "not json", R"({"choices":[]})", R"({"choices":[{"message":{}}]})"}) {
    try {
      parse_wire_response(bad);
      FAIL("accepted " << bad);
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::Envelope);
    }
  }
}

TEST_CASE("HTTP backend sends the body and bearer token") {
  std::mutex mu;
  json seen;
  std::string auth;
  MockServer server([&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(reply("SDG7"), "application/json");
  });
  auto cfg = config_for(server.url());
  cfg.api_key = "secret";
  HttpChatBackend backend(cfg);
  CHECK(query_backend(backend, cfg, "sys", "user text") == "SDG7");
  std::lock_guard lock(mu);
  CHECK(auth == "Bearer secret");
  CHECK(seen["messages"][1]["content"] == "user text");
  CHECK(seen["model"] == "m");
}

TEST_CASE("retryable statuses are retried, others are not") {
  std::atomic<int> calls{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(reply("4"), "application/json");
  });
  auto cfg = config_for(server.url());
  HttpChatBackend backend(cfg);
  CHECK(query_backend(backend, cfg, "s", "u", kNoSleep) == "4");
  CHECK(calls == 3);

  calls = 0;
  cfg.max_retries = 1;
  try {
    query_backend(backend, cfg, "s", "u", kNoSleep);
    FAIL("expected exhaustion");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::RetriesExhausted);
  }
  CHECK(calls == 2);
}

TEST_CASE("a 400 fails immediately") {
  std::atomic<int> calls{0};
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  auto cfg = config_for(server.url());
  HttpChatBackend backend(cfg);
  try {
    query_backend(backend, cfg, "s", "u", kNoSleep);
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Status);
  }
  CHECK(calls == 1);
}

TEST_CASE("a missing content field is an envelope error") {
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"message":{"role":"assistant"}}]})", "application/json");
  });
  auto cfg = config_for(server.url());
  HttpChatBackend backend(cfg);
  try {
    query_backend(backend, cfg, "s", "u", kNoSleep);
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Envelope);
  }
}

TEST_CASE("an unreachable endpoint exhausts its retries") {
  auto cfg = config_for("http://127.0.0.1:9/v1/chat/completions");
  HttpChatBackend backend(cfg);
  int sleeps = 0;
  QueryContext ctx{"p1", [&](std::chrono::milliseconds) { ++sleeps; }};
  try {
    query_backend(backend, cfg, "s", "u", ctx);
    FAIL("expected an error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::RetriesExhausted);
    CHECK(std::string(e.what()).find("p1") != std::string::npos);
  }
  CHECK(sleeps == cfg.max_retries);
}

TEST_CASE("a slow endpoint times out") {
  MockServer server([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(reply("1"), "application/json");
  });
  auto cfg = config_for(server.url());
  cfg.timeout = std::chrono::milliseconds(150);
  cfg.max_retries = 0;
  HttpChatBackend backend(cfg);
  try {
    query_backend(backend, cfg, "s", "u", kNoSleep);
    FAIL("expected a timeout");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::Timeout);
  }
}

TEST_CASE("backend config validation") {
  BackendConfig cfg;
  cfg.annotator_id = "x";
  CHECK_NOTHROW(cfg.validate());
  cfg.max_in_flight = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
