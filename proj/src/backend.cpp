#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "themescope/backend.hpp"

#include <cmath>
#include <random>
#include <thread>

#include "themescope/corpus.hpp"
#include "themescope/error.hpp"
#include "themescope/evaluate.hpp"

namespace themescope {

using json = nlohmann::json;

void BackendConfig::validate() const {
  if (annotator_id.empty()) throw ValidationError("backend annotator_id is empty");
  if (max_in_flight < 1) {
    throw ValidationError("backend " + annotator_id + ": max_in_flight must be >= 1");
  }
  if (max_retries < 0) throw ValidationError("backend " + annotator_id + ": max_retries < 0");
  if (temperature != 0.0) throw ValidationError("backend " + annotator_id + ": temperature must be 0");
  if (max_tokens < 1) throw ValidationError("backend " + annotator_id + ": max_tokens must be >= 1");
  if (timeout.count() <= 0) throw ValidationError("backend " + annotator_id + ": timeout must be > 0");
}

json to_wire(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    if (m.images.empty()) {
      messages.push_back({{"role", m.role}, {"content", m.text}});
      continue;
    }
    json parts = json::array();
    parts.push_back({{"type", "text"}, {"text", m.text}});
    for (const auto& img : m.images) {
      parts.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:" + img.mime_type + ";base64," + img.base64}}}});
    }
    messages.push_back({{"role", m.role}, {"content", std::move(parts)}});
  }
  return json{{"model", request.model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
}

std::string parse_wire_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw BackendError(BackendError::Kind::Envelope, "response is not JSON");
  }
  const json* content = nullptr;
  if (doc.is_object() && doc.contains("choices") && doc["choices"].is_array() &&
      !doc["choices"].empty()) {
    const json& choice = doc["choices"][0];
    if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
        choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr || !content->is_string()) {
    throw BackendError(BackendError::Kind::Envelope,
                       "response lacks choices[0].message.content");
  }
  return content->get<std::string>();
}

HttpChatBackend::HttpChatBackend(BackendConfig config) : config_(std::move(config)) {
  const auto& url = config_.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("backend " + config_.annotator_id + ": endpoint_url lacks a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);

  auto res = client.Post(path_, headers, to_wire(request).dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read
                          ? BackendError::Kind::Timeout
                          : BackendError::Kind::Transport;
    throw BackendError(kind, "request failed: " + httplib::to_string(err));
  }
  if (res->status >= 500 || res->status == 429) {
    throw BackendError(BackendError::Kind::Transport, "HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(BackendError::Kind::Status, "HTTP " + std::to_string(res->status));
  }
  return parse_wire_response(res->body);
}

namespace {

const ChatMessage* find_role(const ChatRequest& request, std::string_view role) {
  for (const auto& m : request.messages) {
    if (m.role == role) return &m;
  }
  return nullptr;
}

}  // namespace

MockSdgBackend::MockSdgBackend(const HashtagMap& hashtags) : hashtags_(&hashtags) {}

std::string MockSdgBackend::complete(const ChatRequest& request) {
  const ChatMessage* user = find_role(request, "user");
  if (user == nullptr) return "None";
  const auto tags = extract_hashtags(user->text);
  const auto label = hashtag_ground_truth(tags, *hashtags_);
  if (!label) return "None";
  return std::to_string(label->goal_number());
}

std::string MockVisionBackend::complete(const ChatRequest& request) {
  std::size_t images = 0;
  for (const auto& m : request.messages) images += m.images.size();
  return "Shared visual theme across " + std::to_string(images) +
         " sampled images.\n- recurring subject\n- consistent setting\n";
}

std::string FailingBackend::complete(const ChatRequest&) {
  throw BackendError(BackendError::Kind::Transport, "backend unavailable");
}

std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, int retry, double jitter) {
  const double scaled = static_cast<double>(base.count()) * std::ldexp(1.0, retry - 1) * jitter;
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(scaled)));
}

std::string query_with_retry(ChatBackend& backend, const BackendConfig& config,
                             const ChatRequest& request, const QueryContext& context) {
  thread_local std::mt19937 jitter_rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.8, 1.2);

  const std::string where = "annotator " + config.annotator_id +
                            (context.post_id.empty() ? std::string() : ", item " + context.post_id);
  const int attempts = 1 + config.max_retries;
  for (int attempt = 1;; ++attempt) {
    try {
      return backend.complete(request);
    } catch (const BackendError& e) {
      if (!e.retryable()) throw BackendError(e.kind(), where + ": " + e.what());
      if (attempt >= attempts) {
        const auto kind = e.kind() == BackendError::Kind::Timeout
                              ? BackendError::Kind::Timeout
                              : BackendError::Kind::RetriesExhausted;
        throw BackendError(kind, where + ": gave up after " + std::to_string(attempts) +
                                     " attempts: " + e.what());
      }
      const auto delay = backoff_delay(config.retry_base_delay, attempt, jitter(jitter_rng));
      if (context.sleep) {
        context.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

std::string query_backend(ChatBackend& backend, const BackendConfig& config,
                          std::string_view system_text, std::string_view user_text,
                          const QueryContext& context) {
  ChatRequest request;
  request.model = config.model_name;
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  request.messages.push_back({"system", std::string(system_text), {}});
  request.messages.push_back({"user", std::string(user_text), {}});
  return query_with_retry(backend, config, request, context);
}

}  // namespace themescope
