#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace themescope {

class HashtagMap;

/// One chat-completion endpoint and the limits used when talking to it.
struct BackendConfig {
  std::string annotator_id;
  std::string endpoint_url;  // full URL of the chat-completions route
  std::string model_name;
  std::chrono::milliseconds timeout{60'000};
  int max_in_flight = 4;
  /// Retries after the first attempt; total attempts = 1 + max_retries.
  int max_retries = 3;
  double temperature = 0.0;
  int max_tokens = 8;
  /// First backoff delay; doubles on every retry, with jitter.
  std::chrono::milliseconds retry_base_delay{1'000};
  /// Sent as a bearer token when present.
  std::optional<std::string> api_key;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

struct ImagePart {
  std::string mime_type;  // e.g. "image/png"
  std::string base64;
};

struct ChatMessage {
  std::string role;
  std::string text;
  std::vector<ImagePart> images;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 8;
};

/// Request body in the chat-completion wire format. Messages without images
/// carry a plain string content; messages with images carry content parts.
nlohmann::json to_wire(const ChatRequest& request);

/// Extracts choices[0].message.content. Throws BackendError(Envelope).
std::string parse_wire_response(std::string_view body);

/// A single-attempt transport. Implementations throw BackendError with kind
/// Transport or Timeout for retryable failures and Envelope otherwise.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// HTTP(S) POST of the wire body to BackendConfig::endpoint_url.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Deterministic stand-in for a text model: answers with the goal number
/// when the user message's hashtags map to exactly one goal, else "None".
class MockSdgBackend final : public ChatBackend {
 public:
  explicit MockSdgBackend(const HashtagMap& hashtags);
  std::string complete(const ChatRequest& request) override;

 private:
  const HashtagMap* hashtags_;
};

/// Deterministic stand-in for a vision-language model. The reply is a
/// summary line plus bullets derived from the number of attached images.
class MockVisionBackend final : public ChatBackend {
 public:
  std::string complete(const ChatRequest& request) override;
};

/// Backend that always fails with a transport error; used to exercise
/// degradation paths.
class FailingBackend final : public ChatBackend {
 public:
  std::string complete(const ChatRequest& request) override;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

struct QueryContext {
  std::string post_id;  // or cluster id; included in error messages
  /// Replaces std::this_thread::sleep_for during backoff (tests).
  SleepFn sleep;
};

/// Sends one request built from `config`, retrying retryable failures with
/// exponential backoff. Returns the assistant content verbatim.
std::string query_backend(ChatBackend& backend, const BackendConfig& config,
                          std::string_view system_text, std::string_view user_text,
                          const QueryContext& context = {});

/// Same retry loop for a fully built request.
std::string query_with_retry(ChatBackend& backend, const BackendConfig& config,
                             const ChatRequest& request, const QueryContext& context = {});

/// Backoff before retry number `retry` (1-based), jitter factor in [0.8, 1.2).
std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, int retry, double jitter);

}  // namespace themescope
