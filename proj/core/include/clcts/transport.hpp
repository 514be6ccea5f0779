#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace clcts {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.7;

  /// OpenAI-compatible request body.
  nlohmann::json to_json() const;
  /// SHA-256 of the canonical body; names replay fixtures.
  std::string fingerprint() const;
};

struct ChatResponse {
  std::string content;
  std::string raw;  // provider response body
};

/// A chat-completion backend. Implementations must be safe to call from
/// several threads.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Throws TransportError once the implementation's retry budget is spent.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct BackoffPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base{500};
  std::chrono::milliseconds cap{30000};
};

/// Delay before retry `attempt` (1-based): uniform in [0, min(cap, base * 2^(attempt-1))].
std::chrono::milliseconds backoff_delay(const BackoffPolicy& policy, int attempt, std::mt19937_64& rng);

/// Result of one HTTP exchange as seen by the retry loop.
struct HttpOutcome {
  int status = 0;  // 0: connection failure
  std::string body;
  std::string error;
};

/// Status codes worth retrying: connection failures, 408, 429 and 5xx.
bool is_retryable(int status);

/// Calls `send` until it returns a non-retryable outcome or the attempt
/// budget is exhausted, sleeping with jittered exponential backoff in
/// between. Throws TransportError on exhaustion or a non-retryable error
/// status; returns the body of a 2xx response.
std::string send_with_backoff(const std::function<HttpOutcome()>& send, const BackoffPolicy& policy,
                              std::uint64_t jitter_seed,
                              const std::function<void(std::chrono::milliseconds)>& sleep);

/// Spaces request starts at least `min_interval` apart and caps the number
/// of requests in flight.
class RateLimiter {
 public:
  RateLimiter(std::chrono::milliseconds min_interval, unsigned max_in_flight);

  class Slot {
   public:
    explicit Slot(RateLimiter& owner) : owner_(&owner) {}
    Slot(Slot&& other) noexcept : owner_(other.owner_) { other.owner_ = nullptr; }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;
    ~Slot();

   private:
    RateLimiter* owner_;
  };

  /// Blocks until a request may start; the slot is released on destruction.
  Slot acquire();

 private:
  void release();

  std::mutex mutex_;
  std::condition_variable cv_;
  std::chrono::milliseconds min_interval_;
  unsigned max_in_flight_;
  unsigned in_flight_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

struct HttpConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{120};
  BackoffPolicy backoff;
  std::chrono::milliseconds min_interval{0};
  unsigned max_in_flight = 4;
  std::uint64_t jitter_seed = 0;
};

/// OpenAI-compatible chat-completions client over HTTP(S).
class HttpChatTransport : public ChatTransport {
 public:
  /// Reads the API key from the configured environment variable; throws
  /// TransportError when it is unset.
  explicit HttpChatTransport(HttpConfig config);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  HttpConfig config_;
  std::string api_key_;
  std::string scheme_host_;
  std::string path_;
  RateLimiter limiter_;
  std::mutex rng_mutex_;
  std::uint64_t calls_ = 0;
};

/// Extracts choices[0].message.content from a chat-completions body.
std::string extract_content(const std::string& body);

/// File name of the `occurrence`-th (1-based) exchange with a given
/// fingerprint: "<fp>.json", then "<fp>.2.json", "<fp>.3.json", ...
/// Re-sending an identical request (a retry at non-zero temperature) gets
/// its own fixture.
std::string fixture_name(const std::string& fingerprint, std::size_t occurrence);

/// Forwards to `inner` and stores each exchange in `directory`.
class RecordingTransport : public ChatTransport {
 public:
  RecordingTransport(std::shared_ptr<ChatTransport> inner, std::string directory);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatTransport> inner_;
  std::string directory_;
  std::mutex mutex_;
  std::map<std::string, std::size_t> seen_;
};

/// Serves responses recorded by RecordingTransport, in recording order for
/// repeated requests; a request without a fixture is a TransportError.
class ReplayTransport : public ChatTransport {
 public:
  explicit ReplayTransport(std::string directory);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  std::string directory_;
  std::mutex mutex_;
  std::map<std::string, std::size_t> seen_;
};

/// Append-only JSON Lines log. Producers enqueue from any thread; a single
/// writer thread appends and flushes in enqueue order.
class JsonlLog {
 public:
  explicit JsonlLog(const std::string& path);
  ~JsonlLog();
  JsonlLog(const JsonlLog&) = delete;
  JsonlLog& operator=(const JsonlLog&) = delete;

  void append(nlohmann::json record);
  /// Blocks until every queued record has been written.
  void flush();

 private:
  void run();

  std::ofstream out_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable drained_;
  std::deque<std::string> queue_;
  bool stopping_ = false;
  bool writing_ = false;
  std::thread writer_;
};

}  // namespace clcts
