#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "clcts/transport.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <httplib.h>

#include "clcts/error.hpp"
#include "clcts/manifest.hpp"

namespace clcts {

nlohmann::json ChatRequest::to_json() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model}, {"messages", msgs}, {"temperature", temperature}};
}

std::string ChatRequest::fingerprint() const { return sha256_hex(to_json().dump()); }

std::chrono::milliseconds backoff_delay(const BackoffPolicy& policy, int attempt, std::mt19937_64& rng) {
  const int shift = std::clamp(attempt - 1, 0, 30);
  const auto ceiling = std::min<long long>(policy.cap.count(), policy.base.count() << shift);
  if (ceiling <= 0) return std::chrono::milliseconds(0);
  return std::chrono::milliseconds(static_cast<long long>(rng() % static_cast<std::uint64_t>(ceiling + 1)));
}

bool is_retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

std::string send_with_backoff(const std::function<HttpOutcome()>& send, const BackoffPolicy& policy,
                              std::uint64_t jitter_seed,
                              const std::function<void(std::chrono::milliseconds)>& sleep) {
  std::mt19937_64 rng(jitter_seed);
  std::string last;
  for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
    const HttpOutcome out = send();
    if (out.status >= 200 && out.status < 300) return out.body;
    last = out.status == 0 ? "connection failed: " + out.error
                           : "HTTP " + std::to_string(out.status) + ": " + out.body.substr(0, 300);
    if (!is_retryable(out.status)) throw TransportError("chat request rejected: " + last);
    if (attempt < policy.max_attempts) sleep(backoff_delay(policy, attempt, rng));
  }
  throw TransportError("chat request failed after " + std::to_string(policy.max_attempts) +
                       " attempt(s); last error: " + last);
}

RateLimiter::RateLimiter(std::chrono::milliseconds min_interval, unsigned max_in_flight)
    : min_interval_(min_interval), max_in_flight_(std::max(1u, max_in_flight)) {}

RateLimiter::Slot RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
  ++in_flight_;
  const auto now = std::chrono::steady_clock::now();
  const auto start = std::max(now, next_start_);
  next_start_ = start + min_interval_;
  lock.unlock();
  std::this_thread::sleep_until(start);
  return Slot(*this);
}

void RateLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  cv_.notify_one();
}

RateLimiter::Slot::~Slot() {
  if (owner_ != nullptr) owner_->release();
}

std::string extract_content(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unexpected chat-completions response: ") + e.what());
  }
}

HttpChatTransport::HttpChatTransport(HttpConfig config)
    : config_(std::move(config)), limiter_(config_.min_interval, config_.max_in_flight) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw TransportError("missing credentials: set the " + config_.api_key_env + " environment variable");
  api_key_ = key;
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint must be an http(s) URL");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
}

ChatResponse HttpChatTransport::complete(const ChatRequest& request) {
  const std::string body = request.to_json().dump();
  std::uint64_t seed;
  {
    std::lock_guard lock(rng_mutex_);
    seed = config_.jitter_seed + calls_++;
  }
  auto send = [&]() -> HttpOutcome {
    auto slot = limiter_.acquire();
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
  };
  const auto raw = send_with_backoff(send, config_.backoff, seed,
                                     [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); });
  return {extract_content(raw), raw};
}

RecordingTransport::RecordingTransport(std::shared_ptr<ChatTransport> inner, std::string directory)
    : inner_(std::move(inner)), directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::string fixture_name(const std::string& fingerprint, std::size_t occurrence) {
  return occurrence <= 1 ? fingerprint + ".json" : fingerprint + "." + std::to_string(occurrence) + ".json";
}

ChatResponse RecordingTransport::complete(const ChatRequest& request) {
  const auto fp = request.fingerprint();
  std::size_t occurrence = 0;
  {
    std::lock_guard lock(mutex_);
    occurrence = ++seen_[fp];
  }
  auto response = inner_->complete(request);
  const nlohmann::json fixture = {
      {"request", request.to_json()}, {"response", {{"content", response.content}, {"raw", response.raw}}}};
  const auto path = std::filesystem::path(directory_) / fixture_name(fp, occurrence);
  std::lock_guard lock(mutex_);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << fixture.dump(2) << '\n';
  if (!out) throw TransportError("cannot write fixture '" + path.string() + "'");
  return response;
}

ReplayTransport::ReplayTransport(std::string directory) : directory_(std::move(directory)) {
  if (!std::filesystem::is_directory(directory_))
    throw ValidationError("replay directory '" + directory_ + "' does not exist");
}

ChatResponse ReplayTransport::complete(const ChatRequest& request) {
  const auto fp = request.fingerprint();
  std::size_t occurrence = 0;
  {
    std::lock_guard lock(mutex_);
    occurrence = ++seen_[fp];
  }
  const auto path = std::filesystem::path(directory_) / fixture_name(fp, occurrence);
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw TransportError("no recorded fixture for request " + fp + " (occurrence " + std::to_string(occurrence) +
                         ") in '" + directory_ + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("request") != request.to_json())
      throw TransportError("fixture '" + path.string() + "' does not match the request");
    return {j.at("response").at("content").get<std::string>(), j.at("response").value("raw", "")};
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("malformed fixture '" + path.string() + "': " + e.what());
  }
}

JsonlLog::JsonlLog(const std::string& path) : out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw ValidationError("cannot open log '" + path + "'");
  writer_ = std::thread([this] { run(); });
}

JsonlLog::~JsonlLog() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  writer_.join();
}

void JsonlLog::append(nlohmann::json record) {
  std::string line = record.dump();
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(line));
  }
  cv_.notify_all();
}

void JsonlLog::flush() {
  std::unique_lock lock(mutex_);
  drained_.wait(lock, [&] { return queue_.empty() && !writing_; });
}

void JsonlLog::run() {
  std::unique_lock lock(mutex_);
  while (true) {
    cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (queue_.empty() && stopping_) break;
    std::deque<std::string> batch;
    batch.swap(queue_);
    writing_ = true;
    lock.unlock();
    for (const auto& line : batch) out_ << line << '\n';
    out_.flush();
    lock.lock();
    writing_ = false;
    drained_.notify_all();
  }
}

}  // namespace clcts
