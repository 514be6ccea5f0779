#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>

#include <httplib.h>

#include "clcts/error.hpp"
#include "clcts/transport.hpp"
#include "test_util.hpp"

using namespace clcts;
using namespace std::chrono_literals;

namespace {

class EchoTransport : public ChatTransport {
 public:
  ChatResponse complete(const ChatRequest& request) override {
    const int n = ++calls;
    return {request.messages.back().content + " #" + std::to_string(n), "{}"};
  }
  std::atomic<int> calls{0};
};

ChatRequest make_request(const std::string& text, double temperature = 0.7) {
  ChatRequest r;
  r.model = "test-model";
  r.temperature = temperature;
  r.messages.push_back({"user", text});
  return r;
}

}  // namespace

TEST(Backoff, DelayWithinCap) {
  BackoffPolicy p;
  std::mt19937_64 rng(1);
  for (int attempt = 1; attempt <= 12; ++attempt)
    for (int i = 0; i < 50; ++i) {
      const auto d = backoff_delay(p, attempt, rng);
      EXPECT_GE(d.count(), 0);
      EXPECT_LE(d, std::min<std::chrono::milliseconds>(p.cap, p.base * (1LL << std::min(attempt - 1, 20))));
    }
}

TEST(Backoff, RetriesTransientThenSucceeds) {
  int calls = 0;
  std::vector<std::chrono::milliseconds> sleeps;
  const auto body = send_with_backoff(
      [&]() -> HttpOutcome {
        ++calls;
        if (calls == 1) return {0, "", "connection refused"};
        if (calls == 2) return {429, "slow down", ""};
        return {200, "ok", ""};
      },
      BackoffPolicy{}, 3, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  EXPECT_EQ(body, "ok");
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(sleeps.size(), 2u);
}

TEST(Backoff, ExhaustionAndFatalStatus) {
  int calls = 0;
  auto sleep = [](std::chrono::milliseconds) {};
  EXPECT_THROW(send_with_backoff([&]() -> HttpOutcome { ++calls; return {503, "", ""}; }, BackoffPolicy{3, 1ms, 2ms}, 0,
                                 sleep),
               TransportError);
  EXPECT_EQ(calls, 3);
  calls = 0;
  EXPECT_THROW(send_with_backoff([&]() -> HttpOutcome { ++calls; return {401, "bad key", ""}; }, BackoffPolicy{}, 0, sleep),
               TransportError);
  EXPECT_EQ(calls, 1);
  EXPECT_TRUE(is_retryable(500));
  EXPECT_TRUE(is_retryable(408));
  EXPECT_FALSE(is_retryable(400));
}

TEST(RateLimiter, CapsInFlight) {
  RateLimiter limiter(0ms, 2);
  std::atomic<int> in_flight{0}, peak{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      auto slot = limiter.acquire();
      const int now = ++in_flight;
      int p = peak.load();
      while (now > p && !peak.compare_exchange_weak(p, now)) {
      }
      std::this_thread::sleep_for(5ms);
      --in_flight;
    });
  for (auto& t : threads) t.join();
  EXPECT_LE(peak.load(), 2);
}

TEST(RateLimiter, SpacesStarts) {
  RateLimiter limiter(20ms, 4);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) auto slot = limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - start, 55ms);
}

TEST(Request, FingerprintIsStable) {
  EXPECT_EQ(make_request("a").fingerprint(), make_request("a").fingerprint());
  EXPECT_NE(make_request("a").fingerprint(), make_request("b").fingerprint());
  EXPECT_NE(make_request("a", 0.0).fingerprint(), make_request("a").fingerprint());
  EXPECT_EQ(make_request("a").fingerprint().size(), 64u);
}

TEST(ExtractContent, ParsesAndRejects) {
  EXPECT_EQ(extract_content(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})"), "hi");
  EXPECT_THROW(extract_content(R"({"choices":[]})"), TransportError);
  EXPECT_THROW(extract_content("not json"), TransportError);
}

TEST(RecordReplay, RoundTripWithRepeatedRequests) {
  testutil::TempDir dir;
  auto echo = std::make_shared<EchoTransport>();
  RecordingTransport rec(echo, dir.file("fx"));
  const auto a1 = rec.complete(make_request("x"));
  const auto a2 = rec.complete(make_request("x"));
  const auto b = rec.complete(make_request("y"));
  EXPECT_NE(a1.content, a2.content);
  EXPECT_TRUE(std::filesystem::exists(dir.file("fx/" + fixture_name(make_request("x").fingerprint(), 2))));

  ReplayTransport replay(dir.file("fx"));
  EXPECT_EQ(replay.complete(make_request("x")).content, a1.content);
  EXPECT_EQ(replay.complete(make_request("y")).content, b.content);
  EXPECT_EQ(replay.complete(make_request("x")).content, a2.content);
  EXPECT_THROW(replay.complete(make_request("x")), TransportError);
  EXPECT_THROW(replay.complete(make_request("never seen")), TransportError);
  EXPECT_THROW(ReplayTransport(dir.file("missing")), ValidationError);
}

TEST(RecordReplay, TamperedFixtureRejected) {
  testutil::TempDir dir;
  RecordingTransport rec(std::make_shared<EchoTransport>(), dir.path().string());
  rec.complete(make_request("x"));
  const auto path = dir.file(fixture_name(make_request("x").fingerprint(), 1));
  auto text = testutil::slurp(path);
  text.replace(text.find("test-model"), 10, "other-mode");
  dir.write(fixture_name(make_request("x").fingerprint(), 1), text);
  ReplayTransport replay(dir.path().string());
  EXPECT_THROW(replay.complete(make_request("x")), TransportError);
}

TEST(Http, MissingCredentials) {
  HttpConfig cfg;
  cfg.api_key_env = "CLCTS_TEST_UNSET_KEY_VARIABLE";
  ::unsetenv(cfg.api_key_env.c_str());
  EXPECT_THROW(HttpChatTransport{cfg}, TransportError);
}

TEST(Http, RetriesAgainstLocalServer) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + body["model"].get<std::string>()}}}}}}};
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("CLCTS_TEST_KEY", "secret", 1);
  HttpConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.api_key_env = "CLCTS_TEST_KEY";
  cfg.backoff = {5, 1ms, 4ms};
  HttpChatTransport http(cfg);
  const auto r = http.complete(make_request("hello"));
  EXPECT_EQ(r.content, "echo: test-model");
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(auth, "Bearer secret");

  server.stop();
  t.join();
}

TEST(JsonlLog, WritesInOrderFromManyThreads) {
  testutil::TempDir dir;
  const auto path = dir.file("log.jsonl");
  {
    JsonlLog log(path);
    std::vector<std::thread> threads;
    for (int w = 0; w < 4; ++w)
      threads.emplace_back([&, w] {
        for (int i = 0; i < 100; ++i) log.append({{"writer", w}, {"i", i}});
      });
    for (auto& t : threads) t.join();
    log.flush();
    std::ifstream in(path);
    std::string line;
    std::map<int, int> next;
    int count = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      EXPECT_EQ(j["i"].get<int>(), next[j["writer"].get<int>()]++);
      ++count;
    }
    EXPECT_EQ(count, 400);
  }
}
