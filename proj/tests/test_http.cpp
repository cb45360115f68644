#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "dualmem/remote.hpp"

using namespace dualmem;
using nlohmann::json;

namespace {

// Local chat-completions stand-in; `handler` decides each response.
class MockServer {
 public:
  explicit MockServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteConfig config_for(const MockServer& s) {
  RemoteConfig c;
  c.base_url = s.url();
  c.model = "test-model";
  c.timeout = std::chrono::milliseconds(5000);
  return c;
}

}  // namespace

TEST(Http, RetriesRetryableStatusWithBackoff) {
  std::atomic<int> hits{0};
  MockServer s([&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[]})", "application/json");
  });
  std::vector<long long> slept;
  HttpChatTransport t(config_for(s), [&](std::chrono::milliseconds d) { slept.push_back(d.count()); });
  json r = t.post({{"model", "x"}});
  EXPECT_TRUE(r.contains("choices"));
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(slept, (std::vector<long long>{500, 1000}));
}

TEST(Http, GivesUpAfterMaxAttempts) {
  std::atomic<int> hits{0};
  MockServer s([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });
  HttpChatTransport t(config_for(s), [](std::chrono::milliseconds) {});
  try {
    t.post({});
    FAIL();
  } catch (const PolicyError& e) {
    EXPECT_EQ(e.code(), PolicyErrc::RemoteTransport);
  }
  EXPECT_EQ(hits.load(), 3);
}

TEST(Http, ClientErrorNotRetried) {
  std::atomic<int> hits{0};
  MockServer s([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  HttpChatTransport t(config_for(s), [](std::chrono::milliseconds) {});
  EXPECT_THROW(t.post({}), PolicyError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(Http, SendsBearerTokenFromEnvironment) {
  std::string auth;
  MockServer s([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.set_content("{}", "application/json");
  });
  RemoteConfig c = config_for(s);
  c.api_key_env = "DUALMEM_TEST_KEY";
  ::setenv("DUALMEM_TEST_KEY", "sk-test", 1);
  HttpChatTransport t(c);
  t.post({});
  EXPECT_EQ(auth, "Bearer sk-test");
}

TEST(Http, UnreachableHostIsTransportError) {
  RemoteConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.model = "m";
  c.timeout = std::chrono::milliseconds(500);
  c.retry.max_attempts = 2;
  HttpChatTransport t(c, [](std::chrono::milliseconds) {});
  EXPECT_THROW(t.post({}), PolicyError);
}

TEST(Http, RemotePolicyEndToEnd) {
  std::atomic<int> hits{0};
  MockServer s([&](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body);
    json msg;
    if (++hits == 1) {
      msg = {{"role", "assistant"},
             {"content", nullptr},
             {"tool_calls",
              {{{"id", "a"}, {"type", "function"}, {"function", {{"name", "memory"}, {"arguments", "{\"action\":\"list\"}"}}}}}}};
    } else {
      msg = {{"role", "assistant"}, {"content", R"({"reasoning":"r","final_diagnosis":"Gout"})"}};
    }
    res.set_content(json{{"choices", {{{"message", msg}}}}}.dump(), "application/json");
  });
  RemoteConfig c = config_for(s);
  RemotePolicy p(std::make_shared<HttpChatTransport>(c), c.model);
  AgentState mem(2);
  RoundInput in;
  in.profile = "toe pain";
  in.candidates.labels = {"Gout", "Lupus"};
  PolicyOutput o = p.act(in, mem);
  EXPECT_EQ(o.prediction, "Gout");
  EXPECT_EQ(o.turns_used, 2);
}
