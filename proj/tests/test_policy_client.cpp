#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ics/http_policy.hpp"
#include "ics/policy_client.hpp"

using namespace ics;

// ==================== scripted policy ====================

TEST_CASE("scripted rules match in insertion order, first wins") {
  ScriptedPolicy policy;
  policy.when_contains("meet", {"from the meet rule"});
  policy.when_contains("miles", {"from the miles rule"});

  CompletionRequest req;
  req.prompt = "how many miles until they meet?";
  CHECK(policy.complete(req).text == "from the meet rule");
  CHECK(policy.rule_hits(0) == 1);
  CHECK(policy.rule_hits(1) == 0);
}

TEST_CASE("exact and ends-with matching") {
  ScriptedPolicy policy;
  policy.when_exact("ping", {"pong"});
  policy.when_ends_with("Solution:", {"tail match"});

  CompletionRequest exact;
  exact.prompt = "ping";
  CHECK(policy.complete(exact).text == "pong");

  CompletionRequest tail;
  tail.prompt = "Long preamble...\nSolution:";
  CHECK(policy.complete(tail).text == "tail match");

  CompletionRequest near_miss;
  near_miss.prompt = "ping ";
  CHECK_THROWS_AS(policy.complete(near_miss), ScriptMiss);
}

TEST_CASE("a single-reply rule answers the same way every time") {
  ScriptedPolicy policy;
  policy.when_contains("Q", {"stable reply"});
  CompletionRequest req;
  req.prompt = "Q: anything";
  for (int i = 0; i < 5; ++i) CHECK(policy.complete(req).text == "stable reply");
}

TEST_CASE("multi-reply rules cycle round-robin across samples") {
  ScriptedPolicy policy;
  policy.when_contains("verify", {"\\boxed{0}", "\\boxed{3}", "\\boxed{0}"});
  CompletionRequest req;
  req.prompt = "please verify this";
  std::vector<CompletionResult> votes = policy.multi_sample(req, 9);
  REQUIRE(votes.size() == 9);
  for (std::size_t i = 0; i < votes.size(); ++i) {
    const char* expected = (i % 3 == 1) ? "\\boxed{3}" : "\\boxed{0}";
    CHECK(votes[i].text == expected);
  }
  CHECK(policy.rule_hits(0) == 9);
  CHECK(policy.total_requests() == 9);
}

TEST_CASE("unmatched prompts throw but are still logged") {
  ScriptedPolicy policy;
  policy.when_exact("known", {"ok"});
  CompletionRequest req;
  req.prompt = "unknown prompt";
  CHECK_THROWS_AS(policy.complete(req), ScriptMiss);
  CHECK(policy.total_requests() == 1);
  REQUIRE(policy.request_log().size() == 1);
  CHECK(policy.request_log()[0] == "unknown prompt");
}

TEST_CASE("the request log keeps exact prompt bytes in order") {
  ScriptedPolicy policy;
  policy.when_contains("", {"anything"});
  CompletionRequest a, b;
  a.prompt = "first\nprompt";
  b.prompt = "second prompt";
  policy.complete(a);
  policy.complete(b);
  std::vector<std::string> log = policy.request_log();
  REQUIRE(log.size() == 2);
  CHECK(log[0] == "first\nprompt");
  CHECK(log[1] == "second prompt");
  CHECK(policy.requests_containing("prompt") == 2);
  CHECK(policy.requests_containing("second") == 1);
  policy.clear_log();
  CHECK(policy.total_requests() == 0);
}

// An empty Contains pattern matches everything, which the log test above
// leans on. Pin that behaviour so a refactor cannot silently break it.
TEST_CASE("empty contains pattern is a catch-all") {
  ScriptedPolicy policy;
  policy.when_contains("", {"default"});
  CompletionRequest req;
  req.prompt = "absolutely anything";
  CHECK(policy.complete(req).text == "default");
}

// ==================== completion shaping ====================

TEST_CASE("stop sequence inside the budget window ends the completion") {
  ScriptedPolicy policy;
  policy.when_contains("go", {"x = 2</thought> junk after"});
  CompletionRequest req;
  req.prompt = "go";
  req.params = SamplingParams::for_thought(150);
  CompletionResult res = policy.complete(req);
  CHECK(res.text == "x = 2");
  CHECK(res.stop_reason == StopReason::StopSequence);
}

TEST_CASE("the earliest stop sequence wins") {
  ScriptedPolicy policy;
  policy.when_contains("go", {"alpha\n\nbeta</thought>"});
  CompletionRequest req;
  req.prompt = "go";
  req.params = SamplingParams::for_thought(150);
  CompletionResult res = policy.complete(req);
  CHECK(res.text == "alpha");
  CHECK(res.stop_reason == StopReason::StopSequence);
}

TEST_CASE("budget exhaustion without a stop reports Length") {
  ScriptedPolicy policy;
  policy.when_contains("go", {"w1 w2 w3 w4 w5 w6 w7 w8 w9 w10"});
  CompletionRequest req;
  req.prompt = "go";
  req.params.max_tokens = 4;
  CompletionResult res = policy.complete(req);
  CHECK(res.text == "w1 w2 w3 w4");
  CHECK(res.stop_reason == StopReason::Length);
  CHECK(res.usage.completion_tokens == 4);
}

TEST_CASE("a stop sequence beyond the budget window does not count") {
  // The reply only reaches its delimiter after 200 words, so a 150-token
  // budget truncates first (Length) while a 300-token budget sees the stop.
  std::string reply;
  for (int i = 0; i < 200; ++i) reply += "word" + std::to_string(i) + " ";
  reply += "</thought> tail";

  ScriptedPolicy policy;
  policy.when_contains("go", {reply});
  CompletionRequest req;
  req.prompt = "go";

  req.params = SamplingParams::for_thought(150);
  CHECK(policy.complete(req).stop_reason == StopReason::Length);

  req.params = SamplingParams::for_thought(300);
  CompletionResult res = policy.complete(req);
  CHECK(res.stop_reason == StopReason::StopSequence);
  CHECK(res.text.find("</thought>") == std::string::npos);
  CHECK(policy.total_requests() == 2);
}

TEST_CASE("full reply within budget and no stop is EndOfText") {
  ScriptedPolicy policy;
  policy.when_contains("go", {"The answer is \\boxed{27}."});
  CompletionRequest req;
  req.prompt = "go";
  CompletionResult res = policy.complete(req);
  CHECK(res.text == "The answer is \\boxed{27}.");
  CHECK(res.stop_reason == StopReason::EndOfText);
}

TEST_CASE("shaping invariants hold on random replies") {
  std::mt19937_64 rng(20240602);
  for (int trial = 0; trial < 300; ++trial) {
    std::string reply;
    int words = 1 + static_cast<int>(rng() % 30);
    for (int w = 0; w < words; ++w) {
      if (w) reply += ' ';
      if (rng() % 7 == 0) reply += "</thought>";
      else reply += "w" + std::to_string(rng() % 10);
    }

    ScriptedPolicy policy;
    policy.when_contains("", {reply});
    CompletionRequest req;
    req.prompt = "p";
    req.params.max_tokens = 1 + rng() % 32;
    req.params.stop_sequences = {"</thought>"};
    CompletionResult res = policy.complete(req);

    // Whatever the path taken, the text never contains a stop marker and is
    // always a prefix of the scripted reply.
    CHECK(res.text.find("</thought>") == std::string::npos);
    CHECK(reply.compare(0, res.text.size(), res.text) == 0);
    if (res.stop_reason == StopReason::EndOfText) CHECK(res.text == reply);
  }
}

// ==================== http endpoint ====================

namespace {

/// Minimal one-route chat-completions server for endpoint tests.
struct TestServer {
  httplib::Server server;
  std::thread runner;
  int port = 0;
  std::atomic<int> requests{0};

  explicit TestServer(std::function<void(const httplib::Request&, httplib::Response&, int)> handler) {
    server.Post("/v1/chat/completions",
                [this, handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
                  handler(req, res, ++requests);
                });
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    runner = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~TestServer() {
    server.stop();
    runner.join();
  }

  HttpPolicyConfig config() const {
    HttpPolicyConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.model = "test-model";
    c.sleep_between_retries = false;
    return c;
  }

  static std::string chat_body(const std::string& content, const std::string& finish = "stop") {
    nlohmann::json j = {
        {"id", "cmpl-test"},
        {"choices",
         {{{"index", 0},
           {"message", {{"role", "assistant"}, {"content", content}}},
           {"finish_reason", finish}}}},
        {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 2}}},
    };
    return j.dump();
  }
};

CompletionRequest simple_request(std::string prompt = "say hello") {
  CompletionRequest req;
  req.prompt = std::move(prompt);
  return req;
}

}  // namespace

TEST_CASE("transient 5xx responses are retried until success") {
  TestServer ts([](const httplib::Request&, httplib::Response& res, int n) {
    if (n <= 2) {
      res.status = 500;
      res.set_content("overloaded", "text/plain");
    } else {
      res.set_content(TestServer::chat_body("hello world"), "application/json");
    }
  });
  HttpPolicy policy(ts.config());
  CompletionResult out = policy.complete(simple_request());
  CHECK(out.text == "hello world");
  CHECK(out.retries_used == 2);
  CHECK(out.usage.prompt_tokens == 12);
  CHECK(out.usage.completion_tokens == 2);
  CHECK(ts.requests.load() == 3);
}

TEST_CASE("4xx responses fail immediately without retry") {
  TestServer ts([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 404;
    res.set_content("no such model", "text/plain");
  });
  HttpPolicy policy(ts.config());
  CHECK_THROWS_AS(policy.complete(simple_request()), EndpointUnavailable);
  CHECK(ts.requests.load() == 1);
}

TEST_CASE("persistent 5xx exhausts the retry budget") {
  TestServer ts([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 503;
    res.set_content("down", "text/plain");
  });
  HttpPolicyConfig cfg = ts.config();
  cfg.retry_budget = 2;
  HttpPolicy policy(cfg);
  try {
    policy.complete(simple_request());
    FAIL("expected EndpointUnavailable");
  } catch (const EndpointUnavailable& e) {
    CHECK(std::string(e.what()).find("retries exhausted") != std::string::npos);
  }
  CHECK(ts.requests.load() == 3);  // initial try + 2 retries
}

TEST_CASE("stop sequences are enforced client-side") {
  TestServer ts([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(TestServer::chat_body("x = 2</thought> trailing"), "application/json");
  });
  HttpPolicy policy(ts.config());
  CompletionRequest req = simple_request();
  req.params.stop_sequences = {"</thought>"};
  CompletionResult out = policy.complete(req);
  CHECK(out.text == "x = 2");
  CHECK(out.stop_reason == StopReason::StopSequence);
}

TEST_CASE("finish_reason length maps to the Length stop reason") {
  TestServer ts([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(TestServer::chat_body("truncated outp", "length"), "application/json");
  });
  HttpPolicy policy(ts.config());
  CompletionResult out = policy.complete(simple_request());
  CHECK(out.stop_reason == StopReason::Length);
  CHECK(out.text == "truncated outp");
}

TEST_CASE("request body carries sampling params and the bearer key from the env") {
  nlohmann::json seen_body;
  std::string seen_auth;
  TestServer ts([&](const httplib::Request& req, httplib::Response& res, int) {
    seen_body = nlohmann::json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    res.set_content(TestServer::chat_body("ok"), "application/json");
  });

  ::setenv("ICS_TEST_KEY_VAR", "sk-test-123", 1);
  HttpPolicyConfig cfg = ts.config();
  cfg.api_key_env = "ICS_TEST_KEY_VAR";
  cfg.system_prompt = "be terse";
  HttpPolicy policy(cfg);

  CompletionRequest req = simple_request("what is 2+2?");
  req.params = SamplingParams::for_thought(300);
  policy.complete(req);
  ::unsetenv("ICS_TEST_KEY_VAR");

  CHECK(seen_auth == "Bearer sk-test-123");
  CHECK(seen_body["model"] == "test-model");
  CHECK(seen_body["max_tokens"] == 300);
  CHECK(seen_body["temperature"] == Catch::Approx(0.5));
  CHECK(seen_body["top_p"] == Catch::Approx(0.9));
  CHECK(seen_body["top_k"] == 50);
  REQUIRE(seen_body["messages"].size() == 2);
  CHECK(seen_body["messages"][0]["role"] == "system");
  CHECK(seen_body["messages"][0]["content"] == "be terse");
  CHECK(seen_body["messages"][1]["role"] == "user");
  CHECK(seen_body["messages"][1]["content"] == "what is 2+2?");
  std::vector<std::string> stops = seen_body["stop"].get<std::vector<std::string>>();
  CHECK(stops == std::vector<std::string>{"</thought>", "\n\n"});
}

TEST_CASE("misconfigured endpoints are rejected up front") {
  HttpPolicyConfig no_url;
  no_url.model = "m";
  CHECK_THROWS_AS(HttpPolicy(no_url), std::invalid_argument);

  HttpPolicyConfig no_model;
  no_model.base_url = "http://localhost:1";
  CHECK_THROWS_AS(HttpPolicy(no_model), std::invalid_argument);
}
