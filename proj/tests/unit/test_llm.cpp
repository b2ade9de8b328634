#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/index/embedder.hpp"
#include "kgfuzz/llm/chat.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"
#include "kgfuzz/llm/providers.hpp"
#include "kgfuzz/llm/transcript.hpp"
#include "support.hpp"

using namespace kgfuzz;

namespace {

ChatRequest simple_request(LlmRole role, const std::string& text) {
  return ChatRequest::make(role, {{"system", "sys"}, {"user", text}});
}

Errc error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::IoError;
}

/// Local OpenAI-compatible stub. Replies with the last user message reversed, after
/// `fail_first` HTTP 503 responses.
class StubServer {
 public:
  explicit StubServer(int fail_first = 0) : fail_left_(fail_first) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      if (fail_left_-- > 0) {
        res.status = 503;
        return;
      }
      std::string text = last_body.at("messages").back().at("content");
      std::reverse(text.begin(), text.end());
      res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump(),
                      "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"data", {{{"embedding", {0.5, 0.5, 0.5, 0.5}}}}}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  json last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int fail_left_;
};

}  // namespace

TEST_SUITE("llm") {
  TEST_CASE("role temperatures") {
    CHECK(default_temperature(LlmRole::Coder) == 0.7);
    CHECK(default_temperature(LlmRole::Chat) == 1.0);
    CHECK(ChatRequest::make(LlmRole::Coder, {}).temperature == 0.7);
  }

  TEST_CASE("request digest depends on role, messages and temperature only") {
    auto a = simple_request(LlmRole::Chat, "x");
    auto b = simple_request(LlmRole::Chat, "x");
    CHECK(request_digest(a) == request_digest(b));
    b.max_tokens = 1;
    CHECK(request_digest(a) == request_digest(b));
    CHECK(request_digest(a) != request_digest(simple_request(LlmRole::Coder, "x")));
    CHECK(request_digest(a) != request_digest(simple_request(LlmRole::Chat, "y")));
    b.temperature = 0.2;
    CHECK(request_digest(a) != request_digest(b));
    // Message boundaries are part of the digest.
    auto c = ChatRequest::make(LlmRole::Chat, {{"user", "ab"}});
    auto d = ChatRequest::make(LlmRole::Chat, {{"user", "a"}, {"user", "b"}});
    CHECK(request_digest(c) != request_digest(d));
  }

  TEST_CASE("gateway routes by role") {
    auto coder = std::make_shared<FunctionProvider>([](const ChatRequest&) { return std::string("coder"); });
    auto chat = std::make_shared<FunctionProvider>([](const ChatRequest&) { return std::string("chat"); });
    LlmGateway gw(coder, chat);
    CHECK(gw.complete(simple_request(LlmRole::Coder, "q")) == "coder");
    CHECK(gw.complete(simple_request(LlmRole::Chat, "q")) == "chat");
    CHECK(gw.transcript().size() == 2);
  }

  TEST_CASE("transient failures are retried up to R times with bounded backoff") {
    int attempts = 0;
    std::vector<std::chrono::milliseconds> sleeps;
    GatewayConfig cfg;
    cfg.max_retries = 3;
    cfg.backoff_base = std::chrono::milliseconds(100);
    cfg.backoff_max = std::chrono::milliseconds(250);
    auto gw = testing::scripted_gateway(
        [&](const ChatRequest&) -> std::string {
          if (++attempts < 3) throw ProviderError("flaky", true);
          return "ok";
        },
        cfg);
    gw->set_sleep([&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    CHECK(gw->complete(simple_request(LlmRole::Chat, "q")) == "ok");
    CHECK(attempts == 3);
    CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100), std::chrono::milliseconds(200)});

    attempts = -100;
    sleeps.clear();
    CHECK(error_code([&] { gw->complete(simple_request(LlmRole::Chat, "q2")); }) == Errc::LlmFailure);
    CHECK(sleeps.size() == 3);
    for (auto d : sleeps) CHECK(d <= cfg.backoff_max);
  }

  TEST_CASE("permanent failures are not retried") {
    int attempts = 0;
    auto gw = testing::scripted_gateway([&](const ChatRequest&) -> std::string {
      ++attempts;
      throw ProviderError("bad request", false);
    });
    CHECK(error_code([&] { gw->complete(simple_request(LlmRole::Chat, "q")); }) == Errc::LlmFailure);
    CHECK(attempts == 1);
  }

  TEST_CASE("call cap") {
    GatewayConfig cfg;
    cfg.call_cap = 0;
    auto gw = testing::scripted_gateway([](const ChatRequest&) { return std::string("x"); }, cfg);
    CHECK(error_code([&] { gw->complete(simple_request(LlmRole::Chat, "q")); }) == Errc::BudgetExceeded);
    cfg.call_cap = 2;
    auto gw2 = testing::scripted_gateway([](const ChatRequest&) { return std::string("x"); }, cfg);
    gw2->complete(simple_request(LlmRole::Chat, "a"));
    gw2->complete(simple_request(LlmRole::Chat, "b"));
    CHECK(error_code([&] { gw2->complete(simple_request(LlmRole::Chat, "c")); }) == Errc::BudgetExceeded);
  }

  TEST_CASE("replay is byte exact and transcripts survive a save/load cycle") {
    testing::TempDir dir;
    auto rec = testing::scripted_gateway([](const ChatRequest& r) { return "answer to " + r.messages.back().text + "\n\t\"q\""; });
    const auto r1 = simple_request(LlmRole::Chat, "one");
    const auto r2 = simple_request(LlmRole::Coder, "two");
    const std::string a1 = rec->complete(r1);
    const std::string a2 = rec->complete(r2);
    rec->transcript().save(dir / "t.json");
    const auto loaded = Transcript::load(dir / "t.json");
    CHECK(loaded.entries() == rec->transcript().entries());
    CHECK(loaded.campaign_id() == "test");

    auto replay = std::make_shared<ReplayProvider>(loaded);
    LlmGateway gw(replay, replay);
    CHECK(gw.complete(r2) == a2);
    CHECK(gw.complete(r1) == a1);
    CHECK(error_code([&] { gw.complete(simple_request(LlmRole::Chat, "unknown")); }) == Errc::LlmFailure);
  }

  TEST_CASE("replay of repeated digests consumes responses in order") {
    Transcript t("c");
    const auto r = simple_request(LlmRole::Chat, "same");
    t.append(request_digest(r), "first");
    t.append(request_digest(r), "second");
    ReplayProvider p(t);
    CHECK(p.complete(r) == "first");
    CHECK(p.complete(r) == "second");
    CHECK(p.complete(r) == "second");
  }

  TEST_CASE("prompt templates render and accept overrides") {
    PromptTemplates prompts;
    CHECK_FALSE(prompts.names().empty());
    CHECK_THROWS(prompts.get("no.such.template"));
    testing::TempDir dir;
    testing::write_file(dir / "driver.task.txt", "Write a driver for {{apis}}.");
    CHECK(prompts.load_overrides(dir.path()) == 1);
    CHECK(prompts.render("driver.task", {{"apis", "f, g"}}) == "Write a driver for f, g.");
  }

  TEST_CASE("code block extraction") {
    CHECK(extract_code_block("text\n```c\nint x;\n```\nmore") == "int x;\n");
    CHECK(extract_code_block("no fences") == "no fences");
  }

  TEST_CASE("synthetic provider rejects unknown tasks") {
    SyntheticProvider p;
    try {
      p.complete(ChatRequest::make(LlmRole::Chat, {{"system", "[task: nothing]"}, {"user", "x"}}));
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK_FALSE(e.transient());
    }
  }

  TEST_CASE("http provider speaks the chat completions protocol") {
    StubServer server(1);
    ::setenv("KGFUZZ_TEST_KEY", "secret", 1);
    auto http = std::make_shared<HttpChatProvider>(
        HttpProviderConfig{server.url("/v1/chat/completions"), "m1", "KGFUZZ_TEST_KEY", 1234, 10});
    LlmGateway gw(http, http, GatewayConfig{1, std::chrono::milliseconds(1), std::chrono::milliseconds(1), {}, 1});
    CHECK(gw.complete(simple_request(LlmRole::Coder, "abc")) == "cba");
    CHECK(gw.attempts() == 2);
    CHECK(server.last_auth == "Bearer secret");
    CHECK(server.last_body.at("model") == "m1");
    CHECK(server.last_body.at("seed") == 1234);
    CHECK(server.last_body.at("temperature") == 0.7);

    HttpProviderConfig missing{server.url("/v1/chat/completions"), "m1", "KGFUZZ_TEST_KEY_UNSET", 0, 10};
    ::unsetenv("KGFUZZ_TEST_KEY_UNSET");
    HttpChatProvider p(missing);
    CHECK_THROWS_AS(p.complete(simple_request(LlmRole::Chat, "x")), ProviderError);
  }

  TEST_CASE("http embedder checks the dimension") {
    StubServer server;
    HttpEmbedder ok(server.url("/v1/embeddings"), "e", "", 4);
    CHECK(ok.embed("x") == std::vector<float>{0.5f, 0.5f, 0.5f, 0.5f});
    HttpEmbedder wrong(server.url("/v1/embeddings"), "e", "", 8);
    CHECK_THROWS_AS(wrong.embed("x"), Error);
  }

  TEST_CASE("split_url") {
    const auto u = split_url("https://api.example.com/v1/chat/completions");
    CHECK(u.scheme_host_port == "https://api.example.com");
    CHECK(u.path == "/v1/chat/completions");
  }
}
