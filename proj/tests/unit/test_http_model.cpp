// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "scratchplot/errors.hpp"
#include "scratchplot/http_model.hpp"

using namespace scratchplot;
using nlohmann::json;

namespace {

// In-process stand-in for the model server. Handlers see the parsed request body.
class FakeServer {
public:
    using Handler = std::function<void(const json&, httplib::Response&)>;

    FakeServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    void on(const std::string& path, Handler h) {
        server_.Post(path, [this, h](const httplib::Request& req, httplib::Response& res) {
            const auto body = json::parse(req.body);
            {
                std::lock_guard lock(mu_);
                requests_.push_back(body);
            }
            h(body, res);
        });
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::vector<json> requests() {
        std::lock_guard lock(mu_);
        return requests_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex mu_;
    std::vector<json> requests_;
};

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

HttpLanguageModel client(const FakeServer& s, std::optional<std::size_t> nsp_window = std::nullopt) {
    HttpLanguageModel::Options o;
    o.base_url = s.url();
    o.model = "gpt2";
    o.context_window = 8;
    o.nsp_window = nsp_window;
    o.retry_backoff = std::chrono::milliseconds(1);
    o.timeout = std::chrono::seconds(5);
    return HttpLanguageModel(o);
}

}  // namespace

TEST_CASE("next_token request and response shape") {
    FakeServer s;
    s.on("/v1/next_token", [](const json& req, httplib::Response& res) {
        if (req.contains("candidates")) {
            reply(res, 200, {{"entries", {{{"token", " cat"}, {"prob", 0.4}}}}, {"complete", false}});
        } else {
            reply(res, 200,
                  {{"entries", {{{"token", " cat"}, {"prob", 0.4}}, {{"token", " dog"}, {"prob", 0.6}}}},
                   {"complete", true}});
        }
    });
    const auto m = client(s);
    const TokenSequence ctx{"The", " pet"};

    const auto full = m.next_token_distribution(ctx, std::nullopt, 5);
    CHECK(full.complete);
    CHECK(full.prob_or_zero(" dog") == 0.6);

    const auto part = m.next_token_distribution(ctx, std::set<Token>{" cat", " emu"});
    CHECK_FALSE(part.complete);
    CHECK(part.size() == 2);
    CHECK(part.find(" emu") == 0.0);

    const auto reqs = s.requests();
    REQUIRE(reqs.size() == 2);
    CHECK(reqs[0] == json{{"model", "gpt2"}, {"context", "The pet"}, {"top_n", 5}});
    CHECK(reqs[1] == json{{"model", "gpt2"}, {"context", "The pet"}, {"candidates", {" cat", " emu"}}});
}

TEST_CASE("score, tokenize and nsp endpoints") {
    FakeServer s;
    s.on("/v1/score", [](const json& req, httplib::Response& res) {
        CHECK(req.at("prefix") == "A B");
        CHECK(req.at("continuation") == " C");
        reply(res, 200, {{"tokens", {" C"}}, {"logprobs", {-0.5}}});
    });
    s.on("/v1/tokenize", [](const json& req, httplib::Response& res) {
        const bool hello = req.at("text") == "Hello world";
        reply(res, 200, {{"tokens", hello ? json{"Hello", " world"} : json{req.at("text")}}});
    });
    s.on("/v1/nsp", [](const json& req, httplib::Response& res) {
        CHECK(req.at("model") == "gpt2");
        reply(res, 200, {{"prob", req.at("first") == "Hello world" ? 0.9 : 0.1}});
    });
    const auto m = client(s, 512);
    const auto scored = m.score_continuation(TokenSequence{"A", " B"}, TokenSequence{" C"});
    CHECK(scored.logprobs == std::vector<double>{-0.5});
    CHECK(m.tokenize("Hello world") == TokenSequence{"Hello", " world"});
    CHECK(m.detokenize(TokenSequence{"Hello", " world"}) == "Hello world");
    CHECK(m.tokenize("").empty());
    CHECK(m.nsp_probability("Hello world", "Bye.") == 0.9);
}

TEST_CASE("status codes map to typed errors") {
    FakeServer s;
    s.on("/v1/next_token", [](const json&, httplib::Response& res) { reply(res, 404, {{"error", "no such model"}}); });
    s.on("/v1/score", [](const json&, httplib::Response& res) { reply(res, 422, {{"window", 1024}, {"requested", 2000}}); });
    s.on("/v1/nsp", [](const json&, httplib::Response& res) { reply(res, 501, {{"error", "no NSP head"}}); });
    s.on("/v1/tokenize", [](const json&, httplib::Response& res) { reply(res, 400, {{"error", "bad"}}); });
    const auto m = client(s, 512);

    CHECK_THROWS_AS(m.next_token_distribution(TokenSequence{"x"}), ConfigurationError);
    try {
        m.score_continuation(TokenSequence{"x"}, TokenSequence{"y"});
        FAIL("expected WindowExceededError");
    } catch (const WindowExceededError& e) {
        CHECK(e.limit() == 1024);
        CHECK(e.requested() == 2000);
    }
    CHECK_THROWS_AS(m.tokenize("x"), PreconditionError);
    // NSP first tokenizes both texts, which fails with 400 here.
    CHECK_THROWS_AS(m.nsp_probability("a", "b"), PreconditionError);
    // None of these statuses is retried.
    CHECK(s.requests().size() == 4);
}

TEST_CASE("capability errors and client-side window checks") {
    FakeServer s;
    s.on("/v1/tokenize", [](const json& req, httplib::Response& res) {
        reply(res, 200, {{"tokens", {req.at("text")}}});
    });
    s.on("/v1/nsp", [](const json&, httplib::Response& res) { reply(res, 501, {{"error", "no NSP head"}}); });
    CHECK_THROWS_AS(client(s).nsp_probability("a", "b"), CapabilityError);
    CHECK_THROWS_AS(client(s, 512).nsp_probability("a", "b"), CapabilityError);
    CHECK_THROWS_AS(client(s).score_continuation(TokenSequence(6, "a"), TokenSequence(3, "b")), WindowExceededError);
    CHECK_THROWS_AS(client(s).next_token_distribution(TokenSequence{}), PreconditionError);
}

TEST_CASE("server errors are retried, then reported with the attempt count") {
    FakeServer s;
    std::atomic<int> calls{0};
    s.on("/v1/next_token", [&](const json&, httplib::Response& res) {
        if (++calls < 3) {
            reply(res, 503, {{"error", "warming up"}});
        } else {
            reply(res, 200, {{"entries", {{{"token", "a"}, {"prob", 1.0}}}}, {"complete", true}});
        }
    });
    s.on("/v1/score", [](const json&, httplib::Response& res) { reply(res, 500, {{"error", "boom"}}); });
    const auto m = client(s);

    CHECK(m.next_token_distribution(TokenSequence{"x"}).prob_or_zero("a") == 1.0);
    CHECK(calls == 3);

    try {
        m.score_continuation(TokenSequence{"x"}, TokenSequence{"y"});
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 3);
        CHECK(e.last_status() == 500);
    }
}

TEST_CASE("unreachable server raises a transport error") {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpLanguageModel::Options o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port);
    o.model = "gpt2";
    o.max_attempts = 2;
    o.retry_backoff = std::chrono::milliseconds(1);
    o.timeout = std::chrono::seconds(2);
    const HttpLanguageModel m(o);
    try {
        m.tokenize("hello");
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 2);
        CHECK(e.last_status() == -1);
    }
}

TEST_CASE("malformed responses are errors") {
    FakeServer s;
    s.on("/v1/score", [](const json&, httplib::Response& res) {
        reply(res, 200, {{"tokens", {"a", "b"}}, {"logprobs", {-1.0}}});
    });
    s.on("/v1/next_token", [](const json&, httplib::Response& res) { reply(res, 200, {{"nope", 1}}); });
    const auto m = client(s);
    CHECK_THROWS_AS(m.score_continuation(TokenSequence{"x"}, TokenSequence{"y"}), Error);
    CHECK_THROWS_AS(m.next_token_distribution(TokenSequence{"x"}), Error);
}

TEST_CASE("NSP keeps the ending and cuts the body from the left") {
    FakeServer s;
    s.on("/v1/tokenize", [](const json& req, httplib::Response& res) {
        // One token per character.
        json toks = json::array();
        for (char c : req.at("text").get<std::string>()) toks.push_back(std::string(1, c));
        reply(res, 200, {{"tokens", toks}});
    });
    s.on("/v1/nsp", [](const json& req, httplib::Response& res) {
        reply(res, 200, {{"prob", req.at("first") == "fghij" ? 0.7 : 0.2}});
    });
    // Window 10 with 3 special tokens and a 2-token ending leaves 5 tokens of body.
    const auto m = client(s, 10);
    const auto r = m.nsp_score("abcdefghij", "xy");
    CHECK(r.truncated);
    CHECK(r.probability == 0.7);
    CHECK_FALSE(m.nsp_score("fghij", "xy").truncated);
    CHECK_THROWS_AS(m.nsp_score("a", "1234567"), WindowExceededError);
}

TEST_CASE("invalid options and the base URL override") {
    HttpLanguageModel::Options o;
    o.model = "gpt2";
    CHECK_THROWS_AS(HttpLanguageModel{o}, ConfigurationError);
    o.base_url = "http://127.0.0.1:1";
    o.max_attempts = 0;
    CHECK_THROWS_AS(HttpLanguageModel{o}, ConfigurationError);

    ::setenv("SCRATCHPLOT_LM_URL", "http://example.invalid:9", 1);
    CHECK(HttpLanguageModel::base_url_from_env("http://fallback") == "http://example.invalid:9");
    ::unsetenv("SCRATCHPLOT_LM_URL");
    CHECK(HttpLanguageModel::base_url_from_env("http://fallback") == "http://fallback");
}
