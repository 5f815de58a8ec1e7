// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/http_model.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "scratchplot/errors.hpp"

namespace scratchplot {

namespace {

std::string error_message(const httplib::Result& res) {
    try {
        auto j = nlohmann::json::parse(res->body);
        if (j.contains("error")) return j["error"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
    return res->body;
}

}  // namespace

HttpLanguageModel::HttpLanguageModel(Options options) : options_(std::move(options)) {
    if (options_.base_url.empty()) throw ConfigurationError("model server base URL is empty");
    if (options_.model.empty()) throw ConfigurationError("model id is empty");
    if (options_.max_attempts < 1) throw ConfigurationError("max_attempts must be at least 1");
}

std::string HttpLanguageModel::base_url_from_env(const std::string& fallback) {
    if (const char* url = std::getenv("SCRATCHPLOT_LM_URL"); url != nullptr && *url != '\0') return url;
    return fallback;
}

nlohmann::json HttpLanguageModel::post(const std::string& path, nlohmann::json body) const {
    body["model"] = options_.model;
    const std::string payload = body.dump();

    httplib::Client client(options_.base_url);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);

    int last_status = -1;
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        if (attempt > 1) std::this_thread::sleep_for(options_.retry_backoff * (1 << (attempt - 2)));
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status == 200) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw Error("malformed response from " + path + ": " + e.what());
            }
        }
        if (res->status == 404) {
            throw ConfigurationError("model server rejected model '" + options_.model + "': " + error_message(res));
        }
        if (res->status == 422) {
            std::size_t window = options_.context_window;
            std::size_t requested = 0;
            try {
                auto j = nlohmann::json::parse(res->body);
                window = j.value("window", window);
                requested = j.value("requested", requested);
            } catch (const nlohmann::json::exception&) {
            }
            throw WindowExceededError(window, requested);
        }
        if (res->status == 501) throw CapabilityError(error_message(res));
        if (res->status >= 400 && res->status < 500) {
            throw PreconditionError("model server returned " + std::to_string(res->status) + ": " + error_message(res));
        }
        last_error = "HTTP " + std::to_string(res->status);
    }
    throw TransportError("model server at " + options_.base_url + path + " failed after " +
                             std::to_string(options_.max_attempts) + " attempts: " + last_error,
                         options_.max_attempts, last_status);
}

TokenDistribution HttpLanguageModel::next_token_distribution(std::span<const Token> context,
                                                             const std::optional<std::set<Token>>& candidates,
                                                             std::optional<int> top_n) const {
    if (context.empty()) throw PreconditionError("next_token_distribution requires a non-empty context");
    nlohmann::json body{{"context", detokenize(context)}};
    if (candidates) body["candidates"] = std::vector<Token>(candidates->begin(), candidates->end());
    if (auto n = top_n ? top_n : options_.top_n) body["top_n"] = *n;

    const auto res = post("/v1/next_token", std::move(body));
    TokenDistribution out;
    try {
        for (const auto& e : res.at("entries")) out.entries[e.at("token").get<std::string>()] = e.at("prob").get<double>();
        out.complete = res.value("complete", !candidates.has_value());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed /v1/next_token response: ") + e.what());
    }
    if (candidates) {
        out.complete = false;
        for (const auto& tok : *candidates) out.entries.try_emplace(tok, 0.0);
    }
    return out;
}

ScoredContinuation HttpLanguageModel::score_continuation(std::span<const Token> prefix,
                                                         std::span<const Token> continuation) const {
    if (continuation.empty()) throw PreconditionError("score_continuation requires a non-empty continuation");
    const std::size_t needed = prefix.size() + continuation.size();
    if (needed > options_.context_window) throw WindowExceededError(options_.context_window, needed);

    const auto res = post("/v1/score", {{"prefix", detokenize(prefix)}, {"continuation", detokenize(continuation)}});
    ScoredContinuation out;
    try {
        out.tokens = res.at("tokens").get<TokenSequence>();
        out.logprobs = res.at("logprobs").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed /v1/score response: ") + e.what());
    }
    if (out.tokens.size() != out.logprobs.size()) throw Error("/v1/score returned mismatched tokens and logprobs");
    for (double lp : out.logprobs) {
        if (!(lp <= 0.0)) throw Error("/v1/score returned a positive or NaN log-probability");
    }
    return out;
}

TokenSequence HttpLanguageModel::tokenize(std::string_view text) const {
    if (text.empty()) return {};
    const auto res = post("/v1/tokenize", {{"text", std::string(text)}});
    try {
        return res.at("tokens").get<TokenSequence>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed /v1/tokenize response: ") + e.what());
    }
}

std::string HttpLanguageModel::detokenize(std::span<const Token> tokens) const {
    std::string out;
    for (const auto& t : tokens) out += t;
    return out;
}

double HttpLanguageModel::raw_nsp(std::string_view first, std::string_view second) const {
    const auto res = post("/v1/nsp", {{"first", std::string(first)}, {"second", std::string(second)}});
    try {
        return res.at("prob").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed /v1/nsp response: ") + e.what());
    }
}

}  // namespace scratchplot
