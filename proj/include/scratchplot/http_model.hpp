// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "json.hpp"
#include "scratchplot/lm_gateway.hpp"

namespace scratchplot {

/// Client for the model server's JSON wire protocol:
///
///   POST /v1/next_token {model, context, candidates?, top_n?} -> {entries: [{token, prob}], complete}
///   POST /v1/score      {model, prefix, continuation}         -> {tokens, logprobs}
///   POST /v1/nsp        {model, first, second}                -> {prob}
///   POST /v1/tokenize   {model, text}                         -> {tokens}
///
/// Tokens are decoded text pieces, so detokenize is plain concatenation.
/// Error statuses: 404 unknown model, 422 window exceeded ({"window": n}),
/// 501 capability missing. Connection failures and 5xx are retried.
class HttpLanguageModel final : public LanguageModel {
public:
    struct Options {
        std::string base_url;
        std::string model;
        std::size_t context_window = 1024;
        /// Encoder window when this handle serves NSP; nullopt disables NSP.
        std::optional<std::size_t> nsp_window;
        std::size_t nsp_special_tokens = 3;
        std::optional<int> top_n;
        int max_attempts = 3;
        std::chrono::milliseconds retry_backoff{200};
        std::chrono::seconds timeout{120};
    };

    explicit HttpLanguageModel(Options options);

    /// Base URL from SCRATCHPLOT_LM_URL, else `fallback`.
    static std::string base_url_from_env(const std::string& fallback);

    TokenDistribution next_token_distribution(std::span<const Token> context,
                                              const std::optional<std::set<Token>>& candidates = std::nullopt,
                                              std::optional<int> top_n = std::nullopt) const override;
    ScoredContinuation score_continuation(std::span<const Token> prefix,
                                          std::span<const Token> continuation) const override;
    TokenSequence tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const Token> tokens) const override;
    std::size_t context_window() const noexcept override { return options_.context_window; }
    std::optional<Token> end_of_text() const override { return Token{"<|endoftext|>"}; }

    const Options& options() const noexcept { return options_; }

protected:
    std::optional<std::size_t> nsp_window() const override { return options_.nsp_window; }
    std::size_t nsp_special_tokens() const override { return options_.nsp_special_tokens; }
    double raw_nsp(std::string_view first, std::string_view second) const override;

private:
    nlohmann::json post(const std::string& path, nlohmann::json body) const;

    Options options_;
};

}  // namespace scratchplot
