// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "scratchplot/lm_gateway.hpp"

namespace scratchplot {

/// A context pattern and the distribution it yields.
///
/// The pattern is matched against the end of the context. The token "*"
/// matches any run of tokens (including none), so {"male", "*", "name:"}
/// matches every context ending in "name:" that mentions "male" earlier.
struct ScriptRule {
    TokenSequence pattern;
    TokenDistribution next;
};

/// Deterministic table-driven backend used for tests and offline runs.
///
/// Tokenization splits on whitespace and detokenization joins with one space.
/// Lookup picks the matching rule with the most literal tokens (first in
/// declaration order on ties) and falls back to the default distribution.
/// Immutable after construction, so concurrent reads are safe.
///
/// JSON schema:
///   {
///     "context_window": 1024,            // optional
///     "end_of_text": "<|endoftext|>",    // optional
///     "vocabulary": ["a", "b"],          // optional; "default": "uniform" uses it
///     "default": {"a": 0.5, "b": 0.5} | "uniform",   // optional
///     "rules": [{"context": ["The"], "next": {"cat": 0.7, "dog": 0.3}}],
///     "nsp": {"window": 512, "default": 0.5,
///             "pairs": [{"first": "a", "second": "b", "prob": 0.9}]}  // optional
///   }
class ScriptedModel final : public LanguageModel {
public:
    using NspTable = std::map<std::pair<std::string, std::string>, double>;

    struct NspConfig {
        NspTable table;
        double default_prob = 0.5;
        std::size_t window = 512;
    };

    struct Options {
        std::size_t context_window = 1024;
        std::optional<Token> end_of_text = Token{"<|endoftext|>"};
        std::optional<NspConfig> nsp = NspConfig{};
    };

    ScriptedModel(std::vector<ScriptRule> rules, std::optional<TokenDistribution> fallback, Options options);
    ScriptedModel(std::vector<ScriptRule> rules, std::optional<TokenDistribution> fallback)
        : ScriptedModel(std::move(rules), std::move(fallback), Options{}) {}

    static ScriptedModel from_json(const nlohmann::json& script);
    static ScriptedModel load(const std::filesystem::path& path);
    static TokenDistribution uniform(std::span<const Token> vocabulary);

    /// The scripted distribution for `context` (always complete).
    const TokenDistribution& lookup(std::span<const Token> context) const;

    TokenDistribution next_token_distribution(std::span<const Token> context,
                                              const std::optional<std::set<Token>>& candidates = std::nullopt,
                                              std::optional<int> top_n = std::nullopt) const override;
    ScoredContinuation score_continuation(std::span<const Token> prefix,
                                          std::span<const Token> continuation) const override;
    TokenSequence tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const Token> tokens) const override;
    std::size_t context_window() const noexcept override { return options_.context_window; }
    std::optional<Token> end_of_text() const override { return options_.end_of_text; }

    const std::vector<ScriptRule>& rules() const noexcept { return rules_; }

protected:
    std::optional<std::size_t> nsp_window() const override;
    double raw_nsp(std::string_view first, std::string_view second) const override;

private:
    std::vector<ScriptRule> rules_;
    std::vector<std::size_t> specificity_;
    std::optional<TokenDistribution> fallback_;
    Options options_;
};

/// True when `pattern` matches a suffix of `context` ("*" is a wildcard run).
bool pattern_matches_suffix(std::span<const Token> pattern, std::span<const Token> context);

}  // namespace scratchplot
