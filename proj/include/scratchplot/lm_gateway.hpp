// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scratchplot {

using Token = std::string;
using TokenSequence = std::vector<Token>;

/// Next-token probabilities. `complete` distributions sum to one; `partial`
/// ones come from candidate-restricted queries and sum to at most one.
struct TokenDistribution {
    std::map<Token, double> entries;
    bool complete = true;

    double total() const noexcept;
    /// Probability of `token`, or nullopt when the token is not listed.
    std::optional<double> find(const Token& token) const;
    double prob_or_zero(const Token& token) const;
    bool empty() const noexcept { return entries.empty(); }
    std::size_t size() const noexcept { return entries.size(); }

    /// Throws PreconditionError when an invariant does not hold.
    void validate(double tolerance = 1e-6) const;
    /// Same distribution scaled to sum to one and marked complete.
    TokenDistribution normalized() const;
};

/// Natural-log probabilities of a scored continuation, one per token.
struct ScoredContinuation {
    TokenSequence tokens;
    std::vector<double> logprobs;
};

/// NSP result together with whether the first text had to be left-truncated.
struct NspScore {
    double probability = 0.0;
    bool truncated = false;
};

/// Uniform interface to a language model backend.
///
/// Implementations must be safe for concurrent calls on a shared const handle;
/// every call is independent of every other.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    /// Distribution over the token following `context`. When `candidates` is
    /// given the result holds exactly those tokens and is marked partial;
    /// otherwise the backend returns its full (or top `top_n`) distribution.
    virtual TokenDistribution next_token_distribution(std::span<const Token> context,
                                                      const std::optional<std::set<Token>>& candidates = std::nullopt,
                                                      std::optional<int> top_n = std::nullopt) const = 0;

    /// logprobs[i] = ln p(continuation[i] | prefix ++ continuation[0..i)).
    /// Prefix tokens are conditioned on and never scored.
    virtual ScoredContinuation score_continuation(std::span<const Token> prefix,
                                                  std::span<const Token> continuation) const = 0;

    virtual TokenSequence tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(std::span<const Token> tokens) const = 0;

    /// Maximum number of tokens the backend conditions on.
    virtual std::size_t context_window() const noexcept = 0;
    /// End-of-text marker emitted by the backend, if any.
    virtual std::optional<Token> end_of_text() const { return std::nullopt; }

    /// P_NSP(first, second). When the encoded pair does not fit the encoder
    /// window, `first` is truncated from its left edge; `second` is kept intact.
    NspScore nsp_score(std::string_view first, std::string_view second) const;
    double nsp_probability(std::string_view first, std::string_view second) const {
        return nsp_score(first, second).probability;
    }

protected:
    /// Encoder window for NSP queries; nullopt means the backend has no NSP capability.
    virtual std::optional<std::size_t> nsp_window() const { return std::nullopt; }
    /// Tokens the encoder adds around a sentence pair ([CLS], [SEP], [SEP] for BERT).
    virtual std::size_t nsp_special_tokens() const { return 0; }
    /// Tokenizer of the NSP encoder; defaults to this backend's tokenizer.
    virtual TokenSequence nsp_tokenize(std::string_view text) const { return tokenize(text); }
    virtual std::string nsp_detokenize(std::span<const Token> tokens) const { return detokenize(tokens); }
    virtual double raw_nsp(std::string_view first, std::string_view second) const;
};

}  // namespace scratchplot
