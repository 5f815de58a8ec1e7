// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "scratchplot/lm_gateway.hpp"
#include "scratchplot/plot.hpp"

namespace scratchplot {

struct GenerationParams {
    int num = 1;       ///< continuations per task description (and per input)
    int min_len = 1;   ///< tokens
    int max_len = 20;  ///< tokens
    int top_k = 30;
    int block_ngram = 3;  ///< 0 disables repeat blocking

    /// Defaults for each kind: top_k 30, trigram blocking, and (num, min_len, max_len)
    /// Location 20/1/5, Cast 10/1/5, Genre 20/1/5, Theme 10/5/25, Body 30/1/100, Ending 10/10/50.
    static GenerationParams for_kind(PlotElementKind kind);
    /// Throws PreconditionError when an invariant is violated.
    void validate() const;

    bool operator==(const GenerationParams&) const = default;
};

enum class StopRule {
    CloseQuote,   ///< stop at the first closing quotation mark (never before min_len)
    FixedLength,  ///< generate max_len tokens, then cut back to the last complete sentence
};

/// Sibling task descriptions competing with the target during self-debiasing.
/// The target prompt is the one passed to sample_continuation.
struct DebiasGroup {
    std::vector<std::string> other_prompts;
    /// Candidates are the union of each description's `candidate_window` most likely tokens.
    int candidate_window = 50;
    /// When false the debiased scores only drive the first sampled token.
    bool every_step = true;
};

struct Continuation {
    std::string text;        ///< excludes the prompt and the stop token
    TokenSequence tokens;    ///< sampled tokens (stop token excluded)
    bool stopped = false;    ///< a stop token or end-of-text ended generation before max_len
    bool truncation_fallback = false;  ///< FixedLength found no complete sentence
    std::size_t blocking_fallbacks = 0;  ///< steps where every candidate completed a repeated n-gram
};

/// Keep the k most probable tokens and renormalize. Ties at the boundary go to
/// the lexicographically smaller token.
TokenDistribution apply_top_k(const TokenDistribution& dist, int k);

/// Tokens that would complete an n-gram already present in `context`.
std::set<Token> banned_ngram_completions(std::span<const Token> context, int n);

struct BlockedDistribution {
    TokenDistribution dist;
    bool all_banned = false;  ///< every token was banned; `dist` is the input unchanged
};

/// Zero out tokens that would repeat an n-gram of `context`, then renormalize.
BlockedDistribution block_repeat_ngrams(std::span<const Token> context, const TokenDistribution& dist, int n);

/// delta(t) = p_target(t) - max over the other descriptions of p_other(t).
/// `per_description[0]` is the target. Throws CoverageError when a candidate
/// is missing from any description's distribution.
std::map<Token, double> self_debias_step(std::span<const TokenDistribution> per_description,
                                         const std::set<Token>& candidates);

struct TruncatedText {
    std::string text;
    bool fallback = false;  ///< no sentence-final mark; text returned unchanged
};

/// Prefix ending at the last '.', '!' or '?' (optionally followed by a closing quote).
TruncatedText truncate_to_last_sentence(std::string_view text);

/// True for tokens that carry a closing quotation mark.
bool is_quote_token(const Token& token);

/// Sample one continuation of `prompt`. Per step: distribution(s) -> debiased
/// scores (if `debias`) -> top-k -> n-gram blocking -> stop-token suppression
/// below min_len -> sample. Returns nullopt when filtering leaves no token.
std::optional<Continuation> sample_continuation(const LanguageModel& model, std::string_view prompt,
                                                const GenerationParams& params, StopRule stop,
                                                const std::optional<DebiasGroup>& debias, std::uint64_t seed);

}  // namespace scratchplot
