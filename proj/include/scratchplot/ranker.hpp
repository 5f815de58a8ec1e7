// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scratchplot/lm_gateway.hpp"

namespace scratchplot {

enum class RankMethod { Ppl, Nsp, Random };

std::string_view to_string(RankMethod method) noexcept;
RankMethod parse_rank_method(std::string_view name);

/// Scores of one (body, ending) pair. Lower ppl is better; higher nsp is better.
struct EndingScore {
    double ppl = 0.0;
    std::optional<double> nsp;
};

struct PerplexityResult {
    double ppl = 0.0;
    std::size_t ending_tokens = 0;
    bool body_truncated = false;  ///< body was cut from the left to fit the context window
};

/// exp(-mean log-prob) of the given natural-log probabilities.
double perplexity_from_logprobs(std::span<const double> logprobs);

/// Perplexity of `ending` conditioned on `body`:
///   PPL = (prod_{i=1..E} 1 / p(e_i | body, e_<i))^(1/E)
/// Body tokens condition the ending but are never scored.
PerplexityResult conditional_ppl(const LanguageModel& model, std::string_view body, std::string_view ending);

/// Indices of `scores` best-first: ascending ppl, descending nsp, or a seeded
/// shuffle. The sort is stable, so ties keep insertion order.
std::vector<std::size_t> rank_pairs(std::span<const EndingScore> scores, RankMethod method, std::uint64_t seed = 0);

enum class ClozeLabel { A, B };

struct ClozeItem {
    std::string id;
    std::string context;  ///< the four context sentences joined by single spaces
    std::string ending_a;
    std::string ending_b;
    ClozeLabel label = ClozeLabel::A;
};

/// Reads the public Story Cloze layout:
///   InputStoryid, InputSentence1..4, RandomFifthSentenceQuiz1, RandomFifthSentenceQuiz2, AnswerRightEnding
/// Comma- or tab-delimited, RFC 4180 quoting. A header row is optional.
std::vector<ClozeItem> parse_cloze(std::istream& in);
std::vector<ClozeItem> load_cloze(const std::filesystem::path& path);

struct ClozePrediction {
    std::string id;
    std::optional<ClozeLabel> predicted;  ///< nullopt when the item was skipped
    double score_a = 0.0;
    double score_b = 0.0;
    bool correct = false;
    std::string error;
};

struct ClozeReport {
    double accuracy = 0.0;            ///< correct / total; skipped items count as wrong
    double accuracy_evaluated = 0.0;  ///< correct / evaluated
    std::size_t total = 0;
    std::size_t evaluated = 0;
    std::size_t correct = 0;
    std::size_t skipped = 0;
    std::vector<ClozePrediction> predictions;
};

/// Predict the ending with the lower conditional PPL (method Ppl) or the higher
/// NSP probability (method Nsp), ties going to ending A. Items whose backend
/// calls fail are skipped and counted.
ClozeReport cloze_evaluate(const LanguageModel& model, std::span<const ClozeItem> items, RankMethod method);

}  // namespace scratchplot
