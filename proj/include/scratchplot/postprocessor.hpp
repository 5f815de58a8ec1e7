// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scratchplot/plot.hpp"

namespace scratchplot {

enum class PostRule { StripTrailingPunct, FilterPromptRepeat, FilterPersonPronouns, FilterByPlotElements };

inline constexpr std::array<PostRule, 4> kAllPostRules = {PostRule::StripTrailingPunct, PostRule::FilterPromptRepeat,
                                                         PostRule::FilterPersonPronouns,
                                                         PostRule::FilterByPlotElements};

std::string_view to_string(PostRule rule) noexcept;

/// Which rules run for which kind of generation.
class RuleMatrix {
public:
    RuleMatrix() = default;
    explicit RuleMatrix(std::map<PlotElementKind, std::set<PostRule>> rules) : rules_(std::move(rules)) {}

    /// Strip on location/cast/genre; prompt-repeat on everything; pronouns on
    /// theme/body/ending; plot elements on body only.
    static RuleMatrix defaults();

    bool applies(PlotElementKind kind, PostRule rule) const;
    std::set<PostRule> rules_for(PlotElementKind kind) const;

    bool operator==(const RuleMatrix&) const = default;

private:
    std::map<PlotElementKind, std::set<PostRule>> rules_;
};

/// English stopwords, lowercased.
class StopwordList {
public:
    explicit StopwordList(std::set<std::string> words) : words_(std::move(words)) {}

    /// The classic 127-word English list (also shipped as config/stopwords.txt).
    static const StopwordList& defaults();
    /// One word per line; blank lines and lines starting with '#' are ignored.
    static StopwordList load(const std::filesystem::path& path);

    bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
    std::size_t size() const noexcept { return words_.size(); }
    const std::set<std::string>& words() const noexcept { return words_; }

private:
    std::set<std::string> words_;
};

/// Remove trailing non-letter characters until the text ends with a letter.
std::string strip_trailing_punct(std::string_view text);

/// True when `candidate` shares a content word with `task_desc`. Stopwords and
/// the words of the bound placeholder values are not counted.
bool violates_prompt_repeat(std::string_view candidate, std::string_view task_desc,
                            std::span<const std::string> bound_values,
                            const StopwordList& stopwords = StopwordList::defaults());
bool violates_prompt_repeat(std::string_view candidate, std::string_view task_desc, std::string_view x1,
                            const StopwordList& stopwords = StopwordList::defaults());

/// True when any word is a first- or second-person pronoun ("I'll" counts as "i").
bool violates_person_pronouns(std::string_view text);

/// True when fewer than two of {male first name, female first name, location}
/// occur in `body` (case-insensitive, whole words).
bool violates_missing_plot_elements(std::string_view body, const ContentPlan& plan);

/// Case-insensitive phrase search on word boundaries.
bool contains_phrase(std::string_view haystack, std::string_view phrase);

struct PostprocessContext {
    std::optional<std::string> task_desc;   ///< rendered prompt the text was generated from
    std::vector<std::string> bound_values;  ///< texts that filled its placeholders
    std::optional<ContentPlan> plan;
};

struct PostprocessOutcome {
    std::optional<std::string> text;        ///< cleaned text, or nullopt when filtered
    std::optional<PostRule> rejected_by;
};

class Postprocessor {
public:
    Postprocessor() : Postprocessor(RuleMatrix::defaults(), StopwordList::defaults()) {}
    Postprocessor(RuleMatrix rules, StopwordList stopwords)
        : rules_(std::move(rules)), stopwords_(std::move(stopwords)) {}

    /// Applies the kind's rules in the order strip, prompt repeat, pronouns,
    /// plot elements. Throws ConfigurationError when an active rule lacks context.
    PostprocessOutcome process(PlotElementKind kind, std::string_view text, const PostprocessContext& ctx) const;

    std::optional<std::string> postprocess(PlotElementKind kind, std::string_view text,
                                           const PostprocessContext& ctx) const {
        return process(kind, text, ctx).text;
    }

    const RuleMatrix& rules() const noexcept { return rules_; }
    const StopwordList& stopwords() const noexcept { return stopwords_; }

private:
    RuleMatrix rules_;
    StopwordList stopwords_;
};

}  // namespace scratchplot
