// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/postprocessor.hpp"

#include <cctype>
#include <fstream>

#include "scratchplot/errors.hpp"
#include "scratchplot/text.hpp"

namespace scratchplot {

namespace {

// nltk's original English list.
constexpr const char* kStopwords[] = {
    "i",       "me",        "my",     "myself", "we",    "our",     "ours",    "ourselves", "you",   "your",
    "yours",   "yourself",  "yourselves", "he", "him",   "his",     "himself", "she",       "her",   "hers",
    "herself", "it",        "its",    "itself", "they",  "them",    "their",   "theirs",    "themselves",
    "what",    "which",     "who",    "whom",   "this",  "that",    "these",   "those",     "am",    "is",
    "are",     "was",       "were",   "be",     "been",  "being",   "have",    "has",       "had",   "having",
    "do",      "does",      "did",    "doing",  "a",     "an",      "the",     "and",       "but",   "if",
    "or",      "because",   "as",     "until",  "while", "of",      "at",      "by",        "for",   "with",
    "about",   "against",   "between", "into",  "through", "during", "before", "after",     "above", "below",
    "to",      "from",      "up",     "down",   "in",    "out",     "on",      "off",       "over",  "under",
    "again",   "further",   "then",   "once",   "here",  "there",   "when",    "where",     "why",   "how",
    "all",     "any",       "both",   "each",   "few",   "more",    "most",    "other",     "some",  "such",
    "no",      "nor",       "not",    "only",   "own",   "same",    "so",      "than",      "too",   "very",
    "s",       "t",         "can",    "will",   "just",  "don",     "should",  "now"};

const std::set<std::string> kPersonPronouns = {"i",    "me",   "my",    "mine",     "myself",
                                               "we",   "us",   "our",   "ours",     "ourselves",
                                               "you",  "your", "yours", "yourself", "yourselves"};

// Decodes the code point ending at `end` (exclusive); returns it and its byte length.
std::pair<char32_t, std::size_t> last_code_point(std::string_view s, std::size_t end) {
    std::size_t start = end - 1;
    while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80 && end - start < 4) --start;
    const auto lead = static_cast<unsigned char>(s[start]);
    const std::size_t len = end - start;
    char32_t cp = 0;
    if (lead < 0x80 || len == 1) return {lead, 1};
    if ((lead & 0xE0) == 0xC0) cp = lead & 0x1F;
    else if ((lead & 0xF0) == 0xE0) cp = lead & 0x0F;
    else cp = lead & 0x07;
    for (std::size_t i = start + 1; i < end; ++i) cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
    return {cp, len};
}

bool is_letter(char32_t cp) {
    if (cp < 0x80) return std::isalpha(static_cast<int>(cp)) != 0;
    if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    return true;
}

}  // namespace

std::string_view to_string(PostRule rule) noexcept {
    switch (rule) {
        case PostRule::StripTrailingPunct: return "strip_trailing_punct";
        case PostRule::FilterPromptRepeat: return "filter_prompt_repeat";
        case PostRule::FilterPersonPronouns: return "filter_person_pronouns";
        case PostRule::FilterByPlotElements: return "filter_by_plot_elements";
    }
    return "unknown";
}

RuleMatrix RuleMatrix::defaults() {
    using K = PlotElementKind;
    using R = PostRule;
    return RuleMatrix({
        {K::Location, {R::StripTrailingPunct, R::FilterPromptRepeat}},
        {K::CastMale, {R::StripTrailingPunct, R::FilterPromptRepeat}},
        {K::CastFemale, {R::StripTrailingPunct, R::FilterPromptRepeat}},
        {K::Genre, {R::StripTrailingPunct, R::FilterPromptRepeat}},
        {K::Theme, {R::FilterPromptRepeat, R::FilterPersonPronouns}},
        {K::StoryBody, {R::FilterPromptRepeat, R::FilterPersonPronouns, R::FilterByPlotElements}},
        {K::StoryEnding, {R::FilterPromptRepeat, R::FilterPersonPronouns}},
    });
}

bool RuleMatrix::applies(PlotElementKind kind, PostRule rule) const {
    auto it = rules_.find(kind);
    return it != rules_.end() && it->second.contains(rule);
}

std::set<PostRule> RuleMatrix::rules_for(PlotElementKind kind) const {
    auto it = rules_.find(kind);
    return it == rules_.end() ? std::set<PostRule>{} : it->second;
}

const StopwordList& StopwordList::defaults() {
    static const StopwordList list(std::set<std::string>(std::begin(kStopwords), std::end(kStopwords)));
    return list;
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open stopword list " + path.string());
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto w = text::trim(line);
        if (w.empty() || w.front() == '#') continue;
        words.insert(text::to_lower(w));
    }
    return StopwordList(std::move(words));
}

std::string strip_trailing_punct(std::string_view text) {
    std::size_t end = text.size();
    while (end > 0) {
        const auto [cp, len] = last_code_point(text, end);
        if (is_letter(cp)) break;
        end -= len;
    }
    return std::string(text.substr(0, end));
}

bool violates_prompt_repeat(std::string_view candidate, std::string_view task_desc,
                            std::span<const std::string> bound_values, const StopwordList& stopwords) {
    std::set<std::string> excluded;
    for (const auto& v : bound_values) {
        for (auto& w : text::content_words(v)) excluded.insert(std::move(w));
    }
    std::set<std::string> task_words;
    for (auto& w : text::content_words(task_desc)) {
        if (!stopwords.contains(w) && !excluded.contains(w)) task_words.insert(std::move(w));
    }
    for (const auto& w : text::content_words(candidate)) {
        if (task_words.contains(w)) return true;
    }
    return false;
}

bool violates_prompt_repeat(std::string_view candidate, std::string_view task_desc, std::string_view x1,
                            const StopwordList& stopwords) {
    const std::string bound[] = {std::string(x1)};
    return violates_prompt_repeat(candidate, task_desc, bound, stopwords);
}

bool violates_person_pronouns(std::string_view text) {
    for (const auto& w : text::content_words(text)) {
        if (kPersonPronouns.contains(w)) return true;
    }
    return false;
}

bool contains_phrase(std::string_view haystack, std::string_view phrase) {
    const auto needle = text::to_lower(text::trim(phrase));
    if (needle.empty()) return false;
    const auto hay = text::to_lower(haystack);
    auto boundary = [&](std::size_t i) { return !text::is_word_byte(static_cast<unsigned char>(hay[i])); };
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        const std::size_t end = pos + needle.size();
        if ((pos == 0 || boundary(pos - 1)) && (end == hay.size() || boundary(end))) return true;
    }
    return false;
}

bool violates_missing_plot_elements(std::string_view body, const ContentPlan& plan) {
    plan.require_complete();
    int present = 0;
    present += contains_phrase(body, first_name(plan.cast_male->text)) ? 1 : 0;
    present += contains_phrase(body, first_name(plan.cast_female->text)) ? 1 : 0;
    present += contains_phrase(body, plan.location->text) ? 1 : 0;
    return present < 2;
}

PostprocessOutcome Postprocessor::process(PlotElementKind kind, std::string_view raw,
                                          const PostprocessContext& ctx) const {
    auto active = [&](PostRule r) { return rules_.applies(kind, r); };
    auto reject = [](PostRule r) { return PostprocessOutcome{std::nullopt, r}; };

    std::string text = text::trim(raw);
    if (active(PostRule::StripTrailingPunct)) {
        text = strip_trailing_punct(text);
        if (text.empty()) return reject(PostRule::StripTrailingPunct);
    }
    if (text.empty()) return {std::nullopt, std::nullopt};
    if (active(PostRule::FilterPromptRepeat)) {
        if (!ctx.task_desc) {
            throw ConfigurationError("prompt-repeat filter on " + std::string(to_string(kind)) +
                                     " needs the task description");
        }
        if (violates_prompt_repeat(text, *ctx.task_desc, ctx.bound_values, stopwords_)) {
            return reject(PostRule::FilterPromptRepeat);
        }
    }
    if (active(PostRule::FilterPersonPronouns) && violates_person_pronouns(text)) {
        return reject(PostRule::FilterPersonPronouns);
    }
    if (active(PostRule::FilterByPlotElements)) {
        if (!ctx.plan || !ctx.plan->complete()) {
            throw ConfigurationError("plot-element filter on " + std::string(to_string(kind)) +
                                     " needs a complete content plan");
        }
        if (violates_missing_plot_elements(text, *ctx.plan)) return reject(PostRule::FilterByPlotElements);
    }
    return {std::move(text), std::nullopt};
}

}  // namespace scratchplot
