// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/decoder.hpp"

#include <algorithm>
#include <random>

#include "scratchplot/errors.hpp"
#include "scratchplot/text.hpp"

namespace scratchplot {

namespace {

// Entries sorted by score, descending; std::map order makes ties lexicographic.
std::vector<std::pair<Token, double>> ranked(const std::map<Token, double>& scores) {
    std::vector<std::pair<Token, double>> out(scores.begin(), scores.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Token sample(const TokenDistribution& dist, std::mt19937_64& rng) {
    const double target = unit_uniform(rng) * dist.total();
    double cumulative = 0.0;
    const Token* last = nullptr;
    for (const auto& [tok, p] : dist.entries) {
        if (p <= 0.0) continue;
        cumulative += p;
        last = &tok;
        if (target < cumulative) return tok;
    }
    return *last;
}

bool is_stop(const Token& tok, const std::optional<Token>& eos, StopRule rule) {
    if (eos && tok == *eos) return true;
    return rule == StopRule::CloseQuote && is_quote_token(tok);
}

TokenSequence concat(const TokenSequence& a, const TokenSequence& b) {
    TokenSequence out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

GenerationParams GenerationParams::for_kind(PlotElementKind kind) {
    GenerationParams p;
    switch (kind) {
        case PlotElementKind::Location: p.num = 20, p.min_len = 1, p.max_len = 5; break;
        case PlotElementKind::CastMale:
        case PlotElementKind::CastFemale: p.num = 10, p.min_len = 1, p.max_len = 5; break;
        case PlotElementKind::Genre: p.num = 20, p.min_len = 1, p.max_len = 5; break;
        case PlotElementKind::Theme: p.num = 10, p.min_len = 5, p.max_len = 25; break;
        case PlotElementKind::StoryBody: p.num = 30, p.min_len = 1, p.max_len = 100; break;
        case PlotElementKind::StoryEnding: p.num = 10, p.min_len = 10, p.max_len = 50; break;
    }
    return p;
}

void GenerationParams::validate() const {
    if (num < 1) throw PreconditionError("num must be at least 1");
    if (min_len < 1 || min_len > max_len) throw PreconditionError("require 1 <= min_len <= max_len");
    if (top_k < 1) throw PreconditionError("top_k must be at least 1");
    if (block_ngram != 0 && block_ngram < 2) throw PreconditionError("block_ngram must be >= 2 or 0 (disabled)");
}

TokenDistribution apply_top_k(const TokenDistribution& dist, int k) {
    if (dist.empty()) throw PreconditionError("apply_top_k on an empty distribution");
    if (k < 1) throw PreconditionError("top-k requires k >= 1");
    auto order = ranked(dist.entries);
    order.resize(std::min(order.size(), static_cast<std::size_t>(k)));
    double mass = 0.0;
    for (const auto& [tok, p] : order) mass += p;
    if (!(mass > 0.0)) throw PreconditionError("top-k support has zero probability mass");
    TokenDistribution out;
    for (const auto& [tok, p] : order) out.entries.emplace(tok, p / mass);
    return out;
}

std::set<Token> banned_ngram_completions(std::span<const Token> context, int n) {
    std::set<Token> banned;
    if (n < 2) throw PreconditionError("n-gram blocking requires n >= 2");
    const auto m = static_cast<std::size_t>(n);
    if (context.size() < m - 1) return banned;
    const auto tail = context.subspan(context.size() - (m - 1));
    for (std::size_t start = 0; start + m <= context.size(); ++start) {
        if (std::equal(tail.begin(), tail.end(), context.begin() + static_cast<std::ptrdiff_t>(start))) {
            banned.insert(context[start + m - 1]);
        }
    }
    return banned;
}

BlockedDistribution block_repeat_ngrams(std::span<const Token> context, const TokenDistribution& dist, int n) {
    const auto banned = banned_ngram_completions(context, n);
    if (banned.empty()) return {dist, false};
    TokenDistribution kept;
    for (const auto& [tok, p] : dist.entries) {
        if (!banned.contains(tok) && p > 0.0) kept.entries.emplace(tok, p);
    }
    if (kept.empty()) return {dist, true};
    return {kept.normalized(), false};
}

std::map<Token, double> self_debias_step(std::span<const TokenDistribution> per_description,
                                         const std::set<Token>& candidates) {
    if (per_description.size() < 2) throw PreconditionError("self-debiasing needs at least two task descriptions");
    std::map<Token, double> delta;
    for (const auto& tok : candidates) {
        const auto target = per_description[0].find(tok);
        if (!target) throw CoverageError("candidate '" + tok + "' missing from the target distribution");
        double strongest_other = 0.0;
        bool first = true;
        for (std::size_t i = 1; i < per_description.size(); ++i) {
            const auto p = per_description[i].find(tok);
            if (!p) throw CoverageError("candidate '" + tok + "' missing from description " + std::to_string(i));
            if (first || *p > strongest_other) strongest_other = *p;
            first = false;
        }
        delta.emplace(tok, *target - strongest_other);
    }
    return delta;
}

bool is_quote_token(const Token& token) {
    return token.find('"') != Token::npos || token.find("\xE2\x80\x9D") != Token::npos;
}

TruncatedText truncate_to_last_sentence(std::string_view text) {
    auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; };
    for (std::size_t i = text.size(); i-- > 0;) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        std::size_t end = i + 1;
        if (end < text.size() && text[end] == '"') {
            ++end;
        } else if (text.substr(end, 3) == "\xE2\x80\x9D") {
            end += 3;
        }
        if (end == text.size() || is_space(text[end])) return {std::string(text.substr(0, end)), false};
    }
    return {std::string(text), true};
}

std::optional<Continuation> sample_continuation(const LanguageModel& model, std::string_view prompt,
                                                const GenerationParams& params, StopRule stop,
                                                const std::optional<DebiasGroup>& debias, std::uint64_t seed) {
    params.validate();
    const TokenSequence prompt_tokens = model.tokenize(prompt);
    if (prompt_tokens.empty()) throw PreconditionError("prompt renders to no tokens");

    std::vector<TokenSequence> other_prompts;
    if (debias) {
        if (debias->other_prompts.empty()) throw PreconditionError("debias group needs at least two descriptions");
        for (const auto& p : debias->other_prompts) other_prompts.push_back(model.tokenize(p));
    }

    const auto eos = model.end_of_text();
    std::mt19937_64 rng(seed);
    Continuation out;
    TokenSequence generated;

    for (int step = 0; step < params.max_len; ++step) {
        const TokenSequence context = concat(prompt_tokens, generated);
        const TokenDistribution raw = model.next_token_distribution(context);

        TokenDistribution scored;
        bool debiased = false;
        if (debias && (debias->every_step || step == 0)) {
            std::vector<TokenSequence> contexts{context};
            for (const auto& p : other_prompts) contexts.push_back(concat(p, generated));

            std::set<Token> candidates;
            for (std::size_t i = 0; i < contexts.size(); ++i) {
                const auto dist = i == 0 ? raw : model.next_token_distribution(contexts[i], std::nullopt,
                                                                               debias->candidate_window);
                auto order = ranked(dist.entries);
                const auto window = std::min(order.size(), static_cast<std::size_t>(debias->candidate_window));
                for (std::size_t r = 0; r < window; ++r) candidates.insert(order[r].first);
            }
            std::vector<TokenDistribution> exact;
            for (const auto& ctx : contexts) exact.push_back(model.next_token_distribution(ctx, candidates));

            auto order = ranked(self_debias_step(exact, candidates));
            order.resize(std::min(order.size(), static_cast<std::size_t>(params.top_k)));
            for (const auto& [tok, d] : order) {
                if (d > 0.0) scored.entries.emplace(tok, d);
            }
            if (!scored.empty()) {
                scored = scored.normalized();
                debiased = true;
            }
        }
        if (!debiased) scored = apply_top_k(raw, params.top_k);

        if (params.block_ngram != 0) {
            auto blocked = block_repeat_ngrams(generated, scored, params.block_ngram);
            if (blocked.all_banned) ++out.blocking_fallbacks;
            scored = std::move(blocked.dist);
        }
        if (step < params.min_len) {
            std::erase_if(scored.entries, [&](const auto& e) { return is_stop(e.first, eos, stop); });
        }
        if (scored.empty() || !(scored.total() > 0.0)) return std::nullopt;

        const Token tok = sample(scored, rng);
        if (eos && tok == *eos) {
            out.stopped = true;
            break;
        }
        if (stop == StopRule::CloseQuote && is_quote_token(tok)) {
            const auto cut = std::min(tok.find('"'), tok.find("\xE2\x80\x9D"));
            if (cut > 0) generated.push_back(tok.substr(0, cut));
            out.stopped = true;
            break;
        }
        generated.push_back(tok);
    }

    out.text = model.detokenize(generated);
    if (stop == StopRule::FixedLength) {
        auto cut = truncate_to_last_sentence(out.text);
        out.text = std::move(cut.text);
        out.truncation_fallback = cut.fallback;
    }
    out.text = text::trim(out.text);
    out.tokens = std::move(generated);
    return out;
}

}  // namespace scratchplot
