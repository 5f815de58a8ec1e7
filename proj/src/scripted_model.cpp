// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/scripted_model.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "scratchplot/errors.hpp"
#include "scratchplot/text.hpp"

namespace scratchplot {

namespace {

constexpr std::string_view kWildcard = "*";

TokenDistribution distribution_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigurationError("scripted distribution must be a JSON object");
    TokenDistribution d;
    for (const auto& [tok, p] : j.items()) d.entries.emplace(tok, p.get<double>());
    d.complete = true;
    return d;
}

}  // namespace

bool pattern_matches_suffix(std::span<const Token> pattern, std::span<const Token> context) {
    // Glob match of reversed(pattern) ++ ["*"] against reversed(context).
    const std::size_t np = pattern.size();
    const std::size_t nc = context.size();
    auto pat = [&](std::size_t i) -> const Token& { return pattern[np - 1 - i]; };
    auto ctx = [&](std::size_t i) -> const Token& { return context[nc - 1 - i]; };

    std::size_t p = 0;
    std::size_t c = 0;
    std::optional<std::size_t> star_p;
    std::size_t star_c = 0;
    while (true) {
        if (p == np) return true;  // implicit trailing wildcard swallows the rest
        if (pat(p) == kWildcard) {
            star_p = p++;
            star_c = c;
            continue;
        }
        if (c < nc && pat(p) == ctx(c)) {
            ++p;
            ++c;
            continue;
        }
        if (star_p && star_c < nc) {
            p = *star_p + 1;
            c = ++star_c;
            continue;
        }
        return false;
    }
}

ScriptedModel::ScriptedModel(std::vector<ScriptRule> rules, std::optional<TokenDistribution> fallback,
                             Options options)
    : rules_(std::move(rules)), fallback_(std::move(fallback)), options_(std::move(options)) {
    specificity_.reserve(rules_.size());
    for (auto& rule : rules_) {
        rule.next.complete = true;
        try {
            rule.next.validate();
        } catch (const PreconditionError& e) {
            throw ConfigurationError("scripted rule is not a complete distribution: " + std::string(e.what()));
        }
        std::size_t literal = 0;
        for (const auto& tok : rule.pattern) literal += tok != kWildcard ? 1 : 0;
        specificity_.push_back(literal);
    }
    if (fallback_) {
        fallback_->complete = true;
        try {
            fallback_->validate();
        } catch (const PreconditionError& e) {
            throw ConfigurationError("scripted default is not a complete distribution: " + std::string(e.what()));
        }
    }
    if (options_.nsp) {
        for (const auto& [key, p] : options_.nsp->table) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigurationError("NSP table probability outside [0,1]");
        }
    }
}

TokenDistribution ScriptedModel::uniform(std::span<const Token> vocabulary) {
    if (vocabulary.empty()) throw ConfigurationError("uniform distribution needs a non-empty vocabulary");
    TokenDistribution d;
    const double p = 1.0 / static_cast<double>(vocabulary.size());
    for (const auto& tok : vocabulary) d.entries[tok] = p;
    // Duplicate vocabulary entries would break normalization.
    if (d.entries.size() != vocabulary.size()) throw ConfigurationError("vocabulary contains duplicates");
    return d;
}

ScriptedModel ScriptedModel::from_json(const nlohmann::json& script) {
    try {
        Options options;
        options.context_window = script.value("context_window", std::size_t{1024});
        if (script.contains("end_of_text")) {
            if (script["end_of_text"].is_null()) {
                options.end_of_text.reset();
            } else {
                options.end_of_text = script["end_of_text"].get<std::string>();
            }
        }

        std::optional<TokenDistribution> fallback;
        if (script.contains("default")) {
            const auto& d = script["default"];
            if (d.is_string() && d.get<std::string>() == "uniform") {
                fallback = uniform(script.at("vocabulary").get<TokenSequence>());
            } else {
                fallback = distribution_from_json(d);
            }
        } else if (script.contains("vocabulary")) {
            fallback = uniform(script["vocabulary"].get<TokenSequence>());
        }

        std::vector<ScriptRule> rules;
        for (const auto& r : script.value("rules", nlohmann::json::array())) {
            rules.push_back({r.at("context").get<TokenSequence>(), distribution_from_json(r.at("next"))});
        }

        if (script.contains("nsp")) {
            if (script["nsp"].is_null()) {
                options.nsp.reset();
            } else {
                const auto& n = script["nsp"];
                NspConfig cfg;
                cfg.window = n.value("window", std::size_t{512});
                cfg.default_prob = n.value("default", 0.5);
                for (const auto& pair : n.value("pairs", nlohmann::json::array())) {
                    cfg.table[{pair.at("first").get<std::string>(), pair.at("second").get<std::string>()}] =
                        pair.at("prob").get<double>();
                }
                options.nsp = std::move(cfg);
            }
        }
        return ScriptedModel(std::move(rules), std::move(fallback), std::move(options));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed model script: ") + e.what());
    }
}

ScriptedModel ScriptedModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open model script " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("cannot parse model script " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

const TokenDistribution& ScriptedModel::lookup(std::span<const Token> context) const {
    const ScriptRule* best = nullptr;
    std::size_t best_spec = 0;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if ((best == nullptr || specificity_[i] > best_spec) && pattern_matches_suffix(rules_[i].pattern, context)) {
            best = &rules_[i];
            best_spec = specificity_[i];
        }
    }
    if (best != nullptr) return best->next;
    if (fallback_) return *fallback_;
    throw ConfigurationError("no scripted rule matches the context and no default is configured");
}

TokenDistribution ScriptedModel::next_token_distribution(std::span<const Token> context,
                                                         const std::optional<std::set<Token>>& candidates,
                                                         std::optional<int> /*top_n*/) const {
    if (context.empty()) throw PreconditionError("next_token_distribution requires a non-empty context");
    if (context.size() > options_.context_window) {
        throw WindowExceededError(options_.context_window, context.size());
    }
    const auto& dist = lookup(context);
    if (!candidates) return dist;
    TokenDistribution out;
    out.complete = false;
    for (const auto& tok : *candidates) out.entries.emplace(tok, dist.prob_or_zero(tok));
    return out;
}

ScoredContinuation ScriptedModel::score_continuation(std::span<const Token> prefix,
                                                     std::span<const Token> continuation) const {
    if (continuation.empty()) throw PreconditionError("score_continuation requires a non-empty continuation");
    const std::size_t needed = prefix.size() + continuation.size();
    if (needed > options_.context_window) throw WindowExceededError(options_.context_window, needed);

    TokenSequence context(prefix.begin(), prefix.end());
    ScoredContinuation out;
    out.tokens.assign(continuation.begin(), continuation.end());
    out.logprobs.reserve(continuation.size());
    for (const auto& tok : continuation) {
        const double p = lookup(context).prob_or_zero(tok);
        out.logprobs.push_back(p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity());
        context.push_back(tok);
    }
    return out;
}

TokenSequence ScriptedModel::tokenize(std::string_view text) const {
    return text::split_whitespace(text);
}

std::string ScriptedModel::detokenize(std::span<const Token> tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::optional<std::size_t> ScriptedModel::nsp_window() const {
    if (!options_.nsp) return std::nullopt;
    return options_.nsp->window;
}

double ScriptedModel::raw_nsp(std::string_view first, std::string_view second) const {
    if (!options_.nsp) return LanguageModel::raw_nsp(first, second);
    const auto& cfg = *options_.nsp;
    auto it = cfg.table.find({std::string(first), std::string(second)});
    return it == cfg.table.end() ? cfg.default_prob : it->second;
}

}  // namespace scratchplot
