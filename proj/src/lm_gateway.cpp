// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/lm_gateway.hpp"

#include <cmath>

#include "scratchplot/errors.hpp"

namespace scratchplot {

double TokenDistribution::total() const noexcept {
    double sum = 0.0;
    for (const auto& [tok, p] : entries) sum += p;
    return sum;
}

std::optional<double> TokenDistribution::find(const Token& token) const {
    auto it = entries.find(token);
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

double TokenDistribution::prob_or_zero(const Token& token) const {
    return find(token).value_or(0.0);
}

void TokenDistribution::validate(double tolerance) const {
    for (const auto& [tok, p] : entries) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw PreconditionError("token '" + tok + "' has invalid probability " + std::to_string(p));
        }
    }
    const double sum = total();
    if (complete && std::abs(sum - 1.0) > tolerance) {
        throw PreconditionError("complete distribution sums to " + std::to_string(sum));
    }
    if (!complete && sum > 1.0 + tolerance) {
        throw PreconditionError("partial distribution sums to " + std::to_string(sum));
    }
}

TokenDistribution TokenDistribution::normalized() const {
    const double sum = total();
    if (!(sum > 0.0)) throw PreconditionError("cannot normalize a distribution with zero mass");
    TokenDistribution out;
    for (const auto& [tok, p] : entries) out.entries.emplace(tok, p / sum);
    out.complete = true;
    return out;
}

NspScore LanguageModel::nsp_score(std::string_view first, std::string_view second) const {
    if (first.empty() || second.empty()) throw PreconditionError("nsp_probability requires two non-empty texts");
    const auto window = nsp_window();
    if (!window) throw CapabilityError("backend has no next-sentence-prediction capability");

    auto first_tokens = nsp_tokenize(first);
    const auto second_tokens = nsp_tokenize(second);
    const std::size_t fixed = second_tokens.size() + nsp_special_tokens();
    if (fixed >= *window) throw WindowExceededError(*window, fixed + first_tokens.size());

    NspScore out;
    if (first_tokens.size() + fixed > *window) {
        const std::size_t keep = *window - fixed;
        first_tokens.erase(first_tokens.begin(), first_tokens.end() - static_cast<std::ptrdiff_t>(keep));
        out.truncated = true;
        out.probability = raw_nsp(nsp_detokenize(first_tokens), second);
    } else {
        out.probability = raw_nsp(first, second);
    }
    if (!(out.probability >= 0.0 && out.probability <= 1.0)) {
        throw Error("backend returned NSP probability outside [0,1]");
    }
    return out;
}

double LanguageModel::raw_nsp(std::string_view, std::string_view) const {
    throw CapabilityError("backend has no next-sentence-prediction capability");
}

}  // namespace scratchplot
