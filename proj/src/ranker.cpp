// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "scratchplot/errors.hpp"
#include "scratchplot/text.hpp"

namespace scratchplot {

std::string_view to_string(RankMethod method) noexcept {
    switch (method) {
        case RankMethod::Ppl: return "ppl";
        case RankMethod::Nsp: return "nsp";
        case RankMethod::Random: return "random";
    }
    return "unknown";
}

RankMethod parse_rank_method(std::string_view name) {
    if (name == "ppl") return RankMethod::Ppl;
    if (name == "nsp") return RankMethod::Nsp;
    if (name == "random") return RankMethod::Random;
    throw LookupError("unknown ranking method '" + std::string(name) + "'");
}

double perplexity_from_logprobs(std::span<const double> logprobs) {
    if (logprobs.empty()) throw PreconditionError("perplexity of an empty continuation");
    for (double lp : logprobs) {
        if (std::isnan(lp) || lp > 0.0) throw PreconditionError("log-probabilities must be <= 0");
        if (std::isinf(lp)) return std::numeric_limits<double>::infinity();
    }
    const auto n = static_cast<int>(logprobs.size());
    const bool tiny = std::any_of(logprobs.begin(), logprobs.end(), [](double lp) { return lp < -700.0; });
    if (n > 1000 || tiny) {
        const double sum = std::accumulate(logprobs.begin(), logprobs.end(), 0.0);
        return std::exp(-sum / static_cast<double>(n));
    }
    // (prod 1/p_i)^(1/n) with the product kept as mantissa * 2^exp, so it neither
    // underflows nor picks up the rounding of exp(log(.)) on exact inputs.
    double mantissa = 1.0;
    int exponent = 0;
    for (double lp : logprobs) {
        int e = 0;
        mantissa = std::frexp(mantissa * std::exp(lp), &e);
        exponent += e;
    }
    const int q = exponent >= 0 ? exponent / n : -((-exponent + n - 1) / n);
    const int r = exponent - q * n;
    return std::pow(std::ldexp(mantissa, r), -1.0 / n) * std::ldexp(1.0, -q);
}

PerplexityResult conditional_ppl(const LanguageModel& model, std::string_view body, std::string_view ending) {
    auto body_tokens = model.tokenize(body);
    const auto ending_tokens = model.tokenize(ending);
    if (ending_tokens.empty()) throw PreconditionError("ending has no tokens");

    const std::size_t window = model.context_window();
    if (ending_tokens.size() > window) throw WindowExceededError(window, ending_tokens.size());

    PerplexityResult out;
    if (body_tokens.size() + ending_tokens.size() > window) {
        const std::size_t keep = window - ending_tokens.size();
        body_tokens.erase(body_tokens.begin(), body_tokens.end() - static_cast<std::ptrdiff_t>(keep));
        out.body_truncated = true;
    }
    const auto scored = model.score_continuation(body_tokens, ending_tokens);
    out.ending_tokens = scored.logprobs.size();
    out.ppl = perplexity_from_logprobs(scored.logprobs);
    return out;
}

std::vector<std::size_t> rank_pairs(std::span<const EndingScore> scores, RankMethod method, std::uint64_t seed) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    switch (method) {
        case RankMethod::Ppl:
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return scores[a].ppl < scores[b].ppl; });
            break;
        case RankMethod::Nsp:
            for (const auto& s : scores) {
                if (!s.nsp) throw PreconditionError("NSP ranking requires an NSP score for every candidate");
            }
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return *scores[a].nsp > *scores[b].nsp; });
            break;
        case RankMethod::Random: {
            // Fisher-Yates with an explicit bounded draw so the order is identical on every platform.
            std::mt19937_64 rng(seed);
            for (std::size_t i = order.size(); i > 1; --i) {
                const std::uint64_t bound = i;
                const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
                std::uint64_t r = rng();
                while (r >= limit) r = rng();
                std::swap(order[i - 1], order[static_cast<std::size_t>(r % bound)]);
            }
            break;
        }
    }
    return order;
}

namespace {

std::vector<std::vector<std::string>> parse_delimited(std::istream& in, char delim) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c = 0;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && in.peek() == '\n') in.get(c);
            row.push_back(std::move(field));
            field.clear();
            if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<ClozeItem> parse_cloze(std::istream& in) {
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto first_line = content.substr(0, content.find('\n'));
    const char delim = std::count(first_line.begin(), first_line.end(), '\t') >
                               std::count(first_line.begin(), first_line.end(), ',')
                           ? '\t'
                           : ',';
    std::istringstream body(content);
    auto rows = parse_delimited(body, delim);

    // Column indices: id, s1..s4, ending1, ending2, answer.
    std::vector<std::size_t> col{0, 1, 2, 3, 4, 5, 6, 7};
    std::size_t start = 0;
    if (!rows.empty() && std::find(rows[0].begin(), rows[0].end(), "InputStoryid") != rows[0].end()) {
        const std::vector<std::string> names{"InputStoryid",   "InputSentence1",           "InputSentence2",
                                             "InputSentence3", "InputSentence4",           "RandomFifthSentenceQuiz1",
                                             "RandomFifthSentenceQuiz2", "AnswerRightEnding"};
        for (std::size_t k = 0; k < names.size(); ++k) {
            auto it = std::find(rows[0].begin(), rows[0].end(), names[k]);
            if (it == rows[0].end()) throw ConfigurationError("cloze header lacks column " + names[k]);
            col[k] = static_cast<std::size_t>(it - rows[0].begin());
        }
        start = 1;
    }

    std::vector<ClozeItem> items;
    for (std::size_t r = start; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto line = std::to_string(r + 1);
        if (row.size() <= *std::max_element(col.begin(), col.end())) {
            throw ConfigurationError("cloze row " + line + " has " + std::to_string(row.size()) + " columns");
        }
        ClozeItem item;
        item.id = text::trim(row[col[0]]);
        for (std::size_t s = 1; s <= 4; ++s) {
            const auto sentence = text::trim(row[col[s]]);
            if (sentence.empty()) continue;
            if (!item.context.empty()) item.context += ' ';
            item.context += sentence;
        }
        item.ending_a = text::trim(row[col[5]]);
        item.ending_b = text::trim(row[col[6]]);
        const auto answer = text::trim(row[col[7]]);
        if (answer == "1") {
            item.label = ClozeLabel::A;
        } else if (answer == "2") {
            item.label = ClozeLabel::B;
        } else {
            throw ConfigurationError("cloze row " + line + " has answer '" + answer + "' (expected 1 or 2)");
        }
        if (item.context.empty() || item.ending_a.empty() || item.ending_b.empty()) {
            throw ConfigurationError("cloze row " + line + " has an empty context or ending");
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<ClozeItem> load_cloze(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open cloze data " + path.string());
    return parse_cloze(in);
}

ClozeReport cloze_evaluate(const LanguageModel& model, std::span<const ClozeItem> items, RankMethod method) {
    if (items.empty()) throw PreconditionError("cloze evaluation needs at least one item");
    if (method == RankMethod::Random) throw PreconditionError("cloze evaluation supports the ppl and nsp methods");

    ClozeReport report;
    report.total = items.size();
    for (const auto& item : items) {
        ClozePrediction pred;
        pred.id = item.id;
        try {
            if (method == RankMethod::Ppl) {
                pred.score_a = conditional_ppl(model, item.context, item.ending_a).ppl;
                pred.score_b = conditional_ppl(model, item.context, item.ending_b).ppl;
                pred.predicted = pred.score_b < pred.score_a ? ClozeLabel::B : ClozeLabel::A;
            } else {
                pred.score_a = model.nsp_probability(item.context, item.ending_a);
                pred.score_b = model.nsp_probability(item.context, item.ending_b);
                pred.predicted = pred.score_b > pred.score_a ? ClozeLabel::B : ClozeLabel::A;
            }
            pred.correct = *pred.predicted == item.label;
            ++report.evaluated;
            report.correct += pred.correct ? 1 : 0;
        } catch (const ConfigurationError&) {
            throw;
        } catch (const CapabilityError&) {
            throw;
        } catch (const Error& e) {
            pred.error = e.what();
            ++report.skipped;
        }
        report.predictions.push_back(std::move(pred));
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    report.accuracy_evaluated =
        report.evaluated == 0 ? 0.0 : static_cast<double>(report.correct) / static_cast<double>(report.evaluated);
    return report;
}

}  // namespace scratchplot
