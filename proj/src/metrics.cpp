// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "scratchplot/errors.hpp"
#include "scratchplot/text.hpp"

namespace scratchplot::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

}  // namespace

Story tokenize_story(std::string_view text) {
    auto tokens = text::word_tokenize(text);
    for (auto& t : tokens) t = text::to_lower(t);
    return tokens;
}

double distinct_n(std::span<const std::string> story, int n) {
    if (n < 1) throw PreconditionError("distinct-n requires n >= 1");
    const auto m = static_cast<std::size_t>(n);
    if (story.size() < m) throw PreconditionError("story shorter than n");
    const auto counts = count_ngrams(story, m);
    return static_cast<double>(counts.size()) / static_cast<double>(story.size() - m + 1);
}

CorpusDistinct corpus_distinct_n(const StoryCorpus& corpus, int n) {
    CorpusDistinct out;
    double sum = 0.0;
    for (const auto& story : corpus) {
        if (story.size() < static_cast<std::size_t>(n)) {
            ++out.skipped;
            continue;
        }
        sum += distinct_n(story, n);
        ++out.counted;
    }
    out.mean = out.counted == 0 ? 0.0 : sum / static_cast<double>(out.counted);
    return out;
}

double sentence_bleu(std::span<const Story> references, std::span<const std::string> hypothesis, int max_n,
                     BleuSmoothing smoothing) {
    if (max_n < 1) throw PreconditionError("BLEU requires max_n >= 1");
    if (references.empty()) throw PreconditionError("BLEU requires at least one reference");
    if (hypothesis.empty()) return 0.0;

    double log_precision_sum = 0.0;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n); ++n) {
        const auto hyp_counts = count_ngrams(hypothesis, n);
        NgramCounts max_ref;
        for (const auto& ref : references) {
            for (const auto& [gram, c] : count_ngrams(ref, n)) {
                auto& slot = max_ref[gram];
                slot = std::max(slot, c);
            }
        }
        std::size_t matched = 0;
        std::size_t total = 0;
        for (const auto& [gram, c] : hyp_counts) {
            total += c;
            auto it = max_ref.find(gram);
            if (it != max_ref.end()) matched += std::min(c, it->second);
        }
        double precision = 0.0;
        if (smoothing == BleuSmoothing::AddOne) {
            precision = (static_cast<double>(matched) + 1.0) / (static_cast<double>(total) + 1.0);
        } else {
            if (matched == 0) return 0.0;
            precision = static_cast<double>(matched) / static_cast<double>(total);
        }
        log_precision_sum += std::log(precision);
    }

    const auto hyp_len = static_cast<long>(hypothesis.size());
    long closest = static_cast<long>(references.front().size());
    for (const auto& ref : references) {
        const auto len = static_cast<long>(ref.size());
        const auto d = std::labs(len - hyp_len);
        const auto best = std::labs(closest - hyp_len);
        if (d < best || (d == best && len < closest)) closest = len;
    }
    const double brevity = hyp_len > closest ? 1.0
                                             : std::exp(1.0 - static_cast<double>(closest) / static_cast<double>(hyp_len));
    return brevity * std::exp(log_precision_sum / static_cast<double>(max_n));
}

double self_bleu(const StoryCorpus& corpus, int max_n, BleuSmoothing smoothing) {
    if (corpus.size() < 2) throw PreconditionError("self-BLEU needs at least two stories");
    double sum = 0.0;
    std::vector<Story> references;
    references.reserve(corpus.size() - 1);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        references.clear();
        for (std::size_t j = 0; j < corpus.size(); ++j) {
            if (j != i) references.push_back(corpus[j]);
        }
        sum += sentence_bleu(references, corpus[i], max_n, smoothing);
    }
    return sum / static_cast<double>(corpus.size());
}

}  // namespace scratchplot::metrics
