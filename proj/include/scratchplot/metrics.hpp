// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scratchplot::metrics {

using Story = std::vector<std::string>;
using StoryCorpus = std::vector<Story>;

/// Word-tokenized, lowercased story (punctuation marks are kept as tokens).
Story tokenize_story(std::string_view text);

/// Unique n-grams / total n-grams. Throws PreconditionError when the story is shorter than n.
double distinct_n(std::span<const std::string> story, int n);

struct CorpusDistinct {
    double mean = 0.0;         ///< mean over stories of length >= n
    std::size_t counted = 0;
    std::size_t skipped = 0;   ///< stories shorter than n
};

CorpusDistinct corpus_distinct_n(const StoryCorpus& corpus, int n);

enum class BleuSmoothing {
    None,   ///< zero matches at any order give BLEU 0
    AddOne  ///< (matches + 1) / (total + 1) at every order
};

/// Sentence BLEU with clipped n-gram precision against several references,
/// uniform weights 1/max_n, and the brevity penalty computed from the
/// reference length closest to the hypothesis (shorter wins ties).
double sentence_bleu(std::span<const Story> references, std::span<const std::string> hypothesis, int max_n,
                     BleuSmoothing smoothing = BleuSmoothing::None);

/// Mean over stories of BLEU(story | all other stories as references).
/// Throws PreconditionError for fewer than two stories.
double self_bleu(const StoryCorpus& corpus, int max_n, BleuSmoothing smoothing = BleuSmoothing::None);

}  // namespace scratchplot::metrics
