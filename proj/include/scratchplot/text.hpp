// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scratchplot::text {

// Word tokenizer shared by the post-processing filters and the diversity metrics.
// Runs of letters/digits (any non-ASCII byte counts as a letter) form one token;
// every other non-space character is a token of its own. Whitespace separates.
std::vector<std::string> word_tokenize(std::string_view text);

// Lowercased word tokens with punctuation dropped: "I'll go." -> {"i", "ll", "go"}.
std::vector<std::string> content_words(std::string_view text);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
std::vector<std::string> split_whitespace(std::string_view text);

bool is_word_byte(unsigned char c) noexcept;

}  // namespace scratchplot::text
