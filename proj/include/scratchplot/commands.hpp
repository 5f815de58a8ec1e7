// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scratchplot/config.hpp"

// Subcommand implementations behind the `scratchplot` executable.
namespace scratchplot::cli {

struct GenElementsArgs {
    std::string kind;  // location | cast | genre | theme
    std::filesystem::path pool;
    std::optional<int> num;
    std::optional<int> min_len;
    std::optional<int> max_len;
    std::uint64_t seed = 0;
};

struct GenStoryArgs {
    std::filesystem::path pool;
    std::filesystem::path out;
    int bodies = 30;
    int endings = 10;
    std::string ranker = "ppl";
    std::uint64_t seed = 0;
    int count = 1;
    bool all_candidates = true;
};

struct EvalClozeArgs {
    std::filesystem::path data;
    std::string method = "ppl";
    std::optional<std::filesystem::path> predictions;
};

struct MetricsArgs {
    std::filesystem::path stories;
    std::vector<int> n{1, 2};
    bool smoothing = false;
};

/// Each command writes a one-line JSON summary to `out` and returns it.
nlohmann::json gen_elements(const Runtime& runtime, const GenElementsArgs& args, std::ostream& out);
nlohmann::json gen_story(const Runtime& runtime, const GenStoryArgs& args, std::ostream& out);
nlohmann::json eval_cloze(const Runtime& runtime, const EvalClozeArgs& args, std::ostream& out);
nlohmann::json metrics(const MetricsArgs& args, std::ostream& out);

/// Story text of a record written by gen-story ("body" + " " + "ending"), or its "text" field.
std::string story_text(const nlohmann::json& record);

}  // namespace scratchplot::cli
