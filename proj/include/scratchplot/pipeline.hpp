// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "scratchplot/decoder.hpp"
#include "scratchplot/lm_gateway.hpp"
#include "scratchplot/plot.hpp"
#include "scratchplot/postprocessor.hpp"
#include "scratchplot/prompt_templates.hpp"
#include "scratchplot/ranker.hpp"

namespace scratchplot {

/// Everything the generation steps need. References must outlive the context.
struct PipelineContext {
    const LanguageModel& generator;
    const LanguageModel& scorer;
    const LanguageModel* nsp = nullptr;  ///< optional; required for RankMethod::Nsp
    const TemplateRegistry& templates;
    const Postprocessor& postprocessor;
    std::string generator_model_id = "scripted";
    bool debias_every_step = true;
    int debias_candidate_window = 50;
    std::size_t max_story_tokens = 150;  ///< cap on body + ending tokens
};

/// Plot elements persisted as line-delimited JSON, one PlotElement per line.
class ElementPool {
public:
    ElementPool() = default;
    explicit ElementPool(std::vector<PlotElement> elements) : elements_(std::move(elements)) {}

    /// A missing file yields an empty pool.
    static ElementPool load(const std::filesystem::path& path);
    static void append(const std::filesystem::path& path, std::span<const PlotElement> elements);
    void save(const std::filesystem::path& path) const;

    const std::vector<PlotElement>& elements() const noexcept { return elements_; }
    std::vector<const PlotElement*> of_kind(PlotElementKind kind) const;
    std::vector<const PlotElement*> children(const std::string& parent_id, PlotElementKind kind) const;
    const PlotElement* find(const std::string& id) const;
    void add(PlotElement element) { elements_.push_back(std::move(element)); }

private:
    std::vector<PlotElement> elements_;
};

struct PoolReport {
    std::size_t units = 0;       ///< (task description, parent) combinations processed in this run
    std::size_t sampled = 0;     ///< continuations produced by the decoder
    std::size_t dropped = 0;     ///< decoder found no valid token
    std::map<std::string, std::size_t> filtered;  ///< per post-processing rule
    std::size_t duplicates = 0;
    std::size_t written = 0;
    std::size_t resumed_from = 0;  ///< first unit of this run (non-zero after an interrupted run)
};

/// Generate plot elements of `group` and append the survivors to `pool_path`.
///
/// Location and cast use self-debiasing across their task descriptions; genre
/// and theme do not. Cast runs once per stored location and theme once per
/// stored genre. Candidate j of unit u uses seed + u * num + j. Progress is
/// checkpointed in "<pool>.cursor"; after a backend failure (PoolGenerationError)
/// a rerun with the same group and seed resumes at the failed unit.
PoolReport generate_element_pool(const PipelineContext& ctx, ElementGroup group, const GenerationParams& params,
                                 const std::filesystem::path& pool_path, std::uint64_t seed);

/// Draws content plans in dependency order: location, then a male and a female
/// cast member of that location, then genre, then a theme of that genre.
/// Within one sampler, elements are drawn without replacement until a kind is
/// exhausted, after which that kind starts over.
class PlanSampler {
public:
    PlanSampler(const ElementPool& pool, std::uint64_t seed);

    /// Throws SamplingError naming the kind that cannot be satisfied.
    ContentPlan next();

private:
    const PlotElement* pick(std::vector<const PlotElement*> options, PlotElementKind kind);

    const ElementPool& pool_;
    std::mt19937_64 rng_;
    std::map<PlotElementKind, std::set<std::string>> used_;
};

ContentPlan sample_content_plan(const ElementPool& pool, std::uint64_t seed);

struct StoryCandidate {
    std::size_t body_index = 0;
    std::string body;
    std::string ending;
    std::size_t body_tokens = 0;
    std::size_t ending_tokens = 0;
    EndingScore score;
    bool ppl_body_truncated = false;
};

struct StoryResult {
    ContentPlan plan;
    std::vector<StoryCandidate> candidates;
    std::vector<std::size_t> ranking;  ///< candidate indices best-first
    RankMethod method = RankMethod::Ppl;
    std::size_t bodies = 0;            ///< bodies that survived post-processing
    std::map<std::string, std::size_t> diagnostics;

    const StoryCandidate& selected() const { return candidates.at(ranking.front()); }
    nlohmann::json to_json(bool include_candidates = true) const;
};

/// Sample bodies (fixed length, truncated to the last sentence), filter them,
/// sample endings for every surviving body (stop at the closing quote), drop
/// pairs over the token cap, score all pairs, and rank them in one pool.
/// Body i uses seed + i; ending j of body b uses seed + bodies.num + b * endings.num + j.
StoryResult generate_story(const PipelineContext& ctx, const ContentPlan& plan, const GenerationParams& body_params,
                           const GenerationParams& ending_params, RankMethod method, std::uint64_t seed);

}  // namespace scratchplot
