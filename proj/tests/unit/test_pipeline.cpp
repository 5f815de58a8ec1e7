// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "scratchplot/config.hpp"
#include "scratchplot/errors.hpp"
#include "scratchplot/pipeline.hpp"
#include "scratchplot/text.hpp"

using namespace scratchplot;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SCRATCHPLOT_FIXTURES;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("scratchplot_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const Runtime& runtime() {
    static const Runtime rt(AppConfig::load(kFixtures / "e2e_config.json"));
    return rt;
}

GenerationParams params(PlotElementKind kind) { return runtime().config().params_for(kind); }

// Delegates to another model and fails every distribution request once armed.
class FlakyModel : public LanguageModel {
public:
    FlakyModel(const LanguageModel& inner, std::size_t fail_after) : inner_(inner), remaining_(fail_after) {}

    TokenDistribution next_token_distribution(std::span<const Token> context,
                                              const std::optional<std::set<Token>>& candidates,
                                              std::optional<int> top_n) const override {
        if (remaining_ == 0) throw TransportError("server unavailable", 3, 503);
        --remaining_;
        return inner_.next_token_distribution(context, candidates, top_n);
    }
    ScoredContinuation score_continuation(std::span<const Token> prefix,
                                          std::span<const Token> continuation) const override {
        return inner_.score_continuation(prefix, continuation);
    }
    TokenSequence tokenize(std::string_view text) const override { return inner_.tokenize(text); }
    std::string detokenize(std::span<const Token> tokens) const override { return inner_.detokenize(tokens); }
    std::size_t context_window() const noexcept override { return inner_.context_window(); }
    std::optional<Token> end_of_text() const override { return inner_.end_of_text(); }
    std::size_t remaining() const { return remaining_; }

private:
    const LanguageModel& inner_;
    mutable std::size_t remaining_;
};

void fill_pool(const fs::path& pool, std::uint64_t seed = 1) {
    const auto ctx = runtime().context();
    using K = PlotElementKind;
    generate_element_pool(ctx, ElementGroup::Location, params(K::Location), pool, seed);
    generate_element_pool(ctx, ElementGroup::Cast, params(K::CastMale), pool, seed);
    generate_element_pool(ctx, ElementGroup::Genre, params(K::Genre), pool, seed);
    generate_element_pool(ctx, ElementGroup::Theme, params(K::Theme), pool, seed);
}

PlotElement element(std::string id, PlotElementKind kind, std::string text, std::vector<std::string> parents = {}) {
    PlotElement e;
    e.id = std::move(id);
    e.kind = kind;
    e.text = std::move(text);
    e.parent_ids = std::move(parents);
    return e;
}

}  // namespace

TEST_CASE("element pool round trip") {
    TempDir dir("pool_io");
    const auto path = dir.path / "pool.jsonl";
    CHECK(ElementPool::load(path).elements().empty());
    const std::vector<PlotElement> first{element("location-0001", PlotElementKind::Location, "Oslo")};
    const std::vector<PlotElement> second{
        element("cast_male-0001", PlotElementKind::CastMale, "John Smith", {"location-0001"})};
    ElementPool::append(path, first);
    ElementPool::append(path, second);
    const auto pool = ElementPool::load(path);
    REQUIRE(pool.elements().size() == 2);
    CHECK(pool.elements()[1] == second[0]);
    CHECK(pool.find("location-0001")->text == "Oslo");
    CHECK(pool.find("nope") == nullptr);
    CHECK(pool.children("location-0001", PlotElementKind::CastMale).size() == 1);

    std::ofstream(path, std::ios::app) << "{not json\n";
    CHECK_THROWS_AS(ElementPool::load(path), ConfigurationError);
}

TEST_CASE("pool generation respects dependencies") {
    TempDir dir("pool_deps");
    const auto pool_path = dir.path / "pool.jsonl";
    const auto ctx = runtime().context();
    CHECK_THROWS_AS(generate_element_pool(ctx, ElementGroup::Cast, params(PlotElementKind::CastMale), pool_path, 1),
                    DependencyError);
    CHECK_THROWS_AS(generate_element_pool(ctx, ElementGroup::Theme, params(PlotElementKind::Theme), pool_path, 1),
                    DependencyError);

    fill_pool(pool_path);
    const auto pool = ElementPool::load(pool_path);
    for (auto kind : {PlotElementKind::Location, PlotElementKind::CastMale, PlotElementKind::CastFemale,
                      PlotElementKind::Genre, PlotElementKind::Theme}) {
        CAPTURE(to_string(kind));
        CHECK_FALSE(pool.of_kind(kind).empty());
    }
    for (const auto& e : pool.elements()) {
        switch (e.kind) {
            case PlotElementKind::CastMale:
            case PlotElementKind::CastFemale:
                REQUIRE(e.parent_ids.size() == 1);
                CHECK(pool.find(e.parent_ids[0])->kind == PlotElementKind::Location);
                break;
            case PlotElementKind::Theme:
                REQUIRE(e.parent_ids.size() == 1);
                CHECK(pool.find(e.parent_ids[0])->kind == PlotElementKind::Genre);
                break;
            default:
                CHECK(e.parent_ids.empty());
        }
        CHECK(e.model_id == "scripted:e2e_generator.json");
        CHECK_FALSE(e.task_description_id.empty());
        CHECK_FALSE(e.created_at.empty());
    }
    // No element appears twice under the same parent.
    for (std::size_t i = 0; i < pool.elements().size(); ++i) {
        for (std::size_t j = i + 1; j < pool.elements().size(); ++j) {
            const auto& a = pool.elements()[i];
            const auto& b = pool.elements()[j];
            CHECK_FALSE((a.kind == b.kind && a.text == b.text && a.parent_ids == b.parent_ids));
            CHECK(a.id != b.id);
        }
    }
}

TEST_CASE("rerunning a finished group only adds duplicates") {
    TempDir dir("pool_rerun");
    const auto pool_path = dir.path / "pool.jsonl";
    const auto ctx = runtime().context();
    const auto p = params(PlotElementKind::Genre);
    const auto first = generate_element_pool(ctx, ElementGroup::Genre, p, pool_path, 4);
    CHECK(first.written > 0);
    const auto again = generate_element_pool(ctx, ElementGroup::Genre, p, pool_path, 4);
    CHECK(again.written == 0);
    CHECK(again.duplicates == first.written + first.duplicates);
    CHECK_FALSE(fs::exists(fs::path(pool_path.string() + ".cursor")));
}

TEST_CASE("an interrupted run resumes at the failed unit") {
    TempDir dir("pool_resume");
    const auto ctx = runtime().context();
    const auto p = params(PlotElementKind::Location);

    const auto clean_path = dir.path / "clean.jsonl";
    FlakyModel counter(runtime().generator(), 1000000);
    PipelineContext counting{counter, ctx.scorer, ctx.nsp, ctx.templates, ctx.postprocessor, ctx.generator_model_id};
    generate_element_pool(counting, ElementGroup::Location, p, clean_path, 9);
    const std::size_t calls = 1000000 - counter.remaining();

    const auto path = dir.path / "pool.jsonl";
    FlakyModel flaky(runtime().generator(), calls / 2);
    PipelineContext broken{flaky, ctx.scorer, ctx.nsp, ctx.templates, ctx.postprocessor, ctx.generator_model_id};
    std::size_t failed_unit = 0;
    try {
        generate_element_pool(broken, ElementGroup::Location, p, path, 9);
        FAIL("expected the flaky backend to stop generation");
    } catch (const PoolGenerationError& e) {
        failed_unit = e.next_unit();
        CHECK(failed_unit > 0);
        CHECK(e.written() > 0);
    }
    CHECK(fs::exists(fs::path(path.string() + ".cursor")));

    const auto report = generate_element_pool(ctx, ElementGroup::Location, p, path, 9);
    CHECK(report.resumed_from == failed_unit);
    CHECK_FALSE(fs::exists(fs::path(path.string() + ".cursor")));

    std::vector<std::string> got;
    std::vector<std::string> want;
    const auto resumed = ElementPool::load(path);
    const auto clean = ElementPool::load(clean_path);
    for (const auto& e : resumed.elements()) got.push_back(e.text + "|" + e.task_description_id);
    for (const auto& e : clean.elements()) want.push_back(e.text + "|" + e.task_description_id);
    CHECK(got == want);
}

TEST_CASE("plan sampling follows dependency order") {
    TempDir dir("plans");
    const auto pool_path = dir.path / "pool.jsonl";
    fill_pool(pool_path);
    const auto pool = ElementPool::load(pool_path);
    PlanSampler sampler(pool, 7);
    for (int i = 0; i < 30; ++i) {
        const auto plan = sampler.next();
        REQUIRE(plan.complete());
        CHECK(plan.cast_male->parent_ids == std::vector<std::string>{plan.location->id});
        CHECK(plan.cast_female->parent_ids == std::vector<std::string>{plan.location->id});
        CHECK(plan.theme->parent_ids == std::vector<std::string>{plan.genre->id});
    }
    CHECK(sample_content_plan(pool, 3).location == sample_content_plan(pool, 3).location);
}

TEST_CASE("plan sampling without replacement") {
    ElementPool pool({element("l1", PlotElementKind::Location, "Oslo"), element("l2", PlotElementKind::Location, "Lima"),
                      element("m1", PlotElementKind::CastMale, "John", {"l1"}),
                      element("m2", PlotElementKind::CastMale, "Tom", {"l2"}),
                      element("f1", PlotElementKind::CastFemale, "Eve", {"l1"}),
                      element("f2", PlotElementKind::CastFemale, "Ann", {"l2"}),
                      element("g1", PlotElementKind::Genre, "mystery"),
                      element("t1", PlotElementKind::Theme, "greed ruins old friendships", {"g1"})});
    PlanSampler sampler(pool, 11);
    const auto a = sampler.next();
    const auto b = sampler.next();
    CHECK(a.location->id != b.location->id);
    CHECK(a.genre->id == b.genre->id);
}

TEST_CASE("plan sampling names the missing kind") {
    auto kind_of_failure = [](const ElementPool& pool) {
        try {
            sample_content_plan(pool, 1);
        } catch (const SamplingError& e) {
            return e.kind();
        }
        return std::string("none");
    };
    std::vector<PlotElement> e{element("l1", PlotElementKind::Location, "Oslo")};
    CHECK(kind_of_failure(ElementPool{}) == "location");
    CHECK(kind_of_failure(ElementPool(e)) == "cast_male");
    e.push_back(element("m1", PlotElementKind::CastMale, "John", {"l1"}));
    CHECK(kind_of_failure(ElementPool(e)) == "cast_female");
    e.push_back(element("f1", PlotElementKind::CastFemale, "Eve", {"l1"}));
    CHECK(kind_of_failure(ElementPool(e)) == "genre");
    e.push_back(element("g1", PlotElementKind::Genre, "mystery"));
    CHECK(kind_of_failure(ElementPool(e)) == "theme");
    e.push_back(element("t1", PlotElementKind::Theme, "greed ruins friendships", {"g1"}));
    CHECK(kind_of_failure(ElementPool(e)) == "none");
}

TEST_CASE("story generation ranks every pair in one pool") {
    TempDir dir("story");
    const auto pool_path = dir.path / "pool.jsonl";
    fill_pool(pool_path);
    const auto plan = sample_content_plan(ElementPool::load(pool_path), 2);
    const auto ctx = runtime().context();
    const auto story = generate_story(ctx, plan, params(PlotElementKind::StoryBody),
                                      params(PlotElementKind::StoryEnding), RankMethod::Ppl, 5);
    REQUIRE(story.candidates.size() >= 2);
    CHECK(story.ranking.size() == story.candidates.size());
    for (const auto& c : story.candidates) {
        CHECK(story.selected().score.ppl <= c.score.ppl);
        CHECK(c.body_tokens + c.ending_tokens <= ctx.max_story_tokens);
        CHECK(c.ending_tokens == runtime().generator().tokenize(c.ending).size());
        CHECK(c.score.ppl == conditional_ppl(runtime().scorer(), c.body, c.ending).ppl);
    }
    std::set<std::size_t> bodies;
    for (const auto& c : story.candidates) bodies.insert(c.body_index);
    CHECK(bodies.size() == story.bodies);

    const auto j = story.to_json();
    CHECK(j["all_candidates"].size() == story.candidates.size());
    CHECK(j["body"] == story.selected().body);
    CHECK(j["ranker"] == "ppl");
    CHECK_FALSE(story.to_json(false).contains("all_candidates"));

    const auto again = generate_story(ctx, plan, params(PlotElementKind::StoryBody),
                                      params(PlotElementKind::StoryEnding), RankMethod::Ppl, 5);
    CHECK(again.to_json() == j);
}

TEST_CASE("story generation limits and failures") {
    TempDir dir("story_fail");
    const auto pool_path = dir.path / "pool.jsonl";
    fill_pool(pool_path);
    const auto plan = sample_content_plan(ElementPool::load(pool_path), 2);
    auto ctx = runtime().context();
    ctx.nsp = nullptr;
    const auto body = params(PlotElementKind::StoryBody);
    const auto ending = params(PlotElementKind::StoryEnding);

    auto capped = runtime().context();
    capped.max_story_tokens = 20;
    try {
        generate_story(capped, plan, body, ending, RankMethod::Ppl, 5);
        FAIL("expected every pair to exceed the cap");
    } catch (const GenerationExhaustedError& e) {
        CHECK(e.diagnostics().at("pair_over_token_limit") > 0);
    }

    CHECK_THROWS_AS(generate_story(ctx, plan, body, ending, RankMethod::Nsp, 5), ConfigurationError);
    CHECK_THROWS_AS(generate_story(ctx, ContentPlan{}, body, ending, RankMethod::Ppl, 5), ValidationError);
}
