// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "scratchplot/errors.hpp"

namespace scratchplot {

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r = rng();
    while (r >= limit) r = rng();
    return r % bound;
}

std::filesystem::path cursor_path(const std::filesystem::path& pool) {
    auto p = pool;
    p += ".cursor";
    return p;
}

/// One (task description, parent) combination; siblings are the debiasing partners.
struct WorkUnit {
    TaskDescription description;
    std::optional<PlotElement> parent;  // a copy; the pool grows while units run
    std::vector<std::string> sibling_prompts;
};

std::vector<WorkUnit> plan_units(const PipelineContext& ctx, ElementGroup group, const ElementPool& pool) {
    std::vector<WorkUnit> units;
    auto bindings = [](const PlotElement* parent) {
        return parent ? Bindings{{std::string(slot::kX1), parent->text}} : Bindings{};
    };
    auto add_group = [&](const std::vector<TaskDescription>& descs, const PlotElement* parent, bool debias) {
        for (std::size_t i = 0; i < descs.size(); ++i) {
            WorkUnit u{descs[i], parent ? std::optional<PlotElement>(*parent) : std::nullopt, {}};
            if (debias) {
                for (std::size_t j = 0; j < descs.size(); ++j) {
                    if (j != i) u.sibling_prompts.push_back(render(descs[j], bindings(parent)));
                }
            }
            units.push_back(std::move(u));
        }
    };

    switch (group) {
        case ElementGroup::Location:
            add_group(ctx.templates.descriptions_for(PlotElementKind::Location), nullptr, true);
            break;
        case ElementGroup::Genre:
            add_group(ctx.templates.descriptions_for(PlotElementKind::Genre), nullptr, false);
            break;
        case ElementGroup::Cast: {
            const auto locations = pool.of_kind(PlotElementKind::Location);
            if (locations.empty()) throw DependencyError("cast generation needs locations in the pool");
            auto descs = ctx.templates.descriptions_for(PlotElementKind::CastMale);
            auto female = ctx.templates.descriptions_for(PlotElementKind::CastFemale);
            descs.insert(descs.end(), female.begin(), female.end());
            for (const auto* loc : locations) add_group(descs, loc, true);
            break;
        }
        case ElementGroup::Theme: {
            const auto genres = pool.of_kind(PlotElementKind::Genre);
            if (genres.empty()) throw DependencyError("theme generation needs genres in the pool");
            const auto descs = ctx.templates.descriptions_for(PlotElementKind::Theme);
            for (const auto* genre : genres) add_group(descs, genre, false);
            break;
        }
    }
    return units;
}

std::size_t read_cursor(const std::filesystem::path& path, ElementGroup group, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) return 0;
    try {
        nlohmann::json j;
        in >> j;
        if (j.at("group").get<std::string>() == to_string(group) && j.at("seed").get<std::uint64_t>() == seed) {
            return j.at("next_unit").get<std::size_t>();
        }
    } catch (const nlohmann::json::exception&) {
    }
    return 0;
}

void write_cursor(const std::filesystem::path& path, ElementGroup group, std::uint64_t seed, std::size_t next) {
    std::ofstream out(path, std::ios::trunc);
    out << nlohmann::json{{"group", std::string(to_string(group))}, {"seed", seed}, {"next_unit", next}}.dump()
        << '\n';
}

}  // namespace

ElementPool ElementPool::load(const std::filesystem::path& path) {
    ElementPool pool;
    std::ifstream in(path);
    if (!in) return pool;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            pool.elements_.push_back(nlohmann::json::parse(line).get<PlotElement>());
        } catch (const std::exception& e) {
            throw ConfigurationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pool;
}

void ElementPool::append(const std::filesystem::path& path, std::span<const PlotElement> elements) {
    if (elements.empty()) return;
    std::ofstream out(path, std::ios::app);
    if (!out) throw ConfigurationError("cannot write pool " + path.string());
    for (const auto& e : elements) out << nlohmann::json(e).dump() << '\n';
    out.flush();
}

void ElementPool::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigurationError("cannot write pool " + path.string());
    for (const auto& e : elements_) out << nlohmann::json(e).dump() << '\n';
}

std::vector<const PlotElement*> ElementPool::of_kind(PlotElementKind kind) const {
    std::vector<const PlotElement*> out;
    for (const auto& e : elements_) {
        if (e.kind == kind) out.push_back(&e);
    }
    return out;
}

std::vector<const PlotElement*> ElementPool::children(const std::string& parent_id, PlotElementKind kind) const {
    std::vector<const PlotElement*> out;
    for (const auto& e : elements_) {
        if (e.kind == kind && std::find(e.parent_ids.begin(), e.parent_ids.end(), parent_id) != e.parent_ids.end()) {
            out.push_back(&e);
        }
    }
    return out;
}

const PlotElement* ElementPool::find(const std::string& id) const {
    for (const auto& e : elements_) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

PoolReport generate_element_pool(const PipelineContext& ctx, ElementGroup group, const GenerationParams& params,
                                 const std::filesystem::path& pool_path, std::uint64_t seed) {
    params.validate();
    ElementPool pool = ElementPool::load(pool_path);
    const auto units = plan_units(ctx, group, pool);
    const auto cursor = cursor_path(pool_path);

    PoolReport report;
    report.resumed_from = std::min(read_cursor(cursor, group, seed), units.size());

    std::map<PlotElementKind, std::size_t> next_id;
    for (const auto& e : pool.elements()) ++next_id[e.kind];

    for (std::size_t u = report.resumed_from; u < units.size(); ++u) {
        const auto& unit = units[u];
        const PlotElementKind kind = unit.description.kind;
        Bindings bindings;
        std::vector<std::string> bound;
        if (unit.parent) {
            bindings[std::string(slot::kX1)] = unit.parent->text;
            bound.push_back(unit.parent->text);
        }
        const std::string prompt = render(unit.description, bindings);

        std::optional<DebiasGroup> debias;
        if (!unit.sibling_prompts.empty()) {
            debias = DebiasGroup{unit.sibling_prompts, ctx.debias_candidate_window, ctx.debias_every_step};
        }

        std::vector<PlotElement> survivors;
        try {
            for (int j = 0; j < params.num; ++j) {
                const std::uint64_t candidate_seed = seed + u * static_cast<std::uint64_t>(params.num) + j;
                auto cont = sample_continuation(ctx.generator, prompt, params, StopRule::CloseQuote, debias,
                                                candidate_seed);
                if (!cont) {
                    ++report.dropped;
                    continue;
                }
                ++report.sampled;
                auto outcome = ctx.postprocessor.process(kind, cont->text, {prompt, bound, std::nullopt});
                if (!outcome.text) {
                    ++report.filtered[outcome.rejected_by ? std::string(to_string(*outcome.rejected_by)) : "empty"];
                    continue;
                }
                const std::vector<std::string> parents =
                    unit.parent ? std::vector<std::string>{unit.parent->id} : std::vector<std::string>{};
                auto same = [&](const PlotElement& e) {
                    return e.kind == kind && e.text == *outcome.text && e.parent_ids == parents;
                };
                if (std::any_of(pool.elements().begin(), pool.elements().end(), same) ||
                    std::any_of(survivors.begin(), survivors.end(), same)) {
                    ++report.duplicates;
                    continue;
                }
                PlotElement e;
                char id[64];
                std::snprintf(id, sizeof id, "%s-%04zu", std::string(to_string(kind)).c_str(), ++next_id[kind]);
                e.id = id;
                e.kind = kind;
                e.text = std::move(*outcome.text);
                e.parent_ids = parents;
                e.task_description_id = unit.description.id;
                e.model_id = ctx.generator_model_id;
                e.created_at = utc_timestamp();
                survivors.push_back(std::move(e));
            }
        } catch (const ConfigurationError&) {
            throw;
        } catch (const Error& e) {
            write_cursor(cursor, group, seed, u);
            throw PoolGenerationError(std::string("element generation stopped at unit ") + std::to_string(u) +
                                          ": " + e.what(),
                                      u, report.written);
        }

        ElementPool::append(pool_path, survivors);
        report.written += survivors.size();
        for (auto& e : survivors) pool.add(std::move(e));
        ++report.units;
        write_cursor(cursor, group, seed, u + 1);
    }
    std::filesystem::remove(cursor);
    return report;
}

PlanSampler::PlanSampler(const ElementPool& pool, std::uint64_t seed) : pool_(pool), rng_(seed) {}

const PlotElement* PlanSampler::pick(std::vector<const PlotElement*> options, PlotElementKind kind) {
    auto& used = used_[kind];
    std::vector<const PlotElement*> fresh;
    for (const auto* e : options) {
        if (!used.contains(e->id)) fresh.push_back(e);
    }
    if (fresh.empty()) {
        for (const auto* e : options) used.erase(e->id);
        fresh = std::move(options);
    }
    const auto* chosen = fresh[bounded(rng_, fresh.size())];
    used.insert(chosen->id);
    return chosen;
}

ContentPlan PlanSampler::next() {
    using K = PlotElementKind;
    auto fail = [](K kind, const std::string& why) {
        return SamplingError("cannot sample " + std::string(to_string(kind)) + ": " + why,
                             std::string(to_string(kind)));
    };

    const auto locations = pool_.of_kind(K::Location);
    if (locations.empty()) throw fail(K::Location, "pool has no locations");
    std::vector<const PlotElement*> cast_ready;
    bool any_male = false;
    for (const auto* loc : locations) {
        const bool male = !pool_.children(loc->id, K::CastMale).empty();
        const bool female = !pool_.children(loc->id, K::CastFemale).empty();
        any_male = any_male || male;
        if (male && female) cast_ready.push_back(loc);
    }
    if (cast_ready.empty()) {
        const K missing = any_male ? K::CastFemale : K::CastMale;
        throw fail(missing, "no location has both a male and a female cast member");
    }

    const auto genres = pool_.of_kind(K::Genre);
    if (genres.empty()) throw fail(K::Genre, "pool has no genres");
    std::vector<const PlotElement*> themed;
    for (const auto* g : genres) {
        if (!pool_.children(g->id, K::Theme).empty()) themed.push_back(g);
    }
    if (themed.empty()) throw fail(K::Theme, "no genre has a theme");

    ContentPlan plan;
    const auto* loc = pick(cast_ready, K::Location);
    plan.location = *loc;
    plan.cast_male = *pick(pool_.children(loc->id, K::CastMale), K::CastMale);
    plan.cast_female = *pick(pool_.children(loc->id, K::CastFemale), K::CastFemale);
    const auto* genre = pick(themed, K::Genre);
    plan.genre = *genre;
    plan.theme = *pick(pool_.children(genre->id, K::Theme), K::Theme);
    return plan;
}

ContentPlan sample_content_plan(const ElementPool& pool, std::uint64_t seed) {
    return PlanSampler(pool, seed).next();
}

nlohmann::json StoryResult::to_json(bool include_candidates) const {
    const auto& best = selected();
    auto score_json = [](const EndingScore& s) {
        nlohmann::json j{{"ppl", s.ppl}};
        j["nsp"] = s.nsp ? nlohmann::json(*s.nsp) : nlohmann::json(nullptr);
        return j;
    };
    nlohmann::json j{{"plan", plan},
                     {"body", best.body},
                     {"ending", best.ending},
                     {"scores", score_json(best.score)},
                     {"tokens", {{"body", best.body_tokens}, {"ending", best.ending_tokens}}},
                     {"ranker", std::string(to_string(method))},
                     {"diagnostics", diagnostics}};
    if (include_candidates) {
        auto all = nlohmann::json::array();
        for (const auto& c : candidates) {
            all.push_back({{"body_index", c.body_index},
                           {"body", c.body},
                           {"ending", c.ending},
                           {"tokens", {{"body", c.body_tokens}, {"ending", c.ending_tokens}}},
                           {"scores", score_json(c.score)}});
        }
        j["all_candidates"] = std::move(all);
        j["selected_index"] = ranking.front();
    }
    return j;
}

StoryResult generate_story(const PipelineContext& ctx, const ContentPlan& plan, const GenerationParams& body_params,
                           const GenerationParams& ending_params, RankMethod method, std::uint64_t seed) {
    plan.require_complete();
    body_params.validate();
    ending_params.validate();
    if (method == RankMethod::Nsp && ctx.nsp == nullptr) {
        throw ConfigurationError("NSP ranking requested but no NSP backend is configured");
    }

    StoryResult result;
    result.plan = plan;
    result.method = method;
    auto& diag = result.diagnostics;

    const auto plan_values = TemplateRegistry::plan_bindings(plan);
    std::vector<std::string> bound;
    for (const auto& [name, value] : plan_values) bound.push_back(value);

    const std::string story_prompt = ctx.templates.fuse_plan(plan);
    std::vector<std::string> bodies;
    for (int i = 0; i < body_params.num; ++i) {
        auto cont = sample_continuation(ctx.generator, story_prompt, body_params, StopRule::FixedLength, std::nullopt,
                                        seed + static_cast<std::uint64_t>(i));
        if (!cont) {
            ++diag["body_dropped_by_decoder"];
            continue;
        }
        auto outcome = ctx.postprocessor.process(PlotElementKind::StoryBody, cont->text, {story_prompt, bound, plan});
        if (!outcome.text) {
            ++diag["body_" + (outcome.rejected_by ? std::string(to_string(*outcome.rejected_by)) : "empty")];
            continue;
        }
        bodies.push_back(std::move(*outcome.text));
    }
    result.bodies = bodies.size();
    if (bodies.empty()) throw GenerationExhaustedError("no story body survived post-processing", diag);

    for (std::size_t b = 0; b < bodies.size(); ++b) {
        const auto& body = bodies[b];
        const std::string prompt = ctx.templates.ending_prompt(plan, body);
        auto ending_bound = bound;
        ending_bound.push_back(body);
        const std::size_t body_tokens = ctx.generator.tokenize(body).size();

        for (int j = 0; j < ending_params.num; ++j) {
            const std::uint64_t s = seed + static_cast<std::uint64_t>(body_params.num) +
                                    b * static_cast<std::uint64_t>(ending_params.num) + static_cast<std::uint64_t>(j);
            auto cont = sample_continuation(ctx.generator, prompt, ending_params, StopRule::CloseQuote, std::nullopt, s);
            if (!cont) {
                ++diag["ending_dropped_by_decoder"];
                continue;
            }
            auto outcome =
                ctx.postprocessor.process(PlotElementKind::StoryEnding, cont->text, {prompt, ending_bound, plan});
            if (!outcome.text) {
                ++diag["ending_" + (outcome.rejected_by ? std::string(to_string(*outcome.rejected_by)) : "empty")];
                continue;
            }
            StoryCandidate cand;
            cand.body_index = b;
            cand.body = body;
            cand.ending = std::move(*outcome.text);
            cand.body_tokens = body_tokens;
            cand.ending_tokens = ctx.generator.tokenize(cand.ending).size();
            if (cand.body_tokens + cand.ending_tokens > ctx.max_story_tokens) {
                ++diag["pair_over_token_limit"];
                continue;
            }
            const auto ppl = conditional_ppl(ctx.scorer, cand.body, cand.ending);
            cand.score.ppl = ppl.ppl;
            cand.ppl_body_truncated = ppl.body_truncated;
            if (ctx.nsp != nullptr) cand.score.nsp = ctx.nsp->nsp_probability(cand.body, cand.ending);
            result.candidates.push_back(std::move(cand));
        }
    }
    if (result.candidates.empty()) throw GenerationExhaustedError("no (body, ending) pair survived", diag);

    std::vector<EndingScore> scores;
    for (const auto& c : result.candidates) scores.push_back(c.score);
    result.ranking = rank_pairs(scores, method, seed);
    return result;
}

}  // namespace scratchplot
