// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/plot.hpp"

#include "scratchplot/errors.hpp"
#include "scratchplot/text.hpp"

namespace scratchplot {

std::string_view to_string(PlotElementKind kind) noexcept {
    switch (kind) {
        case PlotElementKind::Location: return "location";
        case PlotElementKind::CastMale: return "cast_male";
        case PlotElementKind::CastFemale: return "cast_female";
        case PlotElementKind::Genre: return "genre";
        case PlotElementKind::Theme: return "theme";
        case PlotElementKind::StoryBody: return "story_body";
        case PlotElementKind::StoryEnding: return "story_ending";
    }
    return "unknown";
}

PlotElementKind parse_kind(std::string_view name) {
    for (auto kind : kAllKinds) {
        if (to_string(kind) == name) return kind;
    }
    throw LookupError("unknown plot element kind '" + std::string(name) + "'");
}

std::string_view to_string(ElementGroup group) noexcept {
    switch (group) {
        case ElementGroup::Location: return "location";
        case ElementGroup::Cast: return "cast";
        case ElementGroup::Genre: return "genre";
        case ElementGroup::Theme: return "theme";
    }
    return "unknown";
}

ElementGroup parse_group(std::string_view name) {
    for (auto g : {ElementGroup::Location, ElementGroup::Cast, ElementGroup::Genre, ElementGroup::Theme}) {
        if (to_string(g) == name) return g;
    }
    throw LookupError("unknown element kind '" + std::string(name) + "' (expected location|cast|genre|theme)");
}

std::vector<PlotElementKind> kinds_of(ElementGroup group) {
    switch (group) {
        case ElementGroup::Location: return {PlotElementKind::Location};
        case ElementGroup::Cast: return {PlotElementKind::CastMale, PlotElementKind::CastFemale};
        case ElementGroup::Genre: return {PlotElementKind::Genre};
        case ElementGroup::Theme: return {PlotElementKind::Theme};
    }
    return {};
}

void to_json(nlohmann::json& j, const PlotElement& e) {
    j = nlohmann::json{{"id", e.id},
                       {"kind", std::string(to_string(e.kind))},
                       {"text", e.text},
                       {"parent_ids", e.parent_ids},
                       {"task_description_id", e.task_description_id},
                       {"model_id", e.model_id},
                       {"created_at", e.created_at}};
}

void from_json(const nlohmann::json& j, PlotElement& e) {
    j.at("id").get_to(e.id);
    e.kind = parse_kind(j.at("kind").get<std::string>());
    j.at("text").get_to(e.text);
    e.parent_ids = j.value("parent_ids", std::vector<std::string>{});
    e.task_description_id = j.value("task_description_id", std::string{});
    e.model_id = j.value("model_id", std::string{});
    e.created_at = j.value("created_at", std::string{});
}

std::vector<PlotElementKind> ContentPlan::missing() const {
    std::vector<PlotElementKind> out;
    if (!location) out.push_back(PlotElementKind::Location);
    if (!cast_male) out.push_back(PlotElementKind::CastMale);
    if (!cast_female) out.push_back(PlotElementKind::CastFemale);
    if (!genre) out.push_back(PlotElementKind::Genre);
    if (!theme) out.push_back(PlotElementKind::Theme);
    return out;
}

void ContentPlan::require_complete() const {
    const auto absent = missing();
    if (absent.empty()) return;
    std::vector<std::string> names;
    std::string what = "incomplete content plan, missing:";
    for (auto k : absent) {
        names.emplace_back(to_string(k));
        what += " " + names.back();
    }
    throw ValidationError(what, std::move(names));
}

ContentPlan ContentPlan::from_texts(std::string location, std::string cast_male, std::string cast_female,
                                    std::string genre, std::string theme) {
    auto make = [](PlotElementKind kind, std::string text, std::vector<std::string> parents) {
        PlotElement e;
        e.id = std::string(to_string(kind));
        e.kind = kind;
        e.text = std::move(text);
        e.parent_ids = std::move(parents);
        return e;
    };
    ContentPlan plan;
    plan.location = make(PlotElementKind::Location, std::move(location), {});
    plan.cast_male = make(PlotElementKind::CastMale, std::move(cast_male), {"location"});
    plan.cast_female = make(PlotElementKind::CastFemale, std::move(cast_female), {"location"});
    plan.genre = make(PlotElementKind::Genre, std::move(genre), {});
    plan.theme = make(PlotElementKind::Theme, std::move(theme), {"genre"});
    return plan;
}

void to_json(nlohmann::json& j, const ContentPlan& plan) {
    j = nlohmann::json::object();
    auto put = [&](const char* key, const std::optional<PlotElement>& e) {
        if (e) j[key] = nlohmann::json{{"id", e->id}, {"text", e->text}, {"parent_ids", e->parent_ids}};
    };
    put("location", plan.location);
    put("cast_male", plan.cast_male);
    put("cast_female", plan.cast_female);
    put("genre", plan.genre);
    put("theme", plan.theme);
}

std::string first_name(std::string_view full_name) {
    auto parts = text::split_whitespace(full_name);
    return parts.empty() ? std::string{} : parts.front();
}

}  // namespace scratchplot
