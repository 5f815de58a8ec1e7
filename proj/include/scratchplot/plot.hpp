// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace scratchplot {

/// What a task description generates. Dependency order:
/// Location -> Cast{Male,Female}, Genre -> Theme, all -> StoryBody -> StoryEnding.
enum class PlotElementKind { Location, CastMale, CastFemale, Genre, Theme, StoryBody, StoryEnding };

inline constexpr std::array<PlotElementKind, 7> kAllKinds = {
    PlotElementKind::Location, PlotElementKind::CastMale,  PlotElementKind::CastFemale,
    PlotElementKind::Genre,    PlotElementKind::Theme,     PlotElementKind::StoryBody,
    PlotElementKind::StoryEnding};

std::string_view to_string(PlotElementKind kind) noexcept;
/// Accepts the names produced by to_string (snake_case). Throws LookupError otherwise.
PlotElementKind parse_kind(std::string_view name);

/// The unit of offline pool generation. Cast covers both the male and the female
/// description, which are debiased against each other.
enum class ElementGroup { Location, Cast, Genre, Theme };

std::string_view to_string(ElementGroup group) noexcept;
ElementGroup parse_group(std::string_view name);
std::vector<PlotElementKind> kinds_of(ElementGroup group);

struct PlotElement {
    std::string id;
    PlotElementKind kind = PlotElementKind::Location;
    std::string text;
    std::vector<std::string> parent_ids;
    std::string task_description_id;
    std::string model_id;
    std::string created_at;

    bool operator==(const PlotElement&) const = default;
};

void to_json(nlohmann::json& j, const PlotElement& e);
void from_json(const nlohmann::json& j, PlotElement& e);

/// One sampled value per plot element. Fields are optional so that partially
/// assembled plans can be represented and rejected with a precise error.
struct ContentPlan {
    std::optional<PlotElement> location;
    std::optional<PlotElement> cast_male;
    std::optional<PlotElement> cast_female;
    std::optional<PlotElement> genre;
    std::optional<PlotElement> theme;

    /// Kinds that are absent, in dependency order.
    std::vector<PlotElementKind> missing() const;
    bool complete() const { return missing().empty(); }
    /// Throws ValidationError naming each missing element.
    void require_complete() const;

    /// Convenience for tests and fixtures: a plan built from bare strings.
    static ContentPlan from_texts(std::string location, std::string cast_male, std::string cast_female,
                                  std::string genre, std::string theme);
};

void to_json(nlohmann::json& j, const ContentPlan& plan);

/// First whitespace-delimited token of a generated full name.
std::string first_name(std::string_view full_name);

}  // namespace scratchplot
