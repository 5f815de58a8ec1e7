// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scratchplot/plot.hpp"

namespace scratchplot {

enum class Terminator { OpenQuote, None };

std::string_view to_string(Terminator t) noexcept;

/// A prompt template. Placeholders are written <NAME> with NAME in [A-Z0-9_],
/// e.g. "Write the twist in a <X1> story."
struct TaskDescription {
    std::string id;
    PlotElementKind kind = PlotElementKind::Location;
    std::string text;
    Terminator terminator = Terminator::None;

    /// Placeholder names in order of first occurrence.
    std::vector<std::string> placeholders() const;
    bool operator==(const TaskDescription&) const = default;
};

using Bindings = std::map<std::string, std::string>;

/// Replace every placeholder with its binding, verbatim and in a single pass
/// (bound values are never re-scanned). Throws RenderError for a missing binding.
std::string render(const TaskDescription& desc, const Bindings& bindings);
std::string render(std::string_view template_text, const Bindings& bindings);

/// Placeholder names used by the story and ending templates.
namespace slot {
inline constexpr std::string_view kX1 = "X1";
inline constexpr std::string_view kLocation = "LOCATION";
inline constexpr std::string_view kMale = "MALE";
inline constexpr std::string_view kFemale = "FEMALE";
inline constexpr std::string_view kGenre = "GENRE";
inline constexpr std::string_view kTheme = "THEME";
inline constexpr std::string_view kBody = "BODY";
}  // namespace slot

/// Immutable registry of task descriptions, in file order.
///
/// File format (JSON):
///   {"task_descriptions": [{"id": "...", "kind": "location", "template": "...",
///                           "terminator": "open_quote" | "none"}, ...]}
class TemplateRegistry {
public:
    explicit TemplateRegistry(std::vector<TaskDescription> descriptions);

    /// The built-in task descriptions (identical to config/task_descriptions.json).
    static TemplateRegistry defaults();
    static TemplateRegistry from_json(const nlohmann::json& j);
    static TemplateRegistry load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    const std::vector<TaskDescription>& all() const noexcept { return descriptions_; }
    /// Throws LookupError when the registry has nothing for `kind`.
    std::vector<TaskDescription> descriptions_for(PlotElementKind kind) const;
    const TaskDescription& by_id(std::string_view id) const;

    /// The single story prompt embedding every element of a complete plan.
    std::string fuse_plan(const ContentPlan& plan) const;
    /// Prompt asking for the ending of `body`; ends with an opening quote.
    std::string ending_prompt(const ContentPlan& plan, std::string_view body) const;

    /// Bindings for a complete plan (LOCATION, MALE, FEMALE, GENRE, THEME).
    static Bindings plan_bindings(const ContentPlan& plan);

private:
    std::vector<TaskDescription> descriptions_;
};

}  // namespace scratchplot
