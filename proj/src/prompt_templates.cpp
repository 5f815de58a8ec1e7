// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/prompt_templates.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include "scratchplot/errors.hpp"

namespace scratchplot {

namespace {

bool is_slot_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Placeholder starting at `pos` (which holds '<'): returns its name and the index past '>'.
std::optional<std::pair<std::string_view, std::size_t>> placeholder_at(std::string_view s, std::size_t pos) {
    std::size_t j = pos + 1;
    while (j < s.size() && is_slot_char(s[j])) ++j;
    if (j == pos + 1 || j >= s.size() || s[j] != '>' || !(s[pos + 1] >= 'A' && s[pos + 1] <= 'Z')) {
        return std::nullopt;
    }
    return std::pair{s.substr(pos + 1, j - pos - 1), j + 1};
}

Terminator parse_terminator(std::string_view s) {
    if (s == "open_quote") return Terminator::OpenQuote;
    if (s == "none") return Terminator::None;
    throw ConfigurationError("unknown terminator '" + std::string(s) + "'");
}

bool requires_open_quote(PlotElementKind kind) {
    return kind != PlotElementKind::StoryBody;
}

void check(const TaskDescription& d) {
    const bool ends_with_quote = !d.text.empty() && d.text.back() == '"';
    if (d.terminator == Terminator::OpenQuote && !ends_with_quote) {
        throw ConfigurationError("task description '" + d.id + "' declares open_quote but does not end with '\"'");
    }
    if (requires_open_quote(d.kind) && d.terminator != Terminator::OpenQuote) {
        throw ConfigurationError("task description '" + d.id + "' for " + std::string(to_string(d.kind)) +
                                 " must end with an opening quotation mark");
    }
}

}  // namespace

std::string_view to_string(Terminator t) noexcept {
    return t == Terminator::OpenQuote ? "open_quote" : "none";
}

std::vector<std::string> TaskDescription::placeholders() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '<') continue;
        if (auto ph = placeholder_at(text, i)) {
            std::string name(ph->first);
            if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
            i = ph->second - 1;
        }
    }
    return names;
}

std::string render(std::string_view template_text, const Bindings& bindings) {
    std::string out;
    out.reserve(template_text.size());
    std::size_t i = 0;
    while (i < template_text.size()) {
        if (template_text[i] == '<') {
            if (auto ph = placeholder_at(template_text, i)) {
                auto it = bindings.find(std::string(ph->first));
                if (it == bindings.end()) throw RenderError(std::string(ph->first));
                out += it->second;
                i = ph->second;
                continue;
            }
        }
        out += template_text[i++];
    }
    return out;
}

std::string render(const TaskDescription& desc, const Bindings& bindings) {
    return render(desc.text, bindings);
}

TemplateRegistry::TemplateRegistry(std::vector<TaskDescription> descriptions)
    : descriptions_(std::move(descriptions)) {
    for (std::size_t i = 0; i < descriptions_.size(); ++i) {
        check(descriptions_[i]);
        for (std::size_t j = 0; j < i; ++j) {
            if (descriptions_[j].id == descriptions_[i].id) {
                throw ConfigurationError("duplicate task description id '" + descriptions_[i].id + "'");
            }
        }
    }
}

TemplateRegistry TemplateRegistry::defaults() {
    using K = PlotElementKind;
    constexpr auto Q = Terminator::OpenQuote;
    return TemplateRegistry({
        {"location_country", K::Location, "Task: Write the name of a country.\nCountry: \"", Q},
        {"location_province", K::Location, "Task: Write the name of a province.\nProvince: \"", Q},
        {"location_city", K::Location, "Task: Write the name of a city.\nCity: \"", Q},
        {"location_county", K::Location, "Task: Write the name of a county.\nCounty: \"", Q},
        {"cast_male", K::CastMale,
         "Task: Write the male character's full name in a story that happened in <X1>.\nFull name: \"", Q},
        {"cast_female", K::CastFemale,
         "Task: Write the female character's full name in a story that happened in <X1>.\nFull name: \"", Q},
        {"genre_story", K::Genre, "Task: Write a story genre.\nStory genre: \"", Q},
        {"genre_literary", K::Genre, "Task: Write a literary genre.\nLiterary genre: \"", Q},
        {"genre_novel", K::Genre, "Task: Write a novel genre.\nNovel genre: \"", Q},
        {"theme_main_point", K::Theme, "Task: Write the main point from a <X1> story.\nMain point: \"", Q},
        {"theme_twist", K::Theme, "Task: Write the twist in a <X1> story.\nTwist: \"", Q},
        {"theme_lesson", K::Theme, "Task: Write the lesson learned from a <X1> story.\nLesson learned: \"", Q},
        {"theme_spectacle", K::Theme, "Task: Write the spectacle of a <X1> story.\nSpectacle: \"", Q},
        {"story_body", K::StoryBody,
         "Task: Write a plot summary of a <GENRE> story featuring <MALE> and <FEMALE> in <LOCATION>. "
         "The main point of the story is: <THEME>\nPlot summary:",
         Terminator::None},
        {"story_ending", K::StoryEnding,
         "Plot summary: <BODY>\nTask: Write what happens in the end of the story.\nEnding: \"", Q},
    });
}

TemplateRegistry TemplateRegistry::from_json(const nlohmann::json& j) {
    std::vector<TaskDescription> out;
    try {
        for (const auto& item : j.at("task_descriptions")) {
            TaskDescription d;
            d.id = item.at("id").get<std::string>();
            d.kind = parse_kind(item.at("kind").get<std::string>());
            d.text = item.at("template").get<std::string>();
            d.terminator = parse_terminator(item.value("terminator", std::string("none")));
            out.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed task description file: ") + e.what());
    } catch (const LookupError& e) {
        throw ConfigurationError(std::string("malformed task description file: ") + e.what());
    }
    return TemplateRegistry(std::move(out));
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open task description file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("cannot parse " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json TemplateRegistry::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& d : descriptions_) {
        arr.push_back({{"id", d.id},
                       {"kind", std::string(scratchplot::to_string(d.kind))},
                       {"template", d.text},
                       {"terminator", std::string(scratchplot::to_string(d.terminator))}});
    }
    return {{"task_descriptions", arr}};
}

std::vector<TaskDescription> TemplateRegistry::descriptions_for(PlotElementKind kind) const {
    std::vector<TaskDescription> out;
    std::copy_if(descriptions_.begin(), descriptions_.end(), std::back_inserter(out),
                 [&](const TaskDescription& d) { return d.kind == kind; });
    if (out.empty()) throw LookupError("no task descriptions for kind " + std::string(to_string(kind)));
    return out;
}

const TaskDescription& TemplateRegistry::by_id(std::string_view id) const {
    for (const auto& d : descriptions_) {
        if (d.id == id) return d;
    }
    throw LookupError("no task description with id '" + std::string(id) + "'");
}

Bindings TemplateRegistry::plan_bindings(const ContentPlan& plan) {
    plan.require_complete();
    return {{std::string(slot::kLocation), plan.location->text},
            {std::string(slot::kMale), plan.cast_male->text},
            {std::string(slot::kFemale), plan.cast_female->text},
            {std::string(slot::kGenre), plan.genre->text},
            {std::string(slot::kTheme), plan.theme->text}};
}

std::string TemplateRegistry::fuse_plan(const ContentPlan& plan) const {
    return render(descriptions_for(PlotElementKind::StoryBody).front(), plan_bindings(plan));
}

std::string TemplateRegistry::ending_prompt(const ContentPlan& plan, std::string_view body) const {
    if (body.empty()) throw ValidationError("story body is empty", {"body"});
    auto bindings = plan.complete() ? plan_bindings(plan) : Bindings{};
    bindings[std::string(slot::kBody)] = std::string(body);
    return render(descriptions_for(PlotElementKind::StoryEnding).front(), bindings);
}

}  // namespace scratchplot
