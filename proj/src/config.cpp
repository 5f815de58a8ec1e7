// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/config.hpp"

#include <cstdlib>
#include <fstream>

#include "scratchplot/errors.hpp"
#include "scratchplot/http_model.hpp"
#include "scratchplot/scripted_model.hpp"

namespace scratchplot {

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

AppConfig::AppConfig() {
    for (auto kind : kAllKinds) params[kind] = GenerationParams::for_kind(kind);
}

AppConfig AppConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    AppConfig c;
    try {
        if (j.contains("backend")) {
            const auto& b = j["backend"];
            c.backend_type = b.value("type", c.backend_type);
            c.base_url = b.value("base_url", c.base_url);
            c.max_attempts = b.value("max_attempts", c.max_attempts);
            c.timeout_s = b.value("timeout_s", c.timeout_s);
            if (b.contains("top_n")) c.top_n = b["top_n"].get<int>();
            if (b.contains("script")) c.script = resolve_path(base_dir, b["script"].get<std::string>());
            if (b.contains("scoring_script")) {
                c.scoring_script = resolve_path(base_dir, b["scoring_script"].get<std::string>());
            }
            if (b.contains("nsp_script")) c.nsp_script = resolve_path(base_dir, b["nsp_script"].get<std::string>());
        }
        if (j.contains("models")) {
            const auto& m = j["models"];
            c.generation_model = m.value("generation", c.generation_model);
            c.scoring_model = m.value("scoring", c.scoring_model);
            c.nsp_model = m.value("nsp", c.nsp_model);
        }
        if (j.contains("windows")) {
            const auto& w = j["windows"];
            c.generation_window = w.value("generation", c.generation_window);
            c.scoring_window = w.value("scoring", c.scoring_window);
            c.nsp_window = w.value("nsp", c.nsp_window);
        }
        if (j.contains("templates")) c.templates = resolve_path(base_dir, j["templates"].get<std::string>());
        if (j.contains("stopwords")) c.stopwords = resolve_path(base_dir, j["stopwords"].get<std::string>());

        int top_k = 30;
        int block = 3;
        if (j.contains("decoding")) {
            const auto& d = j["decoding"];
            top_k = d.value("top_k", top_k);
            block = d.value("block_ngram", block);
            c.debias_every_step = d.value("debias_every_step", c.debias_every_step);
            c.debias_candidates = d.value("debias_candidates", c.debias_candidates);
        }
        for (auto& [kind, p] : c.params) {
            p.top_k = top_k;
            p.block_ngram = block;
        }
        if (j.contains("params")) {
            for (const auto& [name, v] : j["params"].items()) {
                std::vector<PlotElementKind> kinds;
                if (name == "cast") {
                    kinds = {PlotElementKind::CastMale, PlotElementKind::CastFemale};
                } else if (name == "body") {
                    kinds = {PlotElementKind::StoryBody};
                } else if (name == "ending") {
                    kinds = {PlotElementKind::StoryEnding};
                } else {
                    kinds = {parse_kind(name)};
                }
                for (auto kind : kinds) {
                    auto& p = c.params[kind];
                    p.num = v.value("num", p.num);
                    p.min_len = v.value("min_len", p.min_len);
                    p.max_len = v.value("max_len", p.max_len);
                    p.top_k = v.value("top_k", p.top_k);
                    p.block_ngram = v.value("block_ngram", p.block_ngram);
                    p.validate();
                }
            }
        }
        c.max_story_tokens = j.value("max_story_tokens", c.max_story_tokens);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed config: ") + e.what());
    } catch (const LookupError& e) {
        throw ConfigurationError(std::string("malformed config: ") + e.what());
    }
    if (c.backend_type != "http" && c.backend_type != "scripted") {
        throw ConfigurationError("unknown backend type '" + c.backend_type + "'");
    }
    if (c.backend_type == "scripted" && c.script.empty()) {
        throw ConfigurationError("scripted backend needs backend.script");
    }
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError("cannot parse config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

AppConfig AppConfig::resolve(const std::optional<std::filesystem::path>& explicit_path) {
    if (explicit_path) return load(*explicit_path);
    if (const char* env = std::getenv("SCRATCHPLOT_CONFIG"); env != nullptr && *env != '\0') return load(env);
    return AppConfig{};
}

Runtime::Runtime(const AppConfig& config)
    : config_(config),
      templates_(config.templates ? TemplateRegistry::load(*config.templates) : TemplateRegistry::defaults()),
      postprocessor_(RuleMatrix::defaults(),
                     config.stopwords ? StopwordList::load(*config.stopwords) : StopwordList::defaults()) {
    if (config.backend_type == "scripted") {
        auto gen = std::make_shared<const ScriptedModel>(ScriptedModel::load(config.script));
        generator_ = gen;
        scorer_ = config.scoring_script
                      ? std::make_shared<const ScriptedModel>(ScriptedModel::load(*config.scoring_script))
                      : gen;
        nsp_ = config.nsp_script ? std::make_shared<const ScriptedModel>(ScriptedModel::load(*config.nsp_script))
                                 : gen;
        return;
    }
    const auto url = HttpLanguageModel::base_url_from_env(config.base_url);
    auto make = [&](const std::string& model, std::size_t window, std::optional<std::size_t> nsp_window) {
        HttpLanguageModel::Options o;
        o.base_url = url;
        o.model = model;
        o.context_window = window;
        o.nsp_window = nsp_window;
        o.top_n = config.top_n;
        o.max_attempts = config.max_attempts;
        o.timeout = std::chrono::seconds(config.timeout_s);
        return std::make_shared<const HttpLanguageModel>(std::move(o));
    };
    generator_ = make(config.generation_model, config.generation_window, std::nullopt);
    scorer_ = make(config.scoring_model, config.scoring_window, std::nullopt);
    nsp_ = make(config.nsp_model, config.nsp_window, config.nsp_window);
}

PipelineContext Runtime::context() const {
    return PipelineContext{*generator_,
                           *scorer_,
                           nsp_.get(),
                           templates_,
                           postprocessor_,
                           config_.backend_type == "scripted" ? "scripted:" + config_.script.filename().string()
                                                              : config_.generation_model,
                           config_.debias_every_step,
                           config_.debias_candidates,
                           config_.max_story_tokens};
}

}  // namespace scratchplot
