// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "scratchplot/decoder.hpp"
#include "scratchplot/lm_gateway.hpp"
#include "scratchplot/pipeline.hpp"
#include "scratchplot/postprocessor.hpp"
#include "scratchplot/prompt_templates.hpp"

namespace scratchplot {

/// Application configuration. JSON layout (every field optional):
///
///   {
///     "backend": {"type": "http", "base_url": "http://127.0.0.1:8000",
///                 "max_attempts": 3, "timeout_s": 120, "top_n": 100}
///              | {"type": "scripted", "script": "model.json",
///                 "scoring_script": "...", "nsp_script": "..."},
///     "models": {"generation": "gpt2-xl", "scoring": "gpt2", "nsp": "bert-base-uncased"},
///     "windows": {"generation": 1024, "scoring": 1024, "nsp": 512},
///     "templates": "task_descriptions.json",
///     "stopwords": "stopwords.txt",
///     "decoding": {"top_k": 30, "block_ngram": 3, "debias_every_step": true, "debias_candidates": 50},
///     "params": {"location": {"num": 20, "min_len": 1, "max_len": 5}, ...},
///     "max_story_tokens": 150
///   }
///
/// Relative paths resolve against the config file's directory. The HTTP base
/// URL can be overridden with SCRATCHPLOT_LM_URL.
struct AppConfig {
    std::string backend_type = "http";
    std::string base_url = "http://127.0.0.1:8000";
    int max_attempts = 3;
    int timeout_s = 120;
    std::optional<int> top_n;
    std::filesystem::path script;
    std::optional<std::filesystem::path> scoring_script;
    std::optional<std::filesystem::path> nsp_script;

    std::string generation_model = "gpt2-xl";
    std::string scoring_model = "gpt2";
    std::string nsp_model = "bert-base-uncased";
    std::size_t generation_window = 1024;
    std::size_t scoring_window = 1024;
    std::size_t nsp_window = 512;

    std::optional<std::filesystem::path> templates;
    std::optional<std::filesystem::path> stopwords;

    bool debias_every_step = true;
    int debias_candidates = 50;
    std::map<PlotElementKind, GenerationParams> params;
    std::size_t max_story_tokens = 150;

    AppConfig();

    static AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static AppConfig load(const std::filesystem::path& path);
    /// `explicit_path`, else $SCRATCHPLOT_CONFIG, else built-in defaults.
    static AppConfig resolve(const std::optional<std::filesystem::path>& explicit_path);

    const GenerationParams& params_for(PlotElementKind kind) const { return params.at(kind); }
};

/// Backends, templates and post-processor built from a config.
class Runtime {
public:
    explicit Runtime(const AppConfig& config);

    PipelineContext context() const;

    const LanguageModel& generator() const { return *generator_; }
    const LanguageModel& scorer() const { return *scorer_; }
    const LanguageModel& nsp() const { return *nsp_; }
    const TemplateRegistry& templates() const { return templates_; }
    const Postprocessor& postprocessor() const { return postprocessor_; }
    const AppConfig& config() const { return config_; }

private:
    AppConfig config_;
    std::shared_ptr<const LanguageModel> generator_;
    std::shared_ptr<const LanguageModel> scorer_;
    std::shared_ptr<const LanguageModel> nsp_;
    TemplateRegistry templates_;
    Postprocessor postprocessor_;
};

}  // namespace scratchplot
