// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "scratchplot/commands.hpp"
#include "scratchplot/errors.hpp"

namespace {

std::vector<int> parse_orders(const std::string& list) {
    std::vector<int> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace scratchplot;

    CLI::App app{"Story generation with prompted content planning"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "Config file (default: $SCRATCHPLOT_CONFIG)");

    cli::GenElementsArgs elements;
    int num = 0, min_len = 0, max_len = 0;
    auto* gen_elements = app.add_subcommand("gen-elements", "Generate plot elements into a pool");
    gen_elements->add_option("--kind", elements.kind, "location | cast | genre | theme")->required();
    gen_elements->add_option("--pool", elements.pool, "Pool file (JSON lines)")->required();
    auto* num_opt = gen_elements->add_option("--num", num, "Continuations per task description and input");
    auto* min_opt = gen_elements->add_option("--min-len", min_len, "Minimum tokens");
    auto* max_opt = gen_elements->add_option("--max-len", max_len, "Maximum tokens");
    gen_elements->add_option("--seed", elements.seed, "Base seed");

    cli::GenStoryArgs story;
    auto* gen_story = app.add_subcommand("gen-story", "Sample a content plan and generate a ranked story");
    gen_story->add_option("--pool", story.pool, "Pool file")->required();
    gen_story->add_option("--out", story.out, "Output file (one JSON story per line)")->required();
    gen_story->add_option("--bodies", story.bodies, "Story bodies to sample")->capture_default_str();
    gen_story->add_option("--endings", story.endings, "Endings per body")->capture_default_str();
    gen_story->add_option("--ranker", story.ranker, "ppl | nsp | random")
        ->check(CLI::IsMember({"ppl", "nsp", "random"}))
        ->capture_default_str();
    gen_story->add_option("--seed", story.seed, "Base seed");
    gen_story->add_option("--count", story.count, "Number of stories")->capture_default_str();
    bool no_candidates = false;
    gen_story->add_flag("--no-candidates", no_candidates, "Omit all_candidates from the output");

    cli::EvalClozeArgs cloze;
    std::string predictions;
    auto* eval_cloze = app.add_subcommand("eval-cloze", "Story Cloze accuracy of a ranking method");
    eval_cloze->add_option("--data", cloze.data, "Story Cloze CSV/TSV")->required();
    eval_cloze->add_option("--method", cloze.method, "ppl | nsp")
        ->check(CLI::IsMember({"ppl", "nsp"}))
        ->required();
    eval_cloze->add_option("--predictions", predictions, "Write per-item predictions (JSON lines)");

    cli::MetricsArgs metric_args;
    std::string orders = "1,2";
    auto* metrics_cmd = app.add_subcommand("metrics", "Self-BLEU and distinct-n of generated stories");
    metrics_cmd->add_option("--stories", metric_args.stories, "Stories (JSON lines)")->required();
    metrics_cmd->add_option("--n", orders, "Comma-separated n-gram orders")->capture_default_str();
    metrics_cmd->add_flag("--smooth", metric_args.smoothing, "Add-one smoothing for BLEU");

    CLI11_PARSE(app, argc, argv);

    try {
        if (metrics_cmd->parsed()) {
            metric_args.n = parse_orders(orders);
            cli::metrics(metric_args, std::cout);
            return 0;
        }
        const auto config = AppConfig::resolve(config_path.empty() ? std::nullopt
                                                                   : std::optional<std::filesystem::path>(config_path));
        const Runtime runtime(config);
        if (gen_elements->parsed()) {
            if (*num_opt) elements.num = num;
            if (*min_opt) elements.min_len = min_len;
            if (*max_opt) elements.max_len = max_len;
            cli::gen_elements(runtime, elements, std::cout);
        } else if (gen_story->parsed()) {
            story.all_candidates = !no_candidates;
            cli::gen_story(runtime, story, std::cout);
        } else if (eval_cloze->parsed()) {
            if (!predictions.empty()) cloze.predictions = predictions;
            cli::eval_cloze(runtime, cloze, std::cout);
        }
    } catch (const PoolGenerationError& e) {
        std::cerr << "error: " << e.what() << " (rerun to resume)\n";
        return 3;
    } catch (const ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
