// SPDX-License-Identifier: Apache-2.0

#include "scratchplot/commands.hpp"

#include <fstream>
#include <ostream>

#include "scratchplot/errors.hpp"
#include "scratchplot/metrics.hpp"
#include "scratchplot/ranker.hpp"

namespace scratchplot::cli {

nlohmann::json gen_elements(const Runtime& runtime, const GenElementsArgs& args, std::ostream& out) {
    const auto group = parse_group(args.kind);
    auto params = runtime.config().params_for(kinds_of(group).front());
    if (args.num) params.num = *args.num;
    if (args.min_len) params.min_len = *args.min_len;
    if (args.max_len) params.max_len = *args.max_len;

    const auto report = generate_element_pool(runtime.context(), group, params, args.pool, args.seed);
    nlohmann::json j{{"kind", args.kind},   {"units", report.units},       {"sampled", report.sampled},
                     {"dropped", report.dropped}, {"filtered", report.filtered}, {"duplicates", report.duplicates},
                     {"written", report.written}, {"resumed_from", report.resumed_from}};
    out << j.dump() << '\n';
    return j;
}

nlohmann::json gen_story(const Runtime& runtime, const GenStoryArgs& args, std::ostream& out) {
    if (args.count < 1) throw PreconditionError("--count must be at least 1");
    const auto method = parse_rank_method(args.ranker);
    const auto pool = ElementPool::load(args.pool);
    auto body = runtime.config().params_for(PlotElementKind::StoryBody);
    auto ending = runtime.config().params_for(PlotElementKind::StoryEnding);
    body.num = args.bodies;
    ending.num = args.endings;

    std::ofstream sink(args.out, std::ios::trunc);
    if (!sink) throw ConfigurationError("cannot write " + args.out.string());

    PlanSampler sampler(pool, args.seed);
    const auto ctx = runtime.context();
    std::size_t written = 0;
    std::size_t exhausted = 0;
    for (int i = 0; i < args.count; ++i) {
        const auto plan = sampler.next();
        const std::uint64_t story_seed = args.seed + static_cast<std::uint64_t>(i) * 1000003ULL;
        try {
            const auto story = generate_story(ctx, plan, body, ending, method, story_seed);
            sink << story.to_json(args.all_candidates).dump() << '\n';
            ++written;
        } catch (const GenerationExhaustedError& e) {
            ++exhausted;
            if (args.count == 1) throw;
        }
    }
    nlohmann::json j{{"stories", written}, {"exhausted", exhausted}, {"out", args.out.string()}};
    out << j.dump() << '\n';
    return j;
}

nlohmann::json eval_cloze(const Runtime& runtime, const EvalClozeArgs& args, std::ostream& out) {
    const auto method = parse_rank_method(args.method);
    const auto items = load_cloze(args.data);
    const LanguageModel& model = method == RankMethod::Nsp ? runtime.nsp() : runtime.scorer();
    const auto report = cloze_evaluate(model, items, method);

    if (args.predictions) {
        std::ofstream pred(*args.predictions, std::ios::trunc);
        if (!pred) throw ConfigurationError("cannot write " + args.predictions->string());
        for (const auto& p : report.predictions) {
            nlohmann::json row{{"id", p.id}, {"score_a", p.score_a}, {"score_b", p.score_b}, {"correct", p.correct}};
            row["predicted"] = p.predicted ? nlohmann::json(*p.predicted == ClozeLabel::A ? "a" : "b")
                                           : nlohmann::json(nullptr);
            if (!p.error.empty()) row["error"] = p.error;
            pred << row.dump() << '\n';
        }
    }
    nlohmann::json j{{"method", args.method},       {"accuracy", report.accuracy},
                     {"accuracy_evaluated", report.accuracy_evaluated}, {"correct", report.correct},
                     {"evaluated", report.evaluated}, {"skipped", report.skipped}, {"total", report.total}};
    out << j.dump() << '\n';
    return j;
}

std::string story_text(const nlohmann::json& record) {
    if (record.contains("text")) return record["text"].get<std::string>();
    std::string text = record.at("body").get<std::string>();
    if (record.contains("ending")) text += " " + record["ending"].get<std::string>();
    return text;
}

nlohmann::json metrics(const MetricsArgs& args, std::ostream& out) {
    std::ifstream in(args.stories);
    if (!in) throw ConfigurationError("cannot open " + args.stories.string());
    metrics::StoryCorpus corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            corpus.push_back(metrics::tokenize_story(story_text(nlohmann::json::parse(line))));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigurationError("bad story record in " + args.stories.string() + ": " + e.what());
        }
    }
    if (corpus.empty()) throw PreconditionError("no stories in " + args.stories.string());

    const auto smoothing = args.smoothing ? metrics::BleuSmoothing::AddOne : metrics::BleuSmoothing::None;
    nlohmann::json self_bleu = nlohmann::json::object();
    nlohmann::json distinct = nlohmann::json::object();
    std::size_t skipped = 0;
    for (int n : args.n) {
        const auto key = std::to_string(n);
        self_bleu[key] = corpus.size() >= 2 ? nlohmann::json(metrics::self_bleu(corpus, n, smoothing))
                                            : nlohmann::json(nullptr);
        const auto d = metrics::corpus_distinct_n(corpus, n);
        distinct[key] = d.mean;
        skipped = std::max(skipped, d.skipped);
    }
    nlohmann::json j{{"self_bleu", self_bleu}, {"distinct", distinct}, {"skipped", skipped}, {"stories", corpus.size()}};
    out << j.dump() << '\n';
    return j;
}

}  // namespace scratchplot::cli
