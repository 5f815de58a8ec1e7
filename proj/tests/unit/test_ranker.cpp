// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "cloze_fixture.hpp"
#include "doctest.h"
#include "scratchplot/errors.hpp"
#include "scratchplot/ranker.hpp"
#include "scratchplot/scripted_model.hpp"

using namespace scratchplot;

namespace {

const std::filesystem::path kRepo = SCRATCHPLOT_SOURCE_DIR;

TokenDistribution dist(std::map<Token, double> entries) {
    return TokenDistribution{std::move(entries), true};
}

// Body "b1 b2" followed by a two-token ending with the given probabilities.
ScriptedModel two_step(double p1, double p2) {
    std::vector<ScriptRule> rules{{{"b2"}, dist({{"e1", p1}, {"zz", 1.0 - p1}})},
                                  {{"e1"}, dist({{"e2", p2}, {"zz", 1.0 - p2}})}};
    if (p1 == 1.0) rules[0].next = dist({{"e1", 1.0}});
    if (p2 == 1.0) rules[1].next = dist({{"e2", 1.0}});
    return ScriptedModel(std::move(rules), dist({{"zz", 1.0}}));
}

std::vector<EndingScore> ppls(std::initializer_list<double> values) {
    std::vector<EndingScore> out;
    for (double v : values) out.push_back({v, std::nullopt});
    return out;
}

}  // namespace

TEST_CASE("worked perplexity examples") {
    CHECK(conditional_ppl(two_step(1.0, 1.0), "b1 b2", "e1 e2").ppl == 1.0);
    CHECK(conditional_ppl(two_step(0.5, 0.5), "b1 b2", "e1 e2").ppl == 2.0);
    CHECK(conditional_ppl(two_step(0.5, 0.25), "b1 b2", "e1 e2").ppl == std::sqrt(8.0));
    CHECK(conditional_ppl(two_step(0.5, 0.25), "b1 b2", "e1 e2").ending_tokens == 2);
}

TEST_CASE("perplexity from log-probabilities") {
    const double lp[] = {std::log(0.2), std::log(0.7), std::log(0.05)};
    CHECK(perplexity_from_logprobs(lp) == doctest::Approx(std::exp(-(lp[0] + lp[1] + lp[2]) / 3)).epsilon(1e-14));
    const double certain[] = {0.0, 0.0};
    CHECK(perplexity_from_logprobs(certain) == 1.0);
    const double impossible[] = {-INFINITY, -1.0};
    CHECK(std::isinf(perplexity_from_logprobs(impossible)));
    const double tiny[] = {-800.0, -2.0};
    CHECK(perplexity_from_logprobs(tiny) == doctest::Approx(std::exp(401.0)));
    std::vector<double> many(5000, std::log(0.3));
    CHECK(perplexity_from_logprobs(many) == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
    CHECK_THROWS_AS(perplexity_from_logprobs(std::span<const double>{}), PreconditionError);
    const double bad[] = {0.5};
    CHECK_THROWS_AS(perplexity_from_logprobs(bad), PreconditionError);
}

TEST_CASE("body tokens condition the ending but are never scored") {
    // The body's own probabilities differ between the two scripts; the ending's do not.
    ScriptedModel a({{{"b2"}, dist({{"e1", 0.4}, {"zz", 0.6}})}, {{"b1"}, dist({{"b2", 0.01}, {"zz", 0.99}})}},
                    dist({{"zz", 1.0}}));
    ScriptedModel b({{{"b2"}, dist({{"e1", 0.4}, {"zz", 0.6}})}, {{"b1"}, dist({{"b2", 0.99}, {"zz", 0.01}})}},
                    dist({{"zz", 1.0}}));
    CHECK(conditional_ppl(a, "b1 b2", "e1").ppl == conditional_ppl(b, "b1 b2", "e1").ppl);
    CHECK(conditional_ppl(a, "b1 b2", "e1").ppl == doctest::Approx(2.5));
}

TEST_CASE("the body is cut from the left when the window overflows") {
    ScriptedModel::Options opt;
    opt.context_window = 4;
    ScriptedModel m({{{"b3"}, dist({{"e1", 0.5}, {"zz", 0.5}})}}, dist({{"zz", 0.5}, {"e1", 0.5}}), opt);
    const auto r = conditional_ppl(m, "b1 b2 b3", "e1 zz");
    CHECK(r.body_truncated);
    CHECK(r.ppl == 2.0);
    CHECK_FALSE(conditional_ppl(m, "b2 b3", "e1 zz").body_truncated);
    CHECK_THROWS_AS(conditional_ppl(m, "b1", "e1 e1 e1 e1 e1"), WindowExceededError);
    CHECK_THROWS_AS(conditional_ppl(m, "b1", "   "), PreconditionError);
}

TEST_CASE("ranking orders") {
    CHECK(rank_pairs(ppls({3.0, 1.5, 2.0}), RankMethod::Ppl) == std::vector<std::size_t>{1, 2, 0});
    CHECK(rank_pairs(ppls({2.0, 1.0, 2.0, 1.0}), RankMethod::Ppl) == std::vector<std::size_t>{1, 3, 0, 2});
    std::vector<EndingScore> nsp{{1.0, 0.2}, {1.0, 0.9}};
    CHECK(rank_pairs(nsp, RankMethod::Nsp) == std::vector<std::size_t>{1, 0});
    for (auto method : {RankMethod::Ppl, RankMethod::Nsp, RankMethod::Random}) {
        std::vector<EndingScore> one{{1.7, 0.3}};
        CHECK(rank_pairs(one, method, 9) == std::vector<std::size_t>{0});
    }
    CHECK_THROWS_AS(rank_pairs(ppls({1.0, 2.0}), RankMethod::Nsp), PreconditionError);
    CHECK(rank_pairs(std::span<const EndingScore>{}, RankMethod::Ppl).empty());
}

TEST_CASE("ranking properties on random scores") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EndingScore> s(1 + rng() % 20);
        for (auto& e : s) e = {1.0 + std::floor(u(rng) * 5), std::floor(u(rng) * 4) / 4};
        const auto by_ppl = rank_pairs(s, RankMethod::Ppl);
        const auto by_nsp = rank_pairs(s, RankMethod::Nsp);
        const auto shuffled = rank_pairs(s, RankMethod::Random, trial);
        for (std::size_t i = 1; i < s.size(); ++i) {
            CHECK(s[by_ppl[i - 1]].ppl <= s[by_ppl[i]].ppl);
            CHECK(*s[by_nsp[i - 1]].nsp >= *s[by_nsp[i]].nsp);
            if (s[by_ppl[i - 1]].ppl == s[by_ppl[i]].ppl) CHECK(by_ppl[i - 1] < by_ppl[i]);
        }
        auto sorted = shuffled;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
        CHECK(rank_pairs(s, RankMethod::Random, trial) == shuffled);
    }
}

TEST_CASE("rank method names") {
    for (auto m : {RankMethod::Ppl, RankMethod::Nsp, RankMethod::Random}) CHECK(parse_rank_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_rank_method("bleu"), LookupError);
}

TEST_CASE("the shipped cloze sample parses") {
    const auto items = load_cloze(kRepo / "data" / "cloze_sample.csv");
    REQUIRE(items.size() == 5);
    CHECK(items[0].id == "s-001");
    CHECK(items[0].context ==
          "Maya planted tomatoes in April. She watered them every morning. By July the vines were heavy with fruit. "
          "She picked a full basket.");
    CHECK(items[1].context.find("He practiced scales, chords and songs each night.") != std::string::npos);
    CHECK(items[1].label == ClozeLabel::B);
    CHECK(items[4].ending_b == "She tried again the next day with yeast.");
}

TEST_CASE("cloze parsing: tabs, quoting, missing header, errors") {
    std::istringstream tsv("id1\tA.\tB.\tC.\tD.\tE1 \"quoted\".\tE2.\t2\r\nid2\tA.\tB.\tC.\tD.\tx\ty\t1\n");
    const auto items = parse_cloze(tsv);
    REQUIRE(items.size() == 2);
    CHECK(items[0].ending_a == "E1 \"quoted\".");
    CHECK(items[0].label == ClozeLabel::B);
    CHECK(items[1].context == "A. B. C. D.");

    std::istringstream quoted("q,\"One, two.\",\"He said \"\"hi\"\".\",c,d,e,f,1");
    CHECK(parse_cloze(quoted)[0].context == "One, two. He said \"hi\". c d");

    std::istringstream reordered(
        "AnswerRightEnding,InputStoryid,InputSentence1,InputSentence2,InputSentence3,InputSentence4,"
        "RandomFifthSentenceQuiz1,RandomFifthSentenceQuiz2\n2,z,a,b,c,d,e,f\n");
    const auto r = parse_cloze(reordered);
    CHECK(r[0].id == "z");
    CHECK(r[0].label == ClozeLabel::B);

    std::istringstream bad_answer("a,b,c,d,e,f,g,3\n");
    CHECK_THROWS_AS(parse_cloze(bad_answer), ConfigurationError);
    std::istringstream short_row("a,b,c\n");
    CHECK_THROWS_AS(parse_cloze(short_row), ConfigurationError);
    std::istringstream empty_ending("a,b,c,d,e,,g,1\n");
    CHECK_THROWS_AS(parse_cloze(empty_ending), ConfigurationError);
    CHECK_THROWS_AS(load_cloze(kRepo / "data" / "missing.csv"), ConfigurationError);
}

TEST_CASE("cloze calibration with oracle scorers") {
    const auto items = fixture::cloze_items(40, 1);
    for (auto method : {RankMethod::Ppl, RankMethod::Nsp}) {
        CHECK(cloze_evaluate(fixture::oracle_scorer(40, 0.9), items, method).accuracy == 1.0);
        CHECK(cloze_evaluate(fixture::oracle_scorer(40, 0.1), items, method).accuracy == 0.0);
    }
    const auto report = cloze_evaluate(fixture::oracle_scorer(40, 0.9), items, RankMethod::Ppl);
    CHECK(report.predictions.size() == 40);
    CHECK(report.evaluated == 40);
    CHECK(report.predictions[0].score_a > 0.0);
    CHECK_THROWS_AS(cloze_evaluate(fixture::oracle_scorer(1, 0.9), items, RankMethod::Random), PreconditionError);
}

TEST_CASE("cloze ties go to ending A") {
    const auto items = fixture::cloze_items(100, 2);
    // Every ending is equally likely, so every item is predicted A.
    ScriptedModel flat({}, std::nullopt);
    std::vector<Token> vocab;
    for (int i = 0; i < 100; ++i) {
        for (int k = 0; k < 3; ++k) {
            vocab.push_back("r" + std::to_string(i) + "_" + std::to_string(k));
            vocab.push_back("w" + std::to_string(i) + "_" + std::to_string(k));
        }
    }
    const ScriptedModel uniform({}, ScriptedModel::uniform(vocab));
    const auto report = cloze_evaluate(uniform, items, RankMethod::Ppl);
    std::size_t labelled_a = 0;
    for (const auto& it : items) labelled_a += it.label == ClozeLabel::A ? 1 : 0;
    CHECK(report.correct == labelled_a);
    for (const auto& p : report.predictions) CHECK(p.predicted == ClozeLabel::A);
}

TEST_CASE("failing items are skipped and counted") {
    auto items = fixture::cloze_items(4, 3);
    ScriptedModel::Options opt;
    opt.context_window = 6;
    opt.nsp.reset();
    // Item 2's ending is longer than the window, so its PPL cannot be computed.
    items[2].ending_a = "x x x x x x x";
    const ScriptedModel m({}, dist({{"x", 1.0}}), opt);
    const auto report = cloze_evaluate(m, items, RankMethod::Ppl);
    CHECK(report.total == 4);
    CHECK(report.skipped == 1);
    CHECK(report.evaluated == 3);
    CHECK_FALSE(report.predictions[2].predicted);
    CHECK_FALSE(report.predictions[2].error.empty());
    CHECK(report.accuracy == doctest::Approx(static_cast<double>(report.correct) / 4));
    CHECK(report.accuracy_evaluated == doctest::Approx(static_cast<double>(report.correct) / 3));
    // A backend without NSP is a configuration problem, not a per-item failure.
    CHECK_THROWS_AS(cloze_evaluate(m, items, RankMethod::Nsp), CapabilityError);
}

TEST_CASE("an uninformed scorer lands near chance") {
    const auto items = fixture::cloze_items(1000, 4);
    const auto report = cloze_evaluate(fixture::random_scorer(1000, 5), items, RankMethod::Ppl);
    CHECK(report.accuracy == doctest::Approx(0.5).epsilon(0.1));
}
