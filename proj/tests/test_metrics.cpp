#include <gtest/gtest.h>

#include <memory>

#include "support/stub_transport.hpp"
#include "support/toy_corpus.hpp"
#include "vcasft/metrics.hpp"

using namespace vcasft;
using namespace vcasft::metrics;
using testsupport::StubTransport;
using testsupport::TempDir;

namespace {

struct JudgeFixture {
    std::shared_ptr<StubTransport> stub = std::make_shared<StubTransport>();
    Gateway gateway{GatewayConfig{.profile = GatewayProfile::record}, stub};
};

std::vector<Prediction> echo_predictions(const DatasetManifest &manifest) {
    std::vector<Prediction> out;
    for (const auto &r : manifest.records) {
        if (r.split != Split::test) continue;
        out.push_back(Prediction{r.id, "vcasft", r.answer_text});
    }
    return out;
}

} // namespace

TEST(ExtractFinalNumeric, LocalPathTakesLastLiteral) {
    auto r = extract_final_numeric(nullptr, "Using 12 V, I = 2.5 mA");
    ASSERT_TRUE(r.has_value());
    EXPECT_DOUBLE_EQ(r->value, 2.5);
    EXPECT_EQ(r->unit, "mA");
    EXPECT_FALSE(extract_final_numeric(nullptr, "No numeric result").has_value());
}

TEST(ExtractFinalNumeric, JudgeValueIsAuthoritative) {
    JudgeFixture fx;
    std::string text = "Using 12 V and 4 ohm the current is 3 A, so I = 2.5 A after rounding 10";
    std::string prompt = prompts::render(prompts::by_id("final_answer"), {{"text", text}});
    fx.stub->chat_overrides[prompt] = "{\"value\": 2.5, \"unit\": \"A\"}";
    auto r = extract_final_numeric(&fx.gateway, text);
    ASSERT_TRUE(r.has_value());
    EXPECT_DOUBLE_EQ(r->value, 2.5);
    EXPECT_EQ(r->unit, "A");
}

TEST(ExtractFinalNumeric, JudgeNullAndStringValues) {
    JudgeFixture fx;
    std::string prompt_null =
        prompts::render(prompts::by_id("final_answer"), {{"text", "words only"}});
    fx.stub->chat_overrides[prompt_null] = "{\"value\": null}";
    EXPECT_FALSE(extract_final_numeric(&fx.gateway, "words only").has_value());

    std::string prompt_str = prompts::render(prompts::by_id("final_answer"), {{"text", "str"}});
    fx.stub->chat_overrides[prompt_str] = "{\"value\": \"42.5\"}";
    auto r = extract_final_numeric(&fx.gateway, "str");
    ASSERT_TRUE(r.has_value());
    EXPECT_DOUBLE_EQ(r->value, 42.5);

    std::string prompt_bad = prompts::render(prompts::by_id("final_answer"), {{"text", "bad"}});
    fx.stub->chat_overrides[prompt_bad] = "{\"value\": \"not-a-number\"}";
    EXPECT_THROW(extract_final_numeric(&fx.gateway, "bad"), GatewayError);
}

TEST(ExtractSteps, LocalSplitHandlesSentencesAndDanda) {
    StepList s = extract_steps(nullptr, "r1", EvalSide::ground_truth,
                               "First apply v = d / t. Then divide 24 m by 2 s. Speed is 12 m/s.");
    EXPECT_EQ(s.transcript, "local sentence split");
    ASSERT_EQ(s.steps.size(), 3u);
    EXPECT_EQ(s.steps[0], "First apply v = d / t");

    StepList hi = extract_steps(nullptr, "r2", EvalSide::prediction,
                                "\xE0\xA4\xAA\xE0\xA4\xB9\xE0\xA4\xB2\xE0\xA4\xBE \xE0\xA4\x9A"
                                "\xE0\xA4\xB0\xE0\xA4\xA3\xE0\xA5\xA4 \xE0\xA4\xA6\xE0\xA5\x82"
                                "\xE0\xA4\xB8\xE0\xA4\xB0\xE0\xA4\xBE \xE0\xA4\x9A\xE0\xA4\xB0"
                                "\xE0\xA4\xA3\xE0\xA5\xA4");
    EXPECT_EQ(hi.steps.size(), 2u);

    StepList decimals = extract_steps(nullptr, "r3", EvalSide::prediction, "Pi is 3.14 here.");
    ASSERT_EQ(decimals.steps.size(), 1u);
    EXPECT_EQ(decimals.steps[0], "Pi is 3.14 here");
}

TEST(ExtractConcepts, JudgeListIsDeduplicated) {
    JudgeFixture fx;
    std::string prompt =
        prompts::render(prompts::by_id("concept_retrieval"), {{"text", "sample"}});
    fx.stub->chat_overrides[prompt] =
        "[\"Ohm's law\", \"ohm's  LAW\", \"resistance\", \"  \"]";
    ConceptList c = extract_concepts(&fx.gateway, "r1", EvalSide::ground_truth, "sample");
    ASSERT_EQ(c.concepts.size(), 2u);
    EXPECT_EQ(c.concepts[0], "Ohm's law");
    EXPECT_EQ(c.concepts[1], "resistance");
}

TEST(ScoreFaa, RelativeBandBoundaries) {
    EXPECT_DOUBLE_EQ(score_faa(100.0, 100.0, 0.02), 1.0);
    EXPECT_DOUBLE_EQ(score_faa(102.0, 100.0, 0.02), 1.0);
    EXPECT_DOUBLE_EQ(score_faa(103.0, 100.0, 0.02), 0.0);
    EXPECT_DOUBLE_EQ(score_faa(103.0, 100.0, 0.03), 1.0);
    EXPECT_DOUBLE_EQ(score_faa(-102.0, -100.0, 0.02), 1.0);
}

TEST(ScoreFaa, ZeroTruthUsesAbsoluteTolerance) {
    EXPECT_DOUBLE_EQ(score_faa(0.0, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(score_faa(1e-6, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(score_faa(2e-6, 0.0), 0.0);
}

TEST(ScoreFaa, DomainChecks) {
    EXPECT_THROW(score_faa(1.0, 1.0, 0.01), PreconditionError);
    EXPECT_THROW(score_faa(1.0, 1.0, 0.05), PreconditionError);
    EXPECT_THROW(score_faa(std::numeric_limits<double>::quiet_NaN(), 1.0), PreconditionError);
    EXPECT_THROW(score_faa(1.0, std::numeric_limits<double>::infinity()), PreconditionError);
}

TEST(ScoreIss, MatchedFractionOfTruthSteps) {
    JudgeFixture fx;
    StepList truth;
    truth.steps = {"step one", "step two", "step three", "step four"};
    StepList pred;
    pred.steps = {"step two"};
    IssResult r = score_iss(fx.gateway, pred, truth);
    EXPECT_EQ(r.total, 4u);
    EXPECT_EQ(r.matched, 1u);
    EXPECT_NEAR(r.score, 0.25, 1e-12);

    StepList empty_truth;
    EXPECT_THROW(score_iss(fx.gateway, pred, empty_truth), PreconditionError);
}

TEST(ScoreIss, JudgeArrayMustMatchTruthArity) {
    JudgeFixture fx;
    StepList truth;
    truth.steps = {"alpha", "beta"};
    StepList pred;
    pred.steps = {"alpha"};
    std::string prompt = prompts::render(
        prompts::by_id("step_evaluation"),
        {{"truth_steps", metrics::detail::numbered_lines(truth.steps)},
         {"prediction_steps", metrics::detail::numbered_lines(pred.steps)}});
    fx.stub->chat_overrides[prompt] = "[true]";
    EXPECT_THROW(score_iss(fx.gateway, pred, truth), GatewayError);

    JudgeFixture fx2;
    fx2.stub->chat_overrides[prompt] = "[true, \"yes\"]";
    EXPECT_THROW(score_iss(fx2.gateway, pred, truth), GatewayError);
}

TEST(ScoreCss, GreedyTruthSideMean) {
    JudgeFixture fx;
    fx.stub->embedding_overrides["c1"] = {1.0, 0.0};
    fx.stub->embedding_overrides["c2"] = {0.0, 1.0};
    ConceptList truth;
    truth.concepts = {"c1", "c2"};
    ConceptList pred;
    pred.concepts = {"c1"};
    CssResult r = score_css(fx.gateway, pred, truth);
    EXPECT_NEAR(r.score, 0.5, 1e-12);
    EXPECT_TRUE(r.flags.empty());

    ConceptList orth;
    orth.concepts = {"c2"};
    ConceptList only_c1;
    only_c1.concepts = {"c1"};
    EXPECT_NEAR(score_css(fx.gateway, orth, only_c1).score, 0.0, 1e-12);
}

TEST(ScoreCss, EmptySidesAreFlagged) {
    JudgeFixture fx;
    ConceptList empty;
    ConceptList some;
    some.concepts = {"c1"};
    CssResult both = score_css(fx.gateway, empty, empty);
    EXPECT_DOUBLE_EQ(both.score, 0.0);
    ASSERT_EQ(both.flags.size(), 1u);
    EXPECT_EQ(both.flags[0], "no-concepts");
    EXPECT_EQ(score_css(fx.gateway, empty, some).flags[0], "empty-prediction-concepts");
    EXPECT_EQ(score_css(fx.gateway, some, empty).flags[0], "empty-truth-concepts");
}

TEST(Composites, WeightsMatchTheScoringScheme) {
    EXPECT_NEAR(composite_numerical(1.0, 1.0, 1.0), 1.0, 1e-12);
    EXPECT_NEAR(composite_numerical(1.0, 0.0, 0.0), 0.5, 1e-12);
    EXPECT_NEAR(composite_numerical(0.0, 1.0, 0.0), 0.15, 1e-12);
    EXPECT_NEAR(composite_numerical(0.0, 0.0, 1.0), 0.35, 1e-12);
    EXPECT_NEAR(composite_numerical(0.0, 1.0, 1.0), 0.5, 1e-12);

    EXPECT_NEAR(composite_theoretical(1.0, 1.0), 1.0, 1e-12);
    EXPECT_NEAR(composite_theoretical(1.0, 0.0), 0.2, 1e-12);
    EXPECT_NEAR(composite_theoretical(0.0, 1.0), 0.8, 1e-12);

    EXPECT_THROW(composite_numerical(-0.1, 0.5, 0.5), PreconditionError);
    EXPECT_THROW(composite_numerical(0.5, 1.1, 0.5), PreconditionError);
    EXPECT_THROW(composite_theoretical(2.0, 0.0), PreconditionError);
}

TEST(ScoreFactual, ContentUnigramContainment) {
    EXPECT_DOUBLE_EQ(score_factual("It is the Ganga river.", "The Ganga river."), 1.0);
    EXPECT_DOUBLE_EQ(score_factual("It is the Yamuna river.", "The Ganga river."), 0.0);
    EXPECT_DOUBLE_EQ(score_factual("ganga RIVER", "The Ganga river."), 1.0);
    EXPECT_THROW(score_factual("anything", "   "), PreconditionError);
}

TEST(ScoreFactualJudge, BooleanVerdictAndSchemaCheck) {
    JudgeFixture fx;
    EXPECT_DOUBLE_EQ(score_factual_judge(fx.gateway, "The Ganga river flows.", "Ganga river"), 1.0);
    EXPECT_DOUBLE_EQ(score_factual_judge(fx.gateway, "The Yamuna.", "Ganga river"), 0.0);

    std::string prompt = prompts::render(prompts::by_id("fact_checking"),
                                         {{"truth", "t"}, {"prediction", "p"}});
    fx.stub->chat_overrides[prompt] = "{\"verdict\": true}";
    EXPECT_THROW(score_factual_judge(fx.gateway, "p", "t"), GatewayError);
}

TEST(ScoreMcq, LettersOptionTextAndAmbiguity) {
    std::vector<std::string> options = {"She walks home", "She walked home", "She will walk home",
                                        "She is walking home"};
    McqResult r = score_mcq("The answer is (b).", 1, options);
    EXPECT_DOUBLE_EQ(r.score, 1.0);
    EXPECT_EQ(r.choice, 1);
    EXPECT_FALSE(r.unparseable);

    EXPECT_DOUBLE_EQ(score_mcq("Option c", 1, options).score, 0.0);
    EXPECT_EQ(score_mcq("b", 1, options).choice, 1);

    McqResult text_match = score_mcq("I think she walked home yesterday.", 1, options);
    EXPECT_EQ(text_match.choice, 1);
    EXPECT_DOUBLE_EQ(text_match.score, 1.0);

    McqResult ambiguous = score_mcq("it is (a) or (b)", 1, options);
    EXPECT_TRUE(ambiguous.unparseable);
    EXPECT_DOUBLE_EQ(ambiguous.score, 0.0);

    McqResult none = score_mcq("no idea", 1, options);
    EXPECT_TRUE(none.unparseable);

    EXPECT_THROW(score_mcq("(a)", 4, options), PreconditionError);
    EXPECT_THROW(score_mcq("(a)", 0, {"one", "two"}), PreconditionError);
}

TEST(ScoreMcqJudge, ChoiceLetterOrNull) {
    JudgeFixture fx;
    std::vector<std::string> options = {"red", "green", "blue", "violet"};
    McqResult r = score_mcq_judge(fx.gateway, "definitely (c)", 2, options);
    EXPECT_DOUBLE_EQ(r.score, 1.0);
    EXPECT_EQ(r.choice, 2);

    McqResult miss = score_mcq_judge(fx.gateway, "nothing chosen", 2, options);
    EXPECT_TRUE(miss.unparseable);
    EXPECT_DOUBLE_EQ(miss.score, 0.0);

    std::string prompt = prompts::render(prompts::by_id("mcq_evaluation"),
                                         {{"option_a", options[0]},
                                          {"option_b", options[1]},
                                          {"option_c", options[2]},
                                          {"option_d", options[3]},
                                          {"prediction", "zzz"}});
    fx.stub->chat_overrides[prompt] = "{\"choice\": \"q\"}";
    EXPECT_THROW(score_mcq_judge(fx.gateway, "zzz", 2, options), GatewayError);
}

TEST(ScienceQaAccuracy, GroupsAndPercentages) {
    std::vector<ScienceQaRow> rows;
    auto add = [&](bool correct, Subject s, GradeBand g) {
        rows.push_back(ScienceQaRow{correct, s, g});
    };
    add(true, Subject::natural_science, GradeBand::lower);
    add(true, Subject::natural_science, GradeBand::lower);
    add(true, Subject::natural_science, GradeBand::secondary);
    add(false, Subject::natural_science, GradeBand::secondary);
    add(true, Subject::social_science, GradeBand::higher);
    add(false, Subject::social_science, GradeBand::higher);
    add(true, Subject::language_science, GradeBand::higher);
    add(true, Subject::language_science, GradeBand::higher);

    auto groups = scienceqa_accuracy(rows);
    ASSERT_FALSE(groups.empty());
    EXPECT_EQ(groups[0].dimension, "overall");
    EXPECT_EQ(groups[0].value, "all");
    EXPECT_EQ(groups[0].total, 8u);
    EXPECT_EQ(groups[0].correct, 6u);
    EXPECT_NEAR(groups[0].percent, 75.0, 1e-12);
    EXPECT_EQ(format_percent(groups[0].percent), "75.00");

    // Subject rows come before grade rows; values are sorted within each.
    ASSERT_EQ(groups.size(), 7u);
    EXPECT_EQ(groups[1].dimension, "subject");
    EXPECT_EQ(groups[1].value, "language_science");
    EXPECT_NEAR(groups[1].percent, 100.0, 1e-12);
    EXPECT_EQ(groups[2].value, "natural_science");
    EXPECT_NEAR(groups[2].percent, 75.0, 1e-12);
    EXPECT_EQ(groups[3].value, "social_science");
    EXPECT_NEAR(groups[3].percent, 50.0, 1e-12);
    EXPECT_EQ(groups[4].dimension, "grade_band");
    EXPECT_EQ(groups[4].value, "higher");
    EXPECT_NEAR(groups[4].percent, 75.0, 1e-12);
    EXPECT_EQ(groups[5].value, "lower");
    EXPECT_NEAR(groups[5].percent, 100.0, 1e-12);
    EXPECT_EQ(groups[6].value, "secondary");
    EXPECT_NEAR(groups[6].percent, 50.0, 1e-12);

    EXPECT_THROW(scienceqa_accuracy({}), PreconditionError);
}

TEST(ScienceQaAccuracy, SingleCorrectOfFour) {
    std::vector<ScienceQaRow> rows(4);
    rows[0].correct = true;
    auto groups = scienceqa_accuracy(rows);
    EXPECT_EQ(format_percent(groups[0].percent), "25.00");
    bool found_unspecified = false;
    for (const auto &g : groups) {
        if (g.dimension == "subject" && g.value == "unspecified") {
            found_unspecified = true;
            EXPECT_EQ(g.total, 4u);
        }
    }
    EXPECT_TRUE(found_unspecified);
}

TEST(BertScore, IdenticalTextsScoreOne) {
    JudgeFixture fx;
    PrfScore s = bertscore(fx.gateway, "the current is 3 A", "the current is 3 A");
    EXPECT_NEAR(s.f1, 1.0, 1e-9);
    PrfScore empty = bertscore(fx.gateway, "", "words");
    EXPECT_DOUBLE_EQ(empty.f1, 0.0);
}

TEST(EvaluateRun, RoutesScoresByQuestionType) {
    JudgeFixture fx;
    DatasetManifest manifest = testsupport::toy_manifest();
    auto predictions = echo_predictions(manifest);

    MetricReport report = evaluate_run(fx.gateway, manifest, predictions, EvaluateOptions{});
    ASSERT_EQ(report.rows.size(), 5u);

    std::map<std::string, const MetricRow *> rows;
    for (const auto &r : report.rows) rows[r.record_id] = &r;

    const MetricRow *num = rows.at("num-02");
    ASSERT_TRUE(num->s_faa && num->s_iss && num->s_css && num->composite);
    EXPECT_FALSE(num->factual || num->mcq_correct);
    EXPECT_NEAR(*num->s_faa, 1.0, 1e-12);
    EXPECT_NEAR(*num->s_iss, 1.0, 1e-12);
    EXPECT_NEAR(*num->s_css, 1.0, 1e-9);
    EXPECT_NEAR(*num->composite, 1.0, 1e-9);

    const MetricRow *theo = rows.at("theo-02");
    EXPECT_FALSE(theo->s_faa.has_value());
    ASSERT_TRUE(theo->s_iss && theo->s_css && theo->composite);
    EXPECT_NEAR(*theo->composite, 1.0, 1e-9);

    const MetricRow *conc = rows.at("conc-02");
    ASSERT_TRUE(conc->s_css.has_value());
    EXPECT_FALSE(conc->s_iss || conc->composite || conc->factual || conc->mcq_correct);

    const MetricRow *fact = rows.at("fact-02");
    ASSERT_TRUE(fact->factual.has_value());
    EXPECT_DOUBLE_EQ(*fact->factual, 1.0);

    const MetricRow *mcq = rows.at("mcq-02");
    ASSERT_TRUE(mcq->mcq_correct.has_value());
    EXPECT_DOUBLE_EQ(*mcq->mcq_correct, 1.0);

    for (const auto &r : report.rows) {
        EXPECT_NEAR(r.rouge1, 1.0, 1e-12) << r.record_id;
        EXPECT_GT(r.meteor_score, 0.9) << r.record_id;
    }
    EXPECT_NEAR(report.bleu4, 1.0, 1e-12);

    ASSERT_FALSE(report.aggregates.empty());
    EXPECT_EQ(report.aggregates[0].dimension, "overall");
    EXPECT_EQ(report.aggregates[0].count, 5u);
    EXPECT_NEAR(report.aggregates[0].means.at("primary"), 1.0, 1e-9);
}

TEST(EvaluateRun, ValidatesPredictionCoverage) {
    JudgeFixture fx;
    DatasetManifest manifest = testsupport::toy_manifest();
    auto predictions = echo_predictions(manifest);

    auto with_unknown = predictions;
    with_unknown.push_back(Prediction{"ghost", "vcasft", "text"});
    EXPECT_THROW(evaluate_run(fx.gateway, manifest, with_unknown), Error);

    auto with_duplicate = predictions;
    with_duplicate.push_back(predictions.front());
    EXPECT_THROW(evaluate_run(fx.gateway, manifest, with_duplicate), Error);

    auto missing = predictions;
    missing.pop_back();
    EXPECT_THROW(evaluate_run(fx.gateway, manifest, missing), Error);

    DatasetManifest train_only;
    for (const auto &r : manifest.records) {
        if (r.split == Split::train) train_only.records.push_back(r);
    }
    EXPECT_THROW(evaluate_run(fx.gateway, train_only, {}), PreconditionError);
}

TEST(EvaluateRun, DeterministicUnderRepeatedEvaluation) {
    JudgeFixture fx;
    DatasetManifest manifest = testsupport::toy_manifest();
    auto predictions = echo_predictions(manifest);
    EvaluateOptions options;
    options.run_id = "det";
    options.compute_bertscore = true;

    MetricReport a = evaluate_run(fx.gateway, manifest, predictions, options);
    MetricReport b = evaluate_run(fx.gateway, manifest, predictions, options);
    EXPECT_EQ(report_to_json(a).dump(2), report_to_json(b).dump(2));
    ASSERT_TRUE(a.bertscore_f1.has_value());
    EXPECT_NEAR(*a.bertscore_f1, 1.0, 1e-9);
}

TEST(EvaluateRun, LocalFallbackWithoutJudge) {
    JudgeFixture fx;
    DatasetManifest manifest = testsupport::toy_manifest();
    auto predictions = echo_predictions(manifest);
    EvaluateOptions options;
    options.use_judge = false;

    MetricReport report = evaluate_run(fx.gateway, manifest, predictions, options);
    std::map<std::string, const MetricRow *> rows;
    for (const auto &r : report.rows) rows[r.record_id] = &r;
    EXPECT_NEAR(*rows.at("num-02")->composite, 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(*rows.at("mcq-02")->mcq_correct, 1.0);
}

TEST(ReportJson, RoundTripPreservesRowsAndAggregates) {
    TempDir dir("report");
    JudgeFixture fx;
    DatasetManifest manifest = testsupport::toy_manifest();
    MetricReport report = evaluate_run(fx.gateway, manifest, echo_predictions(manifest));

    save_report(report, dir.str("report.json"));
    MetricReport back = load_report(dir.str("report.json"));
    EXPECT_EQ(report_to_json(back).dump(2), report_to_json(report).dump(2));

    nlohmann::json j = report_to_json(report);
    EXPECT_TRUE(j.contains("bleu_4"));
    EXPECT_EQ(j["run_id"], "run");
    EXPECT_EQ(j["rows"].size(), 5u);
    EXPECT_FALSE(j.contains("bertscore_f1"));
}
