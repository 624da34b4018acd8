// Acceptance checks for the toolkit. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails. Everything runs offline:
// canned transports record fixtures, and the CLI replays them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/stub_transport.hpp"
#include "support/toy_corpus.hpp"
#include "vcasft/vcasft.hpp"

namespace {

using namespace vcasft;
using testsupport::StubTransport;
using testsupport::TempDir;

int g_failures = 0;

void require(bool ok, const std::string &message) {
    if (!ok) throw std::runtime_error(message);
}

void require_near(double actual, double expected, double eps, const std::string &label) {
    if (!(std::abs(actual - expected) <= eps)) {
        std::ostringstream os;
        os << label << ": expected " << expected << ", got " << actual;
        throw std::runtime_error(os.str());
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f s", s);
    return buf;
}

void run_criterion(int number, const std::function<std::string()> &body) {
    try {
        std::string detail = body();
        std::printf("PASS criterion %d: %s\n", number, detail.c_str());
    } catch (const std::exception &e) {
        ++g_failures;
        std::printf("FAIL criterion %d: %s\n", number, e.what());
    }
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// 1. Composite weights exact to 1e-12, bounded, and monotone.
// ---------------------------------------------------------------------------

std::string criterion_composites() {
    auto start = std::chrono::steady_clock::now();

    require_near(metrics::composite_numerical(1.0, 0.0, 0.0), 0.5, 1e-12, "numerical FAA weight");
    require_near(metrics::composite_numerical(0.0, 1.0, 0.0), 0.15, 1e-12, "numerical ISS weight");
    require_near(metrics::composite_numerical(0.0, 0.0, 1.0), 0.35, 1e-12, "numerical CSS weight");
    require_near(metrics::composite_numerical(1.0, 1.0, 1.0), 1.0, 1e-12, "numerical weights sum");
    require_near(metrics::composite_numerical(1.0, 0.5, 0.25), 0.5 + 0.075 + 0.0875, 1e-12,
                 "numerical mixed case");
    require_near(metrics::composite_theoretical(1.0, 0.0), 0.2, 1e-12, "theoretical ISS weight");
    require_near(metrics::composite_theoretical(0.0, 1.0), 0.8, 1e-12, "theoretical CSS weight");
    require_near(metrics::composite_theoretical(1.0, 1.0), 1.0, 1e-12, "theoretical weights sum");
    require_near(metrics::composite_theoretical(0.5, 0.25), 0.1 + 0.2, 1e-12, "theoretical mixed case");

    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double faa = u01(rng);
        double iss = u01(rng);
        double css = u01(rng);
        double numerical = metrics::composite_numerical(faa, iss, css);
        double theoretical = metrics::composite_theoretical(iss, css);
        require(numerical >= 0.0 && numerical <= 1.0, "composite_numerical out of [0,1]");
        require(theoretical >= 0.0 && theoretical <= 1.0, "composite_theoretical out of [0,1]");

        double step = 0.25 * u01(rng);
        auto bump = [&](double v) { return std::min(v + step, 1.0); };
        require(metrics::composite_numerical(bump(faa), iss, css) >= numerical - 1e-15,
                "composite_numerical not monotone in FAA");
        require(metrics::composite_numerical(faa, bump(iss), css) >= numerical - 1e-15,
                "composite_numerical not monotone in ISS");
        require(metrics::composite_numerical(faa, iss, bump(css)) >= numerical - 1e-15,
                "composite_numerical not monotone in CSS");
        require(metrics::composite_theoretical(bump(iss), css) >= theoretical - 1e-15,
                "composite_theoretical not monotone in ISS");
        require(metrics::composite_theoretical(iss, bump(css)) >= theoretical - 1e-15,
                "composite_theoretical not monotone in CSS");
    }

    double elapsed = seconds_since(start);
    require(elapsed < 1.0, "composite checks exceeded 1 s (" + format_seconds(elapsed) + ")");
    return "composite weights exact to 1e-12; 1000-case bound/monotonicity sweep in " +
           format_seconds(elapsed);
}

// ---------------------------------------------------------------------------
// 2. rouge_l equals a brute-force LCS oracle on every pair of sequences over
//    a 3-symbol alphabet up to length 8; hand cases for rouge_1/2 and meteor.
// ---------------------------------------------------------------------------

// Oracle rows computed along a DFS of the 3-ary sequence trie: the row for a
// sequence extends its parent's row by one standard LCS update.
struct TrieOracle {
    const std::vector<int> &b;
    std::vector<int> path;
    int rows[9][9]; // rows[depth][j]
    std::size_t visits = 0;
    std::size_t mismatches = 0;

    explicit TrieOracle(const std::vector<int> &b_in) : b(b_in) {
        for (std::size_t j = 0; j <= b.size(); ++j) rows[0][j] = 0;
    }

    void visit() {
        ++visits;
        int lcs = rows[path.size()][b.size()];
        metrics::PrfScore s = metrics::rouge_l(path, b);
        double p = path.empty() ? 0.0 : static_cast<double>(lcs) / static_cast<double>(path.size());
        double r = b.empty() ? 0.0 : static_cast<double>(lcs) / static_cast<double>(b.size());
        double f = (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
        if (std::abs(s.f1 - f) > 1e-12 || std::abs(s.precision - p) > 1e-12 ||
            std::abs(s.recall - r) > 1e-12) {
            ++mismatches;
        }
    }

    void dfs() {
        visit();
        if (path.size() == 8) return;
        std::size_t d = path.size();
        for (int c = 0; c < 3; ++c) {
            path.push_back(c);
            rows[d + 1][0] = 0;
            for (std::size_t j = 1; j <= b.size(); ++j) {
                if (b[j - 1] == c) {
                    rows[d + 1][j] = rows[d][j - 1] + 1;
                } else {
                    rows[d + 1][j] = rows[d][j] > rows[d + 1][j - 1] ? rows[d][j] : rows[d + 1][j - 1];
                }
            }
            dfs();
            path.pop_back();
        }
    }
};

std::string criterion_text_metric_oracle() {
    auto start = std::chrono::steady_clock::now();

    std::vector<std::vector<int>> sequences;
    sequences.push_back({});
    std::size_t level_start = 0;
    for (int len = 1; len <= 8; ++len) {
        std::size_t level_end = sequences.size();
        for (std::size_t s = level_start; s < level_end; ++s) {
            for (int c = 0; c < 3; ++c) {
                auto v = sequences[s];
                v.push_back(c);
                sequences.push_back(std::move(v));
            }
        }
        level_start = level_end;
    }
    require(sequences.size() == 9841, "sequence enumeration produced the wrong count");

    std::size_t visits = 0;
    std::size_t mismatches = 0;
    for (const auto &b : sequences) {
        TrieOracle oracle(b);
        oracle.dfs();
        visits += oracle.visits;
        mismatches += oracle.mismatches;
    }
    require(visits == 9841ull * 9841ull, "oracle did not cover every ordered pair");
    require(mismatches == 0, "rouge_l diverged from the LCS oracle on " +
                                 std::to_string(mismatches) + " pairs");

    require_near(metrics::rouge_1("the cat sat", "the cat lay").f1, 2.0 / 3.0, 1e-9, "rouge_1");
    require_near(metrics::rouge_2("the cat sat", "the cat lay").f1, 0.5, 1e-9, "rouge_2");
    require_near(metrics::rouge_l("the cat sat on the mat", "the cat lay on the mat").f1, 5.0 / 6.0,
                 1e-9, "rouge_l hand case");
    require_near(metrics::meteor("the cat sat", "the cat sat").score, 1.0 - 0.5 / 27.0, 1e-9,
                 "meteor identical");
    require_near(metrics::meteor("the cat", "the dog").score, 0.25, 1e-9, "meteor single match");

    double elapsed = seconds_since(start);
    require(elapsed < 30.0, "oracle sweep exceeded 30 s (" + format_seconds(elapsed) + ")");
    return "rouge_l matched the LCS oracle on all 9841^2 ordered pairs in " + format_seconds(elapsed);
}

// ---------------------------------------------------------------------------
// 3. Final-answer accuracy boundaries.
// ---------------------------------------------------------------------------

std::string criterion_faa_boundaries() {
    require_near(metrics::score_faa(102.0, 100.0, 0.02), 1.0, 0.0, "102 vs 100 at 2%");
    require_near(metrics::score_faa(98.0, 100.0, 0.02), 1.0, 0.0, "98 vs 100 at 2%");
    require_near(metrics::score_faa(103.0, 100.0, 0.02), 0.0, 0.0, "103 vs 100 at 2%");
    require_near(metrics::score_faa(103.0, 100.0, 0.03), 1.0, 0.0, "103 vs 100 at 3%");
    require_near(metrics::score_faa(-102.0, -100.0, 0.02), 1.0, 0.0, "negative pair at 2%");
    require_near(metrics::score_faa(0.0, 0.0), 1.0, 0.0, "truth zero, exact");
    require_near(metrics::score_faa(1e-6, 0.0), 1.0, 0.0, "truth zero, inside abs tolerance");
    require_near(metrics::score_faa(2e-6, 0.0), 0.0, 0.0, "truth zero, outside abs tolerance");
    return "relative-tolerance boundaries and the truth-zero absolute path all score as specified";
}

// ---------------------------------------------------------------------------
// 4. Record the toy corpus once, then run the CLI chain twice from fixtures;
//    artifacts must be byte-identical and nothing may dial out.
// ---------------------------------------------------------------------------

std::string criterion_end_to_end_determinism() {
    auto start = std::chrono::steady_clock::now();
    TempDir dir("acceptance-e2e");

    // Record pass: in-process stages against the canned transport.
    PipelineConfig recorded = testsupport::toy_pipeline_config(dir.str());
    recorded.paths.cache = dir.str("cache");
    {
        Gateway gateway(gateway_config(recorded), std::make_shared<StubTransport>(8));
        require(stage_ingest(recorded), "record pass: ingest did no work");
        require(stage_caption(recorded, gateway), "record pass: caption did no work");
        require(stage_prompts(recorded), "record pass: prompts did no work");
        require(stage_train(recorded), "record pass: train did no work");
        require(stage_infer(recorded), "record pass: infer did no work");
        require(stage_evaluate(recorded, gateway), "record pass: evaluate did no work");
    }
    testsupport::cache_to_fixture_file(dir.str("cache"), dir.str("fixtures.json"));

    // Replay config for the CLI binary: fixtures only, no transport possible.
    nlohmann::json config = {
        {"dataset_name", "toy"},
        {"paths",
         {{"corpus", dir.str("corpus.jsonl")},
          {"assets", dir.str("assets")},
          {"fixtures", {dir.str("fixtures.json")}},
          {"output", dir.str("replay1")}}},
        {"gateway", {{"profile", "replay"}, {"embedding_dim", 8}}},
        {"mode", "vcasft"},
        {"split", {{"apply", false}}},
        {"training", {{"epochs", 2}}},
    };
    std::string config_path = dir.str("config.json");
    io::atomic_write_file(config_path, config.dump(2) + "\n");

    auto run_chain = [&](const std::string &output_override) {
        for (const std::string stage : {"ingest", "caption", "prompts", "train", "infer", "evaluate"}) {
            std::string args = stage + " --config " + config_path;
            if (!output_override.empty()) args += " --output " + output_override;
            testsupport::CliResult r = testsupport::run_cli(VCASFT_CLI_PATH, args, dir.str());
            require(r.exit_code == 0,
                    "cli " + stage + " exited " + std::to_string(r.exit_code) + ": " + r.err);
        }
    };
    run_chain("");
    run_chain(dir.str("replay2"));

    for (const std::string name : {"manifest.jsonl", "captions.jsonl", "bundles_vcasft.jsonl",
                                   "predictions_vcasft.jsonl", "report_vcasft.json"}) {
        std::string first = io::read_file(dir.str("replay1/" + name));
        std::string second = io::read_file(dir.str("replay2/" + name));
        require(!first.empty(), name + " is empty");
        require(first == second, name + " differs between the two replay runs");
        require(first == io::read_file(dir.str("out/" + name)),
                name + " differs between the record pass and replay");
    }

    double elapsed = seconds_since(start);
    require(elapsed < 60.0, "end-to-end runs exceeded 60 s (" + format_seconds(elapsed) + ")");
    return "two fixture-replay CLI chains produced byte-identical reports in " +
           format_seconds(elapsed) + " (replay profile never constructs a transport)";
}

// ---------------------------------------------------------------------------
// 5. Prompt-mode contracts on the toy corpus.
// ---------------------------------------------------------------------------

std::string criterion_mode_contracts() {
    DatasetManifest manifest = testsupport::toy_manifest();
    CaptionStore store;
    for (const auto &r : manifest.records) {
        Caption c;
        c.record_id = r.id;
        c.language = r.language;
        c.text = "A diagram for " + r.id + ".";
        store.put(std::move(c));
    }
    TemplateRegistry templates;

    TrainingSet sft = build_training_set(manifest, store, PromptMode::sft, templates, "default");
    TrainingSet vc = build_training_set(manifest, store, PromptMode::vcasft, templates, "default");
    TrainingSet ab =
        build_training_set(manifest, store, PromptMode::ablation_no_image, templates, "default");
    require(sft.ok() && vc.ok() && ab.ok(), "bundle building reported errors");
    require(sft.bundles.size() == vc.bundles.size() && vc.bundles.size() == ab.bundles.size(),
            "modes produced different bundle counts");

    for (std::size_t i = 0; i < vc.bundles.size(); ++i) {
        const PromptBundle &plain = sft.bundles[i];
        const PromptBundle &captioned = vc.bundles[i];
        const PromptBundle &noImage = ab.bundles[i];
        require(plain.record_id == captioned.record_id && plain.record_id == noImage.record_id,
                "bundle order diverged between modes");
        auto caption = store.effective(plain.record_id, Language::en);
        require(caption.has_value(), "caption missing for " + plain.record_id);
        // The caption-aware prompt is exactly the caption block prefixed to the
        // plain prompt, so any string diff is confined to that segment.
        require(captioned.rendered_text == "Caption: " + caption->text + "\n\n" + plain.rendered_text,
                "vcasft bundle for " + plain.record_id + " is not caption block + sft prompt");
        require(plain.rendered_text.find("Caption: ") == std::string::npos,
                "sft bundle for " + plain.record_id + " contains a caption block");
        require(noImage.rendered_text == captioned.rendered_text,
                "ablation bundle text diverged from vcasft for " + plain.record_id);
        require(!noImage.includes_image, "ablation bundle still includes the image");
        require(plain.includes_image && captioned.includes_image,
                "sft/vcasft bundles must keep the image payload");
    }

    require(lint_captions(manifest, store).empty(), "lint flagged a fully captioned corpus");
    CaptionStore incomplete;
    for (const auto &r : manifest.records) {
        if (r.id == "num-02") continue;
        Caption c;
        c.record_id = r.id;
        c.language = r.language;
        c.text = "A diagram for " + r.id + ".";
        incomplete.put(std::move(c));
    }
    auto missing = lint_captions(manifest, incomplete);
    require(missing.size() == 1 && missing.front() == "num-02",
            "lint did not flag exactly the uncaptioned record");

    return "caption block prefix, ablation image flag, and caption lint all hold on the toy corpus";
}

// ---------------------------------------------------------------------------
// 6. Augmentation caps, CR validation, Pa answer preservation, Cohen's kappa.
// ---------------------------------------------------------------------------

std::string criterion_augmentation() {
    DatasetManifest manifest = testsupport::toy_manifest();
    const QaRecord *numerical = manifest.find("num-01");
    const QaRecord *conceptual = manifest.find("conc-01");
    require(numerical != nullptr && conceptual != nullptr, "toy corpus lost its parents");

    GatewayConfig config;
    config.profile = GatewayProfile::record;
    config.embedding_dim = 8;
    Gateway gateway(config, std::make_shared<StubTransport>(8));

    std::vector<AugmentationCandidate> pool;
    for (AugMethod method : {AugMethod::CR, AugMethod::Pa}) {
        CandidateBatch batch = generate_candidates(gateway, *numerical, method, 10);
        pool.insert(pool.end(), batch.candidates.begin(), batch.candidates.end());
    }
    compute_diversity(gateway, *numerical, pool);
    auto selected = select_candidates(std::move(pool), QType::numerical);
    std::size_t accepted = 0;
    for (const auto &c : selected) accepted += c.accepted ? 1 : 0;
    require(accepted <= 10, "numerical parent accepted more than 10 candidates");

    CandidateBatch paraphrases = generate_candidates(gateway, *conceptual, AugMethod::Pa, 10);
    for (const auto &c : paraphrases.candidates) {
        require(c.answer_text == conceptual->answer_text,
                "paraphrase changed the answer for " + c.parent_id);
    }
    compute_diversity(gateway, *conceptual, paraphrases.candidates);
    auto conceptualSelected = select_candidates(std::move(paraphrases.candidates), QType::conceptual);
    std::size_t conceptualAccepted = 0;
    for (const auto &c : conceptualSelected) conceptualAccepted += c.accepted ? 1 : 0;
    require(conceptualAccepted <= 6, "conceptual parent accepted more than 6 candidates");

    // Synthetic low-cosine pools show the caps binding exactly.
    auto synthetic_pool = [] {
        std::vector<AugmentationCandidate> pool;
        for (int i = 0; i < 12; ++i) {
            AugmentationCandidate c;
            c.parent_id = "num-01";
            c.method = AugMethod::Pa;
            c.question_text = "variant " + std::to_string(i);
            c.answer_text = "answer";
            c.diversity_cosine = 0.10 + 0.05 * i;
            pool.push_back(std::move(c));
        }
        return pool;
    };
    auto numericalCap = select_candidates(synthetic_pool(), QType::numerical);
    std::size_t numericalAccepted = 0;
    for (const auto &c : numericalCap) numericalAccepted += c.accepted ? 1 : 0;
    require(numericalAccepted == 10, "numerical cap did not bind at 10");
    auto conceptualCap = select_candidates(synthetic_pool(), QType::conceptual);
    std::size_t cappedAccepted = 0;
    for (const auto &c : conceptualCap) cappedAccepted += c.accepted ? 1 : 0;
    require(cappedAccepted == 6, "non-numerical cap did not bind at 6");

    // Constructed CR violations: a retained constant, then dropped units.
    AugmentationCandidate retained;
    retained.parent_id = numerical->id;
    retained.method = AugMethod::CR;
    retained.question_text = "A cart travels 24 m in 4 s. What is its average speed?";
    retained.answer_text = "Divide 24 m by 4 s. The speed is 6 m/s.";
    auto retainedViolations = validate_cr(*numerical, retained);
    bool sawRetained = false;
    for (const auto &v : retainedViolations) sawRetained |= v == "retained_constant: 24";
    require(sawRetained, "validate_cr missed the retained constant 24");

    AugmentationCandidate unitless;
    unitless.parent_id = numerical->id;
    unitless.method = AugMethod::CR;
    unitless.question_text = "A cart did 48 in 4. Find the average velocity.";
    unitless.answer_text = "The velocity became 48.";
    auto unitViolations = validate_cr(*numerical, unitless);
    bool missingMeters = false;
    bool missingSeconds = false;
    for (const auto &v : unitViolations) {
        missingMeters |= v == "missing_unit: m";
        missingSeconds |= v == "missing_unit: s";
    }
    require(missingMeters && missingSeconds, "validate_cr missed dropped units");

    require_near(cohen_kappa(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 0, 1, 0}), 1.0, 1e-9,
                 "kappa of identical ratings");
    require_near(cohen_kappa(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}), 0.0, 1e-9,
                 "kappa of chance-level ratings");
    require_near(cohen_kappa(std::vector<int>{1, 0, 1, 0, 1, 0}, std::vector<int>{1, 0, 1, 0, 1, 1}),
                 2.0 / 3.0, 1e-9, "kappa hand case");

    return "candidate caps, CR validation, Pa answer preservation and kappa hand cases all hold";
}

// ---------------------------------------------------------------------------
// 7. Accuracy grouping percentages and the subject/grade CSV shape.
// ---------------------------------------------------------------------------

std::string criterion_accuracy_grouping() {
    std::vector<metrics::ScienceQaRow> rows;
    auto add = [&rows](bool correct, Subject s, GradeBand g) {
        rows.push_back(metrics::ScienceQaRow{correct, s, g});
    };
    add(true, Subject::natural_science, GradeBand::lower);
    add(true, Subject::natural_science, GradeBand::lower);
    add(true, Subject::natural_science, GradeBand::secondary);
    add(false, Subject::natural_science, GradeBand::secondary);
    add(true, Subject::social_science, GradeBand::higher);
    add(false, Subject::social_science, GradeBand::higher);
    add(true, Subject::language_science, GradeBand::higher);
    add(true, Subject::language_science, GradeBand::higher);

    auto groups = metrics::scienceqa_accuracy(rows);
    auto percent_of = [&groups](const std::string &dimension, const std::string &value) {
        for (const auto &g : groups) {
            if (g.dimension == dimension && g.value == value) return g.percent;
        }
        throw std::runtime_error("missing accuracy bucket " + dimension + "/" + value);
    };
    require(metrics::format_percent(percent_of("overall", "all")) == "75.00", "overall != 75.00");
    require(metrics::format_percent(percent_of("subject", "language_science")) == "100.00",
            "language subject != 100.00");
    require(metrics::format_percent(percent_of("subject", "natural_science")) == "75.00",
            "natural subject != 75.00");
    require(metrics::format_percent(percent_of("subject", "social_science")) == "50.00",
            "social subject != 50.00");
    require(metrics::format_percent(percent_of("grade_band", "lower")) == "100.00",
            "lower band != 100.00");
    require(metrics::format_percent(percent_of("grade_band", "secondary")) == "50.00",
            "secondary band != 50.00");
    require(metrics::format_percent(percent_of("grade_band", "higher")) == "75.00",
            "higher band != 75.00");

    // Mocked per-row correctness for one model: 8855 of 10000 correct, spread
    // over every subject and grade bucket, rendered into the accuracy table.
    std::vector<metrics::ScienceQaRow> mocked;
    const Subject subjects[] = {Subject::natural_science, Subject::social_science,
                                Subject::language_science};
    const GradeBand bands[] = {GradeBand::lower, GradeBand::secondary, GradeBand::higher};
    for (int i = 0; i < 10000; ++i) {
        mocked.push_back(metrics::ScienceQaRow{i < 8855, subjects[i % 3], bands[(i / 3) % 3]});
    }
    auto mockedGroups = metrics::scienceqa_accuracy(mocked);
    require(metrics::format_percent(mockedGroups[0].percent) == "88.55",
            "mocked overall accuracy != 88.55");
    std::string csv = report::subject_grade_csv(
        {report::subject_grade_row("model-a", "caption-sft", mockedGroups)});
    const std::string header =
        "model,method,full_test_set,social_science,natural_science,language_science,lower,secondary,"
        "higher\n";
    require(csv.rfind(header, 0) == 0, "CSV header shape changed");
    require(csv.find("model-a,caption-sft,88.55,") != std::string::npos,
            "CSV row lost the overall percentage");
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n' ? 1 : 0;
    require(lines == 2, "CSV should hold exactly a header and one row");

    return "synthetic grouping percentages exact; mocked model renders the subject/grade CSV";
}

// ---------------------------------------------------------------------------
// 8. Gateway behavior: replay misses, cache hits, bounded retries.
// ---------------------------------------------------------------------------

struct FailingTransport final : Transport {
    std::string complete(const ChatRequest &) override { throw GatewayError("backend unavailable"); }
    std::vector<double> embed(const std::string &, const std::string &) override {
        throw GatewayError("backend unavailable");
    }
};

std::string criterion_gateway() {
    TempDir dir("acceptance-gateway");

    ChatRequest seen;
    seen.model_id = "gemini-pro";
    seen.user_text = "ping";
    nlohmann::json fixtures;
    fixtures[Gateway::chat_request_key(seen)] = "pong";
    std::string fixture_path = dir.str("fixtures.json");
    io::atomic_write_file(fixture_path, fixtures.dump() + "\n");

    GatewayConfig replay_config;
    replay_config.profile = GatewayProfile::replay;
    replay_config.fixture_files = {fixture_path};
    Gateway replay(replay_config);
    ChatResponse canned = replay.complete(seen);
    require(canned.text == "pong" && canned.cached, "fixture lookup failed");

    ChatRequest unseen = seen;
    unseen.user_text = "pong?";
    bool missed = false;
    try {
        replay.complete(unseen);
    } catch (const ReplayMissError &e) {
        missed = e.key() == Gateway::chat_request_key(unseen);
    }
    require(missed, "replay miss did not raise with the request key");

    GatewayConfig record_config;
    record_config.profile = GatewayProfile::record;
    record_config.embedding_dim = 8;
    {
        auto stub = std::make_shared<StubTransport>(8);
        stub->chat_overrides["ping"] = "pong";
        Gateway recorder(record_config, stub);
        ChatResponse first = recorder.complete(seen);
        ChatResponse second = recorder.complete(seen);
        require(first.text == "pong" && !first.cached, "first call should hit the transport");
        require(second.cached, "second identical call should come from cache");
        require(first.text == second.text, "cache returned different bytes");
        require(recorder.transport_calls() == 1, "cache hit still dialed the transport");
    }

    GatewayConfig retry_config;
    retry_config.profile = GatewayProfile::record;
    retry_config.retry.max_retries = 2;
    Gateway retrying(retry_config, std::make_shared<FailingTransport>());
    retrying.set_sleep_hook([](std::chrono::milliseconds) {});
    bool exhausted = false;
    try {
        retrying.complete(seen);
    } catch (const GatewayError &e) {
        exhausted = std::string(e.what()).find("3 attempts") != std::string::npos;
    }
    require(exhausted, "retries should stop after max_retries + 1 attempts");
    require(retrying.transport_calls() == 3, "retry count not bounded at 3 calls");

    return "replay misses carry the request key, cache hits skip the transport, retries stop at 3";
}

} // namespace

int main() {
    run_criterion(1, criterion_composites);
    run_criterion(2, criterion_text_metric_oracle);
    run_criterion(3, criterion_faa_boundaries);
    run_criterion(4, criterion_end_to_end_determinism);
    run_criterion(5, criterion_mode_contracts);
    run_criterion(6, criterion_augmentation);
    run_criterion(7, criterion_accuracy_grouping);
    run_criterion(8, criterion_gateway);

    if (g_failures != 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 8 criteria passed\n");
    return 0;
}
