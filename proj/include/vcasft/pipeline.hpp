#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/augmentation.hpp"
#include "vcasft/captioning.hpp"
#include "vcasft/corpus.hpp"
#include "vcasft/gateway.hpp"
#include "vcasft/metrics.hpp"
#include "vcasft/predictions.hpp"
#include "vcasft/prompting.hpp"
#include "vcasft/report.hpp"
#include "vcasft/training.hpp"

namespace vcasft {

struct PipelinePaths {
    std::filesystem::path corpus;
    std::filesystem::path assets;
    std::filesystem::path overrides;                  // optional caption overrides
    std::filesystem::path review_patch;               // optional augmentation verdicts
    std::vector<std::filesystem::path> fixtures;      // gateway fixture files
    std::filesystem::path cache;                      // gateway response cache
    std::filesystem::path output;                     // artifact root
};

struct SplitSettings {
    bool apply = true; // false keeps the split column from the corpus file
    double train_fraction = 0.65;
    std::uint64_t seed = 7;
};

struct AugmentationSettings {
    bool enabled = false;
    int per_parent = 3; // candidates requested per parent and method
    double max_cosine = 0.9;
};

struct EvaluationSettings {
    double rel_tol = 0.02;
    bool use_judge = true;
    bool compute_bertscore = false;
};

struct PipelineConfig {
    std::string dataset_name = "dataset";
    PipelinePaths paths;
    GatewayProfile profile = GatewayProfile::replay;
    std::string chat_model = "gemini-pro";
    std::string judge_model = "gpt-4";
    std::string embed_model = "sbert";
    std::size_t embedding_dim = 0;
    int max_in_flight = 4;
    PromptMode mode = PromptMode::vcasft;
    std::string template_id = "default";
    SplitSettings split;
    AugmentationSettings augmentation;
    FineTuneConfig training;
    EvaluationSettings evaluation;
    std::string run_id;      // empty derives "run-<mode>"
    std::string model_label = "toy-backend";
    std::vector<std::filesystem::path> compare_reports; // extra reports for the ablation table
};

// ---------------------------------------------------------------------------
// Config loading with ${ENV} interpolation
// ---------------------------------------------------------------------------

namespace detail {

inline std::string interpolate_env(const std::string &s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
            std::size_t close = s.find('}', i + 2);
            if (close == std::string::npos) {
                throw Error("unterminated ${ in config value: " + s);
            }
            std::string name = s.substr(i + 2, close - i - 2);
            const char *value = std::getenv(name.c_str());
            if (value == nullptr) {
                throw Error("config references unset environment variable '" + name + "'");
            }
            out += value;
            i = close + 1;
        } else {
            out.push_back(s[i]);
            ++i;
        }
    }
    return out;
}

inline void interpolate_env_json(nlohmann::json &j) {
    if (j.is_string()) {
        j = interpolate_env(j.get<std::string>());
    } else if (j.is_object() || j.is_array()) {
        for (auto &child : j) {
            interpolate_env_json(child);
        }
    }
}

inline std::string fingerprint_file(const std::filesystem::path &path) {
    if (path.empty() || !std::filesystem::exists(path)) return "absent";
    return io::sha256_hex(io::read_file(path));
}

} // namespace detail

inline PipelineConfig pipeline_config_from_json(nlohmann::json j) {
    detail::interpolate_env_json(j);
    PipelineConfig c;
    if (j.contains("dataset_name")) c.dataset_name = j["dataset_name"].get<std::string>();
    if (j.contains("paths")) {
        const auto &p = j["paths"];
        if (p.contains("corpus")) c.paths.corpus = p["corpus"].get<std::string>();
        if (p.contains("assets")) c.paths.assets = p["assets"].get<std::string>();
        if (p.contains("overrides")) c.paths.overrides = p["overrides"].get<std::string>();
        if (p.contains("review_patch")) c.paths.review_patch = p["review_patch"].get<std::string>();
        if (p.contains("fixtures")) {
            for (const auto &f : p["fixtures"]) c.paths.fixtures.emplace_back(f.get<std::string>());
        }
        if (p.contains("cache")) c.paths.cache = p["cache"].get<std::string>();
        if (p.contains("output")) c.paths.output = p["output"].get<std::string>();
    }
    if (j.contains("gateway")) {
        const auto &g = j["gateway"];
        if (g.contains("profile")) {
            auto profile = parse_profile(g["profile"].get<std::string>());
            if (!profile) throw SchemaError("profile", "unknown gateway profile");
            c.profile = *profile;
        }
        if (g.contains("chat_model")) c.chat_model = g["chat_model"].get<std::string>();
        if (g.contains("judge_model")) c.judge_model = g["judge_model"].get<std::string>();
        if (g.contains("embed_model")) c.embed_model = g["embed_model"].get<std::string>();
        if (g.contains("embedding_dim")) c.embedding_dim = g["embedding_dim"].get<std::size_t>();
        if (g.contains("max_in_flight")) c.max_in_flight = g["max_in_flight"].get<int>();
    }
    if (j.contains("mode")) {
        auto mode = parse_prompt_mode(j["mode"].get<std::string>());
        if (!mode) throw SchemaError("mode", "unknown prompt mode");
        c.mode = *mode;
    }
    if (j.contains("template_id")) c.template_id = j["template_id"].get<std::string>();
    if (j.contains("split")) {
        const auto &s = j["split"];
        if (s.contains("apply")) c.split.apply = s["apply"].get<bool>();
        if (s.contains("train_fraction")) c.split.train_fraction = s["train_fraction"].get<double>();
        if (s.contains("seed")) c.split.seed = s["seed"].get<std::uint64_t>();
    }
    if (j.contains("augmentation")) {
        const auto &a = j["augmentation"];
        if (a.contains("enabled")) c.augmentation.enabled = a["enabled"].get<bool>();
        if (a.contains("per_parent")) c.augmentation.per_parent = a["per_parent"].get<int>();
        if (a.contains("max_cosine")) c.augmentation.max_cosine = a["max_cosine"].get<double>();
    }
    if (j.contains("training")) c.training = config_from_json(j["training"]);
    if (j.contains("evaluation")) {
        const auto &e = j["evaluation"];
        if (e.contains("rel_tol")) c.evaluation.rel_tol = e["rel_tol"].get<double>();
        if (e.contains("use_judge")) c.evaluation.use_judge = e["use_judge"].get<bool>();
        if (e.contains("compute_bertscore")) {
            c.evaluation.compute_bertscore = e["compute_bertscore"].get<bool>();
        }
    }
    if (j.contains("run_id")) c.run_id = j["run_id"].get<std::string>();
    if (j.contains("model_label")) c.model_label = j["model_label"].get<std::string>();
    if (j.contains("compare_reports")) {
        for (const auto &r : j["compare_reports"]) c.compare_reports.emplace_back(r.get<std::string>());
    }
    if (c.paths.output.empty()) throw SchemaError("paths.output", "output root must be set");
    return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path &path) {
    return pipeline_config_from_json(nlohmann::json::parse(io::read_file(path)));
}

inline GatewayConfig gateway_config(const PipelineConfig &c) {
    GatewayConfig g;
    g.profile = c.profile;
    g.cache_dir = c.paths.cache;
    g.fixture_files = c.paths.fixtures;
    g.embedding_dim = c.embedding_dim;
    g.chat_model = c.chat_model;
    g.judge_model = c.judge_model;
    g.embed_model = c.embed_model;
    g.max_in_flight = c.max_in_flight;
    return g;
}

// ---------------------------------------------------------------------------
// Stable artifact names under the output root
// ---------------------------------------------------------------------------

namespace artifacts {

inline std::filesystem::path manifest(const PipelineConfig &c) { return c.paths.output / "manifest.jsonl"; }
inline std::filesystem::path stats(const PipelineConfig &c) { return c.paths.output / "stats.csv"; }
inline std::filesystem::path captions(const PipelineConfig &c) { return c.paths.output / "captions.jsonl"; }
inline std::filesystem::path candidates(const PipelineConfig &c) {
    return c.paths.output / "candidates.jsonl";
}
inline std::filesystem::path manifest_augmented(const PipelineConfig &c) {
    return c.paths.output / "manifest_augmented.jsonl";
}
inline std::filesystem::path effective_manifest(const PipelineConfig &c) {
    auto augmented = manifest_augmented(c);
    return std::filesystem::exists(augmented) ? augmented : manifest(c);
}
inline std::string run_id(const PipelineConfig &c) {
    return c.run_id.empty() ? "run-" + std::string(to_string(c.mode)) : c.run_id;
}
inline std::filesystem::path bundles(const PipelineConfig &c) {
    return c.paths.output / ("bundles_" + std::string(to_string(c.mode)) + ".jsonl");
}
inline std::filesystem::path run_dir(const PipelineConfig &c) {
    return c.paths.output / "runs" / run_id(c);
}
inline std::filesystem::path run_manifest(const PipelineConfig &c) {
    return run_dir(c) / "run_manifest.json";
}
inline std::filesystem::path predictions(const PipelineConfig &c) {
    return c.paths.output / ("predictions_" + std::string(to_string(c.mode)) + ".jsonl");
}
inline std::filesystem::path prediction_errors(const PipelineConfig &c) {
    return c.paths.output / ("prediction_errors_" + std::string(to_string(c.mode)) + ".jsonl");
}
inline std::filesystem::path report_json(const PipelineConfig &c) {
    return c.paths.output / ("report_" + std::string(to_string(c.mode)) + ".json");
}
inline std::filesystem::path report_md(const PipelineConfig &c) {
    return c.paths.output / ("report_" + std::string(to_string(c.mode)) + ".md");
}
inline std::filesystem::path table_subject_grade(const PipelineConfig &c) {
    return c.paths.output / "tables" / "subject_grade.csv";
}
inline std::filesystem::path table_qtype_unit(const PipelineConfig &c) {
    return c.paths.output / "tables" / "qtype_scores.csv";
}
inline std::filesystem::path table_qtype_pct(const PipelineConfig &c) {
    return c.paths.output / "tables" / "qtype_scores_pct.csv";
}
inline std::filesystem::path comparison_md(const PipelineConfig &c) {
    return c.paths.output / "tables" / "comparison.md";
}

} // namespace artifacts

// ---------------------------------------------------------------------------
// Content-hash stamps: a stage whose inputs are unchanged and whose outputs
// exist is a no-op.
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path stamp_path(const PipelineConfig &c, const std::string &stage) {
    return c.paths.output / ".stamps" / (stage + ".txt");
}

inline bool stage_fresh(const PipelineConfig &c, const std::string &stage, const std::string &fingerprint,
                        const std::vector<std::filesystem::path> &outputs) {
    auto stamp = stamp_path(c, stage);
    if (!std::filesystem::exists(stamp)) return false;
    if (io::read_file(stamp) != fingerprint) return false;
    for (const auto &o : outputs) {
        if (!std::filesystem::exists(o)) return false;
    }
    return true;
}

inline void stage_mark(const PipelineConfig &c, const std::string &stage, const std::string &fingerprint) {
    io::atomic_write_file(stamp_path(c, stage), fingerprint);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Stages. Each returns true when it did work and false when it was a no-op.
// ---------------------------------------------------------------------------

inline bool stage_ingest(const PipelineConfig &c) {
    nlohmann::json split_fp = {{"apply", c.split.apply},
                               {"train_fraction", c.split.train_fraction},
                               {"seed", c.split.seed},
                               {"dataset_name", c.dataset_name}};
    std::string fingerprint =
        io::sha256_hex(detail::fingerprint_file(c.paths.corpus) + split_fp.dump());
    if (detail::stage_fresh(c, "ingest", fingerprint, {artifacts::manifest(c), artifacts::stats(c)})) {
        return false;
    }
    DatasetManifest manifest = load_manifest_strict(c.paths.corpus);
    manifest.name = c.dataset_name;
    validate_manifest(manifest);
    if (c.split.apply) {
        manifest = split_dataset(manifest, c.split.train_fraction, c.split.seed);
    }
    save_manifest(manifest, artifacts::manifest(c));
    std::string stats_csv = "dimension,value,count\n";
    for (const auto &row : dataset_stats(manifest)) {
        stats_csv += row.dimension + "," + row.value + "," + std::to_string(row.count) + "\n";
    }
    io::atomic_write_file(artifacts::stats(c), stats_csv);
    detail::stage_mark(c, "ingest", fingerprint);
    return true;
}

inline bool stage_caption(const PipelineConfig &c, Gateway &gateway) {
    std::string fingerprint = io::sha256_hex(detail::fingerprint_file(artifacts::manifest(c)) +
                                             detail::fingerprint_file(c.paths.overrides) + c.chat_model);
    if (detail::stage_fresh(c, "caption", fingerprint, {artifacts::captions(c)})) {
        return false;
    }
    DatasetManifest manifest = load_manifest_strict(artifacts::manifest(c));
    CaptionStore store = CaptionStore::load(artifacts::captions(c));
    std::vector<const QaRecord *> pending;
    for (const auto &r : manifest.records) {
        if (!store.effective(r.id, Language::en)) pending.push_back(&r);
    }
    std::sort(pending.begin(), pending.end(),
              [](const QaRecord *a, const QaRecord *b) { return a->id < b->id; });
    std::vector<Caption> generated(pending.size());
    gateway.parallel_for(pending.size(), [&](std::size_t i) {
        generated[i] = generate_caption(gateway, *pending[i], c.paths.assets);
    });
    for (auto &cap : generated) store.put(std::move(cap));
    if (!c.paths.overrides.empty()) {
        apply_overrides(store, c.paths.overrides);
    }
    store.save_compacted(artifacts::captions(c));
    detail::stage_mark(c, "caption", fingerprint);
    return true;
}

inline bool stage_translate(const PipelineConfig &c, Gateway &gateway) {
    std::string fingerprint = io::sha256_hex(detail::fingerprint_file(artifacts::manifest(c)) +
                                             detail::fingerprint_file(artifacts::captions(c)) +
                                             c.chat_model + ":translate");
    if (detail::stage_fresh(c, "translate", fingerprint, {artifacts::captions(c)})) {
        return false;
    }
    DatasetManifest manifest = load_manifest_strict(artifacts::manifest(c));
    CaptionStore store = CaptionStore::load(artifacts::captions(c));
    std::vector<Caption> sources;
    for (const auto &r : manifest.records) {
        if (r.language != Language::hi) continue;
        if (store.effective(r.id, Language::hi)) continue;
        auto en = store.effective(r.id, Language::en);
        if (!en) {
            throw Error("record '" + r.id + "' needs a Hindi caption but has no English source");
        }
        sources.push_back(*en);
    }
    std::sort(sources.begin(), sources.end(),
              [](const Caption &a, const Caption &b) { return a.record_id < b.record_id; });
    std::vector<Caption> translated(sources.size());
    gateway.parallel_for(sources.size(), [&](std::size_t i) {
        translated[i] = translate_caption(gateway, sources[i], Language::hi);
    });
    for (auto &cap : translated) store.put(std::move(cap));
    store.save_compacted(artifacts::captions(c));
    detail::stage_mark(c, "translate", fingerprint);
    return true;
}

inline bool stage_augment(const PipelineConfig &c, Gateway &gateway) {
    if (!c.augmentation.enabled) return false;
    nlohmann::json aug_fp = {{"per_parent", c.augmentation.per_parent},
                             {"max_cosine", c.augmentation.max_cosine}};
    std::string fingerprint = io::sha256_hex(detail::fingerprint_file(artifacts::manifest(c)) +
                                             detail::fingerprint_file(c.paths.review_patch) +
                                             aug_fp.dump() + c.judge_model + c.embed_model);
    if (detail::stage_fresh(c, "augment", fingerprint,
                            {artifacts::candidates(c), artifacts::manifest_augmented(c)})) {
        return false;
    }
    DatasetManifest manifest = load_manifest_strict(artifacts::manifest(c));
    std::vector<const QaRecord *> parents;
    for (const auto &r : manifest.records) {
        if (r.split == Split::train && r.provenance == Provenance::original) parents.push_back(&r);
    }
    std::sort(parents.begin(), parents.end(),
              [](const QaRecord *a, const QaRecord *b) { return a->id < b->id; });
    std::vector<std::vector<AugmentationCandidate>> per_parent(parents.size());
    gateway.parallel_for(parents.size(), [&](std::size_t i) {
        const QaRecord &parent = *parents[i];
        std::vector<AugmentationCandidate> mine;
        std::vector<AugMethod> methods = parent.qtype == QType::numerical
                                             ? std::vector<AugMethod>{AugMethod::CR, AugMethod::Pa}
                                             : std::vector<AugMethod>{AugMethod::Pa};
        for (AugMethod method : methods) {
            CandidateBatch batch = generate_candidates(gateway, parent, method, c.augmentation.per_parent);
            mine.insert(mine.end(), batch.candidates.begin(), batch.candidates.end());
        }
        compute_diversity(gateway, parent, mine);
        per_parent[i] = select_candidates(std::move(mine), parent.qtype, c.augmentation.max_cosine);
    });
    std::vector<AugmentationCandidate> all;
    for (auto &group : per_parent) {
        all.insert(all.end(), group.begin(), group.end());
    }
    if (!c.paths.review_patch.empty() && std::filesystem::exists(c.paths.review_patch)) {
        apply_review_patch(all, c.paths.review_patch);
    }
    save_candidates(all, artifacts::candidates(c));
    DatasetManifest augmented = inject_candidates(manifest, all);
    validate_manifest(augmented);
    save_manifest(augmented, artifacts::manifest_augmented(c));
    detail::stage_mark(c, "augment", fingerprint);
    return true;
}

inline bool stage_prompts(const PipelineConfig &c) {
    auto manifest_path = artifacts::effective_manifest(c);
    std::string fingerprint = io::sha256_hex(detail::fingerprint_file(manifest_path) +
                                             detail::fingerprint_file(artifacts::captions(c)) +
                                             std::string(to_string(c.mode)) + c.template_id);
    if (detail::stage_fresh(c, "prompts", fingerprint, {artifacts::bundles(c)})) {
        return false;
    }
    DatasetManifest manifest = load_manifest_strict(manifest_path);
    CaptionStore store = CaptionStore::load(artifacts::captions(c));
    if (mode_requires_caption(c.mode)) {
        auto missing = lint_captions(manifest, store);
        if (!missing.empty()) {
            throw Error("caption lint failed; first missing record: " + missing.front() + " (" +
                        std::to_string(missing.size()) + " total)");
        }
    }
    TemplateRegistry templates;
    TrainingSet set = build_training_set(manifest, store, c.mode, templates, c.template_id);
    if (!set.ok()) {
        throw Error("prompt building failed for " + std::to_string(set.errors.size()) +
                    " record(s); first: " + set.errors.front().record_id + ": " +
                    set.errors.front().message);
    }
    save_bundles(set.bundles, artifacts::bundles(c));
    detail::stage_mark(c, "prompts", fingerprint);
    return true;
}

inline bool stage_train(const PipelineConfig &c) {
    if (c.mode == PromptMode::zero_shot) return false;
    std::string fingerprint = io::sha256_hex(detail::fingerprint_file(artifacts::bundles(c)) +
                                             config_to_json(c.training).dump());
    if (detail::stage_fresh(c, "train", fingerprint, {artifacts::run_manifest(c)})) {
        return false;
    }
    std::vector<PromptBundle> bundles = load_bundles(artifacts::bundles(c));
    auto backend = make_backend(c.training.backend_id, artifacts::run_dir(c) / "ckpt");
    RunManifest manifest = run_training(*backend, bundles, c.training, artifacts::run_id(c));
    save_run_manifest(manifest, artifacts::run_manifest(c));
    detail::stage_mark(c, "train", fingerprint);
    return true;
}

inline bool stage_infer(const PipelineConfig &c) {
    auto manifest_path = artifacts::effective_manifest(c);
    std::string checkpoint;
    std::string run_fp = "zero-shot";
    if (c.mode != PromptMode::zero_shot) {
        RunManifest run = load_run_manifest(artifacts::run_manifest(c));
        checkpoint = run.checkpoint_ref;
        run_fp = run.dataset_fingerprint + run.checkpoint_ref;
    }
    std::string fingerprint = io::sha256_hex(detail::fingerprint_file(manifest_path) +
                                             detail::fingerprint_file(artifacts::captions(c)) + run_fp +
                                             std::string(to_string(c.mode)) + c.training.backend_id);
    if (detail::stage_fresh(c, "infer", fingerprint, {artifacts::predictions(c)})) {
        return false;
    }
    DatasetManifest manifest = load_manifest_strict(manifest_path);
    CaptionStore store = CaptionStore::load(artifacts::captions(c));
    auto backend = make_backend(c.training.backend_id, artifacts::run_dir(c) / "ckpt");
    TemplateRegistry templates;
    InferenceResult result =
        run_inference(*backend, manifest, store, c.mode, checkpoint, templates, c.template_id);
    save_predictions(result.predictions, artifacts::predictions(c));
    if (!result.errors.empty()) {
        std::string lines;
        for (const auto &e : result.errors) {
            nlohmann::ordered_json j;
            j["record_id"] = e.record_id;
            j["reason"] = e.reason;
            lines += j.dump();
            lines += '\n';
        }
        io::atomic_write_file(artifacts::prediction_errors(c), lines);
    }
    detail::stage_mark(c, "infer", fingerprint);
    return true;
}

inline bool stage_evaluate(const PipelineConfig &c, Gateway &gateway) {
    auto manifest_path = artifacts::effective_manifest(c);
    nlohmann::json eval_fp = {{"rel_tol", c.evaluation.rel_tol},
                              {"use_judge", c.evaluation.use_judge},
                              {"compute_bertscore", c.evaluation.compute_bertscore}};
    std::string fingerprint = io::sha256_hex(detail::fingerprint_file(manifest_path) +
                                             detail::fingerprint_file(artifacts::predictions(c)) +
                                             eval_fp.dump() + c.judge_model + c.embed_model);
    if (detail::stage_fresh(c, "evaluate", fingerprint, {artifacts::report_json(c)})) {
        return false;
    }
    DatasetManifest manifest = load_manifest_strict(manifest_path);
    std::vector<Prediction> predictions = load_predictions(artifacts::predictions(c));
    metrics::EvaluateOptions options;
    options.run_id = artifacts::run_id(c);
    options.model_id = c.model_label;
    options.mode = to_string(c.mode);
    options.rel_tol = c.evaluation.rel_tol;
    options.use_judge = c.evaluation.use_judge;
    options.compute_bertscore = c.evaluation.compute_bertscore;
    metrics::MetricReport report = metrics::evaluate_run(gateway, manifest, predictions, options);
    metrics::save_report(report, artifacts::report_json(c));
    detail::stage_mark(c, "evaluate", fingerprint);
    return true;
}

inline bool stage_report(const PipelineConfig &c) {
    std::string compare_fp;
    for (const auto &p : c.compare_reports) compare_fp += detail::fingerprint_file(p);
    std::string fingerprint =
        io::sha256_hex(detail::fingerprint_file(artifacts::report_json(c)) +
                       detail::fingerprint_file(artifacts::effective_manifest(c)) + compare_fp);
    std::vector<std::filesystem::path> outputs = {artifacts::report_md(c),
                                                  artifacts::table_subject_grade(c),
                                                  artifacts::table_qtype_unit(c),
                                                  artifacts::table_qtype_pct(c)};
    if (detail::stage_fresh(c, "report", fingerprint, outputs)) {
        return false;
    }
    metrics::MetricReport rep = metrics::load_report(artifacts::report_json(c));
    DatasetManifest manifest = load_manifest_strict(artifacts::effective_manifest(c));
    io::atomic_write_file(artifacts::report_md(c), report::report_markdown(rep));
    auto accuracy = metrics::scienceqa_accuracy(report::accuracy_rows_from_report(rep, manifest));
    io::atomic_write_file(
        artifacts::table_subject_grade(c),
        report::subject_grade_csv({report::subject_grade_row(c.model_label, rep.mode, accuracy)}));
    std::vector<report::QtypeScoreRow> rows = {report::qtype_row(c.model_label, rep.mode, rep)};
    for (const auto &p : c.compare_reports) {
        metrics::MetricReport other = metrics::load_report(p);
        rows.push_back(report::qtype_row(other.model_id, other.mode, other));
    }
    io::atomic_write_file(artifacts::table_qtype_unit(c), report::qtype_csv(rows, report::ScoreScale::unit));
    io::atomic_write_file(artifacts::table_qtype_pct(c),
                          report::qtype_csv(rows, report::ScoreScale::percent));
    if (rows.size() >= 2) {
        io::atomic_write_file(artifacts::comparison_md(c), report::comparison_markdown(rows));
    }
    detail::stage_mark(c, "report", fingerprint);
    return true;
}

} // namespace vcasft
