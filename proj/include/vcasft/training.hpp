#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/corpus.hpp"
#include "vcasft/io.hpp"
#include "vcasft/predictions.hpp"
#include "vcasft/prompting.hpp"

namespace vcasft {

/// Fine-tuning hyperparameters handed to the backend. The defaults are the
/// shipped LoRA configuration.
struct FineTuneConfig {
    std::string method = "lora";
    int lora_rank = 64;
    int lora_alpha = 128;
    int batch_size = 8;
    int epochs = 3;
    double learning_rate = 2e-5;
    std::string optimizer_name = "adam";
    std::string backend_id = "toy";
    std::uint64_t seed = 7;

    friend bool operator==(const FineTuneConfig &, const FineTuneConfig &) = default;
};

inline void validate_config(const FineTuneConfig &c) {
    if (c.lora_rank <= 0) throw PreconditionError("lora_rank must be > 0");
    if (c.lora_alpha <= 0) throw PreconditionError("lora_alpha must be > 0");
    if (c.batch_size <= 0) throw PreconditionError("batch_size must be > 0");
    if (c.epochs < 1) throw PreconditionError("epochs must be >= 1");
    if (!(c.learning_rate > 0.0)) throw PreconditionError("learning_rate must be > 0");
    if (c.method.empty()) throw PreconditionError("method must be set");
    if (c.backend_id.empty()) throw PreconditionError("backend_id must be set");
}

inline nlohmann::ordered_json config_to_json(const FineTuneConfig &c) {
    nlohmann::ordered_json j;
    j["method"] = c.method;
    j["lora_rank"] = c.lora_rank;
    j["lora_alpha"] = c.lora_alpha;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["learning_rate"] = c.learning_rate;
    j["optimizer_name"] = c.optimizer_name;
    j["backend_id"] = c.backend_id;
    j["seed"] = c.seed;
    return j;
}

inline FineTuneConfig config_from_json(const nlohmann::json &j) {
    FineTuneConfig c;
    if (j.contains("method")) c.method = j["method"].get<std::string>();
    if (j.contains("lora_rank")) c.lora_rank = j["lora_rank"].get<int>();
    if (j.contains("lora_alpha")) c.lora_alpha = j["lora_alpha"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("optimizer_name")) c.optimizer_name = j["optimizer_name"].get<std::string>();
    if (j.contains("backend_id")) c.backend_id = j["backend_id"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    validate_config(c);
    return c;
}

struct BackendCapabilities {
    bool supports_images = true;
    int max_context = 32768;
};

struct TrainOutcome {
    std::string checkpoint_ref;
    std::vector<double> loss_trace; // one entry per effective epoch
};

/// Boundary to the actual model runtime. Image encoding and the LoRA update
/// itself happen behind this interface; the toolkit only transports bundles,
/// hyperparameters, and checkpoint references.
class TrainableBackend {
  public:
    virtual ~TrainableBackend() = default;
    virtual std::string id() const = 0;
    virtual BackendCapabilities capabilities() const = 0;
    /// Backends that converge in fewer epochs may pin their own count.
    virtual std::optional<int> epochs_override() const { return std::nullopt; }
    virtual TrainOutcome train(const std::vector<PromptBundle> &bundles, const FineTuneConfig &config) = 0;
    /// Empty checkpoint_ref means the base model (zero-shot).
    virtual std::string predict(const PromptBundle &bundle, const std::string &checkpoint_ref) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic in-tree backend: training memorizes (prompt -> target), and
// prediction looks the prompt up, echoing it verbatim on a miss.
// ---------------------------------------------------------------------------

class ToyBackend final : public TrainableBackend {
  public:
    explicit ToyBackend(std::filesystem::path workdir) : workdir_(std::move(workdir)) {}

    std::string id() const override { return "toy"; }
    BackendCapabilities capabilities() const override { return {true, 32768}; }

    TrainOutcome train(const std::vector<PromptBundle> &bundles, const FineTuneConfig &config) override {
        nlohmann::ordered_json table = nlohmann::ordered_json::object();
        std::string fingerprint_input = config_to_json(config).dump();
        for (const auto &b : bundles) {
            if (!b.target_answer) {
                throw PreconditionError("bundle '" + b.record_id + "' lacks a target answer");
            }
            table[b.rendered_text] = *b.target_answer;
            fingerprint_input += '\n';
            fingerprint_input += bundle_to_json(b).dump();
        }
        std::string fingerprint = io::sha256_hex(fingerprint_input);
        std::filesystem::path checkpoint = workdir_ / ("toy-" + fingerprint.substr(0, 16) + ".json");
        io::atomic_write_file(checkpoint, table.dump(2) + "\n");

        TrainOutcome outcome;
        outcome.checkpoint_ref = checkpoint.string();
        int epochs = epochs_override().value_or(config.epochs);
        std::uint64_t h = config.seed;
        for (char c : fingerprint) h = h * 1099511628211ULL + static_cast<unsigned char>(c);
        double base = 1.0 + static_cast<double>(h % 1000) / 1000.0;
        for (int e = 0; e < epochs; ++e) {
            outcome.loss_trace.push_back(base / static_cast<double>(e + 1));
        }
        return outcome;
    }

    std::string predict(const PromptBundle &bundle, const std::string &checkpoint_ref) override {
        if (checkpoint_ref.empty()) {
            return bundle.rendered_text;
        }
        const auto &table = load_table(checkpoint_ref);
        auto it = table.find(bundle.rendered_text);
        return it != table.end() ? it->second : bundle.rendered_text;
    }

  private:
    const std::map<std::string, std::string> &load_table(const std::string &checkpoint_ref) {
        auto it = tables_.find(checkpoint_ref);
        if (it != tables_.end()) return it->second;
        nlohmann::json j = nlohmann::json::parse(io::read_file(checkpoint_ref));
        std::map<std::string, std::string> table;
        for (const auto &[prompt, target] : j.items()) {
            table[prompt] = target.get<std::string>();
        }
        return tables_.emplace(checkpoint_ref, std::move(table)).first->second;
    }

    std::filesystem::path workdir_;
    std::map<std::string, std::map<std::string, std::string>> tables_;
};

/// Toy variant of a backend family that converges in a single epoch.
class OneEpochToyBackend final : public TrainableBackend {
  public:
    explicit OneEpochToyBackend(std::filesystem::path workdir) : inner_(std::move(workdir)) {}
    std::string id() const override { return "toy-one-epoch"; }
    BackendCapabilities capabilities() const override { return inner_.capabilities(); }
    std::optional<int> epochs_override() const override { return 1; }
    TrainOutcome train(const std::vector<PromptBundle> &bundles, const FineTuneConfig &config) override {
        FineTuneConfig pinned = config;
        pinned.epochs = 1;
        return inner_.train(bundles, pinned);
    }
    std::string predict(const PromptBundle &bundle, const std::string &checkpoint_ref) override {
        return inner_.predict(bundle, checkpoint_ref);
    }

  private:
    ToyBackend inner_;
};

// ---------------------------------------------------------------------------
// External adapter: bundles go out as JSONL, checkpoint ref and predictions
// come back as files. The command template expands {bundles}, {config},
// {checkpoint}, {out} before running through the shell.
// ---------------------------------------------------------------------------

class SubprocessBackend final : public TrainableBackend {
  public:
    SubprocessBackend(std::string train_command, std::string predict_command,
                      std::filesystem::path workdir)
        : train_command_(std::move(train_command)),
          predict_command_(std::move(predict_command)),
          workdir_(std::move(workdir)) {}

    std::string id() const override { return "subprocess"; }
    BackendCapabilities capabilities() const override { return {true, 32768}; }

    TrainOutcome train(const std::vector<PromptBundle> &bundles, const FineTuneConfig &config) override {
        std::filesystem::create_directories(workdir_);
        std::filesystem::path bundle_path = workdir_ / "train_bundles.jsonl";
        std::filesystem::path config_path = workdir_ / "train_config.json";
        std::filesystem::path out_path = workdir_ / "train_result.json";
        save_bundles(bundles, bundle_path);
        io::atomic_write_file(config_path, config_to_json(config).dump(2) + "\n");
        run_command(expand(train_command_, bundle_path, config_path, "", out_path));
        nlohmann::json result = nlohmann::json::parse(io::read_file(out_path));
        TrainOutcome outcome;
        outcome.checkpoint_ref = result.at("checkpoint_ref").get<std::string>();
        if (result.contains("loss_trace")) {
            outcome.loss_trace = result["loss_trace"].get<std::vector<double>>();
        }
        return outcome;
    }

    std::string predict(const PromptBundle &bundle, const std::string &checkpoint_ref) override {
        std::filesystem::create_directories(workdir_);
        std::filesystem::path bundle_path = workdir_ / "predict_bundle.json";
        std::filesystem::path out_path = workdir_ / "predict_result.json";
        io::atomic_write_file(bundle_path, bundle_to_json(bundle).dump(2) + "\n");
        run_command(expand(predict_command_, bundle_path, "", checkpoint_ref, out_path));
        nlohmann::json result = nlohmann::json::parse(io::read_file(out_path));
        return result.at("text").get<std::string>();
    }

  private:
    static std::string expand(std::string command, const std::filesystem::path &bundles,
                              const std::filesystem::path &config, const std::string &checkpoint,
                              const std::filesystem::path &out) {
        auto replace_all = [&command](const std::string &from, const std::string &to) {
            std::size_t pos = 0;
            while ((pos = command.find(from, pos)) != std::string::npos) {
                command.replace(pos, from.size(), to);
                pos += to.size();
            }
        };
        replace_all("{bundles}", bundles.string());
        replace_all("{config}", config.string());
        replace_all("{checkpoint}", checkpoint);
        replace_all("{out}", out.string());
        return command;
    }

    static void run_command(const std::string &command) {
        int status = std::system(command.c_str());
        if (status != 0) {
            throw Error("backend command failed with status " + std::to_string(status) + ": " + command);
        }
    }

    std::string train_command_;
    std::string predict_command_;
    std::filesystem::path workdir_;
};

/// Resolves a config backend_id. Subprocess backends use the form
/// "subprocess:<train command>::<predict command>".
inline std::unique_ptr<TrainableBackend> make_backend(const std::string &backend_id,
                                                      const std::filesystem::path &workdir) {
    if (backend_id == "toy") return std::make_unique<ToyBackend>(workdir);
    if (backend_id == "toy-one-epoch") return std::make_unique<OneEpochToyBackend>(workdir);
    if (backend_id.rfind("subprocess:", 0) == 0) {
        std::string rest = backend_id.substr(std::string("subprocess:").size());
        std::size_t sep = rest.find("::");
        if (sep == std::string::npos) {
            throw PreconditionError("subprocess backend id needs '<train>::<predict>' commands");
        }
        return std::make_unique<SubprocessBackend>(rest.substr(0, sep), rest.substr(sep + 2), workdir);
    }
    throw PreconditionError("unknown backend '" + backend_id + "'");
}

// ---------------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string run_id;
    FineTuneConfig config;
    std::string dataset_fingerprint;
    PromptMode prompt_mode = PromptMode::sft;
    int epochs_effective = 0;
    std::string started_at;
    std::string finished_at;
    std::string checkpoint_ref;
    std::vector<double> loss_trace;
};

namespace detail {

inline std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string bundles_fingerprint(const std::vector<PromptBundle> &bundles) {
    std::string input;
    for (const auto &b : bundles) {
        input += bundle_to_json(b).dump();
        input += '\n';
    }
    return io::sha256_hex(input);
}

} // namespace detail

inline nlohmann::ordered_json run_manifest_to_json(const RunManifest &m) {
    nlohmann::ordered_json j;
    j["run_id"] = m.run_id;
    j["config"] = config_to_json(m.config);
    j["dataset_fingerprint"] = m.dataset_fingerprint;
    j["prompt_mode"] = to_string(m.prompt_mode);
    j["epochs_effective"] = m.epochs_effective;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["checkpoint_ref"] = m.checkpoint_ref;
    j["loss_trace"] = m.loss_trace;
    return j;
}

inline RunManifest run_manifest_from_json(const nlohmann::json &j) {
    RunManifest m;
    m.run_id = detail::require_string(j, "run_id");
    m.config = config_from_json(j.at("config"));
    m.dataset_fingerprint = detail::require_string(j, "dataset_fingerprint");
    auto mode = parse_prompt_mode(detail::require_string(j, "prompt_mode"));
    if (!mode) throw SchemaError("prompt_mode", "unknown prompt mode");
    m.prompt_mode = *mode;
    m.epochs_effective = j.value("epochs_effective", 0);
    m.started_at = j.value("started_at", std::string());
    m.finished_at = j.value("finished_at", std::string());
    m.checkpoint_ref = j.value("checkpoint_ref", std::string());
    if (j.contains("loss_trace")) m.loss_trace = j["loss_trace"].get<std::vector<double>>();
    return m;
}

inline RunManifest run_training(TrainableBackend &backend, const std::vector<PromptBundle> &bundles,
                                const FineTuneConfig &config, const std::string &run_id = "") {
    validate_config(config);
    if (bundles.empty()) {
        throw PreconditionError("run_training requires at least one bundle");
    }
    for (const auto &b : bundles) {
        if (!b.target_answer) {
            throw PreconditionError("bundle '" + b.record_id + "' lacks a target answer");
        }
    }
    PromptMode mode = bundles.front().mode;
    for (const auto &b : bundles) {
        if (b.mode != mode) {
            throw PreconditionError("run_training bundles mix prompt modes");
        }
    }
    RunManifest manifest;
    manifest.config = config;
    manifest.prompt_mode = mode;
    manifest.dataset_fingerprint = detail::bundles_fingerprint(bundles);
    manifest.run_id = run_id.empty() ? "run-" + manifest.dataset_fingerprint.substr(0, 12) + "-" +
                                           std::string(to_string(mode))
                                     : run_id;
    manifest.epochs_effective = backend.epochs_override().value_or(config.epochs);
    manifest.started_at = detail::utc_timestamp();
    TrainOutcome outcome = backend.train(bundles, config);
    manifest.finished_at = detail::utc_timestamp();
    manifest.checkpoint_ref = outcome.checkpoint_ref;
    manifest.loss_trace = outcome.loss_trace;
    return manifest;
}

struct InferenceError {
    std::string record_id;
    std::string reason;
};

struct InferenceResult {
    std::vector<Prediction> predictions;
    std::vector<InferenceError> errors;
};

/// One prediction per test record in stable id order. Per-record backend
/// failures are collected; the run aborts only when every record fails.
inline InferenceResult run_inference(TrainableBackend &backend, const DatasetManifest &manifest,
                                     const CaptionStore &captions, PromptMode mode,
                                     const std::string &checkpoint_ref,
                                     const TemplateRegistry &templates = TemplateRegistry(),
                                     const std::string &template_id = "default") {
    std::vector<const QaRecord *> test_records;
    for (const auto &r : manifest.records) {
        if (r.split == Split::test) test_records.push_back(&r);
    }
    if (test_records.empty()) {
        throw PreconditionError("run_inference requires a non-empty test split");
    }
    std::sort(test_records.begin(), test_records.end(),
              [](const QaRecord *a, const QaRecord *b) { return a->id < b->id; });

    InferenceResult result;
    for (const QaRecord *record : test_records) {
        try {
            std::optional<Caption> caption;
            if (mode_requires_caption(mode)) {
                caption = captions.effective(record->id, record->language);
                if (!caption) {
                    throw PreconditionError("record '" + record->id + "' has no effective caption");
                }
            }
            PromptBundle bundle = build_prompt(*record, caption, mode, templates, template_id);
            Prediction p;
            p.record_id = record->id;
            p.mode = to_string(mode);
            p.text = text::normalize_nfc(backend.predict(bundle, checkpoint_ref));
            result.predictions.push_back(std::move(p));
        } catch (const std::exception &e) {
            result.errors.push_back({record->id, e.what()});
        }
    }
    if (result.predictions.empty()) {
        throw Error("inference failed for every test record; first error: " +
                    (result.errors.empty() ? std::string("none") : result.errors.front().reason));
    }
    return result;
}

inline void save_run_manifest(const RunManifest &m, const std::filesystem::path &path) {
    io::atomic_write_file(path, run_manifest_to_json(m).dump(2) + "\n");
}

inline RunManifest load_run_manifest(const std::filesystem::path &path) {
    return run_manifest_from_json(nlohmann::json::parse(io::read_file(path)));
}

} // namespace vcasft
