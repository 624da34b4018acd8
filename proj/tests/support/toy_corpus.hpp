#pragma once

// Shared fixtures: a ten-record corpus (two records per question type, one
// train and one test each), fake image assets, pipeline config builders, and
// small utilities for scratch directories and driving the CLI binary.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "vcasft/corpus.hpp"
#include "vcasft/io.hpp"
#include "vcasft/pipeline.hpp"

namespace testsupport {

class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<int> counter{0};
        for (;;) {
            auto candidate = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(counter.fetch_add(1)));
            std::error_code ec;
            if (std::filesystem::create_directories(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
    }

    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    const std::filesystem::path &path() const { return path_; }
    std::string str(const std::string &rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

  private:
    std::filesystem::path path_;
};

inline vcasft::QaRecord make_record(std::string id, vcasft::QType qtype, vcasft::Split split,
                                    vcasft::Subject subject, vcasft::GradeBand band,
                                    std::string question, std::string answer) {
    vcasft::QaRecord r;
    r.id = std::move(id);
    r.language = vcasft::Language::en;
    r.qtype = qtype;
    r.subject = subject;
    r.grade_band = band;
    r.question_text = std::move(question);
    r.answer_text = std::move(answer);
    r.image_ref = r.id + ".png";
    r.split = split;
    r.provenance = vcasft::Provenance::original;
    return r;
}

// Two records per question type; the -02 record of each pair is the test one.
inline vcasft::DatasetManifest toy_manifest() {
    using vcasft::GradeBand;
    using vcasft::QType;
    using vcasft::Split;
    using vcasft::Subject;

    vcasft::DatasetManifest m;
    m.name = "toy";

    m.records.push_back(make_record(
        "conc-01", QType::conceptual, Split::train, Subject::natural_science, GradeBand::lower,
        "Why does a metal spoon feel colder than a wooden one?",
        "Metals conduct heat away from the skin faster. Higher thermal conductivity makes objects "
        "feel colder."));
    m.records.push_back(make_record(
        "conc-02", QType::conceptual, Split::test, Subject::natural_science, GradeBand::secondary,
        "Why do heavy and light balls fall together in a vacuum?",
        "Gravitational acceleration is independent of mass. Without air resistance every object "
        "accelerates equally."));
    m.records.push_back(make_record("fact-01", QType::factual, Split::train,
                                    Subject::social_science, GradeBand::secondary,
                                    "Which river is shown on the map?", "The Ganga river."));
    m.records.push_back(make_record("fact-02", QType::factual, Split::test,
                                    Subject::social_science, GradeBand::lower,
                                    "Which organelle is labeled in the cell diagram?",
                                    "The mitochondrion."));

    vcasft::QaRecord mcq1 = make_record("mcq-01", QType::mcq, Split::train,
                                        Subject::language_science, GradeBand::higher,
                                        "Which word in the chart is a noun?", "The noun is river.");
    mcq1.options = std::vector<std::string>{"run", "blue", "river", "quickly"};
    mcq1.correct_option = 2;
    m.records.push_back(mcq1);

    vcasft::QaRecord mcq2 = make_record(
        "mcq-02", QType::mcq, Split::test, Subject::language_science, GradeBand::higher,
        "Which sentence on the poster uses the past tense?", "Option (b) is in the past tense.");
    mcq2.options = std::vector<std::string>{"She walks home", "She walked home", "She will walk home",
                                            "She is walking home"};
    mcq2.correct_option = 1;
    m.records.push_back(mcq2);

    vcasft::QaRecord num1 = make_record(
        "num-01", QType::numerical, Split::train, Subject::natural_science, GradeBand::higher,
        "A cart travels 24 m in 2 s. What is its average speed?",
        "Speed equals distance divided by time. Divide 24 m by 2 s. The speed is 12 m/s.");
    num1.final_numeric = vcasft::FinalNumeric{12.0, "m/s"};
    m.records.push_back(num1);

    vcasft::QaRecord num2 = make_record(
        "num-02", QType::numerical, Split::test, Subject::natural_science, GradeBand::secondary,
        "A resistor of 4 \xCE\xA9 carries 12 V across it. What current flows?",
        "Apply Ohm's law I = V / R. Divide 12 V by 4 \xCE\xA9. The current is 3 A.");
    num2.final_numeric = vcasft::FinalNumeric{3.0, "A"};
    m.records.push_back(num2);

    m.records.push_back(make_record(
        "theo-01", QType::theoretical, Split::train, Subject::social_science, GradeBand::lower,
        "Explain why monsoon winds reverse direction seasonally.",
        "Land heats faster than the ocean in summer. Pressure gradients reverse between seasons. "
        "Winds flow from high to low pressure."));
    m.records.push_back(make_record(
        "theo-02", QType::theoretical, Split::test, Subject::language_science, GradeBand::secondary,
        "Explain how the rhyme scheme of a limerick is structured.",
        "A limerick has five lines. Lines one, two and five rhyme together. Lines three and four "
        "form a shorter rhyming pair."));

    return m;
}

inline void write_toy_assets(const vcasft::DatasetManifest &manifest, const std::string &dir) {
    std::filesystem::create_directories(dir);
    for (const auto &r : manifest.records) {
        vcasft::io::atomic_write_file(dir + "/" + r.image_ref, "PNGDATA-" + r.id + "\n");
    }
}

// Writes corpus.jsonl plus assets under root and returns a pipeline config
// pointing at them; split is pre-assigned in the records.
inline vcasft::PipelineConfig toy_pipeline_config(const std::string &root) {
    auto manifest = toy_manifest();
    std::filesystem::create_directories(root);
    vcasft::save_manifest(manifest, root + "/corpus.jsonl");
    write_toy_assets(manifest, root + "/assets");

    vcasft::PipelineConfig c;
    c.dataset_name = "toy";
    c.paths.corpus = root + "/corpus.jsonl";
    c.paths.assets = root + "/assets";
    c.paths.output = root + "/out";
    c.profile = vcasft::GatewayProfile::record;
    c.embedding_dim = 8;
    c.mode = vcasft::PromptMode::vcasft;
    c.split.apply = false;
    c.augmentation.enabled = false;
    c.training.epochs = 2;
    c.model_label = "toy-backend";
    return c;
}

// Converts a gateway disk cache into a single fixture file usable by replay
// profiles.
inline void cache_to_fixture_file(const std::string &cache_dir, const std::string &fixture_path) {
    nlohmann::json fixtures = nlohmann::json::object();
    for (const auto &entry : std::filesystem::directory_iterator(cache_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        auto j = nlohmann::json::parse(vcasft::io::read_file(entry.path().string()));
        fixtures[j.at("key").get<std::string>()] = j.at("response");
    }
    vcasft::io::atomic_write_file(fixture_path, fixtures.dump(2) + "\n");
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline CliResult run_cli(const std::string &binary, const std::string &args,
                         const std::string &scratch_dir) {
    std::string out_path = scratch_dir + "/cli_stdout.txt";
    std::string err_path = scratch_dir + "/cli_stderr.txt";
    std::string command =
        "\"" + binary + "\" " + args + " > \"" + out_path + "\" 2> \"" + err_path + "\"";
    int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const std::string &path) {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

} // namespace testsupport
