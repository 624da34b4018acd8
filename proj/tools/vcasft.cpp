#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vcasft/http_transport.hpp"
#include "vcasft/vcasft.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string mode;
    std::string profile;
    std::string output;
    std::string run_id;
};

void add_common(CLI::App *cmd, CommonFlags &flags) {
    cmd->add_option("--config", flags.config_path, "pipeline config JSON")->required();
    cmd->add_option("--mode", flags.mode, "prompt mode override (sft|vcasft|ablation_no_image|zero_shot)");
    cmd->add_option("--profile", flags.profile, "gateway profile override (live|record|replay)");
    cmd->add_option("--output", flags.output, "output root override");
    cmd->add_option("--run-id", flags.run_id, "run id override");
}

vcasft::PipelineConfig load_config(const CommonFlags &flags) {
    vcasft::PipelineConfig config = vcasft::load_pipeline_config(flags.config_path);
    if (!flags.mode.empty()) {
        auto mode = vcasft::parse_prompt_mode(flags.mode);
        if (!mode) throw vcasft::Error("unknown prompt mode '" + flags.mode + "'");
        config.mode = *mode;
    }
    if (!flags.profile.empty()) {
        auto profile = vcasft::parse_profile(flags.profile);
        if (!profile) throw vcasft::Error("unknown gateway profile '" + flags.profile + "'");
        config.profile = *profile;
    }
    if (!flags.output.empty()) config.paths.output = flags.output;
    if (!flags.run_id.empty()) config.run_id = flags.run_id;
    return config;
}

vcasft::Gateway make_gateway(const vcasft::PipelineConfig &config) {
    std::shared_ptr<vcasft::Transport> transport;
    if (config.profile != vcasft::GatewayProfile::replay) {
        transport = std::make_shared<vcasft::HttpTransport>();
    }
    return vcasft::Gateway(vcasft::gateway_config(config), std::move(transport));
}

void announce(const std::string &stage, bool ran) {
    std::cout << stage << ": " << (ran ? "done" : "up-to-date, skipped") << "\n";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Caption-aware fine-tuning and evaluation pipeline for scientific VQA"};
    app.require_subcommand(1);

    CommonFlags ingest_flags;
    CommonFlags caption_flags;
    CommonFlags translate_flags;
    CommonFlags augment_flags;
    CommonFlags prompts_flags;
    CommonFlags train_flags;
    CommonFlags infer_flags;
    CommonFlags evaluate_flags;
    CommonFlags report_flags;
    std::vector<std::string> compare_paths;

    auto *ingest = app.add_subcommand("ingest", "load, validate and split the corpus");
    add_common(ingest, ingest_flags);
    ingest->callback([&] {
        auto config = load_config(ingest_flags);
        announce("ingest", vcasft::stage_ingest(config));
    });

    auto *caption = app.add_subcommand("caption", "generate English captions for every record");
    add_common(caption, caption_flags);
    caption->callback([&] {
        auto config = load_config(caption_flags);
        auto gateway = make_gateway(config);
        announce("caption", vcasft::stage_caption(config, gateway));
    });

    auto *translate = app.add_subcommand("translate", "translate captions for Hindi records");
    add_common(translate, translate_flags);
    translate->callback([&] {
        auto config = load_config(translate_flags);
        auto gateway = make_gateway(config);
        announce("translate", vcasft::stage_translate(config, gateway));
    });

    auto *augment = app.add_subcommand("augment", "expand train records via constant replacement and paraphrase");
    add_common(augment, augment_flags);
    augment->callback([&] {
        auto config = load_config(augment_flags);
        if (!config.augmentation.enabled) {
            std::cout << "augment: disabled in config, skipped\n";
            return;
        }
        auto gateway = make_gateway(config);
        announce("augment", vcasft::stage_augment(config, gateway));
    });

    auto *prompts = app.add_subcommand("prompts", "render instruction bundles for the configured mode");
    add_common(prompts, prompts_flags);
    prompts->callback([&] {
        auto config = load_config(prompts_flags);
        announce("prompts", vcasft::stage_prompts(config));
    });

    auto *train = app.add_subcommand("train", "fine-tune the configured backend on the bundles");
    add_common(train, train_flags);
    train->callback([&] {
        auto config = load_config(train_flags);
        if (config.mode == vcasft::PromptMode::zero_shot) {
            std::cout << "train: zero-shot mode needs no training, skipped\n";
            return;
        }
        announce("train", vcasft::stage_train(config));
    });

    auto *infer = app.add_subcommand("infer", "predict answers for the test split");
    add_common(infer, infer_flags);
    infer->callback([&] {
        auto config = load_config(infer_flags);
        announce("infer", vcasft::stage_infer(config));
    });

    auto *evaluate = app.add_subcommand("evaluate", "score predictions into a metric report");
    add_common(evaluate, evaluate_flags);
    evaluate->callback([&] {
        auto config = load_config(evaluate_flags);
        auto gateway = make_gateway(config);
        announce("evaluate", vcasft::stage_evaluate(config, gateway));
    });

    auto *report = app.add_subcommand("report", "render CSV/markdown tables from the metric report");
    add_common(report, report_flags);
    report->add_option("--compare", compare_paths, "extra report JSON files for the comparison table");
    report->callback([&] {
        auto config = load_config(report_flags);
        for (const auto &p : compare_paths) config.compare_reports.emplace_back(p);
        announce("report", vcasft::stage_report(config));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        std::cerr << app.help() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
