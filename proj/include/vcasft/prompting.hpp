#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/captioning.hpp"
#include "vcasft/corpus.hpp"
#include "vcasft/errors.hpp"
#include "vcasft/prompts.hpp"

namespace vcasft {

enum class PromptMode { sft, vcasft, ablation_no_image, zero_shot };

inline const char *to_string(PromptMode m) {
    switch (m) {
        case PromptMode::sft: return "sft";
        case PromptMode::vcasft: return "vcasft";
        case PromptMode::ablation_no_image: return "ablation_no_image";
        case PromptMode::zero_shot: return "zero_shot";
    }
    return "?";
}

inline std::optional<PromptMode> parse_prompt_mode(const std::string &s) {
    for (PromptMode m : {PromptMode::sft, PromptMode::vcasft, PromptMode::ablation_no_image, PromptMode::zero_shot}) {
        if (s == to_string(m)) return m;
    }
    return std::nullopt;
}

inline bool mode_requires_caption(PromptMode m) {
    return m == PromptMode::vcasft || m == PromptMode::ablation_no_image;
}

struct PromptBundle {
    std::string record_id;
    PromptMode mode = PromptMode::sft;
    std::string rendered_text;
    bool includes_image = true;
    std::optional<std::string> target_answer; // present for training bundles
};

/// Prompt bodies are versioned template strings with {caption}, {question}
/// and {options} placeholders. The built-in "default" family fixes the exact
/// separators: caption label line, caption, blank line, question label line,
/// question. Labels are localized per language.
class TemplateRegistry {
  public:
    TemplateRegistry() {
        // label text per language
        set("default", PromptMode::sft, Language::en, "Question: {question}{options}");
        set("default", PromptMode::sft, Language::hi, "प्रश्न: {question}{options}");
        set("default", PromptMode::zero_shot, Language::en, "Question: {question}{options}");
        set("default", PromptMode::zero_shot, Language::hi, "प्रश्न: {question}{options}");
        set("default", PromptMode::vcasft, Language::en,
            "Caption: {caption}\n\nQuestion: {question}{options}");
        set("default", PromptMode::vcasft, Language::hi,
            "कैप्शन: {caption}\n\nप्रश्न: {question}{options}");
        set("default", PromptMode::ablation_no_image, Language::en,
            "Caption: {caption}\n\nQuestion: {question}{options}");
        set("default", PromptMode::ablation_no_image, Language::hi,
            "कैप्शन: {caption}\n\nप्रश्न: {question}{options}");
    }

    void set(const std::string &template_id, PromptMode mode, Language lang, std::string body) {
        templates_[key(template_id, mode, lang)] = std::move(body);
    }

    const std::string &get(const std::string &template_id, PromptMode mode, Language lang) const {
        auto it = templates_.find(key(template_id, mode, lang));
        if (it == templates_.end()) {
            throw PreconditionError("unknown prompt template '" + template_id + "' for mode " +
                                    to_string(mode) + "/" + names::of(lang));
        }
        return it->second;
    }

    /// Loads template files named "<id>.<mode>.<lang>.txt" from a directory;
    /// file content is the template body verbatim (trailing newline dropped).
    void load_directory(const std::filesystem::path &dir) {
        for (const auto &entry : std::filesystem::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            std::string stem = entry.path().stem().string();
            auto first = stem.find('.');
            auto second = stem.rfind('.');
            if (first == std::string::npos || second == first) continue;
            std::string id = stem.substr(0, first);
            auto mode = parse_prompt_mode(stem.substr(first + 1, second - first - 1));
            auto lang = names::parse<Language>(stem.substr(second + 1));
            if (!mode || !lang) continue;
            std::string body = io::read_file(entry.path());
            while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
            set(id, *mode, *lang, std::move(body));
        }
    }

  private:
    static std::string key(const std::string &id, PromptMode mode, Language lang) {
        return id + "\x1f" + to_string(mode) + "\x1f" + names::of(lang);
    }

    std::map<std::string, std::string> templates_;
};

/// MCQ options rendered as "(a)..(d)" lines appended to the question.
inline std::string render_options_block(const QaRecord &record) {
    if (!record.options) return "";
    static const char *letters[] = {"a", "b", "c", "d"};
    std::string out;
    for (std::size_t i = 0; i < record.options->size() && i < 4; ++i) {
        out += "\n(";
        out += letters[i];
        out += ") ";
        out += (*record.options)[i];
    }
    return out;
}

inline PromptBundle build_prompt(const QaRecord &record, const std::optional<Caption> &caption,
                                 PromptMode mode, const TemplateRegistry &templates,
                                 const std::string &template_id = "default") {
    if (mode_requires_caption(mode)) {
        if (!caption) {
            throw PreconditionError("mode " + std::string(to_string(mode)) +
                                    " requires a caption for record '" + record.id + "'");
        }
        if (caption->language != record.language) {
            throw PreconditionError("caption language does not match record '" + record.id + "'");
        }
    }
    std::map<std::string, std::string> vars = {
        {"question", record.question_text},
        {"options", render_options_block(record)},
        {"caption", caption ? caption->text : ""},
    };
    PromptBundle bundle;
    bundle.record_id = record.id;
    bundle.mode = mode;
    bundle.rendered_text = prompts::render(templates.get(template_id, mode, record.language), vars);
    bundle.includes_image = mode != PromptMode::ablation_no_image;
    return bundle;
}

struct BundleError {
    std::string record_id;
    std::string message;
};

struct TrainingSet {
    std::vector<PromptBundle> bundles;
    std::vector<BundleError> errors;

    bool ok() const { return errors.empty(); }
};

/// One training bundle per train-split record, stable order by record id.
/// Per-record failures are collected; surviving bundles are still produced.
inline TrainingSet build_training_set(const DatasetManifest &manifest, const CaptionStore &captions,
                                      PromptMode mode, const TemplateRegistry &templates,
                                      const std::string &template_id = "default") {
    std::vector<const QaRecord *> train;
    for (const auto &r : manifest.records) {
        if (r.split == Split::train) train.push_back(&r);
    }
    std::sort(train.begin(), train.end(),
              [](const QaRecord *a, const QaRecord *b) { return a->id < b->id; });

    TrainingSet out;
    for (const QaRecord *r : train) {
        try {
            std::optional<Caption> caption = captions.effective(r->id, r->language);
            PromptBundle b = build_prompt(*r, caption, mode, templates, template_id);
            b.target_answer = r->answer_text;
            out.bundles.push_back(std::move(b));
        } catch (const std::exception &e) {
            out.errors.push_back({r->id, e.what()});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundle JSONL handoff to the training module
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json bundle_to_json(const PromptBundle &b) {
    nlohmann::ordered_json j;
    j["record_id"] = b.record_id;
    j["mode"] = to_string(b.mode);
    j["rendered_text"] = b.rendered_text;
    j["includes_image"] = b.includes_image;
    if (b.target_answer) j["target_answer"] = *b.target_answer;
    return j;
}

inline PromptBundle bundle_from_json(const nlohmann::json &j) {
    PromptBundle b;
    b.record_id = detail::require_string(j, "record_id");
    auto mode = parse_prompt_mode(detail::require_string(j, "mode"));
    if (!mode) throw SchemaError("mode", "unknown prompt mode");
    b.mode = *mode;
    b.rendered_text = detail::require_string(j, "rendered_text");
    if (!j.contains("includes_image") || !j.at("includes_image").is_boolean()) {
        throw SchemaError("includes_image", "expected a boolean");
    }
    b.includes_image = j.at("includes_image").get<bool>();
    if (j.contains("target_answer") && !j.at("target_answer").is_null()) {
        b.target_answer = j.at("target_answer").get<std::string>();
    }
    return b;
}

inline void save_bundles(const std::vector<PromptBundle> &bundles, const std::filesystem::path &path) {
    std::string out;
    for (const auto &b : bundles) {
        out += bundle_to_json(b).dump();
        out += '\n';
    }
    io::atomic_write_file(path, out);
}

inline std::vector<PromptBundle> load_bundles(const std::filesystem::path &path) {
    std::vector<PromptBundle> bundles;
    io::for_each_line(path, [&](std::size_t line_no, const std::string &line) {
        try {
            bundles.push_back(bundle_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception &e) {
            throw Error("bundle file " + path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
        }
    });
    return bundles;
}

} // namespace vcasft
