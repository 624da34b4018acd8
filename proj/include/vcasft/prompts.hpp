#pragma once

#include <map>
#include <string>
#include <string_view>

#include "vcasft/errors.hpp"

namespace vcasft::prompts {

/// Replaces every "{name}" placeholder. Unknown placeholders are left
/// untouched so template typos surface in rendered output.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string> &vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                std::string name(tmpl.substr(i + 1, close - i - 1));
                auto it = vars.find(name);
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Instruction texts sent to the external chat services. Each one states the
// exact machine-readable reply format so responses parse deterministically.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCaptionGeneration =
    "You are an expert science educator. Generate a detailed caption for the attached image from a "
    "science question. Describe every labeled quantity, symbol, constant value with its unit, axis, "
    "spatial relationship, and connection shown in the figure so that the question could be answered "
    "from the caption alone. Reply with the caption text only.";

inline constexpr std::string_view kCaptionTranslation =
    "Translate the following image caption into Hindi. Preserve all numeric values, units, "
    "mathematical symbols, and scientific terminology exactly. Reply with the Hindi translation "
    "only.\n\nCaption: {caption}";

inline constexpr std::string_view kConstantReplacement =
    "Replace all constants in the question below with new random values of the same magnitude class, "
    "keeping every unit unchanged. The solution must be updated according to these new values. "
    "Produce {n} variants. Reply with a JSON array of objects, each {\"question\": ..., \"answer\": "
    "...}, and nothing else.\n\nQuestion: {question}\n\nSolution: {answer}";

inline constexpr std::string_view kParaphrase =
    "Rephrase the provided question while preserving its symbolic meaning. Produce {n} rephrasings. "
    "Reply with a JSON array of strings and nothing else.\n\nQuestion: {question}";

inline constexpr std::string_view kConceptRetrieval =
    "List the scientific concepts used in the answer below as short standalone statements, one per "
    "concept. Reply with a JSON array of strings and nothing else.\n\nAnswer: {text}";

inline constexpr std::string_view kFactChecking =
    "Ground truth: {truth}\n\nPrediction: {prediction}\n\nDoes the prediction state the same fact as "
    "the ground truth? Reply with JSON {\"correct\": true} or {\"correct\": false} and nothing else.";

inline constexpr std::string_view kMcqEvaluation =
    "A model answered a multiple-choice question.\n\nOptions:\n(a) {option_a}\n(b) {option_b}\n(c) "
    "{option_c}\n(d) {option_d}\n\nModel answer: {prediction}\n\nWhich option did the model choose? "
    "Reply with JSON {\"choice\": \"a\"|\"b\"|\"c\"|\"d\"} or {\"choice\": null} if no option was "
    "chosen, and nothing else.";

inline constexpr std::string_view kStepExtraction =
    "Extract the reasoning steps from the answer below as an ordered list. Each step is one "
    "self-contained sentence. Reply with a JSON array of strings and nothing else.\n\nAnswer: {text}";

inline constexpr std::string_view kStepEvaluation =
    "Ground-truth steps:\n{truth_steps}\n\nPredicted steps:\n{prediction_steps}\n\nFor each "
    "ground-truth step decide whether the predicted steps contain an exact match of it. Reply with a "
    "JSON array of booleans, one per ground-truth step in order, and nothing else.";

inline constexpr std::string_view kFinalAnswer =
    "Extract the final numeric answer from the text below. Reply with JSON {\"value\": <number>, "
    "\"unit\": <string>} or {\"value\": null} if there is no numeric answer, and nothing "
    "else.\n\nText: {text}";

inline std::string_view by_id(std::string_view template_id) {
    static const std::map<std::string_view, std::string_view> registry = {
        {"caption_generation", kCaptionGeneration},
        {"caption_translation", kCaptionTranslation},
        {"constant_replacement", kConstantReplacement},
        {"paraphrase", kParaphrase},
        {"concept_retrieval", kConceptRetrieval},
        {"fact_checking", kFactChecking},
        {"mcq_evaluation", kMcqEvaluation},
        {"step_extraction", kStepExtraction},
        {"step_evaluation", kStepEvaluation},
        {"final_answer", kFinalAnswer},
    };
    auto it = registry.find(template_id);
    if (it == registry.end()) {
        throw PreconditionError("unknown prompt template '" + std::string(template_id) + "'");
    }
    return it->second;
}

} // namespace vcasft::prompts
