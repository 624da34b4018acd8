#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/corpus.hpp"
#include "vcasft/gateway.hpp"
#include "vcasft/predictions.hpp"
#include "vcasft/prompts.hpp"
#include "vcasft/text.hpp"
#include "vcasft/text_metrics.hpp"

namespace vcasft::metrics {

enum class EvalSide { prediction, ground_truth };

inline const char *side_name(EvalSide s) {
    return s == EvalSide::prediction ? "prediction" : "ground_truth";
}

struct StepList {
    std::string record_id;
    EvalSide side = EvalSide::prediction;
    std::vector<std::string> steps;
    std::string transcript; // raw extractor output, kept for audits
};

struct ConceptList {
    std::string record_id;
    EvalSide side = EvalSide::prediction;
    std::vector<std::string> concepts;
    std::string transcript;
};

// ---------------------------------------------------------------------------
// Judge-assisted extraction (local fallbacks used when no gateway is given)
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json judge_json(Gateway &gateway, const std::string &user_text) {
    ChatRequest req;
    req.model_id = gateway.config().judge_model;
    req.user_text = user_text;
    ChatResponse res = gateway.complete(req);
    try {
        return nlohmann::json::parse(res.text);
    } catch (const nlohmann::json::exception &) {
        throw GatewayError("judge response is not valid JSON: " + res.text);
    }
}

inline std::vector<std::string> judge_string_array(Gateway &gateway, const std::string &user_text) {
    nlohmann::json parsed = judge_json(gateway, user_text);
    if (!parsed.is_array()) {
        throw GatewayError("judge response is not a JSON array: " + parsed.dump());
    }
    std::vector<std::string> out;
    for (const auto &element : parsed) {
        if (!element.is_string()) {
            throw GatewayError("judge array element is not a string: " + element.dump());
        }
        std::string s = text::normalize_nfc(text::trim(element.get<std::string>()));
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

/// Sentence split on '.', '!', '?', newline, and the Devanagari danda.
inline std::vector<std::string> split_sentences(const std::string &s) {
    std::vector<std::string> out;
    std::string current;
    std::size_t i = 0;
    while (i < s.size()) {
        bool boundary = false;
        std::size_t advance = 1;
        char c = s[i];
        if (c == '\n' || c == '!' || c == '?') {
            boundary = true;
        } else if (c == '.') {
            bool digit_left = i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1])) != 0;
            bool digit_right = i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])) != 0;
            boundary = !(digit_left && digit_right);
        } else if (s.compare(i, 3, "\xE0\xA5\xA4") == 0) { // U+0964 danda
            boundary = true;
            advance = 3;
        }
        if (boundary) {
            std::string t = text::trim(current);
            if (!t.empty()) out.push_back(std::move(t));
            current.clear();
            i += advance;
        } else {
            current.push_back(c);
            ++i;
        }
    }
    std::string t = text::trim(current);
    if (!t.empty()) out.push_back(std::move(t));
    return out;
}

inline std::string numbered_lines(const std::vector<std::string> &items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += '\n';
        out += std::to_string(i + 1) + ". " + items[i];
    }
    return out;
}

inline std::string dedupe_key(const std::string &s) {
    std::string key;
    for (const auto &tok : text::normalize_tokens(s)) {
        key += tok;
        key += ' ';
    }
    return key;
}

} // namespace detail

/// Judge-driven extraction of the final numeric answer. The judge's verdict
/// is authoritative; pass nullptr to use the local scan instead.
inline std::optional<text::NumericAnswer> extract_final_numeric(Gateway *gateway,
                                                                const std::string &answer_text) {
    if (gateway == nullptr) {
        return text::extract_final_numeric_local(answer_text);
    }
    std::string user = prompts::render(prompts::by_id("final_answer"), {{"text", answer_text}});
    nlohmann::json parsed = detail::judge_json(*gateway, user);
    if (!parsed.is_object() || !parsed.contains("value")) {
        throw GatewayError("final-answer judge response lacks 'value': " + parsed.dump());
    }
    const auto &value = parsed["value"];
    if (value.is_null()) return std::nullopt;
    text::NumericAnswer out;
    if (value.is_number()) {
        out.value = value.get<double>();
    } else if (value.is_string()) {
        try {
            out.value = std::stod(value.get<std::string>());
        } catch (const std::exception &) {
            throw GatewayError("final-answer judge value is not numeric: " + value.dump());
        }
    } else {
        throw GatewayError("final-answer judge value is not numeric: " + value.dump());
    }
    if (parsed.contains("unit") && parsed["unit"].is_string()) {
        out.unit = text::normalize_nfc(parsed["unit"].get<std::string>());
    }
    return out;
}

inline StepList extract_steps(Gateway *gateway, const std::string &record_id, EvalSide side,
                              const std::string &answer_text) {
    StepList out;
    out.record_id = record_id;
    out.side = side;
    if (gateway == nullptr) {
        out.steps = detail::split_sentences(answer_text);
        out.transcript = "local sentence split";
        return out;
    }
    std::string user = prompts::render(prompts::by_id("step_extraction"), {{"text", answer_text}});
    out.steps = detail::judge_string_array(*gateway, user);
    out.transcript = user;
    return out;
}

inline ConceptList extract_concepts(Gateway *gateway, const std::string &record_id, EvalSide side,
                                    const std::string &answer_text) {
    ConceptList out;
    out.record_id = record_id;
    out.side = side;
    std::vector<std::string> raw;
    if (gateway == nullptr) {
        raw = detail::split_sentences(answer_text);
        out.transcript = "local sentence split";
    } else {
        std::string user = prompts::render(prompts::by_id("concept_retrieval"), {{"text", answer_text}});
        raw = detail::judge_string_array(*gateway, user);
        out.transcript = user;
    }
    std::set<std::string> seen;
    for (auto &c : raw) {
        if (seen.insert(detail::dedupe_key(c)).second) {
            out.concepts.push_back(std::move(c));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Component scores
// ---------------------------------------------------------------------------

/// Binary final-answer accuracy within a relative tolerance band. A zero
/// ground truth switches to an absolute tolerance.
inline double score_faa(double pred, double truth, double rel_tol = 0.02, double abs_tol = 1e-6) {
    if (!std::isfinite(pred) || !std::isfinite(truth)) {
        throw PreconditionError("score_faa requires finite inputs");
    }
    if (rel_tol < 0.02 || rel_tol > 0.03) {
        throw PreconditionError("score_faa rel_tol must be in [0.02, 0.03]");
    }
    if (truth == 0.0) {
        return std::abs(pred) <= abs_tol ? 1.0 : 0.0;
    }
    return std::abs(pred - truth) <= rel_tol * std::abs(truth) ? 1.0 : 0.0;
}

struct IssResult {
    double score = 0.0;
    std::size_t matched = 0;
    std::size_t total = 0;
};

/// Judge marks each ground-truth step matched or not; the score is the
/// matched fraction of ground-truth steps.
inline IssResult score_iss(Gateway &gateway, const StepList &pred_steps, const StepList &truth_steps) {
    if (truth_steps.steps.empty()) {
        throw PreconditionError("score_iss requires non-empty ground-truth steps");
    }
    std::string user = prompts::render(prompts::by_id("step_evaluation"),
                                       {{"truth_steps", detail::numbered_lines(truth_steps.steps)},
                                        {"prediction_steps", detail::numbered_lines(pred_steps.steps)}});
    nlohmann::json parsed = detail::judge_json(gateway, user);
    if (!parsed.is_array() || parsed.size() != truth_steps.steps.size()) {
        throw GatewayError("step-evaluation judge must return one boolean per ground-truth step, got: " +
                           parsed.dump());
    }
    IssResult r;
    r.total = truth_steps.steps.size();
    for (const auto &element : parsed) {
        if (!element.is_boolean()) {
            throw GatewayError("step-evaluation judge array element is not a boolean: " + element.dump());
        }
        if (element.get<bool>()) ++r.matched;
    }
    r.score = static_cast<double>(r.matched) / static_cast<double>(r.total);
    return r;
}

struct CssResult {
    double score = 0.0;
    std::vector<std::string> flags;
};

/// Greedy truth-side best match: each ground-truth concept takes its highest
/// cosine against the prediction concepts; the score is the mean, clamped to
/// [0,1]. Empty sides score 0 with an explanatory flag.
inline CssResult score_css(Gateway &gateway, const ConceptList &pred, const ConceptList &truth) {
    CssResult r;
    if (pred.concepts.empty() && truth.concepts.empty()) {
        r.flags.push_back("no-concepts");
        return r;
    }
    if (pred.concepts.empty()) {
        r.flags.push_back("empty-prediction-concepts");
        return r;
    }
    if (truth.concepts.empty()) {
        r.flags.push_back("empty-truth-concepts");
        return r;
    }
    std::vector<std::string> all = truth.concepts;
    all.insert(all.end(), pred.concepts.begin(), pred.concepts.end());
    auto vectors = gateway.embed(all);
    double sum = 0.0;
    for (std::size_t t = 0; t < truth.concepts.size(); ++t) {
        double best = -1.0;
        for (std::size_t p = 0; p < pred.concepts.size(); ++p) {
            best = std::max(best, Gateway::cosine(vectors[t], vectors[truth.concepts.size() + p]));
        }
        sum += best;
    }
    r.score = std::clamp(sum / static_cast<double>(truth.concepts.size()), 0.0, 1.0);
    return r;
}

inline double composite_numerical(double s_faa, double s_iss, double s_css) {
    for (double v : {s_faa, s_iss, s_css}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw PreconditionError("composite_numerical inputs must be in [0,1]");
        }
    }
    return 0.5 * s_faa + 0.15 * s_iss + 0.35 * s_css;
}

inline double composite_theoretical(double s_iss, double s_css) {
    for (double v : {s_iss, s_css}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw PreconditionError("composite_theoretical inputs must be in [0,1]");
        }
    }
    return 0.2 * s_iss + 0.8 * s_css;
}

/// 1 iff every content unigram of the ground truth appears among the
/// prediction's tokens. Containment is one-directional.
inline double score_factual(const std::string &pred_text, const std::string &truth_text) {
    if (text::trim(truth_text).empty()) {
        throw PreconditionError("score_factual requires non-empty ground truth");
    }
    auto truth_content = text::content_tokens(text::normalize_tokens(truth_text));
    if (truth_content.empty()) {
        throw PreconditionError("score_factual ground truth has no tokens after normalization");
    }
    auto pred_tokens = text::normalize_tokens(pred_text);
    std::set<std::string> pred_set(pred_tokens.begin(), pred_tokens.end());
    for (const auto &tok : truth_content) {
        if (pred_set.find(tok) == pred_set.end()) return 0.0;
    }
    return 1.0;
}

inline double score_factual_judge(Gateway &gateway, const std::string &pred_text,
                                  const std::string &truth_text) {
    std::string user = prompts::render(prompts::by_id("fact_checking"),
                                       {{"truth", truth_text}, {"prediction", pred_text}});
    nlohmann::json parsed = detail::judge_json(gateway, user);
    if (!parsed.is_object() || !parsed.contains("correct") || !parsed["correct"].is_boolean()) {
        throw GatewayError("fact-checking judge response lacks boolean 'correct': " + parsed.dump());
    }
    return parsed["correct"].get<bool>() ? 1.0 : 0.0;
}

struct McqResult {
    double score = 0.0;
    std::optional<int> choice;
    bool unparseable = false;
};

namespace detail {

/// Contiguous subsequence test over normalized tokens.
inline bool contains_token_run(const std::vector<std::string> &haystack,
                               const std::vector<std::string> &needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool all = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (haystack[i + j] != needle[j]) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

/// Finds an option letter in free-form prediction text. Bracketed or
/// keyword-anchored letters count anywhere; a bare letter counts only when it
/// is the entire answer.
inline std::optional<int> letter_from_prediction(const std::string &pred_text) {
    std::string s = text::to_lower(text::normalize_nfc(pred_text));
    std::set<int> found;
    for (int k = 0; k < 4; ++k) {
        char letter = static_cast<char>('a' + k);
        std::vector<std::string> patterns = {
            std::string("(") + letter + ")",
            std::string("[") + letter + "]",
            std::string("option ") + letter,
            std::string("answer is ") + letter,
            std::string("answer: ") + letter,
        };
        for (const auto &p : patterns) {
            std::size_t pos = s.find(p);
            while (pos != std::string::npos) {
                std::size_t end = pos + p.size();
                bool terminated = end >= s.size() ||
                                  std::isalnum(static_cast<unsigned char>(s[end])) == 0;
                if (terminated) {
                    found.insert(k);
                    break;
                }
                pos = s.find(p, pos + 1);
            }
        }
    }
    if (found.size() == 1) return *found.begin();
    if (found.size() > 1) return std::nullopt;
    auto tokens = text::normalize_tokens(pred_text);
    if (tokens.size() == 1 && tokens[0].size() == 1 && tokens[0][0] >= 'a' && tokens[0][0] <= 'd') {
        return tokens[0][0] - 'a';
    }
    return std::nullopt;
}

} // namespace detail

/// Local choice matcher: option letters first, then full option-text
/// containment. Ambiguous or absent choices score 0 and are flagged.
inline McqResult score_mcq(const std::string &pred_text, int correct_option,
                           const std::vector<std::string> &options) {
    if (options.size() != 4) {
        throw PreconditionError("score_mcq requires exactly 4 options");
    }
    if (correct_option < 0 || correct_option > 3) {
        throw PreconditionError("score_mcq correct_option must be in [0,3]");
    }
    McqResult r;
    r.choice = detail::letter_from_prediction(pred_text);
    if (!r.choice) {
        auto pred_tokens = text::normalize_tokens(pred_text);
        std::vector<int> hits;
        for (int k = 0; k < 4; ++k) {
            if (detail::contains_token_run(pred_tokens, text::normalize_tokens(options[k]))) {
                hits.push_back(k);
            }
        }
        if (hits.size() == 1) r.choice = hits.front();
    }
    if (!r.choice) {
        r.unparseable = true;
        return r;
    }
    r.score = *r.choice == correct_option ? 1.0 : 0.0;
    return r;
}

inline McqResult score_mcq_judge(Gateway &gateway, const std::string &pred_text, int correct_option,
                                 const std::vector<std::string> &options) {
    if (options.size() != 4) {
        throw PreconditionError("score_mcq_judge requires exactly 4 options");
    }
    if (correct_option < 0 || correct_option > 3) {
        throw PreconditionError("score_mcq_judge correct_option must be in [0,3]");
    }
    std::string user = prompts::render(prompts::by_id("mcq_evaluation"),
                                       {{"option_a", options[0]},
                                        {"option_b", options[1]},
                                        {"option_c", options[2]},
                                        {"option_d", options[3]},
                                        {"prediction", pred_text}});
    nlohmann::json parsed = detail::judge_json(gateway, user);
    if (!parsed.is_object() || !parsed.contains("choice")) {
        throw GatewayError("mcq judge response lacks 'choice': " + parsed.dump());
    }
    McqResult r;
    const auto &choice = parsed["choice"];
    if (choice.is_null()) {
        r.unparseable = true;
        return r;
    }
    if (!choice.is_string()) {
        throw GatewayError("mcq judge 'choice' must be a letter or null: " + choice.dump());
    }
    std::string s = text::to_lower(choice.get<std::string>());
    if (s.size() != 1 || s[0] < 'a' || s[0] > 'd') {
        throw GatewayError("mcq judge 'choice' out of range: " + choice.dump());
    }
    r.choice = s[0] - 'a';
    r.score = *r.choice == correct_option ? 1.0 : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// ScienceQA-style grouped accuracy
// ---------------------------------------------------------------------------

struct ScienceQaRow {
    bool correct = false;
    std::optional<Subject> subject;
    std::optional<GradeBand> grade_band;
};

struct GroupAccuracy {
    std::string dimension; // overall | subject | grade_band
    std::string value;
    std::size_t total = 0;
    std::size_t correct = 0;
    double percent = 0.0;
};

inline std::string format_percent(double percent) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", percent);
    return buf;
}

/// Overall plus per-subject and per-grade accuracy percentages. Rows missing
/// a dimension fall into an "unspecified" bucket for that dimension.
inline std::vector<GroupAccuracy> scienceqa_accuracy(const std::vector<ScienceQaRow> &rows) {
    if (rows.empty()) {
        throw PreconditionError("scienceqa_accuracy requires at least one row");
    }
    auto make = [](std::string dimension, std::string value) {
        GroupAccuracy g;
        g.dimension = std::move(dimension);
        g.value = std::move(value);
        return g;
    };
    std::vector<GroupAccuracy> out;
    out.push_back(make("overall", "all"));
    std::map<std::string, std::size_t> index;
    auto bump = [&](const std::string &dimension, const std::string &value, bool correct) {
        std::string key = dimension + "/" + value;
        auto it = index.find(key);
        if (it == index.end()) {
            index[key] = out.size();
            out.push_back(make(dimension, value));
            it = index.find(key);
        }
        auto &g = out[it->second];
        ++g.total;
        if (correct) ++g.correct;
    };
    for (const auto &row : rows) {
        ++out[0].total;
        if (row.correct) ++out[0].correct;
        bump("subject", row.subject ? names::of(*row.subject) : "unspecified", row.correct);
        bump("grade_band", row.grade_band ? names::of(*row.grade_band) : "unspecified", row.correct);
    }
    std::stable_sort(out.begin() + 1, out.end(), [](const GroupAccuracy &a, const GroupAccuracy &b) {
        if (a.dimension != b.dimension) return a.dimension > b.dimension; // subject before grade_band
        return a.value < b.value;
    });
    for (auto &g : out) {
        g.percent = 100.0 * static_cast<double>(g.correct) / static_cast<double>(g.total);
    }
    return out;
}

// ---------------------------------------------------------------------------
// BERTScore-style greedy embedding F1 (descriptive only)
// ---------------------------------------------------------------------------

inline PrfScore bertscore(Gateway &gateway, const std::string &pred_text, const std::string &truth_text) {
    auto pred_tokens = text::normalize_tokens(pred_text);
    auto truth_tokens = text::normalize_tokens(truth_text);
    PrfScore s;
    if (pred_tokens.empty() || truth_tokens.empty()) return s;
    std::vector<std::string> all = pred_tokens;
    all.insert(all.end(), truth_tokens.begin(), truth_tokens.end());
    auto vectors = gateway.embed(all);
    auto greedy = [&](std::size_t from, std::size_t from_n, std::size_t to, std::size_t to_n) {
        double sum = 0.0;
        for (std::size_t i = 0; i < from_n; ++i) {
            double best = -1.0;
            for (std::size_t j = 0; j < to_n; ++j) {
                best = std::max(best, Gateway::cosine(vectors[from + i], vectors[to + j]));
            }
            sum += best;
        }
        return std::clamp(sum / static_cast<double>(from_n), 0.0, 1.0);
    };
    s.precision = greedy(0, pred_tokens.size(), pred_tokens.size(), truth_tokens.size());
    s.recall = greedy(pred_tokens.size(), truth_tokens.size(), 0, pred_tokens.size());
    s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// Whole-run evaluation
// ---------------------------------------------------------------------------

struct MetricRow {
    std::string record_id;
    QType qtype = QType::factual;
    std::optional<double> s_faa;
    std::optional<double> s_iss;
    std::optional<double> s_css;
    std::optional<double> composite;
    std::optional<double> factual;
    std::optional<double> mcq_correct;
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougeL = 0.0;
    double meteor_score = 0.0;
    std::vector<std::string> flags;

    /// The score that feeds the per-group aggregates for this question type.
    double primary() const {
        switch (qtype) {
            case QType::numerical:
            case QType::theoretical: return composite.value_or(0.0);
            case QType::conceptual: return s_css.value_or(0.0);
            case QType::factual: return factual.value_or(0.0);
            case QType::mcq: return mcq_correct.value_or(0.0);
        }
        return 0.0;
    }
};

struct MetricAggregate {
    std::string dimension; // overall | qtype | subject | grade_band
    std::string value;
    std::size_t count = 0;
    std::map<std::string, double> means;
};

struct MetricReport {
    std::string run_id;
    std::string model_id;
    std::string mode;
    double rel_tol = 0.02;
    std::vector<MetricRow> rows;
    std::vector<MetricAggregate> aggregates;
    double bleu4 = 0.0;
    std::optional<double> bertscore_f1;
};

struct EvaluateOptions {
    std::string run_id = "run";
    std::string model_id = "model";
    std::string mode = "vcasft";
    double rel_tol = 0.02;
    bool use_judge = true;
    bool compute_bertscore = false;
};

namespace detail {

inline void add_mean(std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> &acc,
                     const std::string &group, const std::string &key, double v) {
    auto &slot = acc[group][key];
    slot.first += v;
    slot.second += 1;
}

} // namespace detail

inline std::vector<MetricAggregate> aggregate_rows(const std::vector<MetricRow> &rows,
                                                   const DatasetManifest &manifest) {
    // group key: "<dimension>/<value>", kept in a deterministic emit order
    std::vector<std::string> order;
    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> acc;
    std::map<std::string, std::size_t> counts;
    auto touch = [&](const std::string &group) {
        if (counts.find(group) == counts.end()) {
            order.push_back(group);
            counts[group] = 0;
        }
    };
    auto add_row = [&](const std::string &group, const MetricRow &row) {
        touch(group);
        ++counts[group];
        detail::add_mean(acc, group, "primary", row.primary());
        detail::add_mean(acc, group, "rouge_1", row.rouge1);
        detail::add_mean(acc, group, "rouge_2", row.rouge2);
        detail::add_mean(acc, group, "rouge_l", row.rougeL);
        detail::add_mean(acc, group, "meteor", row.meteor_score);
        if (row.s_faa) detail::add_mean(acc, group, "s_faa", *row.s_faa);
        if (row.s_iss) detail::add_mean(acc, group, "s_iss", *row.s_iss);
        if (row.s_css) detail::add_mean(acc, group, "s_css", *row.s_css);
        if (row.composite) detail::add_mean(acc, group, "composite", *row.composite);
        if (row.factual) detail::add_mean(acc, group, "factual", *row.factual);
        if (row.mcq_correct) detail::add_mean(acc, group, "mcq_correct", *row.mcq_correct);
    };
    touch("overall/all");
    for (const auto &row : rows) {
        add_row("overall/all", row);
        add_row(std::string("qtype/") + names::of(row.qtype), row);
        const QaRecord *record = manifest.find(row.record_id);
        if (record != nullptr) {
            add_row("subject/" + std::string(record->subject ? names::of(*record->subject) : "unspecified"),
                    row);
            add_row("grade_band/" +
                        std::string(record->grade_band ? names::of(*record->grade_band) : "unspecified"),
                    row);
        }
    }
    std::stable_sort(order.begin(), order.end(), [](const std::string &a, const std::string &b) {
        auto rank = [](const std::string &s) {
            if (s.rfind("overall/", 0) == 0) return 0;
            if (s.rfind("qtype/", 0) == 0) return 1;
            if (s.rfind("subject/", 0) == 0) return 2;
            return 3;
        };
        int ra = rank(a);
        int rb = rank(b);
        if (ra != rb) return ra < rb;
        return a < b;
    });
    std::vector<MetricAggregate> out;
    for (const auto &group : order) {
        MetricAggregate agg;
        std::size_t slash = group.find('/');
        agg.dimension = group.substr(0, slash);
        agg.value = group.substr(slash + 1);
        agg.count = counts[group];
        for (const auto &[key, sum_count] : acc[group]) {
            agg.means[key] = sum_count.first / static_cast<double>(sum_count.second);
        }
        out.push_back(std::move(agg));
    }
    return out;
}

/// Scores one prediction per test record, routing by question type:
/// numerical gets FAA+ISS+CSS and the numerical composite, theoretical gets
/// ISS+CSS and its composite, conceptual gets CSS, factual gets containment,
/// mcq gets accuracy. ROUGE and METEOR are computed for every row.
inline MetricReport evaluate_run(Gateway &gateway, const DatasetManifest &manifest,
                                 const std::vector<Prediction> &predictions,
                                 const EvaluateOptions &options = {}) {
    std::map<std::string, const Prediction *> by_id;
    for (const auto &p : predictions) {
        if (manifest.find(p.record_id) == nullptr) {
            throw Error("prediction references unknown record '" + p.record_id + "'");
        }
        if (!by_id.emplace(p.record_id, &p).second) {
            throw Error("duplicate prediction for record '" + p.record_id + "'");
        }
    }
    std::vector<const QaRecord *> test_records;
    for (const auto &r : manifest.records) {
        if (r.split != Split::test) continue;
        if (by_id.find(r.id) == by_id.end()) {
            throw Error("missing prediction for test record '" + r.id + "'");
        }
        test_records.push_back(&r);
    }
    if (test_records.empty()) {
        throw PreconditionError("evaluate_run: manifest has no test records");
    }
    std::sort(test_records.begin(), test_records.end(),
              [](const QaRecord *a, const QaRecord *b) { return a->id < b->id; });

    Gateway *judge = options.use_judge ? &gateway : nullptr;
    std::vector<MetricRow> rows(test_records.size());
    std::vector<PrfScore> bert(test_records.size());
    gateway.parallel_for(test_records.size(), [&](std::size_t i) {
        const QaRecord &record = *test_records[i];
        const Prediction &pred = *by_id.at(record.id);
        MetricRow row;
        row.record_id = record.id;
        row.qtype = record.qtype;

        auto needs_steps = record.qtype == QType::numerical || record.qtype == QType::theoretical;
        if (needs_steps) {
            StepList truth_steps =
                extract_steps(judge, record.id, EvalSide::ground_truth, record.answer_text);
            StepList pred_steps = extract_steps(judge, record.id, EvalSide::prediction, pred.text);
            if (truth_steps.steps.empty()) {
                row.s_iss = 0.0;
                row.flags.push_back("empty-truth-steps");
            } else {
                row.s_iss = score_iss(gateway, pred_steps, truth_steps).score;
            }
        }
        auto needs_concepts = record.qtype == QType::numerical ||
                              record.qtype == QType::theoretical || record.qtype == QType::conceptual;
        if (needs_concepts) {
            ConceptList truth_concepts =
                extract_concepts(judge, record.id, EvalSide::ground_truth, record.answer_text);
            ConceptList pred_concepts =
                extract_concepts(judge, record.id, EvalSide::prediction, pred.text);
            CssResult css = score_css(gateway, pred_concepts, truth_concepts);
            row.s_css = css.score;
            row.flags.insert(row.flags.end(), css.flags.begin(), css.flags.end());
        }
        switch (record.qtype) {
            case QType::numerical: {
                double truth_value = 0.0;
                std::string truth_unit;
                if (record.final_numeric) {
                    truth_value = record.final_numeric->value;
                    truth_unit = record.final_numeric->unit;
                } else if (auto local = text::extract_final_numeric_local(record.answer_text)) {
                    truth_value = local->value;
                    truth_unit = local->unit;
                } else {
                    throw Error("numerical record '" + record.id + "' has no ground-truth final answer");
                }
                (void)truth_unit;
                auto predicted = extract_final_numeric(judge, pred.text);
                if (predicted) {
                    row.s_faa = score_faa(predicted->value, truth_value, options.rel_tol);
                } else {
                    row.s_faa = 0.0;
                    row.flags.push_back("no-final-answer");
                }
                row.composite = composite_numerical(*row.s_faa, row.s_iss.value_or(0.0),
                                                    row.s_css.value_or(0.0));
                break;
            }
            case QType::theoretical:
                row.composite = composite_theoretical(row.s_iss.value_or(0.0), row.s_css.value_or(0.0));
                break;
            case QType::conceptual:
                break;
            case QType::factual:
                row.factual = score_factual(pred.text, record.answer_text);
                break;
            case QType::mcq: {
                McqResult r = judge != nullptr
                                  ? score_mcq_judge(*judge, pred.text, *record.correct_option,
                                                    *record.options)
                                  : score_mcq(pred.text, *record.correct_option, *record.options);
                row.mcq_correct = r.score;
                if (r.unparseable) row.flags.push_back("mcq-unparseable");
                break;
            }
        }
        row.rouge1 = rouge_1(pred.text, record.answer_text).f1;
        row.rouge2 = rouge_2(pred.text, record.answer_text).f1;
        row.rougeL = rouge_l(pred.text, record.answer_text).f1;
        row.meteor_score = meteor(pred.text, record.answer_text, record.language).score;
        if (options.compute_bertscore) {
            bert[i] = bertscore(gateway, pred.text, record.answer_text);
        }
        rows[i] = std::move(row);
    });

    MetricReport report;
    report.run_id = options.run_id;
    report.model_id = options.model_id;
    report.mode = options.mode;
    report.rel_tol = options.rel_tol;
    report.rows = std::move(rows);
    report.aggregates = aggregate_rows(report.rows, manifest);
    std::vector<std::vector<std::string>> pred_tokens;
    std::vector<std::vector<std::string>> truth_tokens;
    for (const QaRecord *record : test_records) {
        pred_tokens.push_back(text::normalize_tokens(by_id.at(record->id)->text));
        truth_tokens.push_back(text::normalize_tokens(record->answer_text));
    }
    report.bleu4 = corpus_bleu4(pred_tokens, truth_tokens).score;
    if (options.compute_bertscore) {
        double sum = 0.0;
        for (const auto &b : bert) sum += b.f1;
        report.bertscore_f1 = sum / static_cast<double>(bert.size());
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json report_to_json(const MetricReport &report) {
    nlohmann::ordered_json j;
    j["run_id"] = report.run_id;
    j["model_id"] = report.model_id;
    j["mode"] = report.mode;
    j["rel_tol"] = report.rel_tol;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto &row : report.rows) {
        nlohmann::ordered_json r;
        r["record_id"] = row.record_id;
        r["qtype"] = names::of(row.qtype);
        if (row.s_faa) r["s_faa"] = *row.s_faa;
        if (row.s_iss) r["s_iss"] = *row.s_iss;
        if (row.s_css) r["s_css"] = *row.s_css;
        if (row.composite) r["composite"] = *row.composite;
        if (row.factual) r["factual"] = *row.factual;
        if (row.mcq_correct) r["mcq_correct"] = *row.mcq_correct;
        r["rouge_1"] = row.rouge1;
        r["rouge_2"] = row.rouge2;
        r["rouge_l"] = row.rougeL;
        r["meteor"] = row.meteor_score;
        if (!row.flags.empty()) r["flags"] = row.flags;
        j["rows"].push_back(std::move(r));
    }
    j["aggregates"] = nlohmann::ordered_json::array();
    for (const auto &agg : report.aggregates) {
        nlohmann::ordered_json a;
        a["dimension"] = agg.dimension;
        a["value"] = agg.value;
        a["count"] = agg.count;
        a["means"] = nlohmann::ordered_json::object();
        for (const auto &[key, mean] : agg.means) {
            a["means"][key] = mean;
        }
        j["aggregates"].push_back(std::move(a));
    }
    j["bleu_4"] = report.bleu4;
    if (report.bertscore_f1) j["bertscore_f1"] = *report.bertscore_f1;
    return j;
}

inline MetricReport report_from_json(const nlohmann::json &j) {
    MetricReport report;
    report.run_id = j.value("run_id", std::string("run"));
    report.model_id = j.value("model_id", std::string("model"));
    report.mode = j.value("mode", std::string(""));
    report.rel_tol = j.value("rel_tol", 0.02);
    for (const auto &r : j.at("rows")) {
        MetricRow row;
        row.record_id = vcasft::detail::require_string(r, "record_id");
        row.qtype = vcasft::detail::require_enum<QType>(r, "qtype");
        if (r.contains("s_faa")) row.s_faa = r["s_faa"].get<double>();
        if (r.contains("s_iss")) row.s_iss = r["s_iss"].get<double>();
        if (r.contains("s_css")) row.s_css = r["s_css"].get<double>();
        if (r.contains("composite")) row.composite = r["composite"].get<double>();
        if (r.contains("factual")) row.factual = r["factual"].get<double>();
        if (r.contains("mcq_correct")) row.mcq_correct = r["mcq_correct"].get<double>();
        row.rouge1 = r.value("rouge_1", 0.0);
        row.rouge2 = r.value("rouge_2", 0.0);
        row.rougeL = r.value("rouge_l", 0.0);
        row.meteor_score = r.value("meteor", 0.0);
        if (r.contains("flags")) row.flags = r["flags"].get<std::vector<std::string>>();
        report.rows.push_back(std::move(row));
    }
    for (const auto &a : j.at("aggregates")) {
        MetricAggregate agg;
        agg.dimension = vcasft::detail::require_string(a, "dimension");
        agg.value = vcasft::detail::require_string(a, "value");
        agg.count = a.at("count").get<std::size_t>();
        for (const auto &[key, mean] : a.at("means").items()) {
            agg.means[key] = mean.get<double>();
        }
        report.aggregates.push_back(std::move(agg));
    }
    report.bleu4 = j.value("bleu_4", 0.0);
    if (j.contains("bertscore_f1")) report.bertscore_f1 = j["bertscore_f1"].get<double>();
    return report;
}

inline void save_report(const MetricReport &report, const std::filesystem::path &path) {
    io::atomic_write_file(path, report_to_json(report).dump(2) + "\n");
}

inline MetricReport load_report(const std::filesystem::path &path) {
    return report_from_json(nlohmann::json::parse(io::read_file(path)));
}

} // namespace vcasft::metrics
