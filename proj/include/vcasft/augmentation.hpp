#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/corpus.hpp"
#include "vcasft/gateway.hpp"
#include "vcasft/prompts.hpp"
#include "vcasft/text.hpp"

namespace vcasft {

struct AugmentationCandidate {
    std::string parent_id;
    AugMethod method = AugMethod::Pa;
    std::string question_text;
    std::string answer_text;
    double diversity_cosine = 0.0;
    bool accepted = false;

    friend bool operator==(const AugmentationCandidate &, const AugmentationCandidate &) = default;
};

struct CandidateBatch {
    std::vector<AugmentationCandidate> candidates;
    std::vector<std::string> warnings; // malformed response elements, dropped
};

namespace detail {

inline std::string join_lines(const std::vector<std::string> &items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += '\n';
        out += "- " + items[i];
    }
    return out;
}

} // namespace detail

/// Asks the augmentation model for up to n candidates. CR responses must
/// carry an updated solution; elements without one are dropped with a
/// warning. Pa candidates reuse the parent's answer unchanged.
inline CandidateBatch generate_candidates(Gateway &gateway, const QaRecord &record, AugMethod method,
                                          int n) {
    if (n < 1 || n > 10) {
        throw PreconditionError("candidate count must be in [1,10], got " + std::to_string(n));
    }
    if (method == AugMethod::CR && record.qtype != QType::numerical) {
        throw PreconditionError("constant replacement applies only to numerical records");
    }

    ChatRequest req;
    req.model_id = gateway.config().judge_model;
    std::map<std::string, std::string> vars = {{"question", record.question_text},
                                               {"answer", record.answer_text},
                                               {"n", std::to_string(n)}};
    req.user_text = prompts::render(
        prompts::by_id(method == AugMethod::CR ? "constant_replacement" : "paraphrase"), vars);
    ChatResponse res = gateway.complete(req);

    CandidateBatch batch;
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res.text);
    } catch (const nlohmann::json::exception &) {
        throw GatewayError("augmentation response for record '" + record.id + "' is not valid JSON");
    }
    if (!parsed.is_array()) {
        throw GatewayError("augmentation response for record '" + record.id + "' is not a JSON array");
    }
    for (const auto &element : parsed) {
        AugmentationCandidate c;
        c.parent_id = record.id;
        c.method = method;
        if (method == AugMethod::Pa) {
            if (element.is_string()) {
                c.question_text = text::normalize_nfc(element.get<std::string>());
            } else if (element.is_object() && element.contains("question") && element["question"].is_string()) {
                c.question_text = text::normalize_nfc(element["question"].get<std::string>());
            } else {
                batch.warnings.push_back("dropped malformed paraphrase element: " + element.dump());
                continue;
            }
            c.answer_text = record.answer_text; // Pa keeps the solution unchanged
        } else {
            if (!element.is_object() || !element.contains("question") || !element["question"].is_string() ||
                !element.contains("answer") || !element["answer"].is_string()) {
                batch.warnings.push_back("dropped CR element without updated solution: " + element.dump());
                continue;
            }
            c.question_text = text::normalize_nfc(element["question"].get<std::string>());
            c.answer_text = text::normalize_nfc(element["answer"].get<std::string>());
        }
        if (c.question_text.empty()) {
            batch.warnings.push_back("dropped candidate with empty question");
            continue;
        }
        batch.candidates.push_back(std::move(c));
        if (batch.candidates.size() == static_cast<std::size_t>(n)) break;
    }
    if (batch.candidates.empty()) {
        throw GatewayError("no parseable augmentation candidates for record '" + record.id + "'");
    }
    return batch;
}

/// Cosine between the parent and candidate question embeddings. High cosine
/// means low diversity.
inline double diversity_score(Gateway &gateway, const QaRecord &parent, AugmentationCandidate &candidate) {
    auto vectors = gateway.embed({parent.question_text, candidate.question_text});
    candidate.diversity_cosine = Gateway::cosine(vectors[0], vectors[1]);
    return candidate.diversity_cosine;
}

inline void compute_diversity(Gateway &gateway, const QaRecord &parent,
                              std::vector<AugmentationCandidate> &candidates) {
    for (auto &c : candidates) {
        diversity_score(gateway, parent, c);
    }
}

inline double mean_diversity(const std::vector<AugmentationCandidate> &candidates, bool accepted_only) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &c : candidates) {
        if (accepted_only && !c.accepted) continue;
        sum += c.diversity_cosine;
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

/// Rejects candidates whose cosine exceeds max_cosine (too similar), keeps
/// the lowest-cosine survivors up to the per-type cap (10 numerical, 6
/// otherwise). Ties break lexicographically on question text so selection is
/// deterministic. Returns all candidates with accepted flags set, accepted
/// ones first.
inline std::vector<AugmentationCandidate> select_candidates(std::vector<AugmentationCandidate> candidates,
                                                            QType qtype, double max_cosine = 0.9) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const AugmentationCandidate &a, const AugmentationCandidate &b) {
                         if (a.diversity_cosine != b.diversity_cosine) {
                             return a.diversity_cosine < b.diversity_cosine;
                         }
                         return a.question_text < b.question_text;
                     });
    std::size_t cap = qtype == QType::numerical ? 10 : 6;
    std::size_t taken = 0;
    for (auto &c : candidates) {
        c.accepted = taken < cap && c.diversity_cosine <= max_cosine;
        if (c.accepted) ++taken;
    }
    return candidates;
}

/// Post-generation checks for constant replacement:
///   (a) no numeric constant literal of the parent survives in the candidate,
///   (b) every unit token of the parent question is still present,
///   (c) the candidate's final numeric answer differs from the parent's.
/// Violations are labels for human review, not errors.
inline std::vector<std::string> validate_cr(const QaRecord &parent, const AugmentationCandidate &candidate) {
    std::vector<std::string> violations;
    if (candidate.method != AugMethod::CR) {
        throw PreconditionError("validate_cr applies only to CR candidates");
    }

    auto parent_literals = text::find_numeric_literals(parent.question_text);
    auto candidate_literals = text::find_numeric_literals(candidate.question_text);
    for (const auto &p : parent_literals) {
        for (const auto &c : candidate_literals) {
            if (c.literal == p.literal) {
                violations.push_back("retained_constant: " + p.literal);
                break;
            }
        }
    }

    auto parent_units = text::unit_tokens(parent.question_text);
    for (const auto &unit : parent_units) {
        if (candidate.question_text.find(unit) == std::string::npos) {
            violations.push_back("missing_unit: " + unit);
        }
    }

    std::optional<text::NumericAnswer> parent_final;
    if (parent.final_numeric) {
        parent_final = text::NumericAnswer{parent.final_numeric->value, parent.final_numeric->unit};
    } else {
        parent_final = text::extract_final_numeric_local(parent.answer_text);
    }
    auto candidate_final = text::extract_final_numeric_local(candidate.answer_text);
    if (!candidate_final) {
        violations.push_back("candidate_answer_missing_final_numeric");
    } else if (parent_final && candidate_final->value == parent_final->value) {
        violations.push_back("final_numeric_unchanged: " + std::to_string(parent_final->value));
    }
    return violations;
}

// ---------------------------------------------------------------------------
// Candidate persistence and the human accept/reject patch
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json candidate_to_json(const AugmentationCandidate &c) {
    nlohmann::ordered_json j;
    j["parent_id"] = c.parent_id;
    j["method"] = names::of(c.method);
    j["question_text"] = c.question_text;
    j["answer_text"] = c.answer_text;
    j["diversity_cosine"] = c.diversity_cosine;
    j["accepted"] = c.accepted;
    return j;
}

inline AugmentationCandidate candidate_from_json(const nlohmann::json &j) {
    AugmentationCandidate c;
    c.parent_id = detail::require_string(j, "parent_id");
    c.method = detail::require_enum<AugMethod>(j, "method");
    c.question_text = detail::require_string(j, "question_text");
    c.answer_text = detail::require_string(j, "answer_text");
    if (j.contains("diversity_cosine")) c.diversity_cosine = j.at("diversity_cosine").get<double>();
    if (j.contains("accepted")) c.accepted = j.at("accepted").get<bool>();
    return c;
}

inline void save_candidates(const std::vector<AugmentationCandidate> &candidates,
                            const std::filesystem::path &path) {
    std::string out;
    for (const auto &c : candidates) {
        out += candidate_to_json(c).dump();
        out += '\n';
    }
    io::atomic_write_file(path, out);
}

inline std::vector<AugmentationCandidate> load_candidates(const std::filesystem::path &path) {
    std::vector<AugmentationCandidate> out;
    io::for_each_line(path, [&](std::size_t line_no, const std::string &line) {
        try {
            out.push_back(candidate_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception &e) {
            throw Error("candidate file " + path.string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
        }
    });
    return out;
}

/// The annotator's verdict file uses the candidate schema plus the accepted
/// flag; entries match candidates by (parent_id, method, question_text).
inline void apply_review_patch(std::vector<AugmentationCandidate> &candidates,
                               const std::filesystem::path &patch_path) {
    auto patches = load_candidates(patch_path);
    for (const auto &p : patches) {
        bool found = false;
        for (auto &c : candidates) {
            if (c.parent_id == p.parent_id && c.method == p.method && c.question_text == p.question_text) {
                c.accepted = p.accepted;
                found = true;
            }
        }
        if (!found) {
            throw Error("review patch entry does not match any candidate (parent '" + p.parent_id +
                        "')");
        }
    }
}

/// Accepted candidates become augmented train records: provenance=augmented,
/// split=train, ids derived from the parent. CR records get final_numeric
/// re-extracted from the updated solution.
inline DatasetManifest inject_candidates(const DatasetManifest &manifest,
                                         const std::vector<AugmentationCandidate> &candidates) {
    DatasetManifest out = manifest;
    std::map<std::string, int> counters;
    for (const auto &c : candidates) {
        if (!c.accepted) continue;
        const QaRecord *parent = manifest.find(c.parent_id);
        if (parent == nullptr) {
            throw Error("candidate references unknown parent '" + c.parent_id + "'");
        }
        if (parent->provenance != Provenance::original || parent->split != Split::train) {
            throw Error("candidate parent '" + c.parent_id + "' is not an original train record");
        }
        QaRecord r = *parent;
        int k = ++counters[c.parent_id + "/" + names::of(c.method)];
        r.id = c.parent_id + "-" + names::of(c.method) + std::to_string(k);
        r.question_text = c.question_text;
        r.answer_text = c.answer_text;
        r.provenance = Provenance::augmented;
        r.split = Split::train;
        r.parent_id = c.parent_id;
        r.method = c.method;
        if (c.method == AugMethod::CR) {
            auto fn = text::extract_final_numeric_local(c.answer_text);
            if (!fn) {
                throw Error("accepted CR candidate for '" + c.parent_id +
                            "' has no extractable final numeric answer");
            }
            r.final_numeric = FinalNumeric{fn->value, fn->unit};
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inter-annotator agreement
// ---------------------------------------------------------------------------

/// Cohen's kappa: (p_o - p_e) / (1 - p_e) with chance agreement from the
/// marginal label frequencies. Degenerate p_e = 1 (both raters constant and
/// identical) forces p_o = 1 and returns 1.
template <typename Label>
double cohen_kappa(const std::vector<Label> &ratings_a, const std::vector<Label> &ratings_b) {
    if (ratings_a.size() != ratings_b.size()) {
        throw PreconditionError("cohen_kappa: rating lists differ in length");
    }
    if (ratings_a.empty()) {
        throw PreconditionError("cohen_kappa: empty rating lists");
    }
    const double n = static_cast<double>(ratings_a.size());
    std::map<Label, double> freq_a;
    std::map<Label, double> freq_b;
    double observed = 0.0;
    for (std::size_t i = 0; i < ratings_a.size(); ++i) {
        freq_a[ratings_a[i]] += 1.0;
        freq_b[ratings_b[i]] += 1.0;
        if (ratings_a[i] == ratings_b[i]) observed += 1.0;
    }
    double p_o = observed / n;
    double p_e = 0.0;
    for (const auto &[label, count_a] : freq_a) {
        auto it = freq_b.find(label);
        if (it != freq_b.end()) {
            p_e += (count_a / n) * (it->second / n);
        }
    }
    if (p_e >= 1.0) {
        return 1.0;
    }
    return (p_o - p_e) / (1.0 - p_e);
}

} // namespace vcasft
