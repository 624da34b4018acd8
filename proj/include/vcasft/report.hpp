#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcasft/corpus.hpp"
#include "vcasft/metrics.hpp"

namespace vcasft::report {

namespace detail {

inline std::string csv_escape(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

inline std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subject/grade accuracy table (one row per model x method, percent scale)
// ---------------------------------------------------------------------------

struct SubjectGradeRow {
    std::string model;
    std::string method;
    std::optional<double> full_test_set;
    std::optional<double> social_science;
    std::optional<double> natural_science;
    std::optional<double> language_science;
    std::optional<double> lower;
    std::optional<double> secondary;
    std::optional<double> higher;
};

inline SubjectGradeRow subject_grade_row(const std::string &model, const std::string &method,
                                         const std::vector<metrics::GroupAccuracy> &groups) {
    SubjectGradeRow row;
    row.model = model;
    row.method = method;
    for (const auto &g : groups) {
        if (g.dimension == "overall") row.full_test_set = g.percent;
        else if (g.dimension == "subject" && g.value == "social_science") row.social_science = g.percent;
        else if (g.dimension == "subject" && g.value == "natural_science") row.natural_science = g.percent;
        else if (g.dimension == "subject" && g.value == "language_science") row.language_science = g.percent;
        else if (g.dimension == "grade_band" && g.value == "lower") row.lower = g.percent;
        else if (g.dimension == "grade_band" && g.value == "secondary") row.secondary = g.percent;
        else if (g.dimension == "grade_band" && g.value == "higher") row.higher = g.percent;
    }
    return row;
}

inline std::string subject_grade_csv(const std::vector<SubjectGradeRow> &rows) {
    std::string out =
        "model,method,full_test_set,social_science,natural_science,language_science,lower,secondary,"
        "higher\n";
    auto cell = [](const std::optional<double> &v) {
        return v ? metrics::format_percent(*v) : std::string();
    };
    for (const auto &r : rows) {
        out += detail::csv_escape(r.model) + "," + detail::csv_escape(r.method) + "," +
               cell(r.full_test_set) + "," + cell(r.social_science) + "," + cell(r.natural_science) +
               "," + cell(r.language_science) + "," + cell(r.lower) + "," + cell(r.secondary) + "," +
               cell(r.higher) + "\n";
    }
    return out;
}

/// Correctness rows for grouped accuracy, drawn from a finished evaluation.
inline std::vector<metrics::ScienceQaRow> accuracy_rows_from_report(const metrics::MetricReport &report,
                                                                    const DatasetManifest &manifest) {
    std::vector<metrics::ScienceQaRow> rows;
    for (const auto &row : report.rows) {
        const QaRecord *record = manifest.find(row.record_id);
        if (record == nullptr) {
            throw Error("report row references unknown record '" + row.record_id + "'");
        }
        metrics::ScienceQaRow r;
        r.correct = row.primary() >= 0.5;
        r.subject = record->subject;
        r.grade_band = record->grade_band;
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Per-question-type score table (one row per model x method)
// ---------------------------------------------------------------------------

struct QtypeScoreRow {
    std::string model;
    std::string method;
    std::map<std::string, double> scores; // qtype name -> mean primary score in [0,1]
};

inline QtypeScoreRow qtype_row(const std::string &model, const std::string &method,
                               const metrics::MetricReport &report) {
    QtypeScoreRow row;
    row.model = model;
    row.method = method;
    for (const auto &agg : report.aggregates) {
        if (agg.dimension != "qtype") continue;
        auto it = agg.means.find("primary");
        if (it != agg.means.end()) row.scores[agg.value] = it->second;
    }
    return row;
}

inline const std::vector<std::string> &qtype_columns() {
    static const std::vector<std::string> columns = {"numerical", "theoretical", "factual", "mcq",
                                                     "conceptual"};
    return columns;
}

enum class ScoreScale { unit, percent };

/// One table per scale; headers carry the scale so the two files cannot be
/// confused.
inline std::string qtype_csv(const std::vector<QtypeScoreRow> &rows, ScoreScale scale) {
    std::string suffix = scale == ScoreScale::unit ? "" : "_pct";
    std::string out = "model,method";
    for (const auto &c : qtype_columns()) out += "," + c + suffix;
    out += "\n";
    for (const auto &r : rows) {
        out += detail::csv_escape(r.model) + "," + detail::csv_escape(r.method);
        for (const auto &c : qtype_columns()) {
            auto it = r.scores.find(c);
            out += ",";
            if (it != r.scores.end()) {
                out += scale == ScoreScale::unit ? detail::format_score(it->second)
                                                 : metrics::format_percent(100.0 * it->second);
            }
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run comparison (method ablation, e.g. sft vs vcasft vs zero_shot)
// ---------------------------------------------------------------------------

/// Markdown table of per-qtype scores for every row plus a delta line for
/// each later row against the first (the baseline). Rows may come from local
/// reports or be typed in from published results.
inline std::string comparison_markdown(const std::vector<QtypeScoreRow> &rows) {
    if (rows.size() < 2) {
        throw PreconditionError("comparison needs at least two rows");
    }
    std::string out = "| model | method |";
    for (const auto &c : qtype_columns()) out += " " + c + " |";
    out += "\n|---|---|";
    for (std::size_t i = 0; i < qtype_columns().size(); ++i) out += "---|";
    out += "\n";
    auto line = [&](const std::string &model, const std::string &method,
                    const std::map<std::string, std::optional<double>> &vals) {
        std::string s = "| " + model + " | " + method + " |";
        for (const auto &c : qtype_columns()) {
            auto it = vals.find(c);
            s += " ";
            if (it != vals.end() && it->second) s += detail::format_score(*it->second);
            s += " |";
        }
        return s + "\n";
    };
    auto to_opt = [](const QtypeScoreRow &r) {
        std::map<std::string, std::optional<double>> vals;
        for (const auto &c : qtype_columns()) {
            auto it = r.scores.find(c);
            vals[c] = it != r.scores.end() ? std::optional<double>(it->second) : std::nullopt;
        }
        return vals;
    };
    for (const auto &r : rows) {
        out += line(r.model, r.method, to_opt(r));
    }
    const auto &base = rows.front();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::map<std::string, std::optional<double>> deltas;
        for (const auto &c : qtype_columns()) {
            auto a = base.scores.find(c);
            auto b = rows[i].scores.find(c);
            deltas[c] = (a != base.scores.end() && b != rows[i].scores.end())
                            ? std::optional<double>(b->second - a->second)
                            : std::nullopt;
        }
        out += line(rows[i].model, rows[i].method + " - " + base.method, deltas);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full-report markdown
// ---------------------------------------------------------------------------

inline std::string report_markdown(const metrics::MetricReport &report) {
    std::string out = "# Evaluation report: " + report.run_id + "\n\n";
    out += "- model: " + report.model_id + "\n";
    out += "- mode: " + report.mode + "\n";
    out += "- records: " + std::to_string(report.rows.size()) + "\n";
    out += "- relative tolerance: " + detail::format_score(report.rel_tol) + "\n";
    out += "- corpus BLEU-4: " + detail::format_score(report.bleu4) + "\n";
    if (report.bertscore_f1) {
        out += "- mean BERTScore F1: " + detail::format_score(*report.bertscore_f1) + "\n";
    }
    out += "\n## Aggregates\n\n| group | count | score (0-1) | score (%) | rouge_l | meteor |\n"
           "|---|---|---|---|---|---|\n";
    for (const auto &agg : report.aggregates) {
        double primary = agg.means.count("primary") ? agg.means.at("primary") : 0.0;
        double rl = agg.means.count("rouge_l") ? agg.means.at("rouge_l") : 0.0;
        double mt = agg.means.count("meteor") ? agg.means.at("meteor") : 0.0;
        out += "| " + agg.dimension + "/" + agg.value + " | " + std::to_string(agg.count) + " | " +
               detail::format_score(primary) + " | " + metrics::format_percent(100.0 * primary) +
               " | " + detail::format_score(rl) + " | " + detail::format_score(mt) + " |\n";
    }
    out += "\n## Rows\n\n| record | qtype | s_faa | s_iss | s_css | composite | factual | mcq | flags "
           "|\n|---|---|---|---|---|---|---|---|---|\n";
    auto cell = [](const std::optional<double> &v) {
        return v ? detail::format_score(*v) : std::string("-");
    };
    for (const auto &row : report.rows) {
        std::string flags;
        for (std::size_t i = 0; i < row.flags.size(); ++i) {
            if (i > 0) flags += "; ";
            flags += row.flags[i];
        }
        out += "| " + row.record_id + " | " + names::of(row.qtype) + " | " + cell(row.s_faa) + " | " +
               cell(row.s_iss) + " | " + cell(row.s_css) + " | " + cell(row.composite) + " | " +
               cell(row.factual) + " | " + cell(row.mcq_correct) + " | " + (flags.empty() ? "-" : flags) +
               " |\n";
    }
    return out;
}

} // namespace vcasft::report
