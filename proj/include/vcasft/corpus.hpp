#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/errors.hpp"
#include "vcasft/io.hpp"
#include "vcasft/text.hpp"

namespace vcasft {

enum class Language { en, hi };
enum class QType { numerical, theoretical, conceptual, factual, mcq };
enum class Subject { social_science, natural_science, language_science, other };
enum class GradeBand { lower, secondary, higher };
enum class Split { train, test };
enum class Provenance { original, augmented };
enum class AugMethod { CR, Pa };

namespace names {

inline const char *of(Language v) { return v == Language::en ? "en" : "hi"; }
inline const char *of(QType v) {
    switch (v) {
        case QType::numerical: return "numerical";
        case QType::theoretical: return "theoretical";
        case QType::conceptual: return "conceptual";
        case QType::factual: return "factual";
        case QType::mcq: return "mcq";
    }
    return "?";
}
inline const char *of(Subject v) {
    switch (v) {
        case Subject::social_science: return "social_science";
        case Subject::natural_science: return "natural_science";
        case Subject::language_science: return "language_science";
        case Subject::other: return "other";
    }
    return "?";
}
inline const char *of(GradeBand v) {
    switch (v) {
        case GradeBand::lower: return "lower";
        case GradeBand::secondary: return "secondary";
        case GradeBand::higher: return "higher";
    }
    return "?";
}
inline const char *of(Split v) { return v == Split::train ? "train" : "test"; }
inline const char *of(Provenance v) { return v == Provenance::original ? "original" : "augmented"; }
inline const char *of(AugMethod v) { return v == AugMethod::CR ? "CR" : "Pa"; }

template <typename E>
std::optional<E> parse(const std::string &);

template <> inline std::optional<Language> parse(const std::string &s) {
    if (s == "en") return Language::en;
    if (s == "hi") return Language::hi;
    return std::nullopt;
}
template <> inline std::optional<QType> parse(const std::string &s) {
    for (QType v : {QType::numerical, QType::theoretical, QType::conceptual, QType::factual, QType::mcq}) {
        if (s == of(v)) return v;
    }
    return std::nullopt;
}
template <> inline std::optional<Subject> parse(const std::string &s) {
    for (Subject v : {Subject::social_science, Subject::natural_science, Subject::language_science, Subject::other}) {
        if (s == of(v)) return v;
    }
    return std::nullopt;
}
template <> inline std::optional<GradeBand> parse(const std::string &s) {
    for (GradeBand v : {GradeBand::lower, GradeBand::secondary, GradeBand::higher}) {
        if (s == of(v)) return v;
    }
    return std::nullopt;
}
template <> inline std::optional<Split> parse(const std::string &s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    return std::nullopt;
}
template <> inline std::optional<Provenance> parse(const std::string &s) {
    if (s == "original") return Provenance::original;
    if (s == "augmented") return Provenance::augmented;
    return std::nullopt;
}
template <> inline std::optional<AugMethod> parse(const std::string &s) {
    if (s == "CR") return AugMethod::CR;
    if (s == "Pa") return AugMethod::Pa;
    return std::nullopt;
}

} // namespace names

struct FinalNumeric {
    double value = 0.0;
    std::string unit;

    friend bool operator==(const FinalNumeric &, const FinalNumeric &) = default;
};

/// One multimodal question/answer item. Field names mirror the JSONL schema.
struct QaRecord {
    std::string id;
    Language language = Language::en;
    QType qtype = QType::factual;
    std::optional<Subject> subject;
    std::optional<GradeBand> grade_band;
    std::string question_text;
    std::optional<std::vector<std::string>> options; // mcq only, exactly 4
    std::optional<int> correct_option;               // mcq only, 0..3
    std::string answer_text;
    std::optional<FinalNumeric> final_numeric;       // numerical only
    std::string image_ref;
    Split split = Split::train;
    Provenance provenance = Provenance::original;
    std::optional<std::string> parent_id;            // augmented only
    std::optional<AugMethod> method;                 // augmented only

    friend bool operator==(const QaRecord &, const QaRecord &) = default;
};

struct DatasetManifest {
    std::string name;
    int schema_version = 1;
    std::vector<QaRecord> records;

    std::size_t count(Split s) const {
        std::size_t n = 0;
        for (const auto &r : records) {
            if (r.split == s) ++n;
        }
        return n;
    }

    const QaRecord *find(const std::string &id) const {
        for (const auto &r : records) {
            if (r.id == id) return &r;
        }
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string require_string(const nlohmann::json &j, const char *field) {
    if (!j.contains(field)) throw SchemaError(field, "missing");
    if (!j.at(field).is_string()) throw SchemaError(field, "expected a string");
    return j.at(field).get<std::string>();
}

template <typename E>
E require_enum(const nlohmann::json &j, const char *field) {
    std::string s = require_string(j, field);
    auto v = names::parse<E>(s);
    if (!v) throw SchemaError(field, "unknown value '" + s + "'");
    return *v;
}

template <typename E>
std::optional<E> optional_enum(const nlohmann::json &j, const char *field) {
    if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
    return require_enum<E>(j, field);
}

} // namespace detail

inline nlohmann::ordered_json record_to_json(const QaRecord &r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["language"] = names::of(r.language);
    j["qtype"] = names::of(r.qtype);
    if (r.subject) j["subject"] = names::of(*r.subject);
    if (r.grade_band) j["grade_band"] = names::of(*r.grade_band);
    j["question_text"] = r.question_text;
    if (r.options) j["options"] = *r.options;
    if (r.correct_option) j["correct_option"] = *r.correct_option;
    j["answer_text"] = r.answer_text;
    if (r.final_numeric) {
        j["final_numeric"] = {{"value", r.final_numeric->value}, {"unit", r.final_numeric->unit}};
    }
    j["image_ref"] = r.image_ref;
    j["split"] = names::of(r.split);
    j["provenance"] = names::of(r.provenance);
    if (r.parent_id) j["parent_id"] = *r.parent_id;
    if (r.method) j["method"] = names::of(*r.method);
    return j;
}

/// Parses one JSONL line into a record, applying NFC normalization to all
/// text fields. Throws SchemaError naming the offending field.
inline QaRecord record_from_json(const nlohmann::json &j) {
    using text::normalize_nfc;
    QaRecord r;
    r.id = detail::require_string(j, "id");
    if (r.id.empty()) throw SchemaError("id", "must be non-empty");
    r.language = detail::require_enum<Language>(j, "language");
    r.qtype = detail::require_enum<QType>(j, "qtype");
    r.subject = detail::optional_enum<Subject>(j, "subject");
    r.grade_band = detail::optional_enum<GradeBand>(j, "grade_band");
    r.question_text = normalize_nfc(detail::require_string(j, "question_text"));
    if (j.contains("options") && !j.at("options").is_null()) {
        if (!j.at("options").is_array()) throw SchemaError("options", "expected an array");
        std::vector<std::string> opts;
        for (const auto &o : j.at("options")) {
            if (!o.is_string()) throw SchemaError("options", "expected an array of strings");
            opts.push_back(normalize_nfc(o.get<std::string>()));
        }
        r.options = std::move(opts);
    }
    if (j.contains("correct_option") && !j.at("correct_option").is_null()) {
        if (!j.at("correct_option").is_number_integer()) {
            throw SchemaError("correct_option", "expected an integer");
        }
        r.correct_option = j.at("correct_option").get<int>();
    }
    r.answer_text = normalize_nfc(detail::require_string(j, "answer_text"));
    if (j.contains("final_numeric") && !j.at("final_numeric").is_null()) {
        const auto &fn = j.at("final_numeric");
        if (!fn.is_object() || !fn.contains("value") || !fn.at("value").is_number()) {
            throw SchemaError("final_numeric", "expected {value: number, unit: string}");
        }
        FinalNumeric v;
        v.value = fn.at("value").get<double>();
        if (fn.contains("unit")) v.unit = normalize_nfc(fn.at("unit").get<std::string>());
        r.final_numeric = v;
    }
    r.image_ref = detail::require_string(j, "image_ref");
    r.split = detail::require_enum<Split>(j, "split");
    if (j.contains("provenance")) {
        r.provenance = detail::require_enum<Provenance>(j, "provenance");
    }
    if (j.contains("parent_id") && !j.at("parent_id").is_null()) {
        r.parent_id = detail::require_string(j, "parent_id");
    }
    if (j.contains("method") && !j.at("method").is_null()) {
        r.method = detail::require_enum<AugMethod>(j, "method");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string field;
    std::string reason;
};

/// Record-level invariant checks (the manifest-level ones need the full
/// record set and live in validate_manifest).
inline std::vector<Violation> validate_record(const QaRecord &r) {
    std::vector<Violation> v;
    if (r.qtype == QType::mcq) {
        if (!r.options) v.push_back({"options", "mcq record requires options"});
        if (!r.correct_option) v.push_back({"correct_option", "mcq record requires correct_option"});
    } else if (r.options || r.correct_option) {
        v.push_back({"options", "options/correct_option are mcq-only fields"});
    }
    if (r.options && r.options->size() != 4) {
        v.push_back({"options", "expected exactly 4 options"});
    }
    if (r.correct_option && (*r.correct_option < 0 || *r.correct_option > 3)) {
        v.push_back({"correct_option", "index must be in 0..3"});
    }
    if (r.qtype == QType::numerical && !r.final_numeric) {
        v.push_back({"final_numeric", "numerical record requires final_numeric"});
    }
    if (r.image_ref.empty()) {
        v.push_back({"image_ref", "must be non-empty"});
    }
    if (r.provenance == Provenance::augmented) {
        if (!r.parent_id) v.push_back({"parent_id", "augmented record requires parent_id"});
        if (!r.method) v.push_back({"method", "augmented record requires method"});
    } else if (r.parent_id || r.method) {
        v.push_back({"provenance", "parent_id/method only valid on augmented records"});
    }
    return v;
}

struct LoadIssue {
    std::size_t line = 0;
    std::string field;
    std::string reason;
};

struct LoadResult {
    DatasetManifest manifest;
    std::vector<LoadIssue> issues;

    bool ok() const { return issues.empty(); }
};

/// Manifest-level checks: duplicate ids and augmented-parent resolution.
inline std::vector<LoadIssue> validate_manifest(const DatasetManifest &m) {
    std::vector<LoadIssue> issues;
    std::map<std::string, const QaRecord *> by_id;
    for (const auto &r : m.records) {
        auto [it, inserted] = by_id.emplace(r.id, &r);
        if (!inserted) {
            issues.push_back({0, "id", "duplicate id '" + r.id + "'"});
        }
    }
    for (const auto &r : m.records) {
        if (r.provenance != Provenance::augmented) continue;
        if (!r.parent_id) continue; // already a record-level violation
        auto it = by_id.find(*r.parent_id);
        if (it == by_id.end()) {
            issues.push_back({0, "parent_id", "record '" + r.id + "' references unknown parent '" + *r.parent_id + "'"});
        } else {
            if (it->second->provenance != Provenance::original) {
                issues.push_back({0, "parent_id", "record '" + r.id + "' parent is not an original record"});
            }
            if (it->second->split != Split::train) {
                issues.push_back({0, "parent_id", "record '" + r.id + "' parent is not in the train split"});
            }
        }
        if (r.split != Split::train) {
            issues.push_back({0, "split", "augmented record '" + r.id + "' must be in the train split"});
        }
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Load / save
// ---------------------------------------------------------------------------

/// Line-delimited JSON, one record per line. Invalid lines are collected
/// with their line numbers; valid records still load.
inline LoadResult load_manifest(const std::filesystem::path &path) {
    if (!std::filesystem::exists(path)) {
        throw Error("manifest file not found: " + path.string());
    }
    LoadResult result;
    result.manifest.name = path.stem().string();
    io::for_each_line(path, [&](std::size_t line_no, const std::string &line) {
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            result.manifest.records.push_back(record_from_json(j));
            for (const auto &v : validate_record(result.manifest.records.back())) {
                result.issues.push_back({line_no, v.field, v.reason});
            }
        } catch (const SchemaError &e) {
            result.issues.push_back({line_no, e.field(), e.what()});
        } catch (const nlohmann::json::exception &e) {
            result.issues.push_back({line_no, "", std::string("invalid JSON: ") + e.what()});
        }
    });
    for (const auto &issue : validate_manifest(result.manifest)) {
        result.issues.push_back(issue);
    }
    return result;
}

/// load_manifest that refuses manifests with any issue.
inline DatasetManifest load_manifest_strict(const std::filesystem::path &path) {
    LoadResult r = load_manifest(path);
    if (!r.ok()) {
        const auto &first = r.issues.front();
        throw Error("invalid manifest " + path.string() + " (" + std::to_string(r.issues.size()) +
                    " issue(s); first: line " + std::to_string(first.line) +
                    (first.field.empty() ? "" : ", field '" + first.field + "'") + ": " + first.reason + ")");
    }
    return std::move(r.manifest);
}

inline void save_manifest(const DatasetManifest &m, const std::filesystem::path &path) {
    std::string out;
    for (const auto &r : m.records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    io::atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace detail {

// Unbiased bounded draw; avoids the implementation-defined distribution of
// std::shuffle so assignments are identical on every platform.
inline std::uint64_t bounded_rand(std::mt19937_64 &gen, std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

template <typename T>
void seeded_shuffle(std::vector<T> &v, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_rand(gen, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace detail

/// Deterministic reshuffle of the original records into train/test. Train
/// size is round-half-up(n_originals * train_fraction). Augmented records
/// (and the parents they reference) always land in train.
inline DatasetManifest split_dataset(const DatasetManifest &manifest, double train_fraction,
                                     std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw PreconditionError("train_fraction must be in (0,1), got " + std::to_string(train_fraction));
    }
    std::set<std::string> pinned_parents;
    std::size_t n_originals = 0;
    for (const auto &r : manifest.records) {
        if (r.provenance == Provenance::augmented && r.parent_id) {
            pinned_parents.insert(*r.parent_id);
        } else if (r.provenance == Provenance::original) {
            ++n_originals;
        }
    }
    std::size_t train_quota =
        static_cast<std::size_t>(std::floor(static_cast<double>(n_originals) * train_fraction + 0.5));
    if (pinned_parents.size() > train_quota) {
        throw Error("train quota " + std::to_string(train_quota) + " smaller than the " +
                    std::to_string(pinned_parents.size()) + " parents pinned by augmented records");
    }

    // Stable base order (sorted ids), then a seeded Fisher-Yates pass.
    std::vector<std::string> original_ids;
    for (const auto &r : manifest.records) {
        if (r.provenance == Provenance::original && pinned_parents.count(r.id) == 0) {
            original_ids.push_back(r.id);
        }
    }
    std::sort(original_ids.begin(), original_ids.end());
    detail::seeded_shuffle(original_ids, seed);

    std::set<std::string> train_ids(pinned_parents);
    std::size_t remaining = train_quota - pinned_parents.size();
    for (const auto &id : original_ids) {
        if (remaining == 0) break;
        train_ids.insert(id);
        --remaining;
    }

    DatasetManifest out = manifest;
    for (auto &r : out.records) {
        if (r.provenance == Provenance::augmented) {
            r.split = Split::train;
        } else {
            r.split = train_ids.count(r.id) > 0 ? Split::train : Split::test;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct StatRow {
    std::string dimension;
    std::string value;
    std::size_t count = 0;
};

/// Counts per split, qtype, (qtype, split), subject, grade band, language and
/// provenance, emitted as (dimension, value, count) rows. Optional fields use
/// an "unspecified" bucket so each dimension sums to the record total.
inline std::vector<StatRow> dataset_stats(const DatasetManifest &manifest) {
    std::map<std::string, std::map<std::string, std::size_t>> dims;
    for (const auto &r : manifest.records) {
        dims["split"][names::of(r.split)]++;
        dims["qtype"][names::of(r.qtype)]++;
        dims["qtype_split"][std::string(names::of(r.qtype)) + "/" + names::of(r.split)]++;
        dims["subject"][r.subject ? names::of(*r.subject) : "unspecified"]++;
        dims["grade_band"][r.grade_band ? names::of(*r.grade_band) : "unspecified"]++;
        dims["language"][names::of(r.language)]++;
        dims["provenance"][names::of(r.provenance)]++;
    }
    std::vector<StatRow> rows;
    rows.push_back({"total", "records", manifest.records.size()});
    for (const auto &[dim, values] : dims) {
        for (const auto &[value, count] : values) {
            rows.push_back({dim, value, count});
        }
    }
    return rows;
}

} // namespace vcasft
