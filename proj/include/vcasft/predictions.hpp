#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/corpus.hpp"
#include "vcasft/io.hpp"

namespace vcasft {

/// One model output for a test record, as written by inference and consumed
/// by evaluation.
struct Prediction {
    std::string record_id;
    std::string mode;
    std::string text;

    friend bool operator==(const Prediction &, const Prediction &) = default;
};

inline nlohmann::ordered_json prediction_to_json(const Prediction &p) {
    nlohmann::ordered_json j;
    j["record_id"] = p.record_id;
    j["mode"] = p.mode;
    j["text"] = p.text;
    return j;
}

inline Prediction prediction_from_json(const nlohmann::json &j) {
    Prediction p;
    p.record_id = detail::require_string(j, "record_id");
    p.mode = detail::require_string(j, "mode");
    p.text = text::normalize_nfc(detail::require_string(j, "text"));
    return p;
}

inline void save_predictions(const std::vector<Prediction> &predictions,
                             const std::filesystem::path &path) {
    std::string out;
    for (const auto &p : predictions) {
        out += prediction_to_json(p).dump();
        out += '\n';
    }
    io::atomic_write_file(path, out);
}

inline std::vector<Prediction> load_predictions(const std::filesystem::path &path) {
    std::vector<Prediction> out;
    io::for_each_line(path, [&](std::size_t line_no, const std::string &line) {
        try {
            out.push_back(prediction_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception &e) {
            throw Error("prediction file " + path.string() + " line " + std::to_string(line_no) +
                        ": " + e.what());
        }
    });
    return out;
}

} // namespace vcasft
