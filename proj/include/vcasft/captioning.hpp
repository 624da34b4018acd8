#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcasft/corpus.hpp"
#include "vcasft/gateway.hpp"
#include "vcasft/io.hpp"
#include "vcasft/prompts.hpp"
#include "vcasft/text.hpp"

namespace vcasft {

enum class CaptionSource { generated, translated, human_override };

inline const char *to_string(CaptionSource s) {
    switch (s) {
        case CaptionSource::generated: return "generated";
        case CaptionSource::translated: return "translated";
        case CaptionSource::human_override: return "human_override";
    }
    return "?";
}

inline std::optional<CaptionSource> parse_caption_source(const std::string &s) {
    if (s == "generated") return CaptionSource::generated;
    if (s == "translated") return CaptionSource::translated;
    if (s == "human_override") return CaptionSource::human_override;
    return std::nullopt;
}

struct Caption {
    std::string record_id;
    Language language = Language::en;
    std::string text;
    CaptionSource source = CaptionSource::generated;
    std::optional<std::string> model_id;

    friend bool operator==(const Caption &, const Caption &) = default;
};

inline nlohmann::ordered_json caption_to_json(const Caption &c) {
    nlohmann::ordered_json j;
    j["record_id"] = c.record_id;
    j["language"] = names::of(c.language);
    j["text"] = c.text;
    j["source"] = to_string(c.source);
    if (c.model_id) j["model_id"] = *c.model_id;
    return j;
}

inline Caption caption_from_json(const nlohmann::json &j) {
    Caption c;
    c.record_id = detail::require_string(j, "record_id");
    c.language = detail::require_enum<Language>(j, "language");
    c.text = text::normalize_nfc(detail::require_string(j, "text"));
    if (c.text.empty()) throw SchemaError("text", "caption text must be non-empty");
    auto source = parse_caption_source(detail::require_string(j, "source"));
    if (!source) throw SchemaError("source", "unknown caption source");
    c.source = *source;
    if (j.contains("model_id") && !j.at("model_id").is_null()) {
        c.model_id = j.at("model_id").get<std::string>();
    }
    return c;
}

/// Sidecar store for captions, keyed by (record_id, language). Entries are
/// appended in arrival order; the effective caption per key resolves with
/// human_override taking precedence over translated/generated.
class CaptionStore {
  public:
    CaptionStore() = default;

    static CaptionStore load(const std::filesystem::path &path) {
        CaptionStore store;
        if (!std::filesystem::exists(path)) {
            return store;
        }
        io::for_each_line(path, [&](std::size_t line_no, const std::string &line) {
            try {
                store.put(caption_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception &e) {
                throw Error("caption sidecar " + path.string() + " line " + std::to_string(line_no) +
                            ": " + e.what());
            }
        });
        return store;
    }

    void put(Caption c) {
        entries_.push_back(std::move(c));
    }

    bool contains_record(const std::string &record_id) const {
        for (const auto &c : entries_) {
            if (c.record_id == record_id) return true;
        }
        return false;
    }

    /// Resolution order: human_override wins; otherwise the most recent
    /// translated/generated entry for the key.
    std::optional<Caption> effective(const std::string &record_id, Language language) const {
        const Caption *best = nullptr;
        for (const auto &c : entries_) {
            if (c.record_id != record_id || c.language != language) continue;
            if (best == nullptr) {
                best = &c;
                continue;
            }
            bool best_override = best->source == CaptionSource::human_override;
            bool c_override = c.source == CaptionSource::human_override;
            if (c_override || !best_override) {
                best = &c; // later entries win within the same precedence tier
            }
        }
        if (best == nullptr) return std::nullopt;
        return *best;
    }

    const std::vector<Caption> &entries() const { return entries_; }

    std::size_t size() const { return entries_.size(); }

    void append_to(const std::filesystem::path &path) const {
        for (const auto &c : entries_) {
            io::append_line(path, caption_to_json(c).dump());
        }
    }

    /// Compaction: one effective caption per (record_id, language), in
    /// deterministic key order.
    void save_compacted(const std::filesystem::path &path) const {
        std::map<std::pair<std::string, int>, Caption> resolved;
        for (const auto &c : entries_) {
            auto eff = effective(c.record_id, c.language);
            resolved[{c.record_id, static_cast<int>(c.language)}] = *eff;
        }
        std::string out;
        for (const auto &[key, c] : resolved) {
            out += caption_to_json(c).dump();
            out += '\n';
        }
        io::atomic_write_file(path, out);
    }

  private:
    std::vector<Caption> entries_;
};

/// Resolves a record's image against the assets root; throws before any
/// gateway traffic when the file is missing.
inline ImagePayload load_image(const QaRecord &record, const std::filesystem::path &assets_root) {
    std::filesystem::path path = assets_root / record.image_ref;
    if (!std::filesystem::exists(path)) {
        throw Error("image not found for record '" + record.id + "': " + path.string());
    }
    ImagePayload payload;
    std::string ext = path.extension().string();
    payload.media_type = ext == ".jpg" || ext == ".jpeg" ? "image/jpeg" : "image/png";
    payload.bytes = io::read_file(path);
    return payload;
}

/// English caption via the captioning model. Records sharing one image hit
/// the same cache entry because the request key hashes the image digest.
inline Caption generate_caption(Gateway &gateway, const QaRecord &record,
                                const std::filesystem::path &assets_root,
                                std::string_view template_id = "caption_generation") {
    ImagePayload image = load_image(record, assets_root);
    ChatRequest req;
    req.model_id = gateway.config().chat_model;
    req.user_text = std::string(prompts::by_id(template_id));
    req.image = std::move(image);
    ChatResponse res = gateway.complete(req);
    Caption c;
    c.record_id = record.id;
    c.language = Language::en;
    c.text = text::normalize_nfc(res.text);
    c.source = CaptionSource::generated;
    c.model_id = req.model_id;
    if (c.text.empty()) {
        throw GatewayError("caption model returned empty text for record '" + record.id + "'");
    }
    return c;
}

/// English -> Hindi caption translation (the cross-lingual path: captions are
/// always generated in English first).
inline Caption translate_caption(Gateway &gateway, const Caption &caption, Language target,
                                 std::string_view template_id = "caption_translation") {
    if (caption.language != Language::en) {
        throw PreconditionError("translate_caption requires an English source caption");
    }
    if (target != Language::hi) {
        throw PreconditionError("unsupported translation target");
    }
    ChatRequest req;
    req.model_id = gateway.config().chat_model;
    req.user_text = prompts::render(prompts::by_id(template_id), {{"caption", caption.text}});
    ChatResponse res = gateway.complete(req);
    Caption c;
    c.record_id = caption.record_id;
    c.language = target;
    c.text = text::normalize_nfc(res.text);
    c.source = CaptionSource::translated;
    c.model_id = req.model_id;
    if (c.text.empty()) {
        throw GatewayError("translation returned empty text for record '" + caption.record_id + "'");
    }
    return c;
}

/// Overrides file: caption schema minus model_id. Every entry must reference
/// a record that already has at least one caption.
inline void apply_overrides(CaptionStore &store, const std::filesystem::path &overrides_path) {
    if (!std::filesystem::exists(overrides_path)) {
        throw Error("overrides file not found: " + overrides_path.string());
    }
    std::vector<Caption> pending;
    io::for_each_line(overrides_path, [&](std::size_t line_no, const std::string &line) {
        nlohmann::json j = nlohmann::json::parse(line);
        Caption c;
        c.record_id = detail::require_string(j, "record_id");
        c.language = detail::require_enum<Language>(j, "language");
        c.text = text::normalize_nfc(detail::require_string(j, "text"));
        if (c.text.empty()) {
            throw Error("override at line " + std::to_string(line_no) + " has empty text");
        }
        c.source = CaptionSource::human_override;
        if (!store.contains_record(c.record_id)) {
            throw Error("override references unknown record_id '" + c.record_id + "'");
        }
        pending.push_back(std::move(c));
    });
    for (auto &c : pending) {
        store.put(std::move(c));
    }
}

/// Pre-training lint: every record that will enter caption-aware prompting
/// must have an effective caption in its own language. Returns the ids that
/// fail, empty means the manifest is ready.
inline std::vector<std::string> lint_captions(const DatasetManifest &manifest, const CaptionStore &store) {
    std::vector<std::string> missing;
    for (const auto &r : manifest.records) {
        if (!store.effective(r.id, r.language)) {
            missing.push_back(r.id);
        }
    }
    return missing;
}

} // namespace vcasft
