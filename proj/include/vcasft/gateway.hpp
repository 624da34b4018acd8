#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vcasft/errors.hpp"
#include "vcasft/io.hpp"
#include "vcasft/text.hpp"

namespace vcasft {

enum class GatewayProfile { live, record, replay };

inline const char *to_string(GatewayProfile p) {
    switch (p) {
        case GatewayProfile::live: return "live";
        case GatewayProfile::record: return "record";
        case GatewayProfile::replay: return "replay";
    }
    return "?";
}

inline std::optional<GatewayProfile> parse_profile(const std::string &s) {
    for (GatewayProfile p : {GatewayProfile::live, GatewayProfile::record, GatewayProfile::replay}) {
        if (s == to_string(p)) return p;
    }
    return std::nullopt;
}

struct ImagePayload {
    std::string media_type; // e.g. "image/png"
    std::string bytes;

    std::string digest() const { return io::sha256_hex(bytes); }
};

struct ChatRequest {
    std::string model_id;
    std::optional<std::string> system_text;
    std::string user_text;
    std::optional<ImagePayload> image;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct ChatResponse {
    std::string text;
    std::string model_id;
    bool cached = false;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::string model_id;
};

/// Raw service boundary. Live and test transports implement this; the
/// gateway owns caching, retries and replay on top.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual std::string complete(const ChatRequest &request) = 0;
    virtual std::vector<double> embed(const std::string &model_id, const std::string &text) = 0;
};

struct RetryPolicy {
    int max_retries = 3; // attempts beyond the first
    std::chrono::milliseconds base_delay{100};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{5000};
};

struct GatewayConfig {
    GatewayProfile profile = GatewayProfile::replay;
    std::filesystem::path cache_dir;                  // content-addressed JSON files
    std::vector<std::filesystem::path> fixture_files; // key -> response maps
    RetryPolicy retry;
    std::size_t embedding_dim = 0; // 0 = accept whatever the service returns
    std::string chat_model = "gemini-pro";
    std::string judge_model = "gpt-4";
    std::string embed_model = "sbert";
    int max_in_flight = 4;
};

class Gateway {
  public:
    explicit Gateway(GatewayConfig config, std::shared_ptr<Transport> transport = nullptr)
        : config_(std::move(config)), transport_(std::move(transport)) {
        for (const auto &f : config_.fixture_files) {
            load_fixture_file(f);
        }
        if (!config_.cache_dir.empty()) {
            std::filesystem::create_directories(config_.cache_dir);
        }
    }

    const GatewayConfig &config() const { return config_; }

    /// Content hash identifying a chat request: model, prompts, image digest
    /// and decoding parameters. Distinct images never collide because the
    /// image digest participates in the key.
    static std::string chat_request_key(const ChatRequest &r) {
        nlohmann::json j;
        j["kind"] = "chat";
        j["model"] = r.model_id;
        j["system"] = r.system_text ? nlohmann::json(*r.system_text) : nlohmann::json(nullptr);
        j["user"] = r.user_text;
        j["image_digest"] = r.image ? nlohmann::json(r.image->digest()) : nlohmann::json(nullptr);
        j["temperature"] = r.temperature;
        j["max_tokens"] = r.max_tokens;
        return io::sha256_hex(j.dump());
    }

    static std::string embed_request_key(const std::string &model_id, const std::string &text) {
        nlohmann::json j;
        j["kind"] = "embedding";
        j["model"] = model_id;
        j["text"] = text;
        return io::sha256_hex(j.dump());
    }

    ChatResponse complete(const ChatRequest &request) {
        if (text::trim(request.user_text).empty()) {
            throw PreconditionError("chat request user_text must be non-empty");
        }
        if (request.temperature < 0.0) {
            throw PreconditionError("temperature must be >= 0");
        }
        if (config_.profile == GatewayProfile::replay && request.temperature != 0.0) {
            throw PreconditionError("replay profile requires temperature 0");
        }
        const std::string key = chat_request_key(request);
        if (auto hit = lookup(key)) {
            return ChatResponse{hit->value("text", ""), request.model_id, true};
        }
        if (config_.profile == GatewayProfile::replay) {
            throw ReplayMissError(key);
        }
        std::string body = call_with_retries([&] { return require_transport().complete(request); });
        nlohmann::json response = {{"text", body}};
        store(key, "chat", response);
        return ChatResponse{body, request.model_id, false};
    }

    /// One vector per input text, order-preserving, cached per text.
    std::vector<EmbeddingVector> embed(const std::vector<std::string> &texts) {
        if (texts.empty()) {
            throw PreconditionError("embed requires a non-empty list of texts");
        }
        for (const auto &t : texts) {
            if (text::trim(t).empty()) {
                throw PreconditionError("embed input text must be non-empty after trimming");
            }
        }
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto &t : texts) {
            out.push_back(embed_one(t));
        }
        return out;
    }

    EmbeddingVector embed_one(const std::string &text_in) {
        const std::string key = embed_request_key(config_.embed_model, text_in);
        if (auto hit = lookup(key)) {
            return make_embedding(hit->value("values", std::vector<double>{}));
        }
        if (config_.profile == GatewayProfile::replay) {
            throw ReplayMissError(key);
        }
        std::vector<double> values =
            call_with_retries([&] { return require_transport().embed(config_.embed_model, text_in); });
        EmbeddingVector v = make_embedding(values);
        store(key, "embedding", nlohmann::json{{"values", v.values}});
        return v;
    }

    static double cosine(const EmbeddingVector &a, const EmbeddingVector &b) {
        if (a.values.size() != b.values.size()) {
            throw PreconditionError("cosine: vector length mismatch (" + std::to_string(a.values.size()) +
                                    " vs " + std::to_string(b.values.size()) + ")");
        }
        double dot = 0.0;
        double na = 0.0;
        double nb = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            dot += a.values[i] * b.values[i];
            na += a.values[i] * a.values[i];
            nb += b.values[i] * b.values[i];
        }
        if (na == 0.0 || nb == 0.0) {
            throw PreconditionError("cosine: zero-norm vector");
        }
        double c = dot / (std::sqrt(na) * std::sqrt(nb));
        return std::clamp(c, -1.0, 1.0);
    }

    /// Runs fn(i) for i in [0, n) with at most max_in_flight worker threads.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn) const {
        if (n == 0) return;
        std::size_t workers = std::min<std::size_t>(std::max(config_.max_in_flight, 1), n);
        if (workers <= 1) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                        fn(i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto &t : pool) t.join();
        for (auto &e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    // Observability hooks used by the retry/backoff tests.
    int transport_calls() const { return transport_calls_.load(); }
    std::vector<std::chrono::milliseconds> last_backoff_delays() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return last_delays_;
    }
    void set_sleep_hook(std::function<void(std::chrono::milliseconds)> hook) {
        sleep_hook_ = std::move(hook);
    }

  private:
    Transport &require_transport() {
        if (!transport_) {
            throw GatewayError("no transport configured for profile " +
                               std::string(to_string(config_.profile)));
        }
        return *transport_;
    }

    template <typename Fn>
    auto call_with_retries(Fn &&fn) -> decltype(fn()) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            last_delays_.clear();
        }
        std::string last_error;
        auto delay = config_.retry.base_delay;
        for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
            if (attempt > 0) {
                {
                    std::lock_guard<std::mutex> lock(mutex_);
                    last_delays_.push_back(delay);
                }
                if (sleep_hook_) {
                    sleep_hook_(delay);
                } else {
                    std::this_thread::sleep_for(delay);
                }
                auto next = std::chrono::milliseconds(static_cast<std::int64_t>(
                    static_cast<double>(delay.count()) * std::max(config_.retry.multiplier, 1.0)));
                delay = std::min(next, config_.retry.max_delay);
            }
            try {
                transport_calls_.fetch_add(1);
                return fn();
            } catch (const std::exception &e) {
                last_error = e.what();
            }
        }
        throw GatewayError("transport failed after " + std::to_string(config_.retry.max_retries + 1) +
                           " attempts: " + last_error);
    }

    EmbeddingVector make_embedding(std::vector<double> values) const {
        if (config_.embedding_dim != 0 && values.size() != config_.embedding_dim) {
            throw GatewayError("embedding dimension mismatch: expected " +
                               std::to_string(config_.embedding_dim) + ", got " +
                               std::to_string(values.size()));
        }
        for (double v : values) {
            if (!std::isfinite(v)) {
                throw GatewayError("embedding contains a non-finite entry");
            }
        }
        return EmbeddingVector{std::move(values), config_.embed_model};
    }

    void load_fixture_file(const std::filesystem::path &path) {
        nlohmann::json j = nlohmann::json::parse(io::read_file(path));
        if (!j.is_object()) {
            throw Error("fixture file must be a JSON object mapping key -> response: " + path.string());
        }
        std::lock_guard<std::mutex> lock(mutex_);
        for (auto &[key, value] : j.items()) {
            fixtures_[key] = normalize_response(value);
        }
    }

    // Fixture authors may write a bare string (chat text) or a bare array
    // (embedding values); both normalize to the canonical response object.
    static nlohmann::json normalize_response(const nlohmann::json &value) {
        if (value.is_string()) return nlohmann::json{{"text", value.get<std::string>()}};
        if (value.is_array()) return nlohmann::json{{"values", value}};
        return value;
    }

    std::optional<nlohmann::json> lookup(const std::string &key) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) {
            return it->second;
        }
        if (!config_.cache_dir.empty()) {
            auto path = config_.cache_dir / (key + ".json");
            if (std::filesystem::exists(path)) {
                nlohmann::json j = nlohmann::json::parse(io::read_file(path));
                nlohmann::json response = normalize_response(j.contains("response") ? j.at("response") : j);
                memory_[key] = response;
                return response;
            }
        }
        if (auto it = fixtures_.find(key); it != fixtures_.end()) {
            memory_[key] = it->second;
            return it->second;
        }
        return std::nullopt;
    }

    void store(const std::string &key, const std::string &kind, const nlohmann::json &response) {
        std::lock_guard<std::mutex> lock(mutex_);
        memory_[key] = response;
        if (config_.profile == GatewayProfile::record && !config_.cache_dir.empty()) {
            nlohmann::json entry = {{"key", key}, {"kind", kind}, {"response", response}};
            io::atomic_write_file(config_.cache_dir / (key + ".json"), entry.dump(2) + "\n");
        }
    }

    GatewayConfig config_;
    std::shared_ptr<Transport> transport_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, nlohmann::json> memory_;
    std::unordered_map<std::string, nlohmann::json> fixtures_;
    std::atomic<int> transport_calls_{0};
    std::vector<std::chrono::milliseconds> last_delays_;
    std::function<void(std::chrono::milliseconds)> sleep_hook_;
};

} // namespace vcasft
