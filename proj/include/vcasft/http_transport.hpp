#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "vcasft/gateway.hpp"

namespace vcasft {

/// Live transport speaking the common OpenAI-style chat/embeddings JSON
/// protocol. Endpoint and credentials come from the environment:
///   VCASFT_API_BASE  e.g. "http://localhost:8080"
///   VCASFT_API_KEY   bearer token (optional for local servers)
class HttpTransport final : public Transport {
  public:
    HttpTransport() {
        const char *base = std::getenv("VCASFT_API_BASE");
        if (base == nullptr || *base == '\0') {
            throw GatewayError("live profile requires VCASFT_API_BASE");
        }
        base_url_ = base;
        if (const char *key = std::getenv("VCASFT_API_KEY"); key != nullptr) {
            api_key_ = key;
        }
    }

    std::string complete(const ChatRequest &request) override {
        nlohmann::json messages = nlohmann::json::array();
        if (request.system_text) {
            messages.push_back({{"role", "system"}, {"content", *request.system_text}});
        }
        if (request.image) {
            nlohmann::json content = nlohmann::json::array();
            content.push_back({{"type", "text"}, {"text", request.user_text}});
            content.push_back({{"type", "image_url"},
                               {"image_url",
                                {{"url", "data:" + request.image->media_type + ";base64," +
                                             base64(request.image->bytes)}}}});
            messages.push_back({{"role", "user"}, {"content", content}});
        } else {
            messages.push_back({{"role", "user"}, {"content", request.user_text}});
        }
        nlohmann::json body = {{"model", request.model_id},
                               {"messages", messages},
                               {"temperature", request.temperature},
                               {"max_tokens", request.max_tokens}};
        nlohmann::json reply = post("/v1/chat/completions", body);
        if (!reply.contains("choices") || reply["choices"].empty()) {
            throw GatewayError("chat response has no choices");
        }
        return reply["choices"][0]["message"]["content"].get<std::string>();
    }

    std::vector<double> embed(const std::string &model_id, const std::string &text) override {
        nlohmann::json body = {{"model", model_id}, {"input", nlohmann::json::array({text})}};
        nlohmann::json reply = post("/v1/embeddings", body);
        if (!reply.contains("data") || reply["data"].empty()) {
            throw GatewayError("embedding response has no data");
        }
        return reply["data"][0]["embedding"].get<std::vector<double>>();
    }

  private:
    nlohmann::json post(const std::string &path, const nlohmann::json &body) {
        httplib::Client client(base_url_);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            throw GatewayError("transport error calling " + path);
        }
        if (res->status != 200) {
            throw GatewayError("HTTP " + std::to_string(res->status) + " from " + path + ": " + res->body);
        }
        return nlohmann::json::parse(res->body);
    }

    static std::string base64(const std::string &bytes) {
        static const char *alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        std::string out;
        out.reserve((bytes.size() + 2) / 3 * 4);
        std::size_t i = 0;
        while (i + 2 < bytes.size()) {
            unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                         (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                         static_cast<unsigned char>(bytes[i + 2]);
            out.push_back(alphabet[(v >> 18) & 63]);
            out.push_back(alphabet[(v >> 12) & 63]);
            out.push_back(alphabet[(v >> 6) & 63]);
            out.push_back(alphabet[v & 63]);
            i += 3;
        }
        if (i + 1 == bytes.size()) {
            unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
            out.push_back(alphabet[(v >> 18) & 63]);
            out.push_back(alphabet[(v >> 12) & 63]);
            out += "==";
        } else if (i + 2 == bytes.size()) {
            unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                         (static_cast<unsigned char>(bytes[i + 1]) << 8);
            out.push_back(alphabet[(v >> 18) & 63]);
            out.push_back(alphabet[(v >> 12) & 63]);
            out.push_back(alphabet[(v >> 6) & 63]);
            out.push_back('=');
        }
        return out;
    }

    std::string base_url_;
    std::string api_key_;
};

} // namespace vcasft
