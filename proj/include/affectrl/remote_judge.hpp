#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affectrl/rewards.hpp"
#include "affectrl/taxonomy.hpp"
#include "httplib.h"
#include "json.hpp"

namespace affectrl {

struct RemoteJudgeConfig {
    std::string base_url;               // e.g. "http://localhost:8000"
    std::string model_name;
    std::string api_key_env = "AFFECTRL_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 2;
    double temperature = 0.0;           // deterministic decoding unless overridden
    bool send_image_url = false;        // caption surrogate by default
    int max_in_flight = 4;

    void validate() const {
        if (base_url.empty()) throw std::invalid_argument("remote judge: base_url required");
        if (model_name.empty()) throw std::invalid_argument("remote judge: model_name required");
        if (timeout_ms <= 0) throw std::invalid_argument("remote judge: timeout_ms must be positive");
        if (max_retries < 0) throw std::invalid_argument("remote judge: max_retries must be >= 0");
        if (max_in_flight < 1 || max_in_flight > 256)
            throw std::invalid_argument("remote judge: max_in_flight must be in [1, 256]");
    }
};

// Transport seam: takes the request path and JSON body, returns HTTP status
// and response body. status 0 means a transport-level failure.
struct HttpResult {
    int status = 0;
    std::string body;
};
using ChatTransport = std::function<HttpResult(const std::string& path, const std::string& body)>;

// Replays recorded request/response pairs in order. Each fixture entry may
// pin substrings the outgoing body must contain (prompt fidelity).
//
// Fixture file: JSON array of
//   {"require_contains": ["..."], "status": 200, "reply": "..."}
// or {"status": 500, "body": "..."} for raw error bodies.
class FixtureTransport {
public:
    static FixtureTransport from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("fixture transport: cannot open " + path);
        nlohmann::json j;
        in >> j;
        return FixtureTransport(j);
    }

    explicit FixtureTransport(const nlohmann::json& entries) {
        for (const auto& e : entries) {
            Entry entry;
            entry.status = e.value("status", 200);
            if (e.contains("require_contains"))
                entry.require_contains = e["require_contains"].get<std::vector<std::string>>();
            if (e.contains("reply")) {
                nlohmann::json body = {
                    {"choices",
                     {{{"message", {{"role", "assistant"}, {"content", e["reply"].get<std::string>()}}}}}}};
                entry.body = body.dump();
            } else {
                entry.body = e.value("body", std::string("{}"));
            }
            entries_.push_back(std::move(entry));
        }
    }

    HttpResult operator()(const std::string& /*path*/, const std::string& body) {
        if (next_ >= entries_.size())
            throw std::runtime_error("fixture transport: no fixture left for request");
        const Entry& e = entries_[next_++];
        for (const auto& needle : e.require_contains)
            if (body.find(needle) == std::string::npos)
                throw std::runtime_error("fixture transport: request body missing expected text: " +
                                         needle);
        return {e.status, e.body};
    }

    std::size_t requests_served() const { return next_; }

private:
    struct Entry {
        int status = 200;
        std::string body;
        std::vector<std::string> require_contains;
    };
    std::vector<Entry> entries_;
    std::size_t next_ = 0;
};

// Live HTTP transport over cpp-httplib.
inline ChatTransport make_http_transport(const RemoteJudgeConfig& config) {
    return [config](const std::string& path, const std::string& body) -> HttpResult {
        httplib::Client client(config.base_url);
        client.set_connection_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
        client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) return {0, ""};
        return {res->status, res->body};
    };
}

// Judge backed by an OpenAI-style chat-completion endpoint. The consistency
// request sends the image surrogate and step-1 text ahead of the exact
// consistency prompt; the coherence request sends the steps-1,2 text, the
// exact coherence prompt, and the taxonomy as an enumerated option list.
class RemoteJudge : public Judge {
public:
    explicit RemoteJudge(RemoteJudgeConfig config, ChatTransport transport = {})
        : config_(validated(std::move(config))),
          transport_(transport ? std::move(transport) : make_http_transport(config_)),
          in_flight_(config_.max_in_flight) {}

    Verdict judge_yes_no(const SceneRef& scene, std::string_view step1_text,
                         std::string_view prompt) override {
        nlohmann::json content = nlohmann::json::array();
        if (config_.send_image_url && !scene.caption.empty()) {
            content.push_back({{"type", "image_url"}, {"image_url", {{"url", scene.caption}}}});
        } else {
            content.push_back({{"type", "text"},
                               {"text", "Image description: " + (scene.caption.empty()
                                                                     ? scene.id
                                                                     : scene.caption)}});
        }
        content.push_back(
            {{"type", "text"}, {"text", std::string(step1_text) + "\n\n" + std::string(prompt)}});

        std::string reply = complete(content, /*retry_unparseable=*/true, [](std::string_view r) {
            return normalize_yes_no_reply(r).has_value();
        });
        auto verdict = normalize_yes_no_reply(reply);
        if (!verdict) throw JudgeFailure("remote judge: reply is neither yes nor no: " + reply);
        return *verdict;
    }

    std::string judge_emotion(std::string_view steps12_text, std::string_view prompt,
                              const EmotionTaxonomy& taxonomy) override {
        std::string options;
        for (std::size_t i = 0; i < taxonomy.labels().size(); ++i) {
            if (i) options += ", ";
            options += taxonomy.labels()[i];
        }
        nlohmann::json content = nlohmann::json::array();
        content.push_back({{"type", "text"}, {"text", std::string(steps12_text)}});
        content.push_back({{"type", "text"},
                           {"text", std::string(prompt) + "\nOptions: " + options + "."}});

        std::string reply = complete(content, /*retry_unparseable=*/false, {});
        std::string label = normalize_emotion_reply(reply, taxonomy);
        if (label == kNoMatchLabel)
            std::fprintf(stderr, "[remote_judge] reply maps to no taxonomy label: %s\n",
                         reply.c_str());
        return label;
    }

    std::size_t requests_sent() const { return requests_sent_; }

private:
    static RemoteJudgeConfig validated(RemoteJudgeConfig config) {
        config.validate();
        return config;
    }

    // One judgment = at most 1 + max_retries requests.
    std::string complete(const nlohmann::json& content, bool retry_unparseable,
                         const std::function<bool(std::string_view)>& parseable) {
        nlohmann::json request = {
            {"model", config_.model_name},
            {"temperature", config_.temperature},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
        };
        const std::string body = request.dump();

        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            in_flight_.acquire();
            HttpResult res;
            try {
                ++requests_sent_;
                res = transport_("/v1/chat/completions", body);
            } catch (...) {
                in_flight_.release();
                throw;
            }
            in_flight_.release();

            if (res.status != 200) {
                last_error = "http status " + std::to_string(res.status);
                continue;
            }
            std::string reply;
            try {
                auto j = nlohmann::json::parse(res.body);
                reply = j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("malformed response: ") + e.what();
                continue;
            }
            if (retry_unparseable && parseable && !parseable(reply)) {
                last_error = "unparseable reply: " + reply;
                continue;
            }
            return reply;
        }
        throw JudgeFailure("remote judge: giving up after " +
                           std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
    }

    RemoteJudgeConfig config_;
    ChatTransport transport_;
    std::counting_semaphore<256> in_flight_;
    std::size_t requests_sent_ = 0;
};

}  // namespace affectrl
