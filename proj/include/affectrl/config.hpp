#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "affectrl/grpo.hpp"
#include "affectrl/remote_judge.hpp"
#include "affectrl/rewards.hpp"
#include "affectrl/scene.hpp"
#include "json.hpp"

namespace affectrl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyntheticSpec {
    std::size_t n = 64;
    std::size_t feature_dim = 0;  // 0 = labels + triggers + 4
    double noise_sigma = 0.1;
    double distractor_prob = 0.25;

    SceneGenParams gen_params() const { return {feature_dim, noise_sigma, distractor_prob}; }
};

struct DatasetSpec {
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::string> manifest_path;
};

enum class JudgeKind { Oracle, Self, Remote };

inline std::string to_string(JudgeKind k) {
    switch (k) {
        case JudgeKind::Oracle: return "oracle";
        case JudgeKind::Self: return "self";
        case JudgeKind::Remote: return "remote";
    }
    return "oracle";
}

inline JudgeKind judge_kind_from_string(std::string_view s) {
    if (s == "oracle") return JudgeKind::Oracle;
    if (s == "self") return JudgeKind::Self;
    if (s == "remote") return JudgeKind::Remote;
    throw ConfigError("unknown judge kind: " + std::string(s) + " (expected oracle|self|remote)");
}

struct JudgeSpec {
    JudgeKind kind = JudgeKind::Oracle;
    RemoteJudgeConfig remote;
};

struct ColdStartConfig {
    bool enabled = false;
    std::size_t n_demos = 256;
    std::size_t epochs = 2;
    double lr = 0.5;
};

struct RunConfig {
    std::uint64_t seed = 7;
    std::string taxonomy = "builtin:emotions8";  // builtin:<name> or a JSON file path
    DatasetSpec dataset = {SyntheticSpec{}, std::nullopt};
    std::size_t group_size = 8;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double clip_epsilon = 0.2;
    double kl_beta = 0.01;
    double learning_rate = 0.05;
    double temperature = 1.0;
    int steps = 500;
    std::size_t batch_size = 16;
    std::string init_checkpoint;  // optional starting checkpoint for train/eval
    ColdStartConfig cold_start;
    JudgeSpec judge;
    std::string out_dir;

    RewardWeights weights() const { return {lambda1, lambda2}; }

    ObjectiveConfig objective() const {
        ObjectiveConfig c;
        c.clip_epsilon = clip_epsilon;
        c.kl_beta = kl_beta;
        c.group_size = group_size;
        return c;
    }

    void validate() const {
        weights().validate();
        objective().validate();
        if (steps < 0) throw ConfigError("steps must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
        if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
        if (taxonomy.empty()) throw ConfigError("taxonomy must be set");
        bool has_synth = dataset.synthetic.has_value();
        bool has_manifest = dataset.manifest_path.has_value();
        if (has_synth == has_manifest)
            throw ConfigError("dataset must specify exactly one of synthetic | manifest");
        if (cold_start.enabled) {
            if (cold_start.n_demos == 0) throw ConfigError("cold_start.n_demos must be >= 1");
            if (cold_start.lr < 0.0) throw ConfigError("cold_start.lr must be >= 0");
        }
        if (judge.kind == JudgeKind::Remote) judge.remote.validate();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["seed"] = seed;
        j["taxonomy"] = taxonomy;
        nlohmann::ordered_json ds;
        if (dataset.synthetic) {
            ds["synthetic"] = {{"n", dataset.synthetic->n},
                               {"feature_dim", dataset.synthetic->feature_dim},
                               {"noise_sigma", dataset.synthetic->noise_sigma},
                               {"distractor_prob", dataset.synthetic->distractor_prob}};
        }
        if (dataset.manifest_path) ds["manifest"] = *dataset.manifest_path;
        j["dataset"] = ds;
        j["group_size"] = group_size;
        j["lambda1"] = lambda1;
        j["lambda2"] = lambda2;
        j["clip_epsilon"] = clip_epsilon;
        j["kl_beta"] = kl_beta;
        j["learning_rate"] = learning_rate;
        j["temperature"] = temperature;
        j["steps"] = steps;
        j["batch_size"] = batch_size;
        if (!init_checkpoint.empty()) j["init_checkpoint"] = init_checkpoint;
        j["cold_start"] = {{"enabled", cold_start.enabled},
                           {"n_demos", cold_start.n_demos},
                           {"epochs", cold_start.epochs},
                           {"lr", cold_start.lr}};
        nlohmann::ordered_json jj;
        jj["kind"] = to_string(judge.kind);
        if (judge.kind == JudgeKind::Remote) {
            jj["base_url"] = judge.remote.base_url;
            jj["model"] = judge.remote.model_name;
            jj["api_key_env"] = judge.remote.api_key_env;
            jj["timeout_ms"] = judge.remote.timeout_ms;
            jj["max_retries"] = judge.remote.max_retries;
            jj["temperature"] = judge.remote.temperature;
            jj["send_image_url"] = judge.remote.send_image_url;
        }
        j["judge"] = jj;
        j["out"] = out_dir;
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        c.seed = j.value("seed", c.seed);
        c.taxonomy = j.value("taxonomy", c.taxonomy);
        if (j.contains("dataset")) {
            const auto& ds = j["dataset"];
            c.dataset = {};
            if (ds.contains("synthetic")) {
                SyntheticSpec s;
                const auto& sj = ds["synthetic"];
                s.n = sj.value("n", s.n);
                s.feature_dim = sj.value("feature_dim", s.feature_dim);
                s.noise_sigma = sj.value("noise_sigma", s.noise_sigma);
                s.distractor_prob = sj.value("distractor_prob", s.distractor_prob);
                c.dataset.synthetic = s;
            }
            if (ds.contains("manifest")) c.dataset.manifest_path = ds["manifest"].get<std::string>();
        }
        c.group_size = j.value("group_size", c.group_size);
        c.lambda1 = j.value("lambda1", c.lambda1);
        c.lambda2 = j.value("lambda2", c.lambda2);
        c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
        c.kl_beta = j.value("kl_beta", c.kl_beta);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.temperature = j.value("temperature", c.temperature);
        c.steps = j.value("steps", c.steps);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.init_checkpoint = j.value("init_checkpoint", c.init_checkpoint);
        if (j.contains("cold_start")) {
            const auto& cs = j["cold_start"];
            c.cold_start.enabled = cs.value("enabled", c.cold_start.enabled);
            c.cold_start.n_demos = cs.value("n_demos", c.cold_start.n_demos);
            c.cold_start.epochs = cs.value("epochs", c.cold_start.epochs);
            c.cold_start.lr = cs.value("lr", c.cold_start.lr);
        }
        if (j.contains("judge")) {
            const auto& jj = j["judge"];
            c.judge.kind = judge_kind_from_string(jj.value("kind", std::string("oracle")));
            c.judge.remote.base_url = jj.value("base_url", std::string());
            c.judge.remote.model_name = jj.value("model", std::string());
            c.judge.remote.api_key_env = jj.value("api_key_env", c.judge.remote.api_key_env);
            c.judge.remote.timeout_ms = jj.value("timeout_ms", c.judge.remote.timeout_ms);
            c.judge.remote.max_retries = jj.value("max_retries", c.judge.remote.max_retries);
            c.judge.remote.temperature = jj.value("temperature", c.judge.remote.temperature);
            c.judge.remote.send_image_url =
                jj.value("send_image_url", c.judge.remote.send_image_url);
        }
        c.out_dir = j.value("out", c.out_dir);
        return c;
    }

    static RunConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("invalid config JSON: ") + e.what());
        }
        return from_json(j);
    }
};

inline EmotionTaxonomy resolve_taxonomy(const std::string& spec) {
    constexpr std::string_view prefix = "builtin:";
    if (spec.rfind(prefix, 0) == 0) {
        auto name = spec.substr(prefix.size());
        if (auto t = builtin_taxonomy(name)) return *t;
        throw ConfigError("unknown builtin taxonomy: " + name);
    }
    std::ifstream in(spec);
    if (!in) throw ConfigError("cannot open taxonomy file: " + spec);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid taxonomy JSON: ") + e.what());
    }
    return EmotionTaxonomy::from_json(j);
}

}  // namespace affectrl
