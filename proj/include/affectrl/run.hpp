#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "affectrl/checkpoint.hpp"
#include "affectrl/config.hpp"
#include "affectrl/grpo.hpp"
#include "affectrl/metrics.hpp"
#include "affectrl/policy.hpp"
#include "affectrl/remote_judge.hpp"
#include "affectrl/rewards.hpp"
#include "affectrl/scene.hpp"
#include "json.hpp"

namespace affectrl {

// Judge that consults the live policy about its own reasoning: step-1 text
// is "describable" iff the clause it names has at-least-uniform probability
// for that scene under the current policy. Coherence falls back to clause
// affinity tags, the only text channel the toy policy has.
class SelfJudge : public Judge {
public:
    SelfJudge(const ClauseBank& bank, const std::vector<SyntheticScene>& scenes)
        : bank_(&bank) {
        for (const auto& s : scenes) scenes_by_id_.emplace(s.scene_id, &s);
    }

    void bind_policy(const ToyPolicy* policy) { policy_ = policy; }

    Verdict judge_yes_no(const SceneRef& scene, std::string_view step1_text,
                         std::string_view /*prompt*/) override {
        if (!policy_) throw JudgeFailure("self judge: no policy bound");
        auto it = scenes_by_id_.find(scene.id);
        if (it == scenes_by_id_.end())
            throw std::invalid_argument("self judge: unknown scene id '" + scene.id + "'");
        std::size_t clause = bank_->trigger_clauses.size();
        for (std::size_t i = 0; i < bank_->trigger_clauses.size(); ++i) {
            if (step1_text.find(bank_->trigger_clauses[i].text) != std::string_view::npos) {
                clause = i;
                break;
            }
        }
        if (clause == bank_->trigger_clauses.size()) return Verdict::No;
        auto probs = policy_->head_probs(it->second->features, Head::Trigger);
        double uniform = 1.0 / static_cast<double>(probs.size());
        return probs[clause] >= uniform ? Verdict::Yes : Verdict::No;
    }

    std::string judge_emotion(std::string_view steps12_text, std::string_view /*prompt*/,
                              const EmotionTaxonomy& /*taxonomy*/) override {
        return oracle_emotion(steps12_text, *bank_);
    }

private:
    const ClauseBank* bank_;
    const ToyPolicy* policy_ = nullptr;
    std::unordered_map<std::string, const SyntheticScene*> scenes_by_id_;
};

// Materialized run state: taxonomy, vocabulary, bank, dataset, judge.
struct RunEnvironment {
    EmotionTaxonomy taxonomy;
    TriggerVocabulary vocab;
    ClauseBank bank;
    std::vector<SyntheticScene> scenes;         // synthetic datasets only
    std::optional<DatasetManifest> manifest;    // manifest datasets only
    std::unique_ptr<Judge> judge;
    SelfJudge* self_judge = nullptr;  // non-null when judge kind is self

    static RunEnvironment from_config(const RunConfig& config) {
        config.validate();
        RunEnvironment env;
        env.taxonomy = resolve_taxonomy(config.taxonomy);
        env.vocab = make_trigger_vocabulary(env.taxonomy);
        env.bank = make_clause_bank(env.taxonomy, env.vocab);
        if (config.dataset.synthetic) {
            env.scenes = generate_dataset(config.seed, config.dataset.synthetic->n, env.taxonomy,
                                          env.vocab, config.dataset.synthetic->gen_params());
        } else {
            env.manifest = load_manifest(*config.dataset.manifest_path, env.taxonomy);
        }

        switch (config.judge.kind) {
            case JudgeKind::Oracle:
                if (!config.dataset.synthetic)
                    throw ConfigError("oracle judge requires a synthetic dataset");
                env.judge = std::make_unique<OracleJudge>(env.taxonomy, env.vocab, env.bank,
                                                          env.scenes);
                break;
            case JudgeKind::Self: {
                if (!config.dataset.synthetic)
                    throw ConfigError("self judge requires a synthetic dataset");
                auto self = std::make_unique<SelfJudge>(env.bank, env.scenes);
                env.self_judge = self.get();
                env.judge = std::move(self);
                break;
            }
            case JudgeKind::Remote:
                env.judge = std::make_unique<RemoteJudge>(config.judge.remote);
                break;
        }
        return env;
    }

    std::size_t feature_dim() const {
        if (scenes.empty()) throw ConfigError("no synthetic scenes in this run");
        return scenes.front().features.size();
    }

    const SyntheticScene& scene_by_id(const std::string& id) const {
        for (const auto& s : scenes)
            if (s.scene_id == id) return s;
        throw std::invalid_argument("unknown scene id: " + id);
    }
};

// Oracle-consistent demonstrations: gold trigger clause, gold reflection,
// matching conclusion, gold answer. No reasoning-chain supervision beyond
// clause selection.
inline std::vector<SftExample> make_demonstrations(const std::vector<SyntheticScene>& scenes,
                                                   const ClauseBank& bank,
                                                   const EmotionTaxonomy& taxonomy,
                                                   std::size_t n, std::uint64_t seed) {
    if (scenes.empty()) throw std::invalid_argument("make_demonstrations: no scenes");
    std::vector<SftExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SyntheticScene& scene = scenes[i % scenes.size()];
        auto rng = make_rng(seed, fnv1a64("demo"), i);

        std::vector<std::size_t> grounded;
        for (std::size_t c = 0; c < bank.trigger_clauses.size(); ++c) {
            for (const auto& tid : bank.trigger_clauses[c].trigger_ids) {
                if (std::find(scene.trigger_ids.begin(), scene.trigger_ids.end(), tid) !=
                    scene.trigger_ids.end()) {
                    grounded.push_back(c);
                    break;
                }
            }
        }
        if (grounded.empty())
            throw std::invalid_argument("make_demonstrations: scene has no grounded clause");
        std::uniform_int_distribution<std::size_t> pick(0, grounded.size() - 1);

        SftExample ex;
        ex.features = scene.features;
        ex.choices[0] = grounded[pick(rng)];
        ex.choices[1] = bank.reflection_index(scene.gold_emotion);
        ex.choices[2] = bank.conclusion_index(scene.valence, scene.arousal);
        ex.choices[3] = taxonomy.label_index(scene.gold_emotion);
        out.push_back(std::move(ex));
    }
    return out;
}

namespace detail {

inline void ensure_out_dir(const RunConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("output directory ('out') must be set");
    std::filesystem::create_directories(config.out_dir);
}

inline std::string out_path(const RunConfig& config, std::string_view name) {
    return (std::filesystem::path(config.out_dir) / name).string();
}

inline void write_config(const RunConfig& config) {
    std::ofstream out(out_path(config, "config.json"));
    out << config.to_json().dump(2) << '\n';
}

inline ToyPolicy initial_policy(const RunConfig& config, const RunEnvironment& env) {
    if (!config.init_checkpoint.empty())
        return load_checkpoint(config.init_checkpoint, env.bank, env.taxonomy);
    return ToyPolicy::uniform_for(env.bank, env.taxonomy, env.feature_dim(), config.temperature);
}

}  // namespace detail

// Writes scenes.jsonl (full feature records), manifest.jsonl (id/label/
// caption), and the taxonomy actually used.
inline void cmd_gen_data(const RunConfig& config) {
    config.validate();
    if (!config.dataset.synthetic) throw ConfigError("gen-data needs a synthetic dataset spec");
    RunEnvironment env = RunEnvironment::from_config(config);
    detail::ensure_out_dir(config);

    std::ofstream scenes_out(detail::out_path(config, "scenes.jsonl"));
    std::ofstream manifest_out(detail::out_path(config, "manifest.jsonl"));
    for (const auto& s : env.scenes) {
        nlohmann::ordered_json j;
        j["id"] = s.scene_id;
        j["label"] = s.gold_emotion;
        j["valence"] = to_string(s.valence);
        j["arousal"] = to_string(s.arousal);
        j["triggers"] = s.trigger_ids;
        j["features"] = s.features;
        scenes_out << j.dump() << '\n';

        nlohmann::ordered_json m;
        m["id"] = s.scene_id;
        m["label"] = s.gold_emotion;
        m["caption"] = scene_caption(s, env.vocab);
        manifest_out << m.dump() << '\n';
    }
    std::ofstream tax_out(detail::out_path(config, "taxonomy.json"));
    tax_out << env.taxonomy.to_json().dump(2) << '\n';
}

// Supervised cold start: fits the policy to oracle-consistent
// demonstrations and writes the checkpoint plus the log-likelihood curve.
inline void cmd_cold_start(const RunConfig& config) {
    config.validate();
    RunEnvironment env = RunEnvironment::from_config(config);
    if (env.scenes.empty()) throw ConfigError("cold-start needs a synthetic dataset");
    detail::ensure_out_dir(config);
    detail::write_config(config);

    ToyPolicy policy = detail::initial_policy(config, env);
    auto demos = make_demonstrations(env.scenes, env.bank, env.taxonomy, config.cold_start.n_demos,
                                     config.seed);
    std::vector<double> curve;
    policy = sft_update(policy, demos, config.cold_start.epochs, config.cold_start.lr, &curve);

    save_checkpoint(detail::out_path(config, "checkpoint.json"), policy, env.bank, env.taxonomy);
    std::ofstream loss_out(detail::out_path(config, "sft_loss.csv"));
    loss_out << "epoch,mean_nll\n";
    loss_out.precision(17);
    for (std::size_t e = 0; e < curve.size(); ++e) loss_out << e << ',' << -curve[e] << '\n';
}

// Full training command. Returns the step metrics for callers that want
// them; everything is also on disk under config.out_dir.
inline std::vector<StepMetrics> cmd_train(const RunConfig& config) {
    config.validate();
    RunEnvironment env = RunEnvironment::from_config(config);
    if (env.scenes.empty())
        throw ConfigError("train needs a synthetic dataset (manifests are score/eval surfaces)");
    detail::ensure_out_dir(config);
    detail::write_config(config);

    ToyPolicy policy = detail::initial_policy(config, env);
    if (config.cold_start.enabled) {
        auto demos = make_demonstrations(env.scenes, env.bank, env.taxonomy,
                                         config.cold_start.n_demos, config.seed);
        policy = sft_update(policy, demos, config.cold_start.epochs, config.cold_start.lr);
    }
    if (env.self_judge) env.self_judge->bind_policy(&policy);

    TrainContext ctx;
    ctx.taxonomy = &env.taxonomy;
    ctx.bank = &env.bank;
    ctx.vocab = &env.vocab;
    ctx.judge = env.judge.get();
    ctx.weights = config.weights();
    ctx.objective = config.objective();
    ctx.learning_rate = config.learning_rate;
    ctx.seed = config.seed;

    MetricsWriter writer(detail::out_path(config, "metrics.jsonl"));
    std::vector<StepMetrics> metrics;
    try {
        metrics = run_training(policy, env.scenes, ctx, config.steps, config.batch_size,
                               [&](const StepMetrics& m) { writer.append(m); });
    } catch (...) {
        writer.write_csv(detail::out_path(config, "metrics.csv"));  // partial log
        throw;
    }
    writer.write_csv(detail::out_path(config, "metrics.csv"));
    save_checkpoint(detail::out_path(config, "checkpoint.json"), policy, env.bank, env.taxonomy);
    return metrics;
}

struct EvalReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // label -> (hits, n)
    double mean_format = 0.0;
    double mean_accuracy = 0.0;
    double mean_consistency = 0.0;
    double mean_coherence = 0.0;
    double mean_rer = 0.0;
    double mean_overall = 0.0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["n"] = n;
        j["accuracy"] = accuracy;
        nlohmann::ordered_json pc;
        for (const auto& [label, hn] : per_class) {
            pc[label] = {{"n", hn.second},
                         {"accuracy", hn.second ? static_cast<double>(hn.first) / hn.second : 0.0}};
        }
        j["per_class"] = pc;
        j["mean_rewards"] = {{"format", mean_format},         {"accuracy", mean_accuracy},
                             {"consistency", mean_consistency}, {"coherence", mean_coherence},
                             {"rer", mean_rer},                {"overall", mean_overall}};
        return j;
    }
};

// Greedy (argmax) decoding over the evaluation set; reports overall and
// per-class accuracy plus mean reward components.
inline EvalReport cmd_eval(const RunConfig& config, const std::string& checkpoint_path) {
    config.validate();
    RunEnvironment env = RunEnvironment::from_config(config);
    if (env.scenes.empty()) throw ConfigError("eval needs a synthetic dataset");

    ToyPolicy policy = load_checkpoint(checkpoint_path, env.bank, env.taxonomy);
    if (env.self_judge) env.self_judge->bind_policy(&policy);

    EvalReport report;
    for (const auto& scene : env.scenes) {
        auto choices = argmax_choices(policy, scene.features);
        std::string predicted = env.taxonomy.labels()[choices[3]];
        bool hit = predicted == scene.gold_emotion;
        auto& [hits, count] = report.per_class[scene.gold_emotion];
        hits += hit ? 1 : 0;
        ++count;
        report.accuracy += hit ? 1.0 : 0.0;
        ++report.n;

        std::string text = render_trace(compose_trace(choices, env.bank, env.taxonomy));
        SceneRef ref{scene.scene_id, scene_caption(scene, env.vocab)};
        RewardBreakdown b = score_rollout(text, ref, scene.gold_emotion, env.taxonomy,
                                          config.weights(), *env.judge);
        report.mean_format += b.format;
        report.mean_accuracy += b.accuracy;
        report.mean_consistency += b.consistency;
        report.mean_coherence += b.coherence;
        report.mean_rer += b.rer;
        report.mean_overall += b.overall;
    }
    if (report.n) {
        double n = static_cast<double>(report.n);
        report.accuracy /= n;
        report.mean_format /= n;
        report.mean_accuracy /= n;
        report.mean_consistency /= n;
        report.mean_coherence /= n;
        report.mean_rer /= n;
        report.mean_overall /= n;
    }

    if (!config.out_dir.empty()) {
        detail::ensure_out_dir(config);
        nlohmann::ordered_json j = report.to_json();
        j["checkpoint"] = checkpoint_path;
        std::ofstream out(detail::out_path(config, "report.json"));
        out << j.dump(2) << '\n';
    }
    return report;
}

// Offline reward scoring of externally produced traces against the
// configured dataset and judge. Input: JSONL {id, output}. Output
// JSONL mirrors the reward breakdown plus a parse flag.
inline std::size_t cmd_score_traces(const RunConfig& config, const std::string& traces_path) {
    config.validate();
    RunEnvironment env = RunEnvironment::from_config(config);
    if (config.judge.kind != JudgeKind::Remote && env.scenes.empty())
        throw ConfigError("score-traces with a non-remote judge needs a synthetic dataset");
    ToyPolicy self_policy;
    if (env.self_judge) {
        if (config.init_checkpoint.empty())
            throw ConfigError("score-traces with the self judge needs init_checkpoint");
        self_policy = load_checkpoint(config.init_checkpoint, env.bank, env.taxonomy);
        env.self_judge->bind_policy(&self_policy);
    }
    detail::ensure_out_dir(config);

    std::unordered_map<std::string, std::pair<SceneRef, std::string>> records;  // id -> (ref, gold)
    for (const auto& s : env.scenes)
        records.emplace(s.scene_id,
                        std::make_pair(SceneRef{s.scene_id, scene_caption(s, env.vocab)},
                                       s.gold_emotion));
    if (env.manifest)
        for (const auto& r : env.manifest->records)
            records.emplace(r.id, std::make_pair(SceneRef{r.id, r.caption}, r.label));

    std::ifstream in(traces_path);
    if (!in) throw ConfigError("cannot open traces file: " + traces_path);
    std::ofstream out(detail::out_path(config, "scored.jsonl"));

    std::string line;
    std::size_t line_no = 0, scored = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("traces file line " + std::to_string(line_no) + ": invalid JSON (" +
                              e.what() + ")");
        }
        std::string id = j.at("id").get<std::string>();
        std::string text = j.at("output").get<std::string>();
        auto it = records.find(id);
        if (it == records.end())
            throw ConfigError("traces file line " + std::to_string(line_no) + ": unknown id '" +
                              id + "'");

        RewardBreakdown b = score_rollout(text, it->second.first, it->second.second, env.taxonomy,
                                          config.weights(), *env.judge);
        auto parsed = parse_trace(text);
        nlohmann::ordered_json row;
        row["id"] = id;
        row["parse_ok"] = static_cast<bool>(parsed);
        if (!parsed) row["failure"] = to_string(parsed.failure.kind);
        row["format"] = b.format;
        row["accuracy"] = b.accuracy;
        row["consistency"] = b.consistency;
        row["coherence"] = b.coherence;
        row["rer"] = b.rer;
        row["overall"] = b.overall;
        out << row.dump() << '\n';
        ++scored;
    }
    return scored;
}

}  // namespace affectrl
