#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "affectrl/metrics.hpp"
#include "affectrl/policy.hpp"
#include "affectrl/rewards.hpp"
#include "affectrl/scene.hpp"
#include "affectrl/util.hpp"

namespace affectrl {

struct ObjectiveConfig {
    double clip_epsilon = 0.2;  // undocumented upstream; conventional default
    double kl_beta = 0.01;      // undocumented upstream; conventional default
    std::size_t group_size = 8;
    double std_floor = 1e-8;    // below this, a group counts as constant

    void validate() const {
        if (clip_epsilon <= 0.0) throw std::invalid_argument("clip_epsilon must be positive");
        if (kl_beta < 0.0) throw std::invalid_argument("kl_beta must be non-negative");
        if (group_size < 2) throw std::invalid_argument("group_size must be at least 2");
        if (std_floor <= 0.0) throw std::invalid_argument("std_floor must be positive");
    }
};

struct RolloutRecord {
    std::string text;
    TraceChoices choices{};
    double old_logprob = 0.0;
    RewardBreakdown reward;
};

// The G rollouts sampled for one prompt, their rewards, and the group-
// normalized advantages.
struct RolloutGroup {
    std::string prompt_id;
    std::vector<RolloutRecord> rollouts;
    std::vector<double> overall;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> advantages;
};

// Population mean and population standard deviation (divide by G).
inline std::pair<double, double> group_statistics(std::span<const double> rewards) {
    if (rewards.size() < 2)
        throw std::invalid_argument("group_statistics: need at least 2 rewards");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    return {mean, std::sqrt(var)};
}

// (r_i - mu) / sigma. A group with sigma below the floor is constant for
// optimization purposes: every advantage is 0 and only the KL term acts.
inline std::vector<double> normalize_advantages(std::span<const double> rewards,
                                                double std_floor) {
    auto [mean, stddev] = group_statistics(rewards);
    std::vector<double> adv(rewards.size(), 0.0);
    if (stddev < std_floor) return adv;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / stddev;
    return adv;
}

inline double clip_surrogate(double ratio, double advantage, double clip_epsilon) {
    if (!(ratio > 0.0)) throw std::invalid_argument("clip_surrogate: ratio must be positive");
    if (clip_epsilon <= 0.0) throw std::invalid_argument("clip_surrogate: epsilon must be positive");
    double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

// Per-sample KL estimator exp(d) - d - 1 with d = ref - policy; zero iff the
// log-probs agree, strictly positive otherwise.
inline double kl_term(double policy_logprob, double ref_logprob) {
    if (!std::isfinite(policy_logprob) || !std::isfinite(ref_logprob))
        throw std::invalid_argument("kl_term: log-probabilities must be finite");
    double delta = ref_logprob - policy_logprob;
    return std::exp(delta) - delta - 1.0;
}

inline RolloutGroup build_group(std::string prompt_id, std::vector<RolloutRecord> rollouts,
                                const ObjectiveConfig& config) {
    config.validate();
    if (rollouts.size() != config.group_size)
        throw std::invalid_argument("build_group: rollout count does not match group_size");
    RolloutGroup g;
    g.prompt_id = std::move(prompt_id);
    g.rollouts = std::move(rollouts);
    g.overall.reserve(g.rollouts.size());
    for (const auto& r : g.rollouts) g.overall.push_back(r.reward.overall);
    auto [mean, stddev] = group_statistics(g.overall);
    g.mean = mean;
    g.stddev = stddev;
    g.advantages = normalize_advantages(g.overall, config.std_floor);
    return g;
}

// Clipped surrogate with KL anchor for one group:
//   (1/G) sum min(r_i A_i, clip(r_i) A_i) - beta (1/G) sum kl_i
// with r_i the sequence-level ratio exp(logpi_theta - logpi_old).
inline double grpo_objective(const RolloutGroup& group, const std::vector<double>& features,
                             const ToyPolicy& policy, const ToyPolicy& ref_policy,
                             const ObjectiveConfig& config) {
    config.validate();
    if (group.rollouts.size() != config.group_size ||
        group.advantages.size() != group.rollouts.size())
        throw std::invalid_argument("grpo_objective: group does not match config");
    const double g = static_cast<double>(group.rollouts.size());
    double surrogate = 0.0;
    double kl = 0.0;
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const auto& r = group.rollouts[i];
        double lp = policy.log_prob(features, r.choices);
        double ratio = std::exp(lp - r.old_logprob);
        surrogate += clip_surrogate(ratio, group.advantages[i], config.clip_epsilon);
        kl += kl_term(lp, ref_policy.log_prob(features, r.choices));
    }
    return surrogate / g - config.kl_beta * kl / g;
}

// Exact gradient of grpo_objective in theta. A rollout whose ratio sits in
// the clipped flat region contributes zero surrogate gradient.
inline PolicyGrad grpo_gradient(const RolloutGroup& group, const std::vector<double>& features,
                                const ToyPolicy& policy, const ToyPolicy& ref_policy,
                                const ObjectiveConfig& config) {
    config.validate();
    if (group.rollouts.size() != config.group_size ||
        group.advantages.size() != group.rollouts.size())
        throw std::invalid_argument("grpo_gradient: group does not match config");
    const double g = static_cast<double>(group.rollouts.size());
    PolicyGrad total = policy.zero_grad();
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
        const auto& r = group.rollouts[i];
        double lp = policy.log_prob(features, r.choices);
        double ratio = std::exp(lp - r.old_logprob);
        if (!(ratio > 0.0)) throw std::invalid_argument("grpo_gradient: ratio must be positive");
        double adv = group.advantages[i];

        double coeff = 0.0;
        // min() takes the unclipped branch unless the ratio escaped the
        // window in the direction the advantage is pushing.
        bool clipped_flat = (adv > 0.0 && ratio > 1.0 + config.clip_epsilon) ||
                            (adv < 0.0 && ratio < 1.0 - config.clip_epsilon);
        if (!clipped_flat) coeff += adv * ratio;

        double delta = ref_policy.log_prob(features, r.choices) - lp;
        coeff += config.kl_beta * (std::exp(delta) - 1.0);

        if (coeff != 0.0) total.axpy(coeff / g, policy.log_prob_gradient(features, r.choices));
    }
    return total;
}

// Everything a training step needs besides the policies.
struct TrainContext {
    const EmotionTaxonomy* taxonomy = nullptr;
    const ClauseBank* bank = nullptr;
    const TriggerVocabulary* vocab = nullptr;
    Judge* judge = nullptr;
    RewardWeights weights;
    ObjectiveConfig objective;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;

    void validate() const {
        if (!taxonomy || !bank || !vocab || !judge)
            throw std::invalid_argument("TrainContext: missing taxonomy, bank, vocab, or judge");
        weights.validate();
        objective.validate();
        if (learning_rate < 0.0) throw std::invalid_argument("learning_rate must be non-negative");
    }
};

// One optimization step over a batch of prompts: sample G rollouts per
// prompt from the old policy (refreshed here, at step start), score them,
// normalize advantages within each group, and ascend the averaged gradient.
// Throws before touching the policy if any rollout cannot be scored, so a
// failed step leaves parameters bit-identical.
inline StepMetrics training_step(ToyPolicy& policy, const ToyPolicy& ref_policy,
                                 std::span<const SyntheticScene* const> batch,
                                 const TrainContext& ctx, int step_index) {
    ctx.validate();
    if (batch.empty()) throw std::invalid_argument("training_step: empty batch");
    auto t0 = std::chrono::steady_clock::now();

    const ToyPolicy old_policy = policy.snapshot();
    const std::size_t g = ctx.objective.group_size;

    std::vector<RolloutGroup> groups;
    groups.reserve(batch.size());
    std::vector<std::vector<double>> group_features;
    group_features.reserve(batch.size());

    StepMetrics m;
    m.step = step_index;
    double n_rollouts = 0.0;

    for (std::size_t p = 0; p < batch.size(); ++p) {
        const SyntheticScene& scene = *batch[p];
        SceneRef ref{scene.scene_id, scene_caption(scene, *ctx.vocab)};
        std::vector<RolloutRecord> rollouts;
        rollouts.reserve(g);
        for (std::size_t k = 0; k < g; ++k) {
            auto rng = make_rng(ctx.seed, static_cast<std::uint64_t>(step_index),
                                fnv1a64(scene.scene_id), k);
            auto sample = sample_output(old_policy, scene.features, *ctx.bank, *ctx.taxonomy, rng);
            RolloutRecord rec;
            rec.text = std::move(sample.text);
            rec.choices = sample.choices;
            rec.old_logprob = sample.logprob;
            rec.reward = score_rollout(rec.text, ref, scene.gold_emotion, *ctx.taxonomy,
                                       ctx.weights, *ctx.judge);
            m.mean_overall += rec.reward.overall;
            m.mean_acc += rec.reward.accuracy;
            m.mean_format += rec.reward.format;
            m.mean_cons += rec.reward.consistency;
            m.mean_coh += rec.reward.coherence;
            n_rollouts += 1.0;
            rollouts.push_back(std::move(rec));
        }
        groups.push_back(build_group(scene.scene_id, std::move(rollouts), ctx.objective));
        group_features.push_back(scene.features);
    }

    m.mean_overall /= n_rollouts;
    m.mean_acc /= n_rollouts;
    m.mean_format /= n_rollouts;
    m.mean_cons /= n_rollouts;
    m.mean_coh /= n_rollouts;

    // Objective, KL, and gradient are evaluated at the pre-update policy.
    PolicyGrad grad = policy.zero_grad();
    const double n_groups = static_cast<double>(groups.size());
    for (std::size_t p = 0; p < groups.size(); ++p) {
        m.objective += grpo_objective(groups[p], group_features[p], policy, ref_policy,
                                      ctx.objective) / n_groups;
        for (const auto& r : groups[p].rollouts)
            m.mean_kl += kl_term(policy.log_prob(group_features[p], r.choices),
                                 ref_policy.log_prob(group_features[p], r.choices)) / n_rollouts;
        grad.axpy(1.0 / n_groups, grpo_gradient(groups[p], group_features[p], policy, ref_policy,
                                                ctx.objective));
    }

    policy.apply_gradient(grad, ctx.learning_rate);

    auto t1 = std::chrono::steady_clock::now();
    m.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return m;
}

using MetricsSink = std::function<void(const StepMetrics&)>;

// Algorithm loop: the reference policy freezes at entry, the old policy
// refreshes every step, batches cycle deterministically through the
// dataset. The policy is trained in place (judges inspecting the live
// policy keep a stable address). Metrics reach the sink as each step
// completes, so an aborting step still leaves a prefix of the log behind.
inline std::vector<StepMetrics> run_training(ToyPolicy& policy,
                                             const std::vector<SyntheticScene>& dataset,
                                             const TrainContext& ctx, int steps,
                                             std::size_t batch_size,
                                             const MetricsSink& sink = {}) {
    ctx.validate();
    if (dataset.empty()) throw std::invalid_argument("run_training: empty dataset");
    if (steps < 0) throw std::invalid_argument("run_training: negative step count");
    if (batch_size == 0) batch_size = dataset.size();
    batch_size = std::min(batch_size, dataset.size());

    const ToyPolicy ref_policy = policy.snapshot();
    std::vector<StepMetrics> metrics;
    metrics.reserve(static_cast<std::size_t>(steps));

    for (int step = 0; step < steps; ++step) {
        std::vector<const SyntheticScene*> batch;
        batch.reserve(batch_size);
        for (std::size_t j = 0; j < batch_size; ++j) {
            std::size_t idx = (static_cast<std::size_t>(step) * batch_size + j) % dataset.size();
            batch.push_back(&dataset[idx]);
        }
        StepMetrics m = training_step(policy, ref_policy, batch, ctx, step);
        if (sink) sink(m);
        metrics.push_back(m);
    }
    return metrics;
}

}  // namespace affectrl
