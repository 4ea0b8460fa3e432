#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "affectrl/clause_bank.hpp"
#include "affectrl/taxonomy.hpp"
#include "affectrl/trace.hpp"
#include "affectrl/util.hpp"

namespace affectrl {

// Dense row-major matrix; just enough linear algebra for the policy heads.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::vector<double> matvec(const std::vector<double>& x) const {
        if (x.size() != cols) throw std::invalid_argument("matvec: dimension mismatch");
        std::vector<double> y(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            const double* row = data.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
            y[r] = acc;
        }
        return y;
    }

    void axpy(double alpha, const Matrix& other) {
        if (other.rows != rows || other.cols != cols)
            throw std::invalid_argument("axpy: shape mismatch");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += alpha * other.data[i];
    }

    bool operator==(const Matrix&) const = default;
};

inline std::vector<double> log_softmax(const std::vector<double>& logits) {
    double m = logits[0];
    for (double z : logits) m = std::max(m, z);
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    double lse = m + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
    auto lp = log_softmax(logits);
    for (double& v : lp) v = std::exp(v);
    return lp;
}

// The four categorical heads: one clause per reasoning stage plus the
// answer label.
enum class Head : std::size_t { Trigger = 0, Reflection = 1, Conclusion = 2, Answer = 3 };
inline constexpr std::size_t kNumHeads = 4;

// Index of the chosen clause/label per head.
using TraceChoices = std::array<std::size_t, kNumHeads>;

// Gradient with respect to every policy parameter, same shapes as the heads.
struct PolicyGrad {
    std::array<Matrix, kNumHeads> heads;

    void axpy(double alpha, const PolicyGrad& other) {
        for (std::size_t h = 0; h < kNumHeads; ++h) heads[h].axpy(alpha, other.heads[h]);
    }

    void scale(double alpha) {
        for (auto& m : heads)
            for (double& v : m.data) v *= alpha;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& h : heads)
            for (double v : h.data) m = std::max(m, std::abs(v));
        return m;
    }
};

// Factored categorical policy: four independent linear-softmax heads over
// the scene feature vector, sharing a temperature. Value semantics; copies
// are deep, so a snapshot is an ordinary copy.
class ToyPolicy {
public:
    ToyPolicy() = default;

    ToyPolicy(std::size_t feature_dim, std::array<std::size_t, kNumHeads> head_sizes,
              double temperature = 1.0)
        : feature_dim_(feature_dim), head_sizes_(head_sizes), temperature_(temperature) {
        if (temperature <= 0.0) throw std::invalid_argument("temperature must be positive");
        for (std::size_t h = 0; h < kNumHeads; ++h) {
            if (head_sizes_[h] < 1) throw std::invalid_argument("head size must be at least 1");
            weights_[h] = Matrix(head_sizes_[h], feature_dim_);
        }
    }

    static ToyPolicy uniform_for(const ClauseBank& bank, const EmotionTaxonomy& taxonomy,
                                 std::size_t feature_dim, double temperature = 1.0) {
        return ToyPolicy(feature_dim,
                         {bank.trigger_clauses.size(), bank.reflection_clauses.size(),
                          bank.conclusion_clauses.size(), taxonomy.size()},
                         temperature);
    }

    std::size_t feature_dim() const { return feature_dim_; }
    const std::array<std::size_t, kNumHeads>& head_sizes() const { return head_sizes_; }
    double temperature() const { return temperature_; }
    void set_temperature(double t) {
        if (t <= 0.0) throw std::invalid_argument("temperature must be positive");
        temperature_ = t;
    }

    Matrix& weights(Head h) { return weights_[static_cast<std::size_t>(h)]; }
    const Matrix& weights(Head h) const { return weights_[static_cast<std::size_t>(h)]; }

    PolicyGrad zero_grad() const {
        PolicyGrad g;
        for (std::size_t h = 0; h < kNumHeads; ++h)
            g.heads[h] = Matrix(head_sizes_[h], feature_dim_);
        return g;
    }

    std::vector<double> head_logits(const std::vector<double>& features, Head head) const {
        check_features(features);
        auto z = weights_[static_cast<std::size_t>(head)].matvec(features);
        for (double& v : z) v /= temperature_;
        return z;
    }

    std::vector<double> head_log_probs(const std::vector<double>& features, Head head) const {
        return log_softmax(head_logits(features, head));
    }

    std::vector<double> head_probs(const std::vector<double>& features, Head head) const {
        return softmax(head_logits(features, head));
    }

    // Exact joint log-probability: the heads are independent given the
    // features, so the terms add.
    double log_prob(const std::vector<double>& features, const TraceChoices& choices) const {
        double total = 0.0;
        for (std::size_t h = 0; h < kNumHeads; ++h) {
            if (choices[h] >= head_sizes_[h])
                throw std::invalid_argument("log_prob: choice index out of range");
            total += head_log_probs(features, static_cast<Head>(h))[choices[h]];
        }
        return total;
    }

    // d log pi / dW per head: ((onehot - p) / temperature) outer features.
    PolicyGrad log_prob_gradient(const std::vector<double>& features,
                                 const TraceChoices& choices) const {
        PolicyGrad g = zero_grad();
        for (std::size_t h = 0; h < kNumHeads; ++h) {
            if (choices[h] >= head_sizes_[h])
                throw std::invalid_argument("log_prob_gradient: choice index out of range");
            auto p = head_probs(features, static_cast<Head>(h));
            Matrix& gh = g.heads[h];
            for (std::size_t k = 0; k < head_sizes_[h]; ++k) {
                double coeff = ((k == choices[h] ? 1.0 : 0.0) - p[k]) / temperature_;
                for (std::size_t c = 0; c < feature_dim_; ++c)
                    gh.at(k, c) = coeff * features[c];
            }
        }
        return g;
    }

    void apply_gradient(const PolicyGrad& grad, double learning_rate) {
        for (std::size_t h = 0; h < kNumHeads; ++h)
            weights_[h].axpy(learning_rate, grad.heads[h]);
    }

    ToyPolicy snapshot() const { return *this; }

    bool operator==(const ToyPolicy&) const = default;

private:
    void check_features(const std::vector<double>& features) const {
        if (features.size() != feature_dim_)
            throw std::invalid_argument("feature vector has dimension " +
                                        std::to_string(features.size()) + ", policy expects " +
                                        std::to_string(feature_dim_));
    }

    std::size_t feature_dim_ = 0;
    std::array<std::size_t, kNumHeads> head_sizes_{1, 1, 1, 1};
    double temperature_ = 1.0;
    std::array<Matrix, kNumHeads> weights_;
};

struct SampleResult {
    std::string text;
    TraceChoices choices{};
    double logprob = 0.0;
};

namespace detail {

inline std::size_t sample_categorical(const std::vector<double>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return probs.size() - 1;  // guards against rounding at the tail
}

}  // namespace detail

// Render the trace a set of choices encodes, in canonical form.
inline StructuredTrace compose_trace(const TraceChoices& choices, const ClauseBank& bank,
                                     const EmotionTaxonomy& taxonomy) {
    StructuredTrace t;
    t.step1 = bank.trigger_clauses.at(choices[0]).text;
    t.step2 = bank.reflection_clauses.at(choices[1]).text;
    t.step3 = bank.conclusion_clauses.at(choices[2]).text;
    t.answer = taxonomy.labels().at(choices[3]);
    return t;
}

// Draw one clause per stage and an answer label, render the trace, and
// report the exact joint log-probability of the draw.
inline SampleResult sample_output(const ToyPolicy& policy, const std::vector<double>& features,
                                  const ClauseBank& bank, const EmotionTaxonomy& taxonomy,
                                  std::mt19937_64& rng) {
    SampleResult out;
    for (std::size_t h = 0; h < kNumHeads; ++h) {
        auto probs = policy.head_probs(features, static_cast<Head>(h));
        out.choices[h] = detail::sample_categorical(probs, rng);
    }
    out.logprob = policy.log_prob(features, out.choices);
    out.text = render_trace(compose_trace(out.choices, bank, taxonomy));
    return out;
}

// Greedy decode: per-head argmax.
inline TraceChoices argmax_choices(const ToyPolicy& policy, const std::vector<double>& features) {
    TraceChoices choices{};
    for (std::size_t h = 0; h < kNumHeads; ++h) {
        auto z = policy.head_logits(features, static_cast<Head>(h));
        std::size_t best = 0;
        for (std::size_t k = 1; k < z.size(); ++k)
            if (z[k] > z[best]) best = k;
        choices[h] = best;
    }
    return choices;
}

// Exact KL(p || q) between two policies at one feature vector; the joint
// factorizes, so per-head KLs add.
inline double exact_kl(const ToyPolicy& p, const ToyPolicy& q, const std::vector<double>& features) {
    if (p.head_sizes() != q.head_sizes())
        throw std::invalid_argument("exact_kl: head size mismatch");
    double total = 0.0;
    for (std::size_t h = 0; h < kNumHeads; ++h) {
        auto lp = p.head_log_probs(features, static_cast<Head>(h));
        auto lq = q.head_log_probs(features, static_cast<Head>(h));
        for (std::size_t k = 0; k < lp.size(); ++k) total += std::exp(lp[k]) * (lp[k] - lq[k]);
    }
    return total;
}

// --- supervised cold start ---------------------------------------------------

// (scene features, target choices) pair for the cold-start stage.
struct SftExample {
    std::vector<double> features;
    TraceChoices choices{};
};

// Full-batch gradient ascent on mean demonstration log-likelihood. Returns
// the updated policy; optionally records the mean log-likelihood measured
// at the start of each epoch plus once after the final update.
inline ToyPolicy sft_update(ToyPolicy policy, const std::vector<SftExample>& demonstrations,
                            std::size_t epochs, double learning_rate,
                            std::vector<double>* loglik_curve = nullptr) {
    if (demonstrations.empty())
        throw std::invalid_argument("sft_update: no demonstrations");
    for (const auto& d : demonstrations)
        for (std::size_t h = 0; h < kNumHeads; ++h)
            if (d.choices[h] >= policy.head_sizes()[h])
                throw std::invalid_argument("sft_update: demonstration choice out of range");

    auto mean_loglik = [&](const ToyPolicy& p) {
        double total = 0.0;
        for (const auto& d : demonstrations) total += p.log_prob(d.features, d.choices);
        return total / static_cast<double>(demonstrations.size());
    };

    if (loglik_curve) loglik_curve->clear();
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        if (loglik_curve) loglik_curve->push_back(mean_loglik(policy));
        PolicyGrad grad = policy.zero_grad();
        for (const auto& d : demonstrations)
            grad.axpy(1.0 / static_cast<double>(demonstrations.size()),
                      policy.log_prob_gradient(d.features, d.choices));
        policy.apply_gradient(grad, learning_rate);
    }
    if (loglik_curve) loglik_curve->push_back(mean_loglik(policy));
    return policy;
}

}  // namespace affectrl
