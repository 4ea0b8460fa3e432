#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "affectrl/taxonomy.hpp"
#include "affectrl/trace.hpp"
#include "affectrl/util.hpp"

namespace affectrl {

// Reflective prompts. Byte-exact: judges and fixtures match on these.
inline constexpr std::string_view kConsistencyPrompt = "Can the following text describe the image?";
inline constexpr std::string_view kCoherencePrompt = "Which emotion best describes the text above?";

// Sentinel returned when a judge's emotion reply maps to no taxonomy label.
inline constexpr std::string_view kNoMatchLabel = "<unmatched>";

enum class Verdict { Yes, No };

struct RewardWeights {
    double lambda1 = 0.1;  // reflective-reward coefficient
    double lambda2 = 0.1;  // format-reward coefficient

    void validate() const {
        if (lambda1 < 0.0 || lambda1 > 1.0 || lambda2 < 0.0 || lambda2 > 1.0)
            throw std::invalid_argument("reward weights must lie in [0,1]");
        if (lambda1 + lambda2 > 1.0)
            throw std::invalid_argument("lambda1 + lambda2 must not exceed 1");
    }
};

// Component rewards for one rollout. format gates the rest: a malformed
// output has no answer or reasoning spans to evaluate, so everything
// downstream is 0.
struct RewardBreakdown {
    int format = 0;
    int accuracy = 0;
    int consistency = 0;
    int coherence = 0;
    double rer = 0.0;
    double overall = 0.0;
};

// Thrown when a judge cannot produce a verdict (after retries). Scoring a
// rollout as 0 instead would silently skew group statistics.
struct JudgeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// What a judge gets to "see" of the input: an id resolvable by tag-based
// judges plus a caption surrogate for remote ones.
struct SceneRef {
    std::string id;
    std::string caption;
};

// Reflective evaluator. Verdicts are non-differentiable scalars; the
// training loop never propagates gradients through a judge.
class Judge {
public:
    virtual ~Judge() = default;

    // Consistency pass: does step-1 text describe the scene?
    virtual Verdict judge_yes_no(const SceneRef& scene, std::string_view step1_text,
                                 std::string_view prompt) = 0;

    // Coherence pass: which taxonomy label does the steps-1,2 text convey?
    // Returns a canonical label or kNoMatchLabel.
    virtual std::string judge_emotion(std::string_view steps12_text, std::string_view prompt,
                                      const EmotionTaxonomy& taxonomy) = 0;

    virtual bool concurrent_safe() const { return true; }
};

// --- judge reply normalization -------------------------------------------

// Yes/no from a free-form reply: case-insensitive leading-token match,
// falling back to whole-reply substring search; a reply containing both
// resolves to No. nullopt if neither token is present.
inline std::optional<Verdict> normalize_yes_no_reply(std::string_view reply) {
    std::string lower = to_lower(reply);
    std::size_t i = 0;
    while (i < lower.size() && !std::isalpha(static_cast<unsigned char>(lower[i]))) ++i;
    std::size_t j = i;
    while (j < lower.size() && std::isalpha(static_cast<unsigned char>(lower[j]))) ++j;
    std::string_view token = std::string_view(lower).substr(i, j - i);
    if (token == "yes") return Verdict::Yes;
    if (token == "no") return Verdict::No;
    bool has_no = lower.find("no") != std::string::npos;
    bool has_yes = lower.find("yes") != std::string::npos;
    if (has_no) return Verdict::No;
    if (has_yes) return Verdict::Yes;
    return std::nullopt;
}

// Emotion label from a free-form reply: exact canonicalization first, then
// canonical-label substring search in taxonomy order. No match -> sentinel.
inline std::string normalize_emotion_reply(std::string_view reply,
                                           const EmotionTaxonomy& taxonomy) {
    if (auto exact = taxonomy.canonicalize(reply)) return *exact;
    for (const auto& label : taxonomy.labels())
        if (contains_ci(reply, label)) return label;
    return std::string(kNoMatchLabel);
}

// --- reward operations ----------------------------------------------------

inline int reward_format(std::string_view raw_output) { return check_format(raw_output) ? 1 : 0; }

inline int reward_accuracy(std::string_view predicted, std::string_view gold,
                           const EmotionTaxonomy& taxonomy) {
    if (!taxonomy.has_label(gold))
        throw std::invalid_argument("reward_accuracy: gold label '" + std::string(gold) +
                                    "' not in taxonomy");
    auto canonical = taxonomy.canonicalize(predicted);
    return (canonical && *canonical == gold) ? 1 : 0;
}

inline Verdict judge_yes_no(Judge& judge, const SceneRef& scene, std::string_view step1_text,
                            std::string_view prompt) {
    if (prompt != kConsistencyPrompt)
        throw std::invalid_argument("judge_yes_no: prompt must be the consistency prompt");
    return judge.judge_yes_no(scene, step1_text, prompt);
}

inline int reward_consistency(Verdict verdict) { return verdict == Verdict::Yes ? 1 : 0; }

inline std::string judge_emotion(Judge& judge, std::string_view steps12_text,
                                 std::string_view prompt, const EmotionTaxonomy& taxonomy) {
    if (prompt != kCoherencePrompt)
        throw std::invalid_argument("judge_emotion: prompt must be the coherence prompt");
    return judge.judge_emotion(steps12_text, prompt, taxonomy);
}

inline int reward_coherence(std::string_view judged, std::string_view gold,
                            const EmotionTaxonomy& taxonomy) {
    if (judged == kNoMatchLabel) return 0;
    auto canonical = taxonomy.canonicalize(judged);
    return (canonical && *canonical == gold) ? 1 : 0;
}

inline double reward_rer(int consistency, int coherence) {
    return (consistency + coherence) / 2.0;
}

inline double reward_overall(const RewardBreakdown& b, const RewardWeights& w) {
    w.validate();
    return (1.0 - w.lambda1 - w.lambda2) * b.accuracy + w.lambda1 * b.rer + w.lambda2 * b.format;
}

// Full scoring pipeline for one raw rollout. Parse failure zeroes every
// component; judge failures propagate.
inline RewardBreakdown score_rollout(std::string_view raw_output, const SceneRef& scene,
                                     std::string_view gold, const EmotionTaxonomy& taxonomy,
                                     const RewardWeights& weights, Judge& judge) {
    weights.validate();
    RewardBreakdown b;
    auto parsed = parse_trace(raw_output);
    if (!parsed) return b;  // all zeros, overall 0

    const StructuredTrace& trace = *parsed.trace;
    b.format = 1;
    b.accuracy = reward_accuracy(extract_answer(trace), gold, taxonomy);
    Verdict verdict = judge_yes_no(judge, scene, extract_step1(trace), kConsistencyPrompt);
    b.consistency = reward_consistency(verdict);
    std::string judged = judge_emotion(judge, extract_steps12(trace), kCoherencePrompt, taxonomy);
    b.coherence = reward_coherence(judged, gold, taxonomy);
    b.rer = reward_rer(b.consistency, b.coherence);
    b.overall = reward_overall(b, weights);
    return b;
}

}  // namespace affectrl
