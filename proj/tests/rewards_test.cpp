#include "affectrl/rewards.hpp"

#include <gtest/gtest.h>

#include <string>

#include "affectrl/taxonomy.hpp"

using namespace affectrl;

namespace {

// Judge with scriptable verdicts, for exercising the reward pipeline in
// isolation from any environment.
struct ScriptedJudge : Judge {
    Verdict verdict = Verdict::Yes;
    std::string emotion = "fear";
    bool fail_yes_no = false;

    Verdict judge_yes_no(const SceneRef&, std::string_view, std::string_view) override {
        if (fail_yes_no) throw JudgeFailure("scripted failure");
        return verdict;
    }
    std::string judge_emotion(std::string_view, std::string_view,
                              const EmotionTaxonomy&) override {
        return emotion;
    }
};

EmotionTaxonomy test_taxonomy() {
    return EmotionTaxonomy("test", {"amusement", "awe", "excitement", "fear"},
                           {{"terror", "fear"}});
}

const char* kValidTrace =
    "Step 1: dark clouds\nStep 2: a viewer feels dread\nStep 3: negative, high arousal\n"
    "\\boxed{fear}";

}  // namespace

TEST(PromptConstants, ByteExact) {
    EXPECT_EQ(kConsistencyPrompt, "Can the following text describe the image?");
    EXPECT_EQ(kCoherencePrompt, "Which emotion best describes the text above?");
}

TEST(RewardFormat, CaseSplit) {
    EXPECT_EQ(reward_format(kValidTrace), 1);
    EXPECT_EQ(reward_format("Step 1: a\nStep 2: b\nStep 3: c\nno box"), 0);
    EXPECT_EQ(reward_format(""), 0);
}

TEST(RewardAccuracy, ExactAndNormalizedMatch) {
    auto tax = test_taxonomy();
    EXPECT_EQ(reward_accuracy("fear", "fear", tax), 1);
    EXPECT_EQ(reward_accuracy("Fear ", "fear", tax), 1);
    EXPECT_EQ(reward_accuracy("fear.", "fear", tax), 1);
    EXPECT_EQ(reward_accuracy("terror", "fear", tax), 1);  // alias
    EXPECT_EQ(reward_accuracy("happiness", "fear", tax), 0);
    EXPECT_EQ(reward_accuracy("", "fear", tax), 0);
}

TEST(RewardAccuracy, GoldOutsideTaxonomyIsConfigError) {
    auto tax = test_taxonomy();
    EXPECT_THROW(reward_accuracy("fear", "melancholy", tax), std::invalid_argument);
}

TEST(YesNoNormalization, LeadingTokenThenSubstring) {
    EXPECT_EQ(normalize_yes_no_reply("Yes."), Verdict::Yes);
    EXPECT_EQ(normalize_yes_no_reply("yes, it does."), Verdict::Yes);
    EXPECT_EQ(normalize_yes_no_reply("No, the text mentions rain but the image shows sun."),
              Verdict::No);
    EXPECT_EQ(normalize_yes_no_reply("  NO"), Verdict::No);
    // Leading token wins even when the other word occurs later.
    EXPECT_EQ(normalize_yes_no_reply("Yes, although one could say no."), Verdict::Yes);
    // No leading yes/no token: substring fallback, ties resolve to No.
    EXPECT_EQ(normalize_yes_no_reply("I would say yes."), Verdict::Yes);
    EXPECT_EQ(normalize_yes_no_reply("Certainly not - no."), Verdict::No);
    EXPECT_EQ(normalize_yes_no_reply("it comes down to yes and no"), Verdict::No);
    EXPECT_FALSE(normalize_yes_no_reply("unclear").has_value());
    EXPECT_FALSE(normalize_yes_no_reply("").has_value());
}

TEST(EmotionNormalization, SubstringSearchInTaxonomyOrder) {
    auto tax = test_taxonomy();
    EXPECT_EQ(normalize_emotion_reply("awe", tax), "awe");
    EXPECT_EQ(normalize_emotion_reply("The emotion is awe.", tax), "awe");
    EXPECT_EQ(normalize_emotion_reply("I think it's Excitement!", tax), "excitement");
    EXPECT_EQ(normalize_emotion_reply("terror", tax), "fear");  // alias, exact path
    EXPECT_EQ(normalize_emotion_reply("melancholy", tax), kNoMatchLabel);
    EXPECT_EQ(normalize_emotion_reply("", tax), kNoMatchLabel);
}

TEST(RewardConsistency, VerdictMap) {
    EXPECT_EQ(reward_consistency(Verdict::Yes), 1);
    EXPECT_EQ(reward_consistency(Verdict::No), 0);
}

TEST(RewardCoherence, CanonicalComparison) {
    auto tax = test_taxonomy();
    EXPECT_EQ(reward_coherence("fear", "fear", tax), 1);
    EXPECT_EQ(reward_coherence("awe", "fear", tax), 0);
    EXPECT_EQ(reward_coherence(kNoMatchLabel, "fear", tax), 0);
}

TEST(RewardRer, Average) {
    EXPECT_DOUBLE_EQ(reward_rer(1, 1), 1.0);
    EXPECT_DOUBLE_EQ(reward_rer(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(reward_rer(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(reward_rer(0, 0), 0.0);
}

TEST(RewardOverall, WeightedCombination) {
    RewardWeights w{0.1, 0.1};
    RewardBreakdown b;
    b.accuracy = 1;
    b.rer = 0.5;
    b.format = 1;
    EXPECT_DOUBLE_EQ(reward_overall(b, w), 0.95);

    RewardBreakdown zero;
    EXPECT_DOUBLE_EQ(reward_overall(zero, w), 0.0);

    RewardWeights pure{0.0, 0.0};
    RewardBreakdown acc_only;
    acc_only.accuracy = 1;
    EXPECT_DOUBLE_EQ(reward_overall(acc_only, pure), 1.0);
}

TEST(RewardOverall, InvalidWeightsThrow) {
    RewardBreakdown b;
    EXPECT_THROW(reward_overall(b, RewardWeights{0.6, 0.6}), std::invalid_argument);
    EXPECT_THROW(reward_overall(b, RewardWeights{-0.1, 0.1}), std::invalid_argument);
}

TEST(RewardOverall, MonotoneInEachComponent) {
    RewardWeights w{0.1, 0.1};
    for (int fmt = 0; fmt <= 1; ++fmt)
        for (int acc = 0; acc <= 1; ++acc)
            for (int cons = 0; cons <= 1; ++cons)
                for (int coh = 0; coh <= 1; ++coh) {
                    RewardBreakdown b;
                    b.format = fmt;
                    b.accuracy = acc;
                    b.consistency = cons;
                    b.coherence = coh;
                    b.rer = reward_rer(cons, coh);
                    double base = reward_overall(b, w);
                    EXPECT_GE(base, 0.0);
                    EXPECT_LE(base, 1.0);
                    // Bump each component that has headroom; overall never drops.
                    if (!acc) {
                        RewardBreakdown up = b;
                        up.accuracy = 1;
                        EXPECT_GE(reward_overall(up, w), base);
                    }
                    if (!cons) {
                        RewardBreakdown up = b;
                        up.consistency = 1;
                        up.rer = reward_rer(1, coh);
                        EXPECT_GE(reward_overall(up, w), base);
                    }
                    if (!fmt) {
                        RewardBreakdown up = b;
                        up.format = 1;
                        EXPECT_GE(reward_overall(up, w), base);
                    }
                }
}

TEST(JudgeWrappers, RejectWrongPrompt) {
    ScriptedJudge judge;
    SceneRef scene{"s0", ""};
    auto tax = test_taxonomy();
    EXPECT_THROW(judge_yes_no(judge, scene, "text", "wrong prompt"), std::invalid_argument);
    EXPECT_THROW(judge_emotion(judge, "text", "wrong prompt", tax), std::invalid_argument);
    EXPECT_EQ(judge_yes_no(judge, scene, "text", kConsistencyPrompt), Verdict::Yes);
    EXPECT_EQ(judge_emotion(judge, "text", kCoherencePrompt, tax), "fear");
}

TEST(ScoreRollout, MalformedOutputZeroesEverything) {
    ScriptedJudge judge;
    auto tax = test_taxonomy();
    SceneRef scene{"s0", ""};
    RewardBreakdown b = score_rollout("Step 2 came first", scene, "fear", tax, {0.1, 0.1}, judge);
    EXPECT_EQ(b.format, 0);
    EXPECT_EQ(b.accuracy, 0);
    EXPECT_EQ(b.consistency, 0);
    EXPECT_EQ(b.coherence, 0);
    EXPECT_DOUBLE_EQ(b.rer, 0.0);
    EXPECT_DOUBLE_EQ(b.overall, 0.0);
}

TEST(ScoreRollout, FullyPositiveRolloutScoresOne) {
    ScriptedJudge judge;  // Yes + "fear"
    auto tax = test_taxonomy();
    SceneRef scene{"s0", ""};
    RewardBreakdown b = score_rollout(kValidTrace, scene, "fear", tax, {0.1, 0.1}, judge);
    EXPECT_EQ(b.format, 1);
    EXPECT_EQ(b.accuracy, 1);
    EXPECT_EQ(b.consistency, 1);
    EXPECT_EQ(b.coherence, 1);
    EXPECT_DOUBLE_EQ(b.rer, 1.0);
    EXPECT_DOUBLE_EQ(b.overall, 1.0);
}

TEST(ScoreRollout, WrongAnswerFullyReflectivePositive) {
    ScriptedJudge judge;
    judge.emotion = "awe";
    auto tax = test_taxonomy();
    SceneRef scene{"s0", ""};
    // Answer fear vs gold awe: acc 0; judge says Yes + awe: rer 1; format 1.
    RewardBreakdown b = score_rollout(kValidTrace, scene, "awe", tax, {0.1, 0.1}, judge);
    EXPECT_EQ(b.accuracy, 0);
    EXPECT_DOUBLE_EQ(b.rer, 1.0);
    EXPECT_DOUBLE_EQ(b.overall, 0.2);
}

TEST(ScoreRollout, ZeroWeightsReduceToPureAccuracy) {
    auto tax = test_taxonomy();
    SceneRef scene{"s0", ""};
    // Across the full verdict lattice, overall == accuracy when both
    // coefficients are zero.
    for (int v = 0; v <= 1; ++v)
        for (const char* emotion : {"fear", "awe"})
            for (const char* gold : {"fear", "awe"}) {
                ScriptedJudge judge;
                judge.verdict = v ? Verdict::Yes : Verdict::No;
                judge.emotion = emotion;
                RewardBreakdown b =
                    score_rollout(kValidTrace, scene, gold, tax, {0.0, 0.0}, judge);
                EXPECT_DOUBLE_EQ(b.overall, static_cast<double>(b.accuracy));
            }
}

TEST(ScoreRollout, JudgeFailurePropagates) {
    ScriptedJudge judge;
    judge.fail_yes_no = true;
    auto tax = test_taxonomy();
    SceneRef scene{"s0", ""};
    EXPECT_THROW(score_rollout(kValidTrace, scene, "fear", tax, {0.1, 0.1}, judge), JudgeFailure);
}
