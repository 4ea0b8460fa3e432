#include "affectrl/trace.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "affectrl/util.hpp"

using namespace affectrl;

namespace {

StructuredTrace sample_valid_trace() {
    return {"dark clouds over the pier", "a viewer feels creeping dread",
            "negative, high arousal", "fear"};
}

// Random field text that stays renderable: words, commas, occasional
// interior newline, never a line-anchored marker or box token.
std::string random_field(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {
        "cloud", "light",  "bench",   "figure", "window",  "crowd", "color",
        "motion", "shadow", "texture", "step",   "boxed",   "scene", "detail",
        "viewer", "mood",   "tension", "warmth", "contrast", "edge"};
    std::uniform_int_distribution<int> n_words(1, 8);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> coin(0, 19);
    std::string out;
    int n = n_words(rng);
    for (int i = 0; i < n; ++i) {
        if (i) {
            int c = coin(rng);
            if (c == 0)
                out += ",\nand ";  // interior newline, not marker-shaped
            else if (c == 1)
                out += ", ";
            else
                out += " ";
        }
        out += words[pick(rng)];
    }
    return out;
}

std::string random_answer(std::mt19937_64& rng) {
    static const std::vector<std::string> labels = {"awe", "fear", "joy", "sadness",
                                                    "contentment", "excitement"};
    std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
    return labels[pick(rng)];
}

}  // namespace

TEST(ParseTrace, CanonicalFormParses) {
    auto out = parse_trace(
        "Step 1: dark clouds gather\nStep 2: a viewer feels dread\nStep 3: negative, high "
        "arousal.\n\\boxed{fear}");
    ASSERT_TRUE(out);
    EXPECT_EQ(out.trace->step1, "dark clouds gather");
    EXPECT_EQ(out.trace->step2, "a viewer feels dread");
    EXPECT_EQ(out.trace->step3, "negative, high arousal.");
    EXPECT_EQ(out.trace->answer, "fear");
}

TEST(ParseTrace, MarkersAreCaseInsensitiveAndTolerateSpacing) {
    auto out = parse_trace("step 1:a\nSTEP 2 : b\n  Step3: c\n\\boxed{awe}");
    ASSERT_TRUE(out);
    EXPECT_EQ(out.trace->step1, "a");
    EXPECT_EQ(out.trace->step2, "b");
    EXPECT_EQ(out.trace->step3, "c");
}

TEST(ParseTrace, PreambleBeforeStep1IsIgnored) {
    auto out = parse_trace("Sure, here is my reasoning.\nStep 1: a\nStep 2: b\nStep 3: c\n\\boxed{awe}");
    ASSERT_TRUE(out);
    EXPECT_EQ(out.trace->step1, "a");
}

TEST(ParseTrace, TrailingProseAfterBoxIsIgnored) {
    auto out = parse_trace("Step 1: a\nStep 2: b\nStep 3: c\n\\boxed{awe} as discussed above");
    ASSERT_TRUE(out);
    EXPECT_EQ(out.trace->answer, "awe");
}

TEST(ParseTrace, MarkerTextMidLineIsNotAMarker) {
    // "step 2:" inside step-1's text is not line-anchored.
    auto out = parse_trace("Step 1: this mentions step 2: inline\nStep 2: b\nStep 3: c\n\\boxed{x}");
    ASSERT_TRUE(out);
    EXPECT_EQ(out.trace->step1, "this mentions step 2: inline");
}

TEST(ParseTrace, OutOfOrderStepsRejected) {
    auto out = parse_trace("Step 2: b\nStep 1: a\nStep 3: c\n\\boxed{x}");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::OutOfOrderSteps);
}

TEST(ParseTrace, DuplicateMarkerRejectedAsOutOfOrder) {
    auto out = parse_trace("Step 1: a\nStep 1: again\nStep 2: b\nStep 3: c\n\\boxed{x}");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::OutOfOrderSteps);
}

TEST(ParseTrace, MissingStepRejected) {
    auto out = parse_trace("Step 1: a\nStep 3: c\n\\boxed{x}");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::MissingStep);
}

TEST(ParseTrace, MissingBoxRejected) {
    auto out = parse_trace("Step 1: a\nStep 2: b\nStep 3: c\n");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::MissingBox);
}

TEST(ParseTrace, BoxBeforeStep3Rejected) {
    auto out = parse_trace("Step 1: a\n\\boxed{x}\nStep 2: b\nStep 3: c\n");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::MissingBox);
}

TEST(ParseTrace, TwoBoxesRejected) {
    auto out = parse_trace("Step 1: a\nStep 2: b\nStep 3: c\n\\boxed{x} \\boxed{y}");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::MultipleBoxes);
}

TEST(ParseTrace, EmptyFieldRejected) {
    auto out = parse_trace("Step 1: a\nStep 2:\nStep 3: c\n\\boxed{x}");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::EmptyField);
}

TEST(ParseTrace, EmptyAnswerRejected) {
    auto out = parse_trace("Step 1: a\nStep 2: b\nStep 3: c\n\\boxed{}");
    ASSERT_FALSE(out);
    EXPECT_EQ(out.failure.kind, ParseErrorKind::EmptyField);
}

TEST(ParseTrace, FieldsAreTrimmed) {
    auto out = parse_trace("Step 1:   a  \nStep 2: b\nStep 3: c\n\\boxed{ Awe }");
    ASSERT_TRUE(out);
    EXPECT_EQ(out.trace->step1, "a");
    EXPECT_EQ(out.trace->answer, "Awe");
}

TEST(RenderTrace, CanonicalForm) {
    StructuredTrace t{"a", "b", "c", "awe"};
    EXPECT_EQ(render_trace(t), "Step 1: a\nStep 2: b\nStep 3: c\n\\boxed{awe}");
}

TEST(RenderTrace, EmptyFieldThrows) {
    StructuredTrace t{"a", "", "c", "awe"};
    EXPECT_THROW(render_trace(t), std::invalid_argument);
}

TEST(RenderTrace, StructuralMarkerInFieldThrows) {
    StructuredTrace bad_step{"a\nstep 2: smuggled", "b", "c", "awe"};
    EXPECT_THROW(render_trace(bad_step), std::invalid_argument);
    StructuredTrace bad_box{"a \\boxed{x}", "b", "c", "awe"};
    EXPECT_THROW(render_trace(bad_box), std::invalid_argument);
    StructuredTrace bad_answer{"a", "b", "c", "aw}e"};
    EXPECT_THROW(render_trace(bad_answer), std::invalid_argument);
}

TEST(RenderTrace, RoundTripProperty) {
    auto rng = make_rng(20250811, 1);
    for (int i = 0; i < 1000; ++i) {
        StructuredTrace t{random_field(rng), random_field(rng), random_field(rng),
                          random_answer(rng)};
        auto out = parse_trace(render_trace(t));
        ASSERT_TRUE(out) << "failed on iteration " << i << ": " << to_string(out.failure.kind);
        EXPECT_EQ(*out.trace, t) << "round-trip mismatch on iteration " << i;
    }
}

TEST(Extractors, AnswerAndStepsAreVerbatim) {
    StructuredTrace t = sample_valid_trace();
    EXPECT_EQ(extract_answer(t), "fear");
    EXPECT_EQ(extract_step1(t), "dark clouds over the pier");
    EXPECT_EQ(extract_steps12(t), "dark clouds over the pier\na viewer feels creeping dread");
}

TEST(Extractors, Steps12JoinsWithSingleNewline) {
    StructuredTrace t{"a", "b", "c", "x"};
    EXPECT_EQ(extract_steps12(t), "a\nb");
}

TEST(Extractors, Steps12NeverContainsStep3Marker) {
    auto rng = make_rng(20250811, 2);
    for (int i = 0; i < 500; ++i) {
        StructuredTrace t{random_field(rng), random_field(rng), random_field(rng),
                          random_answer(rng)};
        auto parsed = parse_trace(render_trace(t));
        ASSERT_TRUE(parsed);
        std::string joined = extract_steps12(*parsed.trace);
        EXPECT_EQ(joined.find("Step 3:"), std::string::npos);
    }
}

TEST(Extractors, Steps12IsStrictPrefixOfMarkerStrippedRender) {
    auto rng = make_rng(20250811, 3);
    for (int i = 0; i < 200; ++i) {
        StructuredTrace t{random_field(rng), random_field(rng), random_field(rng),
                          random_answer(rng)};
        std::string rendered = render_trace(t);
        // Strip the canonical markers and the box from the render.
        std::string stripped = rendered;
        for (std::string_view marker : {"Step 1: ", "Step 2: ", "Step 3: "}) {
            auto pos = stripped.find(marker);
            ASSERT_NE(pos, std::string::npos);
            stripped.erase(pos, marker.size());
        }
        std::string joined = extract_steps12(t);
        ASSERT_LT(joined.size(), stripped.size());
        EXPECT_EQ(stripped.compare(0, joined.size(), joined), 0);
    }
}

TEST(Extractors, PureSameInputSameOutput) {
    StructuredTrace t = sample_valid_trace();
    EXPECT_EQ(extract_steps12(t), extract_steps12(t));
    EXPECT_EQ(extract_answer(t), extract_answer(t));
}

TEST(CheckFormat, AgreesWithParse) {
    std::vector<std::string> inputs = {
        "Step 1: a\nStep 2: b\nStep 3: c\n\\boxed{x}",
        "Step 1: a\nStep 2: b\nStep 3: c",
        "Step 1: a\nStep 2: b\nStep 3: c\n\\boxed{x}\\boxed{y}",
        "",
        "no structure at all",
    };
    for (const auto& s : inputs) EXPECT_EQ(check_format(s), static_cast<bool>(parse_trace(s)));
}

TEST(SetPrompt, ContainsStageHeadersOnceInOrder) {
    auto prompt = build_set_prompt({"amusement", "awe", "fear"},
                                   "What emotion does this image convey?");
    const std::string& text = prompt.instruction_text;
    auto p1 = text.find("Emotional Trigger Identification");
    auto p2 = text.find("Human Emotional Reflection");
    auto p3 = text.find("Emotional Conclusion");
    ASSERT_NE(p1, std::string::npos);
    ASSERT_NE(p2, std::string::npos);
    ASSERT_NE(p3, std::string::npos);
    EXPECT_LT(p1, p2);
    EXPECT_LT(p2, p3);
    EXPECT_EQ(text.find("Emotional Trigger Identification", p1 + 1), std::string::npos);
    EXPECT_EQ(text.find("Human Emotional Reflection", p2 + 1), std::string::npos);
    EXPECT_EQ(text.find("Emotional Conclusion", p3 + 1), std::string::npos);
    EXPECT_NE(text.find("\\boxed{}"), std::string::npos);
    EXPECT_NE(text.find("amusement, awe, fear"), std::string::npos);
}

TEST(SetPrompt, EmptyTaxonomyThrows) {
    EXPECT_THROW(build_set_prompt({}, "anything"), std::invalid_argument);
}

TEST(SetPrompt, DuplicateLabelThrows) {
    EXPECT_THROW(build_set_prompt({"awe", "awe"}, "x"), std::invalid_argument);
}

TEST(SetPrompt, DeterministicAcrossCalls) {
    std::vector<std::string> labels = {"anger", "disgust", "fear", "joy", "sadness", "surprise"};
    auto a = build_set_prompt(labels, "What emotion does this image convey?");
    auto b = build_set_prompt(labels, "What emotion does this image convey?");
    EXPECT_EQ(a.instruction_text, b.instruction_text);
    EXPECT_EQ(a.render(), b.render());
}
