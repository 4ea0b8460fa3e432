#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affectrl/taxonomy.hpp"
#include "affectrl/util.hpp"

namespace affectrl {

// Three-step reasoning trace with a boxed final answer.
//
// Canonical wire form (ABNF-ish):
//   trace   = step1 LF step2 LF step3 LF box
//   stepN   = "Step " N ": " text          ; marker is line-anchored, case-insensitive
//   box     = "\boxed{" label "}"          ; exactly one box, after the Step 3 marker
// Markers must appear in order 1,2,3, each exactly once. Fields are the
// whitespace-trimmed spans between markers and must be non-empty.
struct StructuredTrace {
    std::string step1;   // emotional-trigger identification
    std::string step2;   // human emotional reflection
    std::string step3;   // emotional conclusion (valence/arousal statement)
    std::string answer;  // boxed label text, no delimiters

    bool operator==(const StructuredTrace&) const = default;
};

enum class ParseErrorKind {
    MissingStep,
    OutOfOrderSteps,
    MissingBox,
    EmptyField,
    MultipleBoxes,
};

inline std::string to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::MissingStep: return "missing-step";
        case ParseErrorKind::OutOfOrderSteps: return "out-of-order-steps";
        case ParseErrorKind::MissingBox: return "missing-box";
        case ParseErrorKind::EmptyField: return "empty-field";
        case ParseErrorKind::MultipleBoxes: return "multiple-boxes";
    }
    return "unknown";
}

struct ParseFailure {
    ParseErrorKind kind = ParseErrorKind::MissingStep;
    std::string detail;
};

// Parse result: either a trace or a categorized failure, never both.
struct ParseOutcome {
    std::optional<StructuredTrace> trace;
    ParseFailure failure;

    explicit operator bool() const { return trace.has_value(); }
};

namespace detail {

inline constexpr std::string_view kBoxOpen = "\\boxed{";

struct StepMarker {
    int step = 0;           // 1..3
    std::size_t line_pos = 0;  // offset of the marker's line start
    std::size_t text_pos = 0;  // offset just past the colon
};

// Matches "step<N>:" at the start of a line, case-insensitive, tolerating
// whitespace around the digit. Returns the step number and the offset past
// the colon, or nullopt.
inline std::optional<std::pair<int, std::size_t>> match_step_marker(std::string_view text,
                                                                    std::size_t line_start) {
    std::size_t i = line_start;
    auto skip_ws = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    };
    skip_ws();
    constexpr std::string_view word = "step";
    for (char c : word) {
        if (i >= text.size() || std::tolower(static_cast<unsigned char>(text[i])) != c)
            return std::nullopt;
        ++i;
    }
    skip_ws();
    if (i >= text.size() || text[i] < '1' || text[i] > '3') return std::nullopt;
    int step = text[i] - '0';
    ++i;
    skip_ws();
    if (i >= text.size() || text[i] != ':') return std::nullopt;
    return std::make_pair(step, i + 1);
}

inline std::vector<StepMarker> find_step_markers(std::string_view text) {
    std::vector<StepMarker> out;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        if (auto m = match_step_marker(text, line_start))
            out.push_back({m->first, line_start, m->second});
        auto nl = text.find('\n', line_start);
        if (nl == std::string_view::npos) break;
        line_start = nl + 1;
    }
    return out;
}

inline std::vector<std::size_t> find_box_opens(std::string_view text) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while ((pos = text.find(kBoxOpen, pos)) != std::string_view::npos) {
        out.push_back(pos);
        pos += kBoxOpen.size();
    }
    return out;
}

// A field is renderable iff the canonical form parses back to it: no line
// may start with a step marker and no box token may appear inside.
inline bool step_field_renderable(std::string_view field) {
    if (field.find(kBoxOpen) != std::string_view::npos) return false;
    std::size_t line_start = 0;
    while (line_start <= field.size()) {
        if (match_step_marker(field, line_start)) return false;
        auto nl = field.find('\n', line_start);
        if (nl == std::string_view::npos) break;
        line_start = nl + 1;
    }
    return true;
}

inline bool answer_renderable(std::string_view answer) {
    return answer.find('{') == std::string_view::npos &&
           answer.find('}') == std::string_view::npos &&
           answer.find('\n') == std::string_view::npos;
}

}  // namespace detail

inline ParseOutcome parse_trace(std::string_view text) {
    using detail::kBoxOpen;
    auto fail = [](ParseErrorKind kind, std::string detail) {
        ParseOutcome out;
        out.failure = {kind, std::move(detail)};
        return out;
    };

    auto markers = detail::find_step_markers(text);
    bool seen[4] = {false, false, false, false};
    for (const auto& m : markers) seen[m.step] = true;
    for (int s = 1; s <= 3; ++s)
        if (!seen[s]) return fail(ParseErrorKind::MissingStep, "no Step " + std::to_string(s) + " marker");
    if (markers.size() != 3 || markers[0].step != 1 || markers[1].step != 2 || markers[2].step != 3) {
        return fail(ParseErrorKind::OutOfOrderSteps, "step markers not in order 1,2,3 exactly once");
    }

    auto boxes = detail::find_box_opens(text);
    if (boxes.empty()) return fail(ParseErrorKind::MissingBox, "no \\boxed{} answer");
    if (boxes.size() > 1) return fail(ParseErrorKind::MultipleBoxes, "more than one \\boxed{}");
    std::size_t box_open = boxes[0];
    std::size_t content_begin = box_open + kBoxOpen.size();
    std::size_t box_close = text.find('}', content_begin);
    if (box_close == std::string_view::npos)
        return fail(ParseErrorKind::MissingBox, "unterminated \\boxed{");
    if (box_open < markers[2].text_pos)
        return fail(ParseErrorKind::MissingBox, "\\boxed{} appears before the Step 3 marker");

    StructuredTrace trace;
    trace.step1 = trim(text.substr(markers[0].text_pos, markers[1].line_pos - markers[0].text_pos));
    trace.step2 = trim(text.substr(markers[1].text_pos, markers[2].line_pos - markers[1].text_pos));
    trace.step3 = trim(text.substr(markers[2].text_pos, box_open - markers[2].text_pos));
    trace.answer = trim(text.substr(content_begin, box_close - content_begin));

    if (trace.step1.empty()) return fail(ParseErrorKind::EmptyField, "step1 is empty");
    if (trace.step2.empty()) return fail(ParseErrorKind::EmptyField, "step2 is empty");
    if (trace.step3.empty()) return fail(ParseErrorKind::EmptyField, "step3 is empty");
    if (trace.answer.empty()) return fail(ParseErrorKind::EmptyField, "boxed answer is empty");

    ParseOutcome out;
    out.trace = std::move(trace);
    return out;
}

// Canonical form; parse_trace(render_trace(t)) == t for any trace whose
// fields are renderable (trimmed, non-empty, marker-free).
inline std::string render_trace(const StructuredTrace& trace) {
    const std::array<const std::string*, 3> steps = {&trace.step1, &trace.step2, &trace.step3};
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::string& f = *steps[i];
        if (trim(f).empty())
            throw std::invalid_argument("render_trace: step" + std::to_string(i + 1) + " is empty");
        if (!detail::step_field_renderable(f))
            throw std::invalid_argument("render_trace: step" + std::to_string(i + 1) +
                                        " contains a structural marker");
    }
    if (trim(trace.answer).empty()) throw std::invalid_argument("render_trace: answer is empty");
    if (!detail::answer_renderable(trace.answer))
        throw std::invalid_argument("render_trace: answer contains a delimiter");

    std::string out;
    out.reserve(trace.step1.size() + trace.step2.size() + trace.step3.size() +
                trace.answer.size() + 40);
    out += "Step 1: ";
    out += trace.step1;
    out += "\nStep 2: ";
    out += trace.step2;
    out += "\nStep 3: ";
    out += trace.step3;
    out += "\n\\boxed{";
    out += trace.answer;
    out += "}";
    return out;
}

inline const std::string& extract_answer(const StructuredTrace& trace) { return trace.answer; }

inline const std::string& extract_step1(const StructuredTrace& trace) { return trace.step1; }

inline std::string extract_steps12(const StructuredTrace& trace) {
    return trace.step1 + "\n" + trace.step2;
}

inline bool check_format(std::string_view text) { return static_cast<bool>(parse_trace(text)); }

// Instruction prompt that elicits the three-step trace.
struct SetPrompt {
    std::string instruction_text;
    std::string task_text;
    std::vector<std::string> taxonomy;

    std::string render() const { return instruction_text + "\n\n" + task_text; }
};

inline SetPrompt build_set_prompt(const std::vector<std::string>& taxonomy,
                                  std::string task_text) {
    if (taxonomy.empty()) throw std::invalid_argument("build_set_prompt: empty taxonomy");
    for (std::size_t i = 0; i < taxonomy.size(); ++i)
        for (std::size_t k = i + 1; k < taxonomy.size(); ++k)
            if (taxonomy[i] == taxonomy[k])
                throw std::invalid_argument("build_set_prompt: duplicate label " + taxonomy[i]);

    std::string labels;
    for (std::size_t i = 0; i < taxonomy.size(); ++i) {
        if (i) labels += ", ";
        labels += taxonomy[i];
    }

    SetPrompt prompt;
    prompt.instruction_text =
        "Reason about the scene in three steps before answering.\n"
        "Step 1 - Emotional Trigger Identification: detect which elements in the scene "
        "(objects, actions, environments, or facial cues) may trigger emotional responses.\n"
        "Step 2 - Human Emotional Reflection: describe how a human observer would emotionally "
        "respond to these elements.\n"
        "Step 3 - Emotional Conclusion: determine whether the overall emotion is positive or "
        "negative, and assess its arousal level (e.g., calm vs. excited).\n"
        "Write each step on its own line as \"Step N: ...\". Choose the final answer from: " +
        labels + ". Enclose the final answer in \\boxed{}.";
    prompt.task_text = std::move(task_text);
    prompt.taxonomy = taxonomy;
    return prompt;
}

}  // namespace affectrl
