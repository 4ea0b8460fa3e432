#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affectrl/taxonomy.hpp"
#include "affectrl/util.hpp"

namespace affectrl {

// A trigger is a nameable scene element; its surface form is the phrase
// clauses use to mention it.
struct Trigger {
    std::string id;
    std::string surface;
    std::string emotion;  // label whose scenes carry this trigger
};

struct TriggerVocabulary {
    std::vector<Trigger> triggers;

    std::size_t index_of(std::string_view id) const {
        for (std::size_t i = 0; i < triggers.size(); ++i)
            if (triggers[i].id == id) return i;
        throw std::invalid_argument("unknown trigger id: " + std::string(id));
    }

    const Trigger& by_id(std::string_view id) const { return triggers[index_of(id)]; }

    std::vector<std::string> ids_for_emotion(std::string_view label) const {
        std::vector<std::string> out;
        for (const auto& t : triggers)
            if (t.emotion == label) out.push_back(t.id);
        return out;
    }
};

struct TriggerClause {
    std::string text;
    std::vector<std::string> trigger_ids;  // triggers this clause mentions
};

struct ReflectionClause {
    std::string text;
    std::string emotion;  // affinity tag
};

struct ConclusionClause {
    std::string text;
    Valence valence;
    Arousal arousal;
};

// Per-stage candidate clauses the toy policy composes traces from.
struct ClauseBank {
    std::vector<TriggerClause> trigger_clauses;
    std::vector<ReflectionClause> reflection_clauses;
    std::vector<ConclusionClause> conclusion_clauses;

    std::size_t conclusion_index(Valence v, Arousal a) const {
        for (std::size_t i = 0; i < conclusion_clauses.size(); ++i)
            if (conclusion_clauses[i].valence == v && conclusion_clauses[i].arousal == a) return i;
        throw std::invalid_argument("no conclusion clause for requested valence/arousal");
    }

    std::size_t reflection_index(std::string_view emotion) const {
        for (std::size_t i = 0; i < reflection_clauses.size(); ++i)
            if (reflection_clauses[i].emotion == emotion) return i;
        throw std::invalid_argument("no reflection clause for emotion: " + std::string(emotion));
    }

    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a64("bank");
        for (const auto& c : trigger_clauses) {
            h = fnv1a64(c.text, h);
            for (const auto& t : c.trigger_ids) h = fnv1a64(t, h);
        }
        for (const auto& c : reflection_clauses) h = fnv1a64(c.emotion, fnv1a64(c.text, h));
        for (const auto& c : conclusion_clauses)
            h = fnv1a64(to_string(c.arousal), fnv1a64(to_string(c.valence), fnv1a64(c.text, h)));
        return h;
    }
};

namespace detail {

inline const std::map<std::string, std::pair<std::string, std::string>>& trigger_lexicon() {
    static const std::map<std::string, std::pair<std::string, std::string>> lex = {
        {"amusement", {"a grinning street performer", "a puppy tumbling over its own paws"}},
        {"anger", {"a clenched fist raised mid-argument", "a kicked-over trash can"}},
        {"awe", {"a towering mountain ridge", "a sky crowded with stars"}},
        {"contentment", {"a quiet porch at dusk", "a steaming mug on a windowsill"}},
        {"disgust", {"a pile of rotting food", "a grime-streaked subway wall"}},
        {"excitement", {"a roaring stadium crowd", "fireworks streaking overhead"}},
        {"fear", {"looming storm clouds", "a shadowed alleyway"}},
        {"joy", {"a burst of confetti", "children laughing in a park"}},
        {"sadness", {"a wilted bouquet on a doorstep", "an empty bench in the rain"}},
        {"surprise", {"a sudden flash of light", "an unexpected gift box"}},
    };
    return lex;
}

}  // namespace detail

// Two triggers per taxonomy label, drawn from a small lexicon where the
// label is known and synthesized otherwise.
inline TriggerVocabulary make_trigger_vocabulary(const EmotionTaxonomy& taxonomy) {
    TriggerVocabulary vocab;
    const auto& lex = detail::trigger_lexicon();
    for (const auto& label : taxonomy.labels()) {
        std::pair<std::string, std::string> surfaces;
        auto it = lex.find(label);
        if (it != lex.end()) {
            surfaces = it->second;
        } else {
            surfaces = {"a telling sign of " + label, "another unmistakable mark of " + label};
        }
        vocab.triggers.push_back({"cue:" + label + ":0", surfaces.first, label});
        vocab.triggers.push_back({"cue:" + label + ":1", surfaces.second, label});
    }
    return vocab;
}

// Standard bank: one stage-1 clause per trigger, one stage-2 clause per
// label, one stage-3 clause per valence/arousal combination. Validates that
// no reflection clause text contains another (the oracle detects clauses by
// substring).
inline ClauseBank make_clause_bank(const EmotionTaxonomy& taxonomy,
                                   const TriggerVocabulary& vocab) {
    ClauseBank bank;
    for (const auto& t : vocab.triggers)
        bank.trigger_clauses.push_back({"The scene is dominated by " + t.surface + ".", {t.id}});

    for (const auto& label : taxonomy.labels())
        bank.reflection_clauses.push_back(
            {"A viewer taking this in would most likely feel " + label + " rising.", label});

    bank.conclusion_clauses = {
        {"Overall the emotion reads as positive, with high arousal (excited).", Valence::Positive,
         Arousal::High},
        {"Overall the emotion reads as positive, with low arousal (calm).", Valence::Positive,
         Arousal::Low},
        {"Overall the emotion reads as negative, with high arousal (agitated).", Valence::Negative,
         Arousal::High},
        {"Overall the emotion reads as negative, with low arousal (subdued).", Valence::Negative,
         Arousal::Low},
    };

    if (bank.trigger_clauses.size() < 2 || bank.reflection_clauses.size() < 2)
        throw std::invalid_argument("clause bank needs at least two clauses per stage");

    for (std::size_t i = 0; i < bank.reflection_clauses.size(); ++i)
        for (std::size_t k = 0; k < bank.reflection_clauses.size(); ++k)
            if (i != k && bank.reflection_clauses[i].text.find(bank.reflection_clauses[k].text) !=
                              std::string::npos)
                throw std::invalid_argument(
                    "reflection clause texts must not contain one another: '" +
                    bank.reflection_clauses[k].text + "'");
    return bank;
}

}  // namespace affectrl
