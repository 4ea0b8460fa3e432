#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "affectrl/util.hpp"
#include "json.hpp"

namespace affectrl {

enum class Valence { Positive, Negative };
enum class Arousal { Low, High };

inline std::string to_string(Valence v) { return v == Valence::Positive ? "positive" : "negative"; }
inline std::string to_string(Arousal a) { return a == Arousal::High ? "high" : "low"; }

inline Valence valence_from_string(std::string_view s) {
    std::string n = normalize_label_text(s);
    if (n == "positive") return Valence::Positive;
    if (n == "negative") return Valence::Negative;
    throw std::invalid_argument("unknown valence: " + std::string(s));
}

inline Arousal arousal_from_string(std::string_view s) {
    std::string n = normalize_label_text(s);
    if (n == "high") return Arousal::High;
    if (n == "low") return Arousal::Low;
    throw std::invalid_argument("unknown arousal: " + std::string(s));
}

// Closed set of canonical emotion labels, optional aliases, and the fixed
// valence/arousal assignment each label carries.
class EmotionTaxonomy {
public:
    EmotionTaxonomy() = default;

    EmotionTaxonomy(std::string name, std::vector<std::string> labels,
                    std::map<std::string, std::string> aliases = {},
                    std::map<std::string, std::pair<Valence, Arousal>> valence_arousal = {})
        : name_(std::move(name)),
          labels_(std::move(labels)),
          aliases_(std::move(aliases)),
          valence_arousal_(std::move(valence_arousal)) {
        validate();
    }

    const std::string& name() const { return name_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::map<std::string, std::string>& aliases() const { return aliases_; }
    std::size_t size() const { return labels_.size(); }

    bool has_label(std::string_view canonical) const {
        for (const auto& l : labels_)
            if (l == canonical) return true;
        return false;
    }

    std::size_t label_index(std::string_view canonical) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == canonical) return i;
        throw std::invalid_argument("label not in taxonomy: " + std::string(canonical));
    }

    // Normalized exact match against labels, then aliases. Empty result
    // means the text names nothing in this taxonomy.
    std::optional<std::string> canonicalize(std::string_view raw) const {
        std::string n = normalize_label_text(raw);
        if (n.empty()) return std::nullopt;
        for (const auto& l : labels_)
            if (normalize_label_text(l) == n) return l;
        auto it = aliases_.find(n);
        if (it != aliases_.end()) return it->second;
        return std::nullopt;
    }

    std::pair<Valence, Arousal> valence_arousal(std::string_view canonical) const {
        auto it = valence_arousal_.find(std::string(canonical));
        if (it == valence_arousal_.end())
            throw std::invalid_argument("no valence/arousal entry for label: " + std::string(canonical));
        return it->second;
    }

    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a64(name_);
        for (const auto& l : labels_) h = fnv1a64(l, fnv1a64("|", h));
        for (const auto& [a, c] : aliases_) h = fnv1a64(c, fnv1a64(a, h));
        for (const auto& [l, va] : valence_arousal_) {
            h = fnv1a64(to_string(va.first), fnv1a64(l, h));
            h = fnv1a64(to_string(va.second), h);
        }
        return h;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["name"] = name_;
        j["labels"] = labels_;
        j["aliases"] = aliases_;
        nlohmann::ordered_json va;
        for (const auto& l : labels_) {
            auto it = valence_arousal_.find(l);
            if (it != valence_arousal_.end()) {
                va[l] = {{"valence", to_string(it->second.first)},
                         {"arousal", to_string(it->second.second)}};
            }
        }
        j["valence_arousal"] = va;
        return j;
    }

    static EmotionTaxonomy from_json(const nlohmann::json& j) {
        std::map<std::string, std::string> aliases;
        if (j.contains("aliases")) {
            for (auto it = j["aliases"].begin(); it != j["aliases"].end(); ++it)
                aliases[normalize_label_text(it.key())] = it.value().get<std::string>();
        }
        std::map<std::string, std::pair<Valence, Arousal>> va;
        if (j.contains("valence_arousal")) {
            for (auto it = j["valence_arousal"].begin(); it != j["valence_arousal"].end(); ++it) {
                va[it.key()] = {valence_from_string(it.value().at("valence").get<std::string>()),
                                arousal_from_string(it.value().at("arousal").get<std::string>())};
            }
        }
        return EmotionTaxonomy(j.value("name", std::string("unnamed")),
                               j.at("labels").get<std::vector<std::string>>(), std::move(aliases),
                               std::move(va));
    }

private:
    void validate() const {
        if (labels_.empty()) throw std::invalid_argument("taxonomy has no labels");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i].empty()) throw std::invalid_argument("taxonomy contains an empty label");
            for (std::size_t k = i + 1; k < labels_.size(); ++k)
                if (labels_[i] == labels_[k])
                    throw std::invalid_argument("duplicate taxonomy label: " + labels_[i]);
        }
        for (const auto& [alias, canonical] : aliases_) {
            if (!has_label(canonical))
                throw std::invalid_argument("alias '" + alias + "' maps to unknown label '" +
                                            canonical + "'");
        }
        for (const auto& [label, va] : valence_arousal_) {
            (void)va;
            if (!has_label(label))
                throw std::invalid_argument("valence/arousal entry for unknown label '" + label +
                                            "'");
        }
    }

    std::string name_;
    std::vector<std::string> labels_;
    std::map<std::string, std::string> aliases_;                       // normalized alias -> canonical
    std::map<std::string, std::pair<Valence, Arousal>> valence_arousal_;
};

// Eight-category scene-emotion label set with a fixed valence/arousal table.
inline EmotionTaxonomy builtin_taxonomy_emotions8() {
    using VA = std::pair<Valence, Arousal>;
    return EmotionTaxonomy(
        "emotions8",
        {"amusement", "anger", "awe", "contentment", "disgust", "excitement", "fear", "sadness"},
        {},
        {
            {"amusement", VA{Valence::Positive, Arousal::High}},
            {"anger", VA{Valence::Negative, Arousal::High}},
            {"awe", VA{Valence::Positive, Arousal::High}},
            {"contentment", VA{Valence::Positive, Arousal::Low}},
            {"disgust", VA{Valence::Negative, Arousal::Low}},
            {"excitement", VA{Valence::Positive, Arousal::High}},
            {"fear", VA{Valence::Negative, Arousal::High}},
            {"sadness", VA{Valence::Negative, Arousal::Low}},
        });
}

// Six-category label set.
inline EmotionTaxonomy builtin_taxonomy_emotions6() {
    using VA = std::pair<Valence, Arousal>;
    return EmotionTaxonomy("emotions6", {"anger", "disgust", "fear", "joy", "sadness", "surprise"},
                           {},
                           {
                               {"anger", VA{Valence::Negative, Arousal::High}},
                               {"disgust", VA{Valence::Negative, Arousal::Low}},
                               {"fear", VA{Valence::Negative, Arousal::High}},
                               {"joy", VA{Valence::Positive, Arousal::High}},
                               {"sadness", VA{Valence::Negative, Arousal::Low}},
                               {"surprise", VA{Valence::Positive, Arousal::High}},
                           });
}

// Four categories covering every valence/arousal combination; the default
// for small convergence experiments.
inline EmotionTaxonomy builtin_taxonomy_emotions4() {
    using VA = std::pair<Valence, Arousal>;
    return EmotionTaxonomy("emotions4", {"contentment", "excitement", "fear", "sadness"}, {},
                           {
                               {"contentment", VA{Valence::Positive, Arousal::Low}},
                               {"excitement", VA{Valence::Positive, Arousal::High}},
                               {"fear", VA{Valence::Negative, Arousal::High}},
                               {"sadness", VA{Valence::Negative, Arousal::Low}},
                           });
}

inline std::optional<EmotionTaxonomy> builtin_taxonomy(std::string_view name) {
    if (name == "emotions8") return builtin_taxonomy_emotions8();
    if (name == "emotions6") return builtin_taxonomy_emotions6();
    if (name == "emotions4") return builtin_taxonomy_emotions4();
    return std::nullopt;
}

}  // namespace affectrl
