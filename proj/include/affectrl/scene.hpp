#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "affectrl/clause_bank.hpp"
#include "affectrl/rewards.hpp"
#include "affectrl/taxonomy.hpp"
#include "affectrl/util.hpp"
#include "json.hpp"

namespace affectrl {

// Stand-in for a visual input: a feature vector carrying a linearly
// decodable signal for the gold emotion and the present triggers.
struct SyntheticScene {
    std::string scene_id;
    std::vector<double> features;
    std::vector<std::string> trigger_ids;  // sorted, unique
    std::string gold_emotion;
    Valence valence = Valence::Positive;
    Arousal arousal = Arousal::Low;
};

struct SceneGenParams {
    std::size_t feature_dim = 0;     // 0 -> 3*|labels| + 4
    double noise_sigma = 0.1;        // jitter on signal dims
    double distractor_prob = 0.25;   // chance of one off-emotion trigger
};

// Feature layout: [0, K) one-hot gold emotion, [K, K+T) multi-hot triggers,
// remainder pure noise. K = |labels|, T = |vocab|.
inline std::vector<SyntheticScene> generate_dataset(std::uint64_t seed, std::size_t n,
                                                    const EmotionTaxonomy& taxonomy,
                                                    const TriggerVocabulary& vocab,
                                                    SceneGenParams params = {}) {
    const std::size_t n_labels = taxonomy.size();
    const std::size_t n_triggers = vocab.triggers.size();
    if (n < n_labels)
        throw std::invalid_argument("generate_dataset: n must be at least the taxonomy size");
    std::size_t dim = params.feature_dim == 0 ? n_labels + n_triggers + 4 : params.feature_dim;
    if (dim < n_labels + n_triggers)
        throw std::invalid_argument("generate_dataset: feature_dim too small for the signal");

    std::vector<SyntheticScene> scenes;
    scenes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_rng(seed, fnv1a64("scene"), i);
        std::normal_distribution<double> jitter(0.0, params.noise_sigma);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        SyntheticScene s;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "s%06zu", i);
        s.scene_id = buf;
        // Round-robin keeps every class at n/K scenes up to rounding.
        std::size_t label_idx = i % n_labels;
        s.gold_emotion = taxonomy.labels()[label_idx];
        auto va = taxonomy.valence_arousal(s.gold_emotion);
        s.valence = va.first;
        s.arousal = va.second;

        std::set<std::string> triggers;
        for (const auto& id : vocab.ids_for_emotion(s.gold_emotion)) triggers.insert(id);
        if (unit(rng) < params.distractor_prob && n_labels > 1) {
            std::uniform_int_distribution<std::size_t> pick(0, n_triggers - 1);
            for (int attempt = 0; attempt < 8; ++attempt) {
                const Trigger& t = vocab.triggers[pick(rng)];
                if (t.emotion != s.gold_emotion) {
                    triggers.insert(t.id);
                    break;
                }
            }
        }
        s.trigger_ids.assign(triggers.begin(), triggers.end());

        s.features.assign(dim, 0.0);
        for (std::size_t k = 0; k < n_labels; ++k)
            s.features[k] = (k == label_idx ? 1.0 : 0.0) + jitter(rng);
        for (std::size_t t = 0; t < n_triggers; ++t) {
            bool present = triggers.count(vocab.triggers[t].id) > 0;
            s.features[n_labels + t] = (present ? 1.0 : 0.0) + jitter(rng);
        }
        for (std::size_t k = n_labels + n_triggers; k < dim; ++k) s.features[k] = noise(rng);

        scenes.push_back(std::move(s));
    }
    return scenes;
}

inline std::string scene_caption(const SyntheticScene& scene, const TriggerVocabulary& vocab) {
    std::string caption = "An image showing ";
    for (std::size_t i = 0; i < scene.trigger_ids.size(); ++i) {
        if (i) caption += (i + 1 == scene.trigger_ids.size()) ? " and " : ", ";
        caption += vocab.by_id(scene.trigger_ids[i]).surface;
    }
    caption += ".";
    return caption;
}

// --- oracle judge ----------------------------------------------------------

// Tag-based consistency verdict: the text describes the scene iff it
// mentions the surface form of at least one present trigger.
inline Verdict oracle_yes_no(const SyntheticScene& scene, std::string_view s1_text,
                             const TriggerVocabulary& vocab) {
    if (trim(s1_text).empty()) return Verdict::No;
    for (const auto& id : scene.trigger_ids)
        if (s1_text.find(vocab.by_id(id).surface) != std::string_view::npos) return Verdict::Yes;
    return Verdict::No;
}

// Tag-based coherence label: the emotion affinity of the stage-2 clause
// detected in the text. Zero or multiple detections -> sentinel.
inline std::string oracle_emotion(std::string_view s12_text, const ClauseBank& bank) {
    const ReflectionClause* found = nullptr;
    for (const auto& clause : bank.reflection_clauses) {
        if (s12_text.find(clause.text) != std::string_view::npos) {
            if (found) return std::string(kNoMatchLabel);  // ambiguous
            found = &clause;
        }
    }
    return found ? found->emotion : std::string(kNoMatchLabel);
}

// Deterministic Judge over synthetic scenes; the ground-truth-computable
// stand-in for a reflective model.
class OracleJudge : public Judge {
public:
    OracleJudge(const EmotionTaxonomy& taxonomy, TriggerVocabulary vocab, ClauseBank bank,
                const std::vector<SyntheticScene>& scenes)
        : taxonomy_(&taxonomy), vocab_(std::move(vocab)), bank_(std::move(bank)) {
        for (const auto& s : scenes) scenes_by_id_.emplace(s.scene_id, &s);
    }

    Verdict judge_yes_no(const SceneRef& scene, std::string_view step1_text,
                         std::string_view /*prompt*/) override {
        return oracle_yes_no(resolve(scene.id), step1_text, vocab_);
    }

    std::string judge_emotion(std::string_view steps12_text, std::string_view /*prompt*/,
                              const EmotionTaxonomy& /*taxonomy*/) override {
        return oracle_emotion(steps12_text, bank_);
    }

    const TriggerVocabulary& vocabulary() const { return vocab_; }
    const ClauseBank& bank() const { return bank_; }

private:
    const SyntheticScene& resolve(const std::string& id) const {
        auto it = scenes_by_id_.find(id);
        if (it == scenes_by_id_.end())
            throw std::invalid_argument("oracle judge: unknown scene id '" + id + "'");
        return *it->second;
    }

    const EmotionTaxonomy* taxonomy_;
    TriggerVocabulary vocab_;
    ClauseBank bank_;
    std::unordered_map<std::string, const SyntheticScene*> scenes_by_id_;
};

// --- dataset manifests ------------------------------------------------------

struct ManifestRecord {
    std::string id;
    std::string label;    // canonical
    std::string caption;  // optional image surrogate
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
    std::string taxonomy_name;
    std::string split_name;
};

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSONL, one {id, label, caption?} object per line. Labels must
// canonicalize against the taxonomy; ids must be unique.
inline DatasetManifest load_manifest(const std::string& path, const EmotionTaxonomy& taxonomy) {
    std::ifstream in(path);
    if (!in) throw ManifestError("manifest: cannot open " + path);

    DatasetManifest manifest;
    manifest.taxonomy_name = taxonomy.name();
    auto slash = path.find_last_of('/');
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = stem.find_last_of('.');
    manifest.split_name = dot == std::string::npos ? stem : stem.substr(0, dot);

    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ManifestError("manifest: line " + std::to_string(line_no) + ": invalid JSON (" +
                                e.what() + ")");
        }
        if (!j.contains("id") || !j.contains("label"))
            throw ManifestError("manifest: line " + std::to_string(line_no) +
                                ": record needs 'id' and 'label'");
        ManifestRecord rec;
        rec.id = j["id"].get<std::string>();
        std::string raw_label = j["label"].get<std::string>();
        auto canonical = taxonomy.canonicalize(raw_label);
        if (!canonical)
            throw ManifestError("manifest: line " + std::to_string(line_no) + ": label '" +
                                raw_label + "' not in taxonomy '" + taxonomy.name() + "'");
        rec.label = *canonical;
        rec.caption = j.value("caption", std::string());
        if (!seen_ids.insert(rec.id).second)
            throw ManifestError("manifest: line " + std::to_string(line_no) + ": duplicate id '" +
                                rec.id + "'");
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

}  // namespace affectrl
