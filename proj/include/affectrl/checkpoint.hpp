#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "affectrl/clause_bank.hpp"
#include "affectrl/policy.hpp"
#include "affectrl/taxonomy.hpp"
#include "json.hpp"

namespace affectrl {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Versioned JSON container: parameters, temperature, and content hashes of
// the clause bank and taxonomy the policy was trained against. Loading
// against different bank/taxonomy content is refused — the head indices
// would silently mean different clauses.
inline nlohmann::ordered_json checkpoint_to_json(const ToyPolicy& policy, const ClauseBank& bank,
                                                 const EmotionTaxonomy& taxonomy) {
    nlohmann::ordered_json j;
    j["version"] = kCheckpointVersion;
    j["temperature"] = policy.temperature();
    j["feature_dim"] = policy.feature_dim();
    j["head_sizes"] = policy.head_sizes();
    j["bank_hash"] = bank.content_hash();
    j["taxonomy_hash"] = taxonomy.content_hash();
    nlohmann::ordered_json heads = nlohmann::ordered_json::array();
    for (std::size_t h = 0; h < kNumHeads; ++h) {
        const Matrix& w = policy.weights(static_cast<Head>(h));
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < w.rows; ++r) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (std::size_t c = 0; c < w.cols; ++c) row.push_back(w.at(r, c));
            rows.push_back(std::move(row));
        }
        heads.push_back(std::move(rows));
    }
    j["weights"] = std::move(heads);
    return j;
}

inline ToyPolicy checkpoint_from_json(const nlohmann::json& j, const ClauseBank& bank,
                                      const EmotionTaxonomy& taxonomy) {
    if (j.value("version", -1) != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported version");
    if (j.at("bank_hash").get<std::uint64_t>() != bank.content_hash())
        throw CheckpointError("checkpoint: clause bank hash mismatch");
    if (j.at("taxonomy_hash").get<std::uint64_t>() != taxonomy.content_hash())
        throw CheckpointError("checkpoint: taxonomy hash mismatch");

    auto head_sizes = j.at("head_sizes").get<std::array<std::size_t, kNumHeads>>();
    ToyPolicy policy(j.at("feature_dim").get<std::size_t>(), head_sizes,
                     j.at("temperature").get<double>());
    const auto& heads = j.at("weights");
    if (heads.size() != kNumHeads) throw CheckpointError("checkpoint: wrong head count");
    for (std::size_t h = 0; h < kNumHeads; ++h) {
        Matrix& w = policy.weights(static_cast<Head>(h));
        if (heads[h].size() != w.rows) throw CheckpointError("checkpoint: weight shape mismatch");
        for (std::size_t r = 0; r < w.rows; ++r) {
            if (heads[h][r].size() != w.cols)
                throw CheckpointError("checkpoint: weight shape mismatch");
            for (std::size_t c = 0; c < w.cols; ++c) w.at(r, c) = heads[h][r][c].get<double>();
        }
    }
    return policy;
}

inline void save_checkpoint(const std::string& path, const ToyPolicy& policy,
                            const ClauseBank& bank, const EmotionTaxonomy& taxonomy) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("checkpoint: cannot open " + path + " for writing");
    out << checkpoint_to_json(policy, bank, taxonomy).dump(2) << '\n';
}

inline ToyPolicy load_checkpoint(const std::string& path, const ClauseBank& bank,
                                 const EmotionTaxonomy& taxonomy) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    return checkpoint_from_json(j, bank, taxonomy);
}

}  // namespace affectrl
