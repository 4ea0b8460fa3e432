#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace affectrl {

// Per-step training metrics. wall_ms is measured wall time and is kept out
// of metrics.jsonl so identical-seed runs stay byte-identical; it is
// appended as the last CSV column instead.
struct StepMetrics {
    int step = 0;
    double mean_overall = 0.0;
    double mean_acc = 0.0;
    double mean_format = 0.0;
    double mean_cons = 0.0;
    double mean_coh = 0.0;
    double mean_kl = 0.0;
    double objective = 0.0;
    double wall_ms = 0.0;
};

inline nlohmann::ordered_json metrics_to_json(const StepMetrics& m) {
    nlohmann::ordered_json j;
    j["step"] = m.step;
    j["mean_overall"] = m.mean_overall;
    j["mean_acc"] = m.mean_acc;
    j["mean_format"] = m.mean_format;
    j["mean_cons"] = m.mean_cons;
    j["mean_coh"] = m.mean_coh;
    j["mean_kl"] = m.mean_kl;
    j["objective"] = m.objective;
    return j;
}

inline std::string metrics_csv_header() {
    return "step,mean_overall,mean_acc,mean_format,mean_cons,mean_coh,mean_kl,objective,wall_ms";
}

inline std::string metrics_csv_row(const StepMetrics& m) {
    std::ostringstream os;
    os.precision(17);
    os << m.step << ',' << m.mean_overall << ',' << m.mean_acc << ',' << m.mean_format << ','
       << m.mean_cons << ',' << m.mean_coh << ',' << m.mean_kl << ',' << m.objective << ','
       << m.wall_ms;
    return os.str();
}

// Streams one JSON object per line as steps complete, so an aborted run
// still leaves every finished step on disk.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& jsonl_path) : out_(jsonl_path) {
        if (!out_) throw std::runtime_error("cannot open metrics log: " + jsonl_path);
    }

    void append(const StepMetrics& m) {
        rows_.push_back(m);
        out_ << metrics_to_json(m).dump() << '\n';
        out_.flush();
    }

    const std::vector<StepMetrics>& rows() const { return rows_; }

    void write_csv(const std::string& csv_path) const {
        std::ofstream csv(csv_path);
        if (!csv) throw std::runtime_error("cannot open metrics csv: " + csv_path);
        csv << metrics_csv_header() << '\n';
        for (const auto& m : rows_) csv << metrics_csv_row(m) << '\n';
    }

private:
    std::ofstream out_;
    std::vector<StepMetrics> rows_;
};

}  // namespace affectrl
