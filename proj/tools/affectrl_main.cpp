// affectrl command-line tool: synthetic data generation, supervised cold
// start, group-relative training, evaluation, and offline trace scoring.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "affectrl/run.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps;
    std::optional<std::size_t> group_size;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    std::optional<std::string> judge;
    std::optional<std::string> out;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--seed", flags.seed, "run seed");
    cmd->add_option("--steps", flags.steps, "training step count");
    cmd->add_option("--group-size", flags.group_size, "rollouts per prompt (G)");
    cmd->add_option("--lambda1", flags.lambda1, "reflective reward coefficient");
    cmd->add_option("--lambda2", flags.lambda2, "format reward coefficient");
    cmd->add_option("--judge", flags.judge, "judge kind: oracle|self|remote");
    cmd->add_option("--out", flags.out, "output directory");
}

// Config file first, then flags on top: flags win.
affectrl::RunConfig effective_config(const CommonFlags& flags) {
    affectrl::RunConfig config;
    if (!flags.config_path.empty()) config = affectrl::RunConfig::from_file(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.steps) config.steps = *flags.steps;
    if (flags.group_size) config.group_size = *flags.group_size;
    if (flags.lambda1) config.lambda1 = *flags.lambda1;
    if (flags.lambda2) config.lambda2 = *flags.lambda2;
    if (flags.judge) config.judge.kind = affectrl::judge_kind_from_string(*flags.judge);
    if (flags.out) config.out_dir = *flags.out;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"group-relative policy optimization with structured emotion traces"};
    app.require_subcommand(1);

    CommonFlags gen_flags, cold_flags, train_flags, eval_flags, score_flags;
    std::string checkpoint_path, traces_path;

    auto* gen = app.add_subcommand("gen-data", "write a synthetic scene dataset");
    add_common_flags(gen, gen_flags);

    auto* cold = app.add_subcommand("cold-start", "supervised warm-up on demonstrations");
    add_common_flags(cold, cold_flags);

    auto* train = app.add_subcommand("train", "run group-relative training");
    add_common_flags(train, train_flags);

    auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    add_common_flags(eval, eval_flags);
    eval->add_option("--checkpoint", checkpoint_path, "policy checkpoint to evaluate")->required();

    auto* score = app.add_subcommand("score-traces", "score externally produced traces");
    add_common_flags(score, score_flags);
    score->add_option("--traces", traces_path, "JSONL file of {id, output} records")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            affectrl::cmd_gen_data(effective_config(gen_flags));
        } else if (cold->parsed()) {
            affectrl::cmd_cold_start(effective_config(cold_flags));
        } else if (train->parsed()) {
            auto metrics = affectrl::cmd_train(effective_config(train_flags));
            if (!metrics.empty()) {
                const auto& last = metrics.back();
                std::printf("trained %zu steps: mean_overall=%.4f mean_acc=%.4f\n",
                            metrics.size(), last.mean_overall, last.mean_acc);
            }
        } else if (eval->parsed()) {
            auto report = affectrl::cmd_eval(effective_config(eval_flags), checkpoint_path);
            std::printf("eval: n=%zu accuracy=%.4f mean_overall=%.4f\n", report.n, report.accuracy,
                        report.mean_overall);
        } else if (score->parsed()) {
            auto n = affectrl::cmd_score_traces(effective_config(score_flags), traces_path);
            std::printf("scored %zu traces\n", n);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
