#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridtrader/checkpoint.hpp"
#include "gridtrader/config.hpp"
#include "gridtrader/errors.hpp"
#include "gridtrader/ledger.hpp"
#include "gridtrader/trainer.hpp"

namespace {

using namespace gridtrader;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;     // usage, config, or input-file problems
constexpr int kExitDiverged = 3;   // training blew up

// Flag overrides applied on top of the config file.
struct Overrides {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    double curriculum_scale = 0.0;
    bool scale_set = false;
    int workers = 0;
    int episodes = 0;
};

RunConfig load_with_overrides(const Overrides& ov) {
    RunConfig cfg = ov.config_path.empty() ? RunConfig{} : load_run_config(ov.config_path);
    if (ov.seed_set) {
        cfg.seed = ov.seed;
        cfg.trainer.seed = ov.seed;
    }
    if (!ov.out_dir.empty()) {
        cfg.out_dir = ov.out_dir;
    }
    if (ov.scale_set) {
        cfg.trainer.curriculum_scale = ov.curriculum_scale;
    }
    if (ov.workers > 0) {
        cfg.trainer.workers = ov.workers;
    }
    if (ov.episodes > 0) {
        cfg.eval_episodes = ov.episodes;
    }
    return cfg;
}

void print_summary(const RunSummary& s) {
    std::printf("hours scored: %d of %d\n", s.hours_scored_imbalance, s.hours_total);
    std::printf("mean imbalance gap: %.4f%% (max %.4f%%)\n", s.mean_imbalance_gap_pct,
                s.max_imbalance_gap_pct);
    std::printf("hours with imbalance gap <= 2%%: %.2f%%\n", 100.0 * s.frac_hours_within_2pct);
    std::printf("mean best-bound gap: %.4f%% (max %.4f%%)\n", s.mean_cost_gap_pct, s.max_cost_gap_pct);
    std::printf("hours with best-bound gap <= 10%%: %.2f%%\n", 100.0 * s.frac_hours_within_10pct);
    std::printf("renewable share of supply: %.2f%%\n", 100.0 * s.renewable_share);
    for (const std::string& w : s.warnings) {
        std::printf("warning: %s\n", w.c_str());
    }
}

int cmd_train(const Overrides& ov) {
    const RunConfig cfg = load_with_overrides(ov);
    const DayProfile profile = resolve_profile(cfg);
    const MarketEnv env = make_env(cfg, profile);
    std::filesystem::create_directories(cfg.out_dir);

    const TrainingResult result = train_curriculum(env, cfg.stages, cfg.trainer);
    write_training_log(result.log, (std::filesystem::path(cfg.out_dir) / "training_log.csv").string());

    Checkpoint ckpt;
    ckpt.params = result.params;
    ckpt.config = cfg.trainer;
    ckpt.stage_index = static_cast<int>(cfg.stages.size());
    ckpt.stage_steps_done = 0;
    ckpt.total_steps = result.total_steps;
    save_checkpoint(ckpt, (std::filesystem::path(cfg.out_dir) / "checkpoint.txt").string());

    std::printf("trained %lld env steps over %zu stages\n", static_cast<long long>(result.total_steps),
                cfg.stages.size());
    for (size_t i = 0; i < result.stage_success_rate.size(); ++i) {
        std::printf("stage %zu success rate: %.2f%%\n", i + 1, 100.0 * result.stage_success_rate[i]);
    }
    std::printf("wrote %s/training_log.csv and %s/checkpoint.txt\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
    return kExitOk;
}

int cmd_evaluate(const Overrides& ov, const std::string& checkpoint_path, bool deterministic) {
    const RunConfig cfg = load_with_overrides(ov);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const DayProfile profile = resolve_profile(cfg);
    const MarketEnv env = make_env(cfg, profile);

    const EvaluationResult result =
        evaluate_policy(ckpt.params, env, cfg.eval_episodes, deterministic, cfg.seed);
    std::filesystem::create_directories(cfg.out_dir);
    emit_reports(result.hours, result.summary, cfg.out_dir);
    print_summary(result.summary);
    std::printf("wrote evaluation CSVs to %s\n", cfg.out_dir.c_str());
    return kExitOk;
}

int cmd_simulate_day(const Overrides& ov, const std::string& checkpoint_path, int inject_duplicate_hour) {
    const RunConfig cfg = load_with_overrides(ov);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const DayProfile profile = resolve_profile(cfg);
    const MarketEnv env = make_env(cfg, profile);

    const EvaluationResult result = evaluate_policy(ckpt.params, env, 1, true, cfg.seed);

    // Hourly settlements between aggregate pool accounts: the load account
    // pays the generator pool at that hour's market price for the energy
    // actually supplied. One ledger round per traded hour.
    Ledger ledger(cfg.ledger, ClockMode::Simulated);
    ledger.register_account("generator_pool");
    ledger.register_account("load_serving_entity");
    for (const HourlyEvaluation& h : result.hours) {
        ledger.submit_settlement("load_serving_entity", "generator_pool", h.hour, h.price_usd_per_mwh,
                                 h.supply_mwh);
        if (h.hour == inject_duplicate_hour) {
            ledger.submit_settlement("load_serving_entity", "generator_pool", h.hour,
                                     h.price_usd_per_mwh, h.supply_mwh);
        }
        ledger.advance_round();
    }
    while (ledger.pending_count() > 0) {
        ledger.advance_round();
    }

    std::filesystem::create_directories(cfg.out_dir);
    emit_reports(result.hours, result.summary, cfg.out_dir);
    write_ledger_report(ledger, cfg.out_dir);
    print_summary(result.summary);
    const LedgerReport rep = ledger.report();
    std::printf("settlements: %llu submitted, %llu confirmed, %llu double-spend rejections\n",
                static_cast<unsigned long long>(rep.n_submitted),
                static_cast<unsigned long long>(rep.n_confirmed),
                static_cast<unsigned long long>(rep.n_double_spend));
    std::printf("mean settlement latency: %.4f s, throughput: %.4f txn/s\n", rep.avg_latency_s,
                rep.throughput_txn_per_s);
    std::printf("wrote evaluation and ledger CSVs to %s\n", cfg.out_dir.c_str());
    return kExitOk;
}

int cmd_bench_ledger(const Overrides& ov, long n_txns) {
    const RunConfig cfg = load_with_overrides(ov);
    Ledger ledger(cfg.ledger, ClockMode::Simulated);

    std::vector<std::string> accounts;
    for (int i = 0; i < 10; ++i) {
        accounts.push_back("bench_" + std::to_string(i));
        ledger.register_account(accounts.back());
    }
    std::vector<std::pair<int, int>> pairs;
    for (int s = 0; s < 10; ++s) {
        for (int r = 0; r < 10; ++r) {
            if (s != r) {
                pairs.emplace_back(s, r);
            }
        }
    }

    for (long t = 0; t < n_txns; ++t) {
        const int hour = static_cast<int>(t % 24);
        const auto& [s, r] = pairs[static_cast<size_t>(t / 24) % pairs.size()];
        const double price = 10.0 + static_cast<double>(t % 90);
        const double quantity = 5.0 + static_cast<double>(t % 7);
        ledger.submit_settlement(accounts[static_cast<size_t>(s)], accounts[static_cast<size_t>(r)],
                                 hour, price, quantity);
    }
    while (ledger.pending_count() > 0) {
        ledger.advance_round();
    }

    const LedgerReport rep = ledger.report();
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_ledger_report(ledger, cfg.out_dir);
    }
    std::printf("submitted: %llu\n", static_cast<unsigned long long>(rep.n_submitted));
    std::printf("confirmed: %llu\n", static_cast<unsigned long long>(rep.n_confirmed));
    std::printf("average latency: %.6f s\n", rep.avg_latency_s);
    std::printf("throughput: %.6f txn/s\n", rep.throughput_txn_per_s);
    return kExitOk;
}

int cmd_make_profile(const Overrides& ov, double amplitude_flag, bool amplitude_set) {
    const RunConfig cfg = load_with_overrides(ov);
    DayProfile profile = resolve_profile(cfg);
    const double amplitude = amplitude_set ? amplitude_flag : cfg.env.perturbation_amplitude;
    if (amplitude > 0.0) {
        profile = perturb(profile, PerturbationSpec{amplitude, cfg.seed});
    }
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = (std::filesystem::path(cfg.out_dir) / "profile.csv").string();
    save_profile(profile, path);
    std::printf("wrote %s (amplitude %.4f, seed %llu)\n", path.c_str(), amplitude,
                static_cast<unsigned long long>(cfg.seed));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Day-ahead energy trading: curriculum-trained dispatch policy with ledger settlement"};
    app.require_subcommand(1);
    // Shared flags may appear after the subcommand name.
    app.fallthrough(true);

    Overrides ov;
    app.add_option("--config", ov.config_path, "JSON run configuration (defaults used when omitted)");
    app.add_option("--seed", ov.seed, "override the config seed")->each([&](const std::string&) {
        ov.seed_set = true;
    });
    app.add_option("--out-dir", ov.out_dir, "override the output directory");
    app.add_option("--curriculum-scale", ov.curriculum_scale, "multiply all stage budgets")
        ->each([&](const std::string&) { ov.scale_set = true; });
    app.add_option("--workers", ov.workers, "parallel trajectory collectors (1 = reproducible)");
    app.add_option("--episodes", ov.episodes, "evaluation episode count");

    CLI::App* train = app.add_subcommand("train", "run the curriculum and write a checkpoint");
    train->fallthrough(true);

    std::string checkpoint_path;
    bool deterministic = true;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a trained policy over full days");
    evaluate->fallthrough(true);
    evaluate->add_option("--checkpoint", checkpoint_path, "trained checkpoint file")->required();
    evaluate->add_flag("--deterministic,!--stochastic", deterministic,
                       "use squashed-mean actions (default) or sample");

    int inject_duplicate_hour = -1;
    CLI::App* simulate = app.add_subcommand("simulate-day", "one day with on-ledger settlement");
    simulate->fallthrough(true);
    simulate->add_option("--checkpoint", checkpoint_path, "trained checkpoint file")->required();
    simulate->add_option("--inject-duplicate-hour", inject_duplicate_hour,
                         "submit a second settlement for this hour (double-spend demo)");

    long n_txns = 203;
    CLI::App* bench = app.add_subcommand("bench-ledger", "measure settlement latency and throughput");
    bench->fallthrough(true);
    bench->add_option("--txns", n_txns, "number of settlement transactions");

    double amplitude_flag = 0.0;
    bool amplitude_set = false;
    CLI::App* make_prof = app.add_subcommand("make-profile", "synthesize or perturb a day profile CSV");
    make_prof->fallthrough(true);
    make_prof->add_option("--amplitude", amplitude_flag, "perturbation amplitude (default from config)")
        ->each([&](const std::string&) { amplitude_set = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed()) {
            return cmd_train(ov);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(ov, checkpoint_path, deterministic);
        }
        if (simulate->parsed()) {
            return cmd_simulate_day(ov, checkpoint_path, inject_duplicate_hour);
        }
        if (bench->parsed()) {
            return cmd_bench_ledger(ov, n_txns);
        }
        if (make_prof->parsed()) {
            return cmd_make_profile(ov, amplitude_flag, amplitude_set);
        }
    } catch (const TrainingDiverged& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
