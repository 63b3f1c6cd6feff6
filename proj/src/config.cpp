#include "gridtrader/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridtrader/errors.hpp"

namespace gridtrader {

namespace {

using nlohmann::json;

// Tracks which keys a section consumed; anything left over is a config error.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) {
            throw ValidationError("config: section '" + name_ + "' must be a JSON object");
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ValidationError("config: key '" + name_ + "." + key + "': " + e.what());
        }
    }

    const json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (seen_.count(it.key()) == 0) {
                throw ValidationError("config: unknown key '" + name_ + "." + it.key() + "'");
            }
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

ConventionalCostMode cost_mode_from_string(const std::string& s) {
    if (s == "hourly_market_price") {
        return ConventionalCostMode::HourlyMarketPrice;
    }
    if (s == "fixed") {
        return ConventionalCostMode::Fixed;
    }
    throw ValidationError("config: unknown conventional_cost_mode '" + s +
                          "' (expected hourly_market_price or fixed)");
}

const char* to_string(ConventionalCostMode m) {
    return m == ConventionalCostMode::HourlyMarketPrice ? "hourly_market_price" : "fixed";
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }

    RunConfig c;
    Section top(root, "");
    top.get("profile", c.profile);
    top.get("seed", c.seed);
    top.get("out_dir", c.out_dir);
    top.get("perturbation_amplitude", c.env.perturbation_amplitude);

    if (top.has("fleet")) {
        Section s(top.raw("fleet"), "fleet");
        s.get("solar_capacity_mw", c.fleet.solar_capacity_mw);
        s.get("wind_capacity_mw", c.fleet.wind_capacity_mw);
        s.get("conventional_capacity_mw", c.fleet.conventional_capacity_mw);
        if (s.has("conventional_cost_mode")) {
            c.fleet.conventional_cost_mode =
                cost_mode_from_string(s.raw("conventional_cost_mode").get<std::string>());
        }
        s.get("conventional_fixed_cost_usd_per_mwh", c.fleet.conventional_fixed_cost_usd_per_mwh);
        s.get("renewable_marginal_cost_usd_per_mwh", c.fleet.renewable_marginal_cost_usd_per_mwh);
        s.finish();
    }
    if (top.has("battery")) {
        Section s(top.raw("battery"), "battery");
        s.get("energy_capacity_mwh", c.battery.energy_capacity_mwh);
        s.get("max_charge_power_mw", c.battery.max_charge_power_mw);
        s.get("max_discharge_power_mw", c.battery.max_discharge_power_mw);
        s.get("round_trip_efficiency", c.battery.round_trip_efficiency);
        s.get("initial_soc_mwh", c.battery.initial_soc_mwh);
        s.finish();
    }
    if (top.has("reward")) {
        Section s(top.raw("reward"), "reward");
        s.get("w_imbalance", c.reward.w_imbalance);
        s.get("w_cost", c.reward.w_cost);
        s.get("penalty_invalid", c.reward.penalty_invalid);
        s.get("arbitrage_bonus", c.reward.arbitrage_bonus);
        s.finish();
    }
    if (top.has("trainer")) {
        Section s(top.raw("trainer"), "trainer");
        s.get("gamma", c.trainer.gamma);
        s.get("learning_rate", c.trainer.learning_rate);
        s.get("clip_epsilon", c.trainer.clip_epsilon);
        s.get("batch_trajectories", c.trainer.batch_trajectories);
        s.get("epochs_per_batch", c.trainer.epochs_per_batch);
        s.get("minibatch_size", c.trainer.minibatch_size);
        s.get("antithetic", c.trainer.antithetic);
        s.get("replay_batches", c.trainer.replay_batches);
        s.get("hidden_size", c.trainer.hidden_size);
        s.get("entropy_coeff", c.trainer.entropy_coeff);
        s.get("value_coeff", c.trainer.value_coeff);
        if (s.has("objective")) {
            c.trainer.objective = objective_from_string(s.raw("objective").get<std::string>());
        }
        if (s.has("optimizer")) {
            c.trainer.optimizer = optimizer_from_string(s.raw("optimizer").get<std::string>());
        }
        s.get("init_log_std", c.trainer.init_log_std);
        s.get("workers", c.trainer.workers);
        s.finish();
    }
    if (top.has("curriculum")) {
        Section s(top.raw("curriculum"), "curriculum");
        s.get("scale", c.trainer.curriculum_scale);
        if (s.has("stages")) {
            const json& arr = s.raw("stages");
            if (!arr.is_array()) {
                throw ValidationError("config: curriculum.stages must be an array");
            }
            c.stages.clear();
            int idx = 0;
            for (const json& e : arr) {
                Section stage(e, "curriculum.stages[" + std::to_string(idx) + "]");
                CurriculumStage cs;
                stage.get("imbalance_gap_target_pct", cs.imbalance_gap_target_pct);
                stage.get("best_bound_gap_target_pct", cs.best_bound_gap_target_pct);
                stage.get("timesteps", cs.timesteps);
                stage.finish();
                c.stages.push_back(cs);
                ++idx;
            }
        }
        s.finish();
    }
    if (top.has("env")) {
        Section s(top.raw("env"), "env");
        s.get("early_stop_multiplier", c.env.early_stop_multiplier);
        s.get("demand_norm_mwh", c.env.demand_norm_mwh);
        s.get("demand_norm_offset_mwh", c.env.demand_norm_offset_mwh);
        s.get("bound_includes_battery", c.env.bound_includes_battery);
        s.get("observe_soc", c.env.observe_soc);
        s.get("price_norm_usd_per_mwh", c.env.price_norm_usd_per_mwh);
        s.get("intent_epsilon", c.env.intent_epsilon);
        s.finish();
    }
    if (top.has("ledger")) {
        Section s(top.raw("ledger"), "ledger");
        s.get("round_duration_s", c.ledger.round_duration_s);
        s.get("extra_confirm_rounds", c.ledger.extra_confirm_rounds);
        s.get("initial_balance_usd", c.ledger.initial_balance_usd);
        s.get("price_min_usd_per_mwh", c.ledger.price_min_usd_per_mwh);
        s.get("price_max_usd_per_mwh", c.ledger.price_max_usd_per_mwh);
        s.get("micro_units_per_usd", c.ledger.micro_units_per_usd);
        s.finish();
    }
    if (top.has("evaluation")) {
        Section s(top.raw("evaluation"), "evaluation");
        s.get("episodes", c.eval_episodes);
        s.finish();
    }
    top.finish();

    c.trainer.seed = c.seed;
    try {
        validate(c.trainer);
        validate_curriculum(c.stages);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
    if (c.eval_episodes < 1) {
        throw ValidationError("config: evaluation.episodes must be >= 1");
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& c) {
    json root;
    root["profile"] = c.profile;
    root["seed"] = c.seed;
    root["out_dir"] = c.out_dir;
    root["perturbation_amplitude"] = c.env.perturbation_amplitude;
    root["fleet"] = {
        {"solar_capacity_mw", c.fleet.solar_capacity_mw},
        {"wind_capacity_mw", c.fleet.wind_capacity_mw},
        {"conventional_capacity_mw", c.fleet.conventional_capacity_mw},
        {"conventional_cost_mode", to_string(c.fleet.conventional_cost_mode)},
        {"conventional_fixed_cost_usd_per_mwh", c.fleet.conventional_fixed_cost_usd_per_mwh},
        {"renewable_marginal_cost_usd_per_mwh", c.fleet.renewable_marginal_cost_usd_per_mwh},
    };
    root["battery"] = {
        {"energy_capacity_mwh", c.battery.energy_capacity_mwh},
        {"max_charge_power_mw", c.battery.max_charge_power_mw},
        {"max_discharge_power_mw", c.battery.max_discharge_power_mw},
        {"round_trip_efficiency", c.battery.round_trip_efficiency},
        {"initial_soc_mwh", c.battery.initial_soc_mwh},
    };
    root["reward"] = {
        {"w_imbalance", c.reward.w_imbalance},
        {"w_cost", c.reward.w_cost},
        {"penalty_invalid", c.reward.penalty_invalid},
        {"arbitrage_bonus", c.reward.arbitrage_bonus},
    };
    root["trainer"] = {
        {"gamma", c.trainer.gamma},
        {"learning_rate", c.trainer.learning_rate},
        {"clip_epsilon", c.trainer.clip_epsilon},
        {"batch_trajectories", c.trainer.batch_trajectories},
        {"epochs_per_batch", c.trainer.epochs_per_batch},
        {"minibatch_size", c.trainer.minibatch_size},
        {"antithetic", c.trainer.antithetic},
        {"replay_batches", c.trainer.replay_batches},
        {"hidden_size", c.trainer.hidden_size},
        {"entropy_coeff", c.trainer.entropy_coeff},
        {"value_coeff", c.trainer.value_coeff},
        {"objective", to_string(c.trainer.objective)},
        {"optimizer", to_string(c.trainer.optimizer)},
        {"init_log_std", c.trainer.init_log_std},
        {"workers", c.trainer.workers},
    };
    json stages = json::array();
    for (const CurriculumStage& s : c.stages) {
        stages.push_back({
            {"imbalance_gap_target_pct", s.imbalance_gap_target_pct},
            {"best_bound_gap_target_pct", s.best_bound_gap_target_pct},
            {"timesteps", s.timesteps},
        });
    }
    root["curriculum"] = {{"scale", c.trainer.curriculum_scale}, {"stages", stages}};
    root["env"] = {
        {"early_stop_multiplier", c.env.early_stop_multiplier},
        {"demand_norm_mwh", c.env.demand_norm_mwh},
        {"demand_norm_offset_mwh", c.env.demand_norm_offset_mwh},
        {"bound_includes_battery", c.env.bound_includes_battery},
        {"observe_soc", c.env.observe_soc},
        {"price_norm_usd_per_mwh", c.env.price_norm_usd_per_mwh},
        {"intent_epsilon", c.env.intent_epsilon},
    };
    root["ledger"] = {
        {"round_duration_s", c.ledger.round_duration_s},
        {"extra_confirm_rounds", c.ledger.extra_confirm_rounds},
        {"initial_balance_usd", c.ledger.initial_balance_usd},
        {"price_min_usd_per_mwh", c.ledger.price_min_usd_per_mwh},
        {"price_max_usd_per_mwh", c.ledger.price_max_usd_per_mwh},
        {"micro_units_per_usd", c.ledger.micro_units_per_usd},
    };
    root["evaluation"] = {{"episodes", c.eval_episodes}};
    return root.dump(2) + "\n";
}

DayProfile resolve_profile(const RunConfig& config) {
    if (config.profile == "synthetic") {
        return synthesize_default();
    }
    return load_profile(config.profile);
}

MarketEnv make_env(const RunConfig& config, const DayProfile& profile) {
    const CurriculumTargets initial{config.stages.front().imbalance_gap_target_pct,
                                    config.stages.front().best_bound_gap_target_pct};
    return MarketEnv(profile, config.fleet, config.battery, config.reward, initial, config.env);
}

} // namespace gridtrader
