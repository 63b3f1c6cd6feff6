#include "gridtrader/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <string>

#include "gridtrader/errors.hpp"

namespace gridtrader {

namespace {

constexpr const char* kMagic = "gridtrader-checkpoint v1";

void put_f(std::FILE* f, const char* key, double v) {
    std::fprintf(f, "%s %a\n", key, v);
}

void put_i(std::FILE* f, const char* key, long long v) {
    std::fprintf(f, "%s %lld\n", key, v);
}

void put_u(std::FILE* f, const char* key, unsigned long long v) {
    std::fprintf(f, "%s %llu\n", key, v);
}

// Line-oriented reader that insists on the expected key order; keeps parsing
// dead simple and any corruption loud.
struct Reader {
    std::FILE* f;
    std::string path;
    int line_no = 0;

    std::string next_line() {
        char buf[256];
        if (std::fgets(buf, sizeof buf, f) == nullptr) {
            throw ValidationError("checkpoint '" + path + "': unexpected end of file at line " +
                                  std::to_string(line_no + 1));
        }
        ++line_no;
        std::string s(buf);
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) {
            s.pop_back();
        }
        return s;
    }

    std::string expect_key(const std::string& key) {
        const std::string line = next_line();
        if (line.size() <= key.size() || line.compare(0, key.size(), key) != 0 || line[key.size()] != ' ') {
            throw ValidationError("checkpoint '" + path + "' line " + std::to_string(line_no) +
                                  ": expected key '" + key + "'");
        }
        return line.substr(key.size() + 1);
    }

    double get_f(const std::string& key) {
        const std::string v = expect_key(key);
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') {
            throw ValidationError("checkpoint '" + path + "' line " + std::to_string(line_no) +
                                  ": bad float for '" + key + "'");
        }
        return x;
    }

    long long get_i(const std::string& key) {
        const std::string v = expect_key(key);
        char* end = nullptr;
        const long long x = std::strtoll(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0') {
            throw ValidationError("checkpoint '" + path + "' line " + std::to_string(line_no) +
                                  ": bad integer for '" + key + "'");
        }
        return x;
    }

    unsigned long long get_u(const std::string& key) {
        const std::string v = expect_key(key);
        char* end = nullptr;
        const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0') {
            throw ValidationError("checkpoint '" + path + "' line " + std::to_string(line_no) +
                                  ": bad integer for '" + key + "'");
        }
        return x;
    }
};

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    std::fprintf(f, "%s\n", kMagic);
    put_i(f, "obs_dim", ckpt.params.obs_dim);
    put_i(f, "act_dim", ckpt.params.act_dim);
    put_i(f, "hidden_size", ckpt.params.hidden_size);
    put_f(f, "gamma", ckpt.config.gamma);
    put_f(f, "learning_rate", ckpt.config.learning_rate);
    put_f(f, "clip_epsilon", ckpt.config.clip_epsilon);
    put_i(f, "batch_trajectories", ckpt.config.batch_trajectories);
    put_i(f, "epochs_per_batch", ckpt.config.epochs_per_batch);
    put_f(f, "entropy_coeff", ckpt.config.entropy_coeff);
    put_f(f, "value_coeff", ckpt.config.value_coeff);
    put_u(f, "seed", ckpt.config.seed);
    std::fprintf(f, "objective %s\n", to_string(ckpt.config.objective));
    std::fprintf(f, "optimizer %s\n", to_string(ckpt.config.optimizer));
    put_f(f, "init_log_std", ckpt.config.init_log_std);
    put_i(f, "workers", ckpt.config.workers);
    put_f(f, "curriculum_scale", ckpt.config.curriculum_scale);
    put_i(f, "stage_index", ckpt.stage_index);
    put_i(f, "stage_steps_done", ckpt.stage_steps_done);
    put_i(f, "total_steps", ckpt.total_steps);
    put_u(f, "params", ckpt.params.flat.size());
    for (double v : ckpt.params.flat) {
        std::fprintf(f, "%a\n", v);
    }
    std::fprintf(f, "end\n");
    std::fclose(f);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) {
        throw IoError("cannot open checkpoint '" + path + "'");
    }
    Reader r{f, path};
    Checkpoint c;
    try {
        if (r.next_line() != kMagic) {
            throw ValidationError("checkpoint '" + path + "': bad magic line (expected '" +
                                  std::string(kMagic) + "')");
        }
        c.params.obs_dim = static_cast<int>(r.get_i("obs_dim"));
        c.params.act_dim = static_cast<int>(r.get_i("act_dim"));
        c.params.hidden_size = static_cast<int>(r.get_i("hidden_size"));
        c.config.gamma = r.get_f("gamma");
        c.config.learning_rate = r.get_f("learning_rate");
        c.config.clip_epsilon = r.get_f("clip_epsilon");
        c.config.batch_trajectories = static_cast<int>(r.get_i("batch_trajectories"));
        c.config.epochs_per_batch = static_cast<int>(r.get_i("epochs_per_batch"));
        c.config.hidden_size = c.params.hidden_size;
        c.config.entropy_coeff = r.get_f("entropy_coeff");
        c.config.value_coeff = r.get_f("value_coeff");
        c.config.seed = r.get_u("seed");
        c.config.objective = objective_from_string(r.expect_key("objective"));
        c.config.optimizer = optimizer_from_string(r.expect_key("optimizer"));
        c.config.init_log_std = r.get_f("init_log_std");
        c.config.workers = static_cast<int>(r.get_i("workers"));
        c.config.curriculum_scale = r.get_f("curriculum_scale");
        c.stage_index = static_cast<int>(r.get_i("stage_index"));
        c.stage_steps_done = static_cast<long>(r.get_i("stage_steps_done"));
        c.total_steps = static_cast<long>(r.get_i("total_steps"));
        const unsigned long long n = r.get_u("params");
        const size_t expected = c.params.layout().total;
        if (n != expected) {
            throw ValidationError("checkpoint '" + path + "': parameter count " + std::to_string(n) +
                                  " does not match layout size " + std::to_string(expected));
        }
        c.params.flat.resize(expected);
        for (size_t i = 0; i < expected; ++i) {
            const std::string line = r.next_line();
            char* end = nullptr;
            c.params.flat[i] = std::strtod(line.c_str(), &end);
            if (end == line.c_str() || *end != '\0') {
                throw ValidationError("checkpoint '" + path + "' line " + std::to_string(r.line_no) +
                                      ": bad parameter value");
            }
        }
        if (r.next_line() != "end") {
            throw ValidationError("checkpoint '" + path + "': missing end marker");
        }
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    if (!c.params.all_finite()) {
        throw ValidationError("checkpoint '" + path + "': non-finite parameters");
    }
    return c;
}

} // namespace gridtrader
