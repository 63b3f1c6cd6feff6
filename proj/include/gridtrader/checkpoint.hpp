#pragma once

#include <string>

#include "gridtrader/ppo.hpp"

namespace gridtrader {

// Trained parameters plus enough trainer state to resume or reproduce.
struct Checkpoint {
    PolicyParameters params;
    TrainerConfig config;
    int stage_index = 0;       // completed stages
    long stage_steps_done = 0; // steps into the current stage
    long total_steps = 0;
};

// Text format, one `key value` pair per line, floats as C hexfloats so the
// round trip is bit-exact. First line: "gridtrader-checkpoint v1".
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path); // throws IoError / ValidationError

} // namespace gridtrader
