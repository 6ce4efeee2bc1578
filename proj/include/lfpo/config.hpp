// JSON run configuration: a single document with task / model / decode /
// lfpo / trainer sections. Unknown keys are errors (fail fast); missing
// keys fall back to the defaults baked into TrainConfig.

#pragma once

#include <stdexcept>
#include <string>

#include "lfpo/trainer.hpp"

namespace lfpo::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parse and validate. The model's vocabulary is derived from the task
// (vocab_data + 2: one spare id plus MASK) and seq_len from
// prompt_len + completion_len.
train::TrainConfig parse(const std::string& json_text);

train::TrainConfig load_file(const std::string& path);

// Canonical JSON for embedding in checkpoints; parse(serialize(c)) == c.
std::string serialize(const train::TrainConfig& config);

}  // namespace lfpo::config
