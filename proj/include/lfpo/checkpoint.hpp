// Binary checkpoint format, CRC-32 protected. Layout, all little-endian:
//
//   bytes 0..3   magic "LFPO"
//   u32          format version (currently 1)
//   u32          config text length, then that many UTF-8 bytes
//   u64          parameter count
//   f64 * count  parameters, flat layout order
//   u8           optimizer-state presence flag
//   [if 1]       u64 step, f64 * count first moments, f64 * count second
//   u32          CRC-32 of every preceding byte

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfpo/trainer.hpp"

namespace lfpo::ckpt {

inline constexpr std::uint32_t kFormatVersion = 1;

struct Checkpoint {
    std::string config_text;
    denoiser::ParamVector params;
    std::optional<train::OptimizerState> optimizer;
};

// Thrown on bad magic, truncation, CRC mismatch, or version skew.
struct CorruptCheckpoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize(const Checkpoint& c);
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

void write_file(const std::string& path, const Checkpoint& c);
Checkpoint read_file(const std::string& path);

}  // namespace lfpo::ckpt
