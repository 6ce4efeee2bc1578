// Stratified timestep sampling and partitioning of the trajectory x
// timestep work set into memory-bounded gradient blocks.
//
// Each work item carries its own RNG substream seed, so re-noising draws
// are identical no matter how the items are grouped into blocks; block
// accumulation is an ordered fold, making the total gradient independent
// of block size up to floating-point reassociation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "lfpo/rng.hpp"

namespace lfpo::sched {

struct WorkItem {
    std::size_t trajectory = 0;
    std::size_t timestep = 0;     // in {1..Lc}
    std::uint64_t substream = 0;  // seed for this item's mask draw
};

struct Block {
    std::size_t index = 0;
    std::vector<WorkItem> items;
};

enum class AccumMode { Accumulate, StepPerBlock };

// Split {0..range-1} into K segments [floor(k*range/K), floor((k+1)*range/K)-1],
// draw one value uniformly from each, and map into the timestep domain
// {1..range} by adding 1.
std::vector<std::size_t> stratified_timesteps(std::size_t range, std::size_t k,
                                              Rng& rng);

// One work item per (trajectory, stratified timestep) pair, shuffled and
// chunked into blocks of at most block_size (the last block may be
// smaller). Deterministic given the rng seed, and independent of
// block_size up to chunk boundaries.
std::vector<Block> build_blocks(std::size_t num_trajectories,
                                std::size_t completion_len, std::size_t k,
                                std::size_t block_size, Rng& rng);

// Ordered fold: block gradients are computed via grad_fn and summed in
// ascending block order into a single total.
std::vector<double> accumulate_gradients(
    const std::vector<Block>& blocks,
    const std::function<std::vector<double>(const Block&)>& grad_fn);

}  // namespace lfpo::sched
