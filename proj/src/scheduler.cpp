#include "lfpo/scheduler.hpp"

#include <stdexcept>

namespace lfpo::sched {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

std::vector<std::size_t> stratified_timesteps(std::size_t range, std::size_t k,
                                              Rng& rng) {
    require(k >= 1, "need at least one stratum");
    require(k <= range, "more strata than timesteps");
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t seg = 0; seg < k; ++seg) {
        const std::size_t lo = seg * range / k;
        const std::size_t hi = (seg + 1) * range / k - 1;  // inclusive
        const std::size_t draw =
            lo + static_cast<std::size_t>(rng.uniform_below(hi - lo + 1));
        out.push_back(draw + 1);  // timestep domain {1..range}
    }
    return out;
}

std::vector<Block> build_blocks(std::size_t num_trajectories,
                                std::size_t completion_len, std::size_t k,
                                std::size_t block_size, Rng& rng) {
    require(block_size >= 1, "block size must be >= 1");

    std::vector<WorkItem> items;
    items.reserve(num_trajectories * k);
    for (std::size_t traj = 0; traj < num_trajectories; ++traj) {
        const std::vector<std::size_t> ts =
            stratified_timesteps(completion_len, k, rng);
        for (std::size_t t : ts) {
            WorkItem item;
            item.trajectory = traj;
            item.timestep = t;
            item.substream = derive_seed(rng.next_u64(), stream::kMask);
            items.push_back(item);
        }
    }
    rng.shuffle(items);

    std::vector<Block> blocks;
    for (std::size_t start = 0; start < items.size(); start += block_size) {
        Block b;
        b.index = blocks.size();
        const std::size_t end = std::min(items.size(), start + block_size);
        b.items.assign(items.begin() + static_cast<std::ptrdiff_t>(start),
                       items.begin() + static_cast<std::ptrdiff_t>(end));
        blocks.push_back(std::move(b));
    }
    return blocks;
}

std::vector<double> accumulate_gradients(
    const std::vector<Block>& blocks,
    const std::function<std::vector<double>(const Block&)>& grad_fn) {
    std::vector<double> total;
    for (const Block& block : blocks) {
        std::vector<double> g = grad_fn(block);
        if (total.empty()) {
            total = std::move(g);
            continue;
        }
        require(g.size() == total.size(), "gradient size mismatch");
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += g[i];
    }
    return total;
}

}  // namespace lfpo::sched
