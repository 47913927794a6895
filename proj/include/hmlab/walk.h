#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "hmlab/domain.h"

namespace hmlab {

struct WalkParams {
    double shell_eps = 1e-4;
    std::size_t max_steps = 1000000;
    /// Worker threads; 0 means thread_count().
    unsigned threads = 0;
};

struct WalkExit {
    Point point;
    int side = 0;
    std::size_t steps = 0;
};

/// One walk-on-spheres path from x, replayable from (seed, walk_index).
/// Throws MaxStepsExceeded.
WalkExit wos_exit(const Domain& dom, PointView x, std::uint64_t seed, std::uint64_t walk_index,
                  const WalkParams& params = {});

/// Empirical harmonic measure: N walks from `pole`, exits stored by walk
/// index. Discarded walks keep their slot with `kept[i] == 0`.
struct ExitDistribution {
    int dim = 2;
    Point pole;
    std::uint64_t seed = 0;
    double shell_eps = 0.0;
    std::size_t walk_count = 0;
    std::vector<double> exits;  ///< flat, dim per walk
    std::vector<int> sides;
    std::vector<char> kept;
    std::size_t discarded = 0;

    PointView exit(std::size_t i) const {
        return PointView(exits.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    }
    std::size_t valid() const { return walk_count - discarded; }
    double discard_fraction() const {
        return walk_count ? static_cast<double>(discarded) / static_cast<double>(walk_count) : 0.0;
    }
};

/// Requires sdf(pole) < 0. Walks run in parallel; the result does not
/// depend on scheduling.
ExitDistribution sample_exits(const Domain& dom, PointView pole, std::size_t N, std::uint64_t seed,
                              const WalkParams& params = {});

/// CSV: walk_index, exit_x1..exit_xd, target_id (-1 for discarded walks
/// and exits outside every target).
void write_exits_csv(std::ostream& out, const ExitDistribution& dist, const std::vector<int>& target_ids);

}  // namespace hmlab
