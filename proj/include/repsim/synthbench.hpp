#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "repsim/pointcloud.hpp"
#include "repsim/table.hpp"

namespace repsim {

// Gaussian pair sweep over the rank of a random linear map:
// X ~ N(0, I_p) rows, B = U V with U in R^{p x r}, V in R^{r x p},
// Y = X B^T + noise. Low rank collapses information, high rank keeps it.
struct RankSweepConfig {
    std::size_t p = 10;
    std::size_t n = 2500;
    double sigma = 0.1;
    std::vector<std::size_t> ranks;  // empty = 1..p
    std::uint64_t seed = 0;
    std::size_t n_resamples = 10;
    int k = 10;
};

// Full Gaussian vector vs a leading-coordinate slice of itself.
struct SubsetSweepConfig {
    std::size_t p = 100;
    std::size_t n = 2500;
    std::vector<double> fractions;  // sorted, each in (0, 1]
    std::uint64_t seed = 0;
    std::size_t n_resamples = 10;
    int k = 10;
};

std::pair<PointCloud, PointCloud> gen_rank_pair(std::size_t p, std::size_t n,
                                                std::size_t r, double sigma,
                                                std::uint64_t seed);

std::pair<PointCloud, PointCloud> gen_subset_pair(std::size_t p, std::size_t n,
                                                  double fraction, std::uint64_t seed);

// Sub-seed scheme, shared with the CLI: every point of a sweep
// generates from the base seed (one nested realization per sweep, so
// curves are smooth in the sweep parameter) and point i jackknifes
// with seed + kJackknifeSeedOffset + i.
inline constexpr std::uint64_t kJackknifeSeedOffset = 100003;

// Columns: sweep_param, ii_xy, ii_xy_std, ii_yx, ii_yx_std, cka,
// cka_std, no, no_std, n, p, sigma, seed.
Table run_rank_sweep(const RankSweepConfig& cfg);
Table run_subset_sweep(const SubsetSweepConfig& cfg);

}  // namespace repsim
