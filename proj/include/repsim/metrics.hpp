#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repsim/pointcloud.hpp"
#include "repsim/rank.hpp"

namespace repsim {

enum class MetricKind { IIForward, IIReverse, CKA, NeighborhoodOverlap };

const char* metric_name(MetricKind kind);     // "ii", "cka", "no"
const char* metric_direction(MetricKind kind);  // "x_to_y", "y_to_x", "symmetric"

// Scalar metric value plus jackknife band and provenance.
struct MetricResult {
    MetricKind kind = MetricKind::IIForward;
    double value = 0.0;
    double jackknife_mean = 0.0;
    double jackknife_std = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_resamples = 0;  // 0 = no resampling was run
    int k = 0;                    // neighborhood size, NO only
    std::uint64_t seed = 0;
};

// a_value = II(X->Y) - II(Y->X), components retained.
struct AsymmetryResult {
    double a_value = 0.0;
    MetricResult forward;
    MetricResult reverse;
};

// Shared precomputation for all metrics on one aligned cloud pair:
// full-N squared-distance and Gram matrices. Jackknife subsets index
// into these instead of recomputing pairwise products.
class MetricEngine {
  public:
    MetricEngine(const PointCloud& x, const PointCloud& y,
                 DistanceStrategy strategy = DistanceStrategy::Auto);

    std::size_t n() const { return n_; }

    double eval(MetricKind kind, int k = 10) const;
    // idx must be sorted ascending so subset tie-breaking matches the
    // global (distance, sample index) policy.
    double eval_subset(MetricKind kind, const std::vector<std::size_t>& idx,
                       int k = 10) const;

    MetricResult run(MetricKind kind, int k = 10) const;
    MetricResult run_jackknife(MetricKind kind, std::size_t n_resamples,
                               std::uint64_t seed, int k = 10) const;

    // Raw per-resample values; the same seed draws the same subsets for
    // every kind, so differences of metrics can be resampled coherently.
    std::vector<double> jackknife_values(MetricKind kind, std::size_t n_resamples,
                                         std::uint64_t seed, int k = 10) const;

  private:
    std::size_t n_;
    MatrixRM dist_x_, dist_y_, gram_x_, gram_y_;
};

// Delta(X->Y): normalized mean rank in Y of each sample's nearest
// neighbor in X. Range [2/(N-1), 2]; ~1 for unrelated clouds.
MetricResult information_imbalance(const PointCloud& x, const PointCloud& y,
                                   DistanceStrategy strategy = DistanceStrategy::Auto);

// Feature-centered linear CKA in [0, 1], computed in Gram form.
MetricResult linear_cka(const PointCloud& x, const PointCloud& y,
                        DistanceStrategy strategy = DistanceStrategy::Auto);

// Mean fraction of shared k-nearest-neighbor sets, in [0, 1].
MetricResult neighborhood_overlap(const PointCloud& x, const PointCloud& y, int k,
                                  DistanceStrategy strategy = DistanceStrategy::Auto);

AsymmetryResult asymmetry(const PointCloud& x, const PointCloud& y,
                          DistanceStrategy strategy = DistanceStrategy::Auto);

// Half-size subsampling band: n_resamples subsets of floor(N/2) samples
// without replacement, same subset applied to both clouds. The point
// value is computed on the full N.
MetricResult jackknife(MetricKind kind, const PointCloud& x, const PointCloud& y,
                       std::size_t n_resamples, std::uint64_t seed, int k = 10,
                       DistanceStrategy strategy = DistanceStrategy::Auto);

}  // namespace repsim
