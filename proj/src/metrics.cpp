#include "repsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repsim/error.hpp"
#include "repsim/parallel.hpp"
#include "repsim/rng.hpp"

namespace repsim {

const char* metric_name(MetricKind kind) {
    switch (kind) {
        case MetricKind::IIForward:
        case MetricKind::IIReverse:
            return "ii";
        case MetricKind::CKA:
            return "cka";
        case MetricKind::NeighborhoodOverlap:
            return "no";
    }
    return "?";
}

const char* metric_direction(MetricKind kind) {
    switch (kind) {
        case MetricKind::IIForward:
            return "x_to_y";
        case MetricKind::IIReverse:
            return "y_to_x";
        case MetricKind::CKA:
        case MetricKind::NeighborhoodOverlap:
            return "symmetric";
    }
    return "?";
}

namespace {

// (distance, index) lexicographic: the tie policy everywhere.
inline bool closer(double da, std::size_t ja, double db, std::size_t jb) {
    if (da != db) return da < db;
    return ja < jb;
}

// Rank-1 neighbor of query qi within the subset, compact index.
std::size_t nearest_in_subset(const MatrixRM& dist, const std::vector<std::size_t>& idx,
                              std::size_t qi) {
    const auto gi = static_cast<Eigen::Index>(idx[qi]);
    std::size_t best = qi == 0 ? 1 : 0;
    double best_d = dist(gi, static_cast<Eigen::Index>(idx[best]));
    for (std::size_t qj = best + 1; qj < idx.size(); ++qj) {
        if (qj == qi) continue;
        const double d = dist(gi, static_cast<Eigen::Index>(idx[qj]));
        if (closer(d, qj, best_d, best)) {
            best_d = d;
            best = qj;
        }
    }
    return best;
}

// Rank of subset member qj from query qi (1 = nearest), by counting.
std::int64_t rank_in_subset(const MatrixRM& dist, const std::vector<std::size_t>& idx,
                            std::size_t qi, std::size_t qj) {
    const auto gi = static_cast<Eigen::Index>(idx[qi]);
    const double dj = dist(gi, static_cast<Eigen::Index>(idx[qj]));
    std::int64_t rank = 1;
    for (std::size_t q = 0; q < idx.size(); ++q) {
        if (q == qi || q == qj) continue;
        if (closer(dist(gi, static_cast<Eigen::Index>(idx[q])), q, dj, qj)) ++rank;
    }
    return rank;
}

// Compact indices of the k nearest subset members of query qi, sorted
// ascending for cheap intersection.
void top_k_in_subset(const MatrixRM& dist, const std::vector<std::size_t>& idx,
                     std::size_t qi, int k, std::vector<std::int32_t>& out) {
    const auto gi = static_cast<Eigen::Index>(idx[qi]);
    const std::size_t m = idx.size();
    std::vector<std::pair<double, std::int32_t>> cand;
    cand.reserve(m - 1);
    for (std::size_t q = 0; q < m; ++q) {
        if (q == qi) continue;
        cand.emplace_back(dist(gi, static_cast<Eigen::Index>(idx[q])),
                          static_cast<std::int32_t>(q));
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    out.clear();
    for (int r = 0; r < k; ++r) out.push_back(cand[r].second);
    std::sort(out.begin(), out.end());
}

double ii_over_subset(const MatrixRM& dist_from, const MatrixRM& dist_to,
                      const std::vector<std::size_t>& idx) {
    const std::size_t m = idx.size();
    std::vector<std::int64_t> per_query(m);
    parallel_for(m, [&](std::size_t qi) {
        const std::size_t nn = nearest_in_subset(dist_from, idx, qi);
        per_query[qi] = rank_in_subset(dist_to, idx, qi, nn);
    });
    const std::int64_t total = std::accumulate(per_query.begin(), per_query.end(),
                                               std::int64_t{0});
    // Mean rank first: total == m (all nearest) lands exactly on the
    // 2/(m-1) floor instead of one ulp off.
    const double mean_rank = static_cast<double>(total) / static_cast<double>(m);
    return 2.0 / static_cast<double>(m - 1) * mean_rank;
}

double no_over_subset(const MatrixRM& dist_x, const MatrixRM& dist_y,
                      const std::vector<std::size_t>& idx, int k) {
    const std::size_t m = idx.size();
    if (k < 1 || static_cast<std::size_t>(k) > m - 1) {
        throw InvalidInputError("neighborhood size k=" + std::to_string(k) +
                                " out of range for N=" + std::to_string(m));
    }
    std::vector<std::int64_t> per_query(m);
    parallel_for(m, [&](std::size_t qi) {
        std::vector<std::int32_t> kx, ky;
        top_k_in_subset(dist_x, idx, qi, k, kx);
        top_k_in_subset(dist_y, idx, qi, k, ky);
        std::int64_t shared = 0;
        std::size_t a = 0, b = 0;
        while (a < kx.size() && b < ky.size()) {
            if (kx[a] == ky[b]) {
                ++shared, ++a, ++b;
            } else if (kx[a] < ky[b]) {
                ++a;
            } else {
                ++b;
            }
        }
        per_query[qi] = shared;
    });
    const std::int64_t total = std::accumulate(per_query.begin(), per_query.end(),
                                               std::int64_t{0});
    return static_cast<double>(total) / (static_cast<double>(m) * k);
}

// Double-centered sub-Gram in place of feature centering; mathematically
// identical to the feature-centered linear CKA.
MatrixRM centered_subgram(const MatrixRM& gram, const std::vector<std::size_t>& idx) {
    const auto m = static_cast<Eigen::Index>(idx.size());
    MatrixRM sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            sub(a, b) = gram(static_cast<Eigen::Index>(idx[a]),
                             static_cast<Eigen::Index>(idx[b]));
    const Eigen::VectorXd row_means = sub.rowwise().mean();
    const double total_mean = row_means.mean();
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            sub(a, b) += total_mean - row_means(a) - row_means(b);
    return sub;
}

double cka_over_subset(const MatrixRM& gram_x, const MatrixRM& gram_y,
                       const std::vector<std::size_t>& idx) {
    const MatrixRM kx = centered_subgram(gram_x, idx);
    const MatrixRM ky = centered_subgram(gram_y, idx);
    const double hsic_xy = kx.cwiseProduct(ky).sum();
    const double hsic_xx = kx.cwiseProduct(kx).sum();
    const double hsic_yy = ky.cwiseProduct(ky).sum();
    if (hsic_xx <= 0.0 || hsic_yy <= 0.0) {
        throw InvalidInputError("degenerate input: a cloud is constant, CKA undefined");
    }
    return hsic_xy / std::sqrt(hsic_xx * hsic_yy);
}

std::vector<std::size_t> full_index(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

MetricEngine::MetricEngine(const PointCloud& x, const PointCloud& y,
                           DistanceStrategy strategy)
    : n_(x.n_samples()) {
    if (x.n_samples() != y.n_samples()) {
        throw InvalidInputError("cloud length mismatch: " + std::to_string(x.n_samples()) +
                                " vs " + std::to_string(y.n_samples()));
    }
    // The Gram matrices back CKA regardless of the distance strategy;
    // when the strategy is Gram they also supply the distances.
    gram_x_ = gram_matrix(x.data());
    gram_y_ = gram_matrix(y.data());
    dist_x_ = resolve_strategy(strategy, x.dim()) == DistanceStrategy::Gram
                  ? distances_from_gram(gram_x_)
                  : squared_distance_matrix(x, DistanceStrategy::Direct);
    dist_y_ = resolve_strategy(strategy, y.dim()) == DistanceStrategy::Gram
                  ? distances_from_gram(gram_y_)
                  : squared_distance_matrix(y, DistanceStrategy::Direct);
}

double MetricEngine::eval(MetricKind kind, int k) const {
    return eval_subset(kind, full_index(n_), k);
}

double MetricEngine::eval_subset(MetricKind kind, const std::vector<std::size_t>& idx,
                                 int k) const {
    if (idx.size() < 3) throw InvalidInputError("metric needs at least 3 samples");
    switch (kind) {
        case MetricKind::IIForward:
            return ii_over_subset(dist_x_, dist_y_, idx);
        case MetricKind::IIReverse:
            return ii_over_subset(dist_y_, dist_x_, idx);
        case MetricKind::CKA:
            return cka_over_subset(gram_x_, gram_y_, idx);
        case MetricKind::NeighborhoodOverlap:
            return no_over_subset(dist_x_, dist_y_, idx, k);
    }
    throw InvalidInputError("unknown metric kind");
}

MetricResult MetricEngine::run(MetricKind kind, int k) const {
    MetricResult res;
    res.kind = kind;
    res.value = eval(kind, k);
    res.jackknife_mean = res.value;
    res.n_samples = n_;
    res.k = kind == MetricKind::NeighborhoodOverlap ? k : 0;
    return res;
}

std::vector<double> MetricEngine::jackknife_values(MetricKind kind,
                                                   std::size_t n_resamples,
                                                   std::uint64_t seed, int k) const {
    if (n_resamples < 2) throw InvalidInputError("jackknife needs at least 2 resamples");
    if (n_ < 6) throw InvalidInputError("jackknife needs at least 6 samples");
    Rng rng(seed);
    const std::size_t half = n_ / 2;
    std::vector<double> values;
    values.reserve(n_resamples);
    for (std::size_t r = 0; r < n_resamples; ++r) {
        const auto idx = rng.sample_without_replacement(n_, half);
        values.push_back(eval_subset(kind, idx, k));
    }
    return values;
}

MetricResult MetricEngine::run_jackknife(MetricKind kind, std::size_t n_resamples,
                                         std::uint64_t seed, int k) const {
    MetricResult res = run(kind, k);
    res.n_resamples = n_resamples;
    res.seed = seed;

    const std::vector<double> values = jackknife_values(kind, n_resamples, seed, k);
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                        static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    res.jackknife_mean = mean;
    res.jackknife_std = std::sqrt(var);
    return res;
}

MetricResult information_imbalance(const PointCloud& x, const PointCloud& y,
                                   DistanceStrategy strategy) {
    return MetricEngine(x, y, strategy).run(MetricKind::IIForward);
}

MetricResult linear_cka(const PointCloud& x, const PointCloud& y,
                        DistanceStrategy strategy) {
    return MetricEngine(x, y, strategy).run(MetricKind::CKA);
}

MetricResult neighborhood_overlap(const PointCloud& x, const PointCloud& y, int k,
                                  DistanceStrategy strategy) {
    return MetricEngine(x, y, strategy).run(MetricKind::NeighborhoodOverlap, k);
}

AsymmetryResult asymmetry(const PointCloud& x, const PointCloud& y,
                          DistanceStrategy strategy) {
    const MetricEngine engine(x, y, strategy);
    AsymmetryResult res;
    res.forward = engine.run(MetricKind::IIForward);
    res.reverse = engine.run(MetricKind::IIReverse);
    res.a_value = res.forward.value - res.reverse.value;
    return res;
}

MetricResult jackknife(MetricKind kind, const PointCloud& x, const PointCloud& y,
                       std::size_t n_resamples, std::uint64_t seed, int k,
                       DistanceStrategy strategy) {
    return MetricEngine(x, y, strategy).run_jackknife(kind, n_resamples, seed, k);
}

}  // namespace repsim
