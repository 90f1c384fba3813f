#include "repsim/rank.hpp"

#include <algorithm>
#include <numeric>

#include "repsim/error.hpp"
#include "repsim/parallel.hpp"

namespace repsim {

RankMatrix::RankMatrix(std::size_t n, std::vector<std::int32_t> ranks,
                       std::vector<std::int32_t> order)
    : n_(n), ranks_(std::move(ranks)), order_(std::move(order)) {}

namespace {

constexpr std::size_t kGramDimThreshold = 128;

MatrixRM distances_direct(const MatrixRM& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    MatrixRM dist(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
        const auto i = static_cast<Eigen::Index>(ii);
        dist(i, i) = 0.0;
        const double* xi = x.data() + i * d;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double* xj = x.data() + j * d;
            double s = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) {
                const double diff = xi[k] - xj[k];
                s += diff * diff;
            }
            dist(i, j) = s;
        }
    });
    // Mirror the upper triangle; both orientations see identical values.
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) dist(j, i) = dist(i, j);
    return dist;
}

}  // namespace

MatrixRM gram_matrix(const MatrixRM& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    MatrixRM gram(n, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
        const auto i = static_cast<Eigen::Index>(ii);
        const double* xi = x.data() + i * d;
        for (Eigen::Index j = i; j < n; ++j) {
            const double* xj = x.data() + j * d;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            Eigen::Index k = 0;
            for (; k + 3 < d; k += 4) {
                s0 += xi[k] * xj[k];
                s1 += xi[k + 1] * xj[k + 1];
                s2 += xi[k + 2] * xj[k + 2];
                s3 += xi[k + 3] * xj[k + 3];
            }
            for (; k < d; ++k) s0 += xi[k] * xj[k];
            gram(i, j) = (s0 + s1) + (s2 + s3);
        }
    });
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) gram(j, i) = gram(i, j);
    return gram;
}

MatrixRM distances_from_gram(const MatrixRM& gram) {
    const Eigen::Index n = gram.rows();
    MatrixRM dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d2 = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
            dist(i, j) = d2 > 0.0 ? d2 : 0.0;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) dist(j, i) = dist(i, j);
    return dist;
}

DistanceStrategy resolve_strategy(DistanceStrategy strategy, std::size_t dim) {
    if (strategy != DistanceStrategy::Auto) return strategy;
    return dim >= kGramDimThreshold ? DistanceStrategy::Gram : DistanceStrategy::Direct;
}

MatrixRM squared_distance_matrix(const PointCloud& cloud, DistanceStrategy strategy) {
    strategy = resolve_strategy(strategy, cloud.dim());
    if (strategy == DistanceStrategy::Gram) {
        return distances_from_gram(gram_matrix(cloud.data()));
    }
    return distances_direct(cloud.data());
}

RankMatrix rank_matrix(const PointCloud& cloud, DistanceStrategy strategy) {
    const MatrixRM dist = squared_distance_matrix(cloud, strategy);
    std::vector<std::size_t> all(cloud.n_samples());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return rank_matrix_from_distances(dist, all);
}

RankMatrix rank_matrix_from_distances(const MatrixRM& dist,
                                      const std::vector<std::size_t>& idx) {
    const std::size_t m = idx.size();
    if (m < 3) throw InvalidInputError("rank matrix needs at least 3 samples");
    std::vector<std::int32_t> ranks(m * m, 0);
    std::vector<std::int32_t> order(m * (m - 1), 0);

    parallel_for(m, [&](std::size_t qi) {
        const std::size_t gi = idx[qi];
        std::int32_t* row_order = &order[qi * (m - 1)];
        std::size_t c = 0;
        for (std::size_t qj = 0; qj < m; ++qj) {
            if (qj != qi) row_order[c++] = static_cast<std::int32_t>(qj);
        }
        std::sort(row_order, row_order + (m - 1), [&](std::int32_t a, std::int32_t b) {
            const double da = dist(static_cast<Eigen::Index>(gi),
                                   static_cast<Eigen::Index>(idx[a]));
            const double db = dist(static_cast<Eigen::Index>(gi),
                                   static_cast<Eigen::Index>(idx[b]));
            if (da != db) return da < db;
            return a < b;
        });
        std::int32_t* row_ranks = &ranks[qi * m];
        for (std::size_t r = 0; r < m - 1; ++r) {
            row_ranks[row_order[r]] = static_cast<std::int32_t>(r + 1);
        }
    });
    return RankMatrix(m, std::move(ranks), std::move(order));
}

}  // namespace repsim
