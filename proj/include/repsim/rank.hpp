#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repsim/pointcloud.hpp"

namespace repsim {

// Direct: per-pair subtraction loop, preferred for small D.
// Gram: d2(i,j) = g_ii + g_jj - 2 g_ij from a GEMM Gram matrix, with
//       negative cancellation residue clamped to 0. Preferred for large D.
// Auto picks Gram when dim >= 128.
enum class DistanceStrategy { Auto, Direct, Gram };

// Per-query neighbor ranks under the fixed tie policy: neighbors sorted
// by (distance ascending, sample index ascending). Every row is a
// permutation of 1..n-1 over the other samples.
class RankMatrix {
  public:
    RankMatrix(std::size_t n, std::vector<std::int32_t> ranks,
               std::vector<std::int32_t> order);

    std::size_t n() const { return n_; }
    static const char* tie_policy() { return "distance_then_index"; }

    // Rank of sample j from query i, in 1..n-1. i != j.
    std::int32_t rank_of(std::size_t i, std::size_t j) const {
        return ranks_[i * n_ + j];
    }
    // The unique rank-1 neighbor of i.
    std::size_t nearest(std::size_t i) const {
        return static_cast<std::size_t>(order_[i * (n_ - 1)]);
    }
    // First k neighbors of i in rank order.
    const std::int32_t* neighbors(std::size_t i) const { return &order_[i * (n_ - 1)]; }

  private:
    std::size_t n_;
    std::vector<std::int32_t> ranks_;  // n*n, diagonal unused (0)
    std::vector<std::int32_t> order_;  // n*(n-1), row i = samples sorted by rank
};

DistanceStrategy resolve_strategy(DistanceStrategy strategy, std::size_t dim);

// n x n matrix of row dot products. Fixed per-entry summation order, so
// identical rows yield bit-identical entries and exact ties survive the
// expansion (blocked GEMM does not guarantee that).
MatrixRM gram_matrix(const MatrixRM& x);

// Full n x n squared Euclidean distance matrix, zero diagonal, symmetric.
MatrixRM squared_distance_matrix(const PointCloud& cloud,
                                 DistanceStrategy strategy = DistanceStrategy::Auto);

// Same, from a precomputed Gram matrix (clamps cancellation residue).
MatrixRM distances_from_gram(const MatrixRM& gram);

RankMatrix rank_matrix(const PointCloud& cloud,
                       DistanceStrategy strategy = DistanceStrategy::Auto);

// Ranks over a subset of rows/columns of a precomputed distance matrix.
// Indices select the samples; ranks are relative to the subset.
RankMatrix rank_matrix_from_distances(const MatrixRM& dist,
                                      const std::vector<std::size_t>& idx);

}  // namespace repsim
