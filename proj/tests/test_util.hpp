#pragma once

// Shared generators and independent oracles for the test suites. The
// oracles are deliberately naive (double loops, full sorts) and never
// call the optimized kernels they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "repsim/pointcloud.hpp"
#include "repsim/rng.hpp"
#include "repsim/tensorio.hpp"

namespace testutil {

inline repsim::PointCloud gaussian_cloud(std::size_t n, std::size_t d,
                                         std::uint64_t seed) {
    repsim::Rng rng(seed);
    repsim::MatrixRM m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.next_gauss();
    return repsim::PointCloud(std::move(m));
}

inline repsim::PointCloud cloud_1d(const std::vector<double>& values) {
    repsim::MatrixRM m(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i)
        m(static_cast<Eigen::Index>(i), 0) = values[i];
    return repsim::PointCloud(std::move(m));
}

// Naive rank oracle: full pairwise double loop, stable sort by
// (distance, index). ranks[i][j] = rank of j from i, 0 on the diagonal.
inline std::vector<std::vector<int>> oracle_ranks(const repsim::PointCloud& cloud) {
    const auto& x = cloud.data();
    const std::size_t n = cloud.n_samples();
    const std::size_t d = cloud.dim();
    std::vector<std::vector<int>> ranks(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = x(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(k)) -
                                    x(static_cast<Eigen::Index>(j),
                                      static_cast<Eigen::Index>(k));
                s += diff * diff;
            }
            cand.emplace_back(s, j);
        }
        std::sort(cand.begin(), cand.end());
        for (std::size_t r = 0; r < cand.size(); ++r) {
            ranks[i][cand[r].second] = static_cast<int>(r + 1);
        }
    }
    return ranks;
}

inline double oracle_ii(const repsim::PointCloud& x, const repsim::PointCloud& y) {
    const auto rx = oracle_ranks(x);
    const auto ry = oracle_ranks(y);
    const std::size_t n = x.n_samples();
    long long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t nn = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && rx[i][j] == 1) {
                nn = j;
                break;
            }
        }
        total += ry[i][nn];
    }
    const double mean_rank = static_cast<double>(total) / static_cast<double>(n);
    return 2.0 / static_cast<double>(n - 1) * mean_rank;
}

inline double oracle_no(const repsim::PointCloud& x, const repsim::PointCloud& y, int k) {
    const auto rx = oracle_ranks(x);
    const auto ry = oracle_ranks(y);
    const std::size_t n = x.n_samples();
    long long shared = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && rx[i][j] <= k && ry[i][j] <= k) ++shared;
        }
    }
    return static_cast<double>(shared) / (static_cast<double>(n) * k);
}

// Direct feature-space CKA: column-center both matrices, then Frobenius
// norms of the cross- and self-covariances.
inline double oracle_cka(const repsim::PointCloud& x, const repsim::PointCloud& y) {
    Eigen::MatrixXd xc = x.data();
    Eigen::MatrixXd yc = y.data();
    xc.rowwise() -= xc.colwise().mean();
    yc.rowwise() -= yc.colwise().mean();
    const double cross = (yc.transpose() * xc).squaredNorm();
    const double xx = (xc.transpose() * xc).norm();
    const double yy = (yc.transpose() * yc).norm();
    return cross / (xx * yy);
}

// Random ragged activation store; all records share the header dim.
inline repsim::ActivationStore random_store(std::uint64_t seed, std::size_t n_samples,
                                            std::uint32_t n_layers, std::uint32_t dim,
                                            std::size_t max_tokens = 8) {
    repsim::Rng rng(seed);
    repsim::ActivationStore store("model-" + std::to_string(seed), n_layers, dim);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const std::string id = "sample_" + std::to_string(s);
        for (std::uint32_t l = 0; l < n_layers; ++l) {
            repsim::ActivationRecord rec;
            rec.sample_id = id;
            rec.layer = static_cast<std::uint16_t>(l);
            rec.tokens = static_cast<std::uint32_t>(1 + rng.next_below(max_tokens));
            rec.block.resize(static_cast<std::size_t>(rec.tokens) * dim);
            for (auto& v : rec.block) v = static_cast<float>(rng.next_gauss());
            store.add_record(std::move(rec));
        }
    }
    return store;
}

// Aligned store pair for profile tests: layer l of the right store is
// the left block mixed with noise at a per-layer ratio, so pairs stay
// semantically related. Equal token counts >= min_tokens per sample.
struct PairedStores {
    repsim::ActivationStore left;
    repsim::ActivationStore right;
    repsim::PairManifest manifest;
};

inline PairedStores paired_stores(std::uint64_t seed, std::size_t n_samples,
                                  std::uint32_t n_layers, std::uint32_t dim,
                                  std::size_t tokens,
                                  const std::vector<double>& noise_per_layer) {
    repsim::Rng rng(seed);
    PairedStores ps;
    ps.left = repsim::ActivationStore("left-model", n_layers, dim);
    ps.right = repsim::ActivationStore("right-model", n_layers, dim);
    ps.manifest.left_source = "left";
    ps.manifest.right_source = "right";
    for (std::size_t s = 0; s < n_samples; ++s) {
        const std::string lid = "L" + std::to_string(s);
        const std::string rid = "R" + std::to_string(s);
        ps.manifest.pairs.emplace_back(lid, rid);
        for (std::uint32_t l = 0; l < n_layers; ++l) {
            repsim::ActivationRecord lrec, rrec;
            lrec.sample_id = lid;
            rrec.sample_id = rid;
            lrec.layer = rrec.layer = static_cast<std::uint16_t>(l);
            lrec.tokens = rrec.tokens = static_cast<std::uint32_t>(tokens);
            lrec.block.resize(tokens * dim);
            rrec.block.resize(tokens * dim);
            const double noise = noise_per_layer[l % noise_per_layer.size()];
            for (std::size_t i = 0; i < lrec.block.size(); ++i) {
                const double v = rng.next_gauss();
                lrec.block[i] = static_cast<float>(v);
                rrec.block[i] = static_cast<float>(v + noise * rng.next_gauss());
            }
            ps.left.add_record(std::move(lrec));
            ps.right.add_record(std::move(rrec));
        }
    }
    return ps;
}

}  // namespace testutil
