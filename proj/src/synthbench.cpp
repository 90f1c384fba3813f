#include "repsim/synthbench.hpp"

#include <cmath>
#include <numeric>

#include "repsim/error.hpp"
#include "repsim/metrics.hpp"
#include "repsim/rng.hpp"

namespace repsim {

namespace {

MatrixRM gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    MatrixRM m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.next_gauss();
    return m;
}

struct PointMetrics {
    MetricResult ii_xy, ii_yx, cka, no;
};

PointMetrics sweep_point_metrics(const PointCloud& x, const PointCloud& y,
                                 std::size_t n_resamples, std::uint64_t jk_seed, int k) {
    const MetricEngine engine(x, y);
    PointMetrics m;
    m.ii_xy = engine.run_jackknife(MetricKind::IIForward, n_resamples, jk_seed);
    m.ii_yx = engine.run_jackknife(MetricKind::IIReverse, n_resamples, jk_seed);
    m.cka = engine.run_jackknife(MetricKind::CKA, n_resamples, jk_seed);
    m.no = engine.run_jackknife(MetricKind::NeighborhoodOverlap, n_resamples, jk_seed, k);
    return m;
}

Table sweep_table() {
    Table t;
    t.columns = {"sweep_param", "ii_xy", "ii_xy_std", "ii_yx", "ii_yx_std",
                 "cka",         "cka_std", "no",      "no_std", "n",
                 "p",           "sigma",   "seed"};
    return t;
}

void append_sweep_row(Table& t, double sweep_param, const PointMetrics& m,
                      std::size_t n, std::size_t p, double sigma, std::uint64_t seed) {
    t.add_row({sweep_param, m.ii_xy.value, m.ii_xy.jackknife_std, m.ii_yx.value,
               m.ii_yx.jackknife_std, m.cka.value, m.cka.jackknife_std, m.no.value,
               m.no.jackknife_std, static_cast<std::int64_t>(n),
               static_cast<std::int64_t>(p), sigma, static_cast<std::int64_t>(seed)});
}

}  // namespace

std::pair<PointCloud, PointCloud> gen_rank_pair(std::size_t p, std::size_t n,
                                                std::size_t r, double sigma,
                                                std::uint64_t seed) {
    if (r < 1 || r > p) {
        throw InvalidInputError("target rank " + std::to_string(r) +
                                " out of range [1, " + std::to_string(p) + "]");
    }
    if (sigma < 0.0) throw InvalidInputError("sigma must be non-negative");
    Rng rng(seed);
    MatrixRM x = gaussian_matrix(rng, n, p);
    // Full p x p factors, sliced to rank r. The slices are distributed
    // exactly as independent p x r / r x p Gaussians, but a fixed seed
    // yields a nested family B_1, B_2, ... (each adds one rank-1 term),
    // so sweeping r at one seed traces a smooth monotone curve instead
    // of re-rolling the map at every rank.
    const MatrixRM u = gaussian_matrix(rng, p, p);
    const MatrixRM v = gaussian_matrix(rng, p, p);
    const MatrixRM b = u.leftCols(static_cast<Eigen::Index>(r)) *
                       v.topRows(static_cast<Eigen::Index>(r));
    MatrixRM y = x * b.transpose();
    if (sigma > 0.0) {
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += sigma * rng.next_gauss();
    }
    return {PointCloud(std::move(x)), PointCloud(std::move(y))};
}

std::pair<PointCloud, PointCloud> gen_subset_pair(std::size_t p, std::size_t n,
                                                  double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw InvalidInputError("fraction must be in (0, 1], got " +
                                std::to_string(fraction));
    }
    const auto keep = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(p)));
    if (keep < 1) throw InvalidInputError("fraction yields an empty subset");
    Rng rng(seed);
    MatrixRM full = gaussian_matrix(rng, n, p);
    MatrixRM sub = full.leftCols(static_cast<Eigen::Index>(keep));
    return {PointCloud(std::move(full)), PointCloud(std::move(sub))};
}

Table run_rank_sweep(const RankSweepConfig& cfg) {
    std::vector<std::size_t> ranks = cfg.ranks;
    if (ranks.empty()) {
        ranks.resize(cfg.p);
        std::iota(ranks.begin(), ranks.end(), std::size_t{1});
    }
    Table t = sweep_table();
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        auto [x, y] = gen_rank_pair(cfg.p, cfg.n, ranks[i], cfg.sigma, cfg.seed);
        const auto m = sweep_point_metrics(x, y, cfg.n_resamples,
                                           cfg.seed + kJackknifeSeedOffset + i, cfg.k);
        append_sweep_row(t, static_cast<double>(ranks[i]), m, cfg.n, cfg.p, cfg.sigma,
                         cfg.seed);
    }
    return t;
}

Table run_subset_sweep(const SubsetSweepConfig& cfg) {
    if (cfg.fractions.empty()) throw InvalidInputError("fraction list is empty");
    for (std::size_t i = 1; i < cfg.fractions.size(); ++i) {
        if (cfg.fractions[i] < cfg.fractions[i - 1]) {
            throw InvalidInputError("fractions must be sorted ascending");
        }
    }
    Table t = sweep_table();
    for (std::size_t i = 0; i < cfg.fractions.size(); ++i) {
        auto [full, sub] = gen_subset_pair(cfg.p, cfg.n, cfg.fractions[i], cfg.seed);
        const auto m = sweep_point_metrics(full, sub, cfg.n_resamples,
                                           cfg.seed + kJackknifeSeedOffset + i, cfg.k);
        append_sweep_row(t, cfg.fractions[i], m, cfg.n, cfg.p, 0.0, cfg.seed);
    }
    return t;
}

}  // namespace repsim
