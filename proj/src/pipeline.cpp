#include "repsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "repsim/error.hpp"
#include "repsim/rng.hpp"

namespace repsim {

const char* aggregation_name(AggregationMode mode) {
    switch (mode) {
        case AggregationMode::LastToken: return "last_token";
        case AggregationMode::MeanLastT: return "mean_last_T";
        case AggregationMode::ConcatLastT: return "concat_last_T";
    }
    return "?";
}

AggregationMode parse_aggregation(const std::string& name) {
    if (name == "last_token") return AggregationMode::LastToken;
    if (name == "mean_last_T") return AggregationMode::MeanLastT;
    if (name == "concat_last_T") return AggregationMode::ConcatLastT;
    throw InvalidInputError("unknown aggregation mode: " + name);
}

bool AggregationSpec::usable(std::size_t tokens) const {
    const std::size_t window = mode == AggregationMode::LastToken ? 1 : t;
    return tokens > drop_trailing + (window - 1);
}

PointCloud aggregate(const ActivationStore& store, std::uint16_t layer,
                     const AggregationSpec& spec,
                     const std::vector<std::string>& sample_ids) {
    if ((spec.mode != AggregationMode::LastToken) && spec.t < 1) {
        throw InvalidInputError("aggregation window T must be >= 1");
    }
    const std::size_t hidden = store.dim();
    const std::size_t window = spec.mode == AggregationMode::LastToken ? 1 : spec.t;
    const std::size_t out_dim =
        spec.mode == AggregationMode::ConcatLastT ? window * hidden : hidden;

    MatrixRM m(static_cast<Eigen::Index>(sample_ids.size()),
               static_cast<Eigen::Index>(out_dim));
    for (std::size_t s = 0; s < sample_ids.size(); ++s) {
        const ActivationRecord& rec = store.record(sample_ids[s], layer);
        if (!spec.usable(rec.tokens)) {
            throw InvalidInputError("sample '" + sample_ids[s] + "' too short (" +
                                    std::to_string(rec.tokens) + " tokens) for " +
                                    aggregation_name(spec.mode) + " with T=" +
                                    std::to_string(window) + ", drop_trailing=" +
                                    std::to_string(spec.drop_trailing));
        }
        const std::size_t last = rec.tokens - 1 - spec.drop_trailing;
        const std::size_t first = last - (window - 1);
        auto token = [&](std::size_t ti) { return rec.block.data() + ti * hidden; };
        double* out = m.data() + s * out_dim;
        switch (spec.mode) {
            case AggregationMode::LastToken: {
                const float* src = token(last);
                for (std::size_t d = 0; d < hidden; ++d) out[d] = src[d];
                break;
            }
            case AggregationMode::MeanLastT: {
                for (std::size_t d = 0; d < hidden; ++d) out[d] = 0.0;
                for (std::size_t ti = first; ti <= last; ++ti) {
                    const float* src = token(ti);
                    for (std::size_t d = 0; d < hidden; ++d) out[d] += src[d];
                }
                for (std::size_t d = 0; d < hidden; ++d) {
                    out[d] /= static_cast<double>(window);
                }
                break;
            }
            case AggregationMode::ConcatLastT: {
                // Textual order: earliest of the T tokens first.
                for (std::size_t ti = first; ti <= last; ++ti) {
                    const float* src = token(ti);
                    double* dst = out + (ti - first) * hidden;
                    for (std::size_t d = 0; d < hidden; ++d) dst[d] = src[d];
                }
                break;
            }
        }
    }
    return PointCloud(std::move(m), sample_ids);
}

namespace {

double relative_depth(std::uint16_t layer, std::uint32_t n_layers) {
    return n_layers > 1 ? static_cast<double>(layer) / static_cast<double>(n_layers - 1)
                        : 0.0;
}

struct UsablePairs {
    std::vector<std::string> left_ids;
    std::vector<std::string> right_ids;
    std::size_t dropped = 0;
};

// Pairwise filtering: if either side lacks a usable record at its
// layer, the whole pair is dropped so the clouds stay aligned.
UsablePairs filter_pairs(const ActivationStore& xs, const ActivationStore& ys,
                         const PairManifest& manifest, const AggregationSpec& spec,
                         std::uint16_t layer_x, std::uint16_t layer_y) {
    UsablePairs up;
    for (const auto& [lid, rid] : manifest.pairs) {
        const bool ok = xs.has(lid, layer_x) && ys.has(rid, layer_y) &&
                        spec.usable(xs.record(lid, layer_x).tokens) &&
                        spec.usable(ys.record(rid, layer_y).tokens);
        if (ok) {
            up.left_ids.push_back(lid);
            up.right_ids.push_back(rid);
        } else {
            ++up.dropped;
        }
    }
    return up;
}

struct BandedValue {
    double value = 0.0;
    double std_dev = 0.0;
};

BandedValue banded(const MetricEngine& engine, MetricKind kind,
                   const ProfileOptions& opts, std::uint64_t jk_seed) {
    BandedValue bv;
    if (opts.n_resamples >= 2 && engine.n() >= 6) {
        const MetricResult r = engine.run_jackknife(kind, opts.n_resamples, jk_seed, opts.k);
        bv.value = r.value;
        bv.std_dev = r.jackknife_std;
    } else {
        bv.value = engine.run(kind, opts.k).value;
    }
    return bv;
}

// One profile point: aggregate both sides, evaluate the requested
// metrics, append rows.
void profile_point(const ActivationStore& xs, const ActivationStore& ys,
                   const PairManifest& manifest, const AggregationSpec& spec,
                   const ProfileOptions& opts, std::uint16_t layer_x,
                   std::uint16_t layer_y, double depth, std::uint64_t jk_seed,
                   std::vector<ProfileRow>& rows) {
    const UsablePairs up = filter_pairs(xs, ys, manifest, spec, layer_x, layer_y);
    if (up.left_ids.size() < 3) {
        throw InvalidInputError("too few usable pairs at layer " +
                                std::to_string(layer_x) + ": " +
                                std::to_string(up.left_ids.size()));
    }
    const PointCloud x = aggregate(xs, layer_x, spec, up.left_ids);
    const PointCloud y = aggregate(ys, layer_y, spec, up.right_ids);
    const MetricEngine engine(x, y);
    for (const MetricKind kind : opts.metrics) {
        const BandedValue bv = banded(engine, kind, opts, jk_seed);
        ProfileRow row;
        row.layer = layer_x;
        row.layer_right = layer_y;
        row.relative_depth = depth;
        row.metric = metric_name(kind);
        row.direction = metric_direction(kind);
        row.value = bv.value;
        row.std_dev = bv.std_dev;
        row.n_pairs = up.left_ids.size();
        row.n_dropped = up.dropped;
        rows.push_back(std::move(row));
    }
}

}  // namespace

Table LayerProfile::to_table() const {
    Table t;
    t.columns = {"layer", "relative_depth", "metric", "direction", "value",
                 "std",   "n_pairs",        "aggregation", "T", "drop_trailing"};
    for (const auto& r : rows) {
        t.add_row({static_cast<std::int64_t>(r.layer), r.relative_depth, r.metric,
                   r.direction, r.value, r.std_dev,
                   static_cast<std::int64_t>(r.n_pairs),
                   std::string(aggregation_name(spec.mode)),
                   static_cast<std::int64_t>(spec.t),
                   static_cast<std::int64_t>(spec.drop_trailing)});
    }
    return t;
}

Table TauProfile::to_table() const {
    Table t;
    t.columns = {"layer", "tau", "value", "std", "n_contributing"};
    for (const auto& r : rows) {
        t.add_row({static_cast<std::int64_t>(r.layer), static_cast<std::int64_t>(r.tau),
                   r.value, r.std_dev, static_cast<std::int64_t>(r.n_contributing)});
    }
    return t;
}

LayerProfile layer_profile(const ActivationStore& xs, const ActivationStore& ys,
                           const PairManifest& manifest, const AggregationSpec& spec,
                           const ProfileOptions& opts) {
    validate_manifest(manifest, xs, ys);
    if (xs.n_layers() != ys.n_layers()) {
        throw InvalidInputError("layer count mismatch: " + std::to_string(xs.n_layers()) +
                                " vs " + std::to_string(ys.n_layers()) +
                                " (use cross_model_profile for different depths)");
    }
    LayerProfile profile{xs.model(), ys.model(), spec, {}};
    for (std::uint16_t l = 0; l < xs.n_layers(); ++l) {
        profile_point(xs, ys, manifest, spec, opts, l, l,
                      relative_depth(l, xs.n_layers()), opts.seed + l, profile.rows);
    }
    return profile;
}

LayerProfile cross_model_profile(
    const ActivationStore& xs, const ActivationStore& ys, const PairManifest& manifest,
    const AggregationSpec& spec, const ProfileOptions& opts,
    const std::optional<std::vector<std::pair<std::uint16_t, std::uint16_t>>>&
        depth_pairs) {
    validate_manifest(manifest, xs, ys);
    std::vector<std::pair<std::uint16_t, std::uint16_t>> matches;
    if (depth_pairs) {
        matches = *depth_pairs;
        for (const auto& [l1, l2] : matches) {
            if (l1 >= xs.n_layers() || l2 >= ys.n_layers()) {
                throw InvalidInputError("depth pair (" + std::to_string(l1) + ", " +
                                        std::to_string(l2) + ") out of layer range");
            }
        }
    } else {
        for (std::uint16_t l1 = 0; l1 < xs.n_layers(); ++l1) {
            const double d1 = relative_depth(l1, xs.n_layers());
            std::uint16_t best = 0;
            double best_gap = std::numeric_limits<double>::infinity();
            for (std::uint16_t l2 = 0; l2 < ys.n_layers(); ++l2) {
                const double gap = std::abs(d1 - relative_depth(l2, ys.n_layers()));
                if (gap < best_gap) {  // ties keep the smaller l2
                    best_gap = gap;
                    best = l2;
                }
            }
            matches.emplace_back(l1, best);
        }
    }
    LayerProfile profile{xs.model(), ys.model(), spec, {}};
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const auto [l1, l2] = matches[i];
        profile_point(xs, ys, manifest, spec, opts, l1, l2,
                      relative_depth(l1, xs.n_layers()), opts.seed + i, profile.rows);
    }
    return profile;
}

LayerProfile asymmetry_profile(const ActivationStore& xs, const ActivationStore& ys,
                               const PairManifest& manifest, const AggregationSpec& spec,
                               const ProfileOptions& opts) {
    validate_manifest(manifest, xs, ys);
    if (xs.n_layers() != ys.n_layers()) {
        throw InvalidInputError("layer count mismatch in asymmetry profile");
    }
    LayerProfile profile{xs.model(), ys.model(), spec, {}};
    for (std::uint16_t l = 0; l < xs.n_layers(); ++l) {
        const UsablePairs up = filter_pairs(xs, ys, manifest, spec, l, l);
        if (up.left_ids.size() < 3) {
            throw InvalidInputError("too few usable pairs at layer " + std::to_string(l));
        }
        const PointCloud x = aggregate(xs, l, spec, up.left_ids);
        const PointCloud y = aggregate(ys, l, spec, up.right_ids);
        const MetricEngine engine(x, y);
        const std::uint64_t jk_seed = opts.seed + l;

        const BandedValue fwd = banded(engine, MetricKind::IIForward, opts, jk_seed);
        const BandedValue rev = banded(engine, MetricKind::IIReverse, opts, jk_seed);
        double asym_std = 0.0;
        if (opts.n_resamples >= 2 && engine.n() >= 6) {
            // Same seed = same subsets, so the difference resamples coherently.
            const auto vf = engine.jackknife_values(MetricKind::IIForward,
                                                    opts.n_resamples, jk_seed);
            const auto vr = engine.jackknife_values(MetricKind::IIReverse,
                                                    opts.n_resamples, jk_seed);
            std::vector<double> diff(vf.size());
            for (std::size_t i = 0; i < vf.size(); ++i) diff[i] = vf[i] - vr[i];
            const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) /
                                static_cast<double>(diff.size());
            double var = 0.0;
            for (const double v : diff) var += (v - mean) * (v - mean);
            asym_std = std::sqrt(var / static_cast<double>(diff.size()));
        }

        const double depth = relative_depth(l, xs.n_layers());
        const std::size_t n_pairs = up.left_ids.size();
        auto push = [&](const char* metric, const char* direction, double value,
                        double sd) {
            profile.rows.push_back(ProfileRow{l, l, depth, metric, direction, value, sd,
                                              n_pairs, up.dropped});
        };
        push("ii", "x_to_y", fwd.value, fwd.std_dev);
        push("ii", "y_to_x", rev.value, rev.std_dev);
        push("asymmetry", "x_to_y_minus_y_to_x", fwd.value - rev.value, asym_std);
    }
    return profile;
}

TauProfile token_tau_profile(const ActivationStore& store,
                             const std::vector<std::uint16_t>& layers,
                             const std::vector<std::size_t>& taus,
                             std::size_t drop_trailing, std::size_t n_resamples,
                             std::uint64_t seed) {
    TauProfile profile;
    const std::vector<std::string> all_ids = store.sample_ids();
    std::uint64_t point = 0;
    for (const std::uint16_t layer : layers) {
        for (const std::size_t tau : taus) {
            if (tau < 1) throw InvalidInputError("tau must be >= 1");
            std::vector<std::string> ids;
            for (const auto& id : all_ids) {
                if (!store.has(id, layer)) continue;
                if (store.record(id, layer).tokens > drop_trailing + tau) {
                    ids.push_back(id);
                }
            }
            ++point;
            if (ids.size() < 3) {
                profile.warnings.push_back(
                    "layer " + std::to_string(layer) + " tau " + std::to_string(tau) +
                    " omitted: only " + std::to_string(ids.size()) +
                    " samples long enough");
                continue;
            }
            const std::size_t hidden = store.dim();
            MatrixRM last(static_cast<Eigen::Index>(ids.size()),
                          static_cast<Eigen::Index>(hidden));
            MatrixRM prev(static_cast<Eigen::Index>(ids.size()),
                          static_cast<Eigen::Index>(hidden));
            for (std::size_t s = 0; s < ids.size(); ++s) {
                const ActivationRecord& rec = store.record(ids[s], layer);
                const std::size_t li = rec.tokens - 1 - drop_trailing;
                const float* lp = rec.block.data() + li * hidden;
                const float* pp = rec.block.data() + (li - tau) * hidden;
                for (std::size_t d = 0; d < hidden; ++d) {
                    last(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d)) = lp[d];
                    prev(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d)) = pp[d];
                }
            }
            const MetricEngine engine(PointCloud(std::move(last), ids),
                                      PointCloud(std::move(prev), ids));
            TauRow row;
            row.layer = layer;
            row.tau = tau;
            row.n_contributing = ids.size();
            if (n_resamples >= 2 && engine.n() >= 6) {
                const MetricResult r = engine.run_jackknife(MetricKind::IIForward,
                                                            n_resamples, seed + point);
                row.value = r.value;
                row.std_dev = r.jackknife_std;
            } else {
                row.value = engine.run(MetricKind::IIForward).value;
            }
            profile.rows.push_back(row);
        }
    }
    return profile;
}

PairManifest shuffle_null(const PairManifest& manifest, std::uint64_t seed) {
    const std::size_t n = manifest.pairs.size();
    if (n < 2) throw InvalidInputError("shuffle null needs at least 2 pairs");
    Rng rng(seed);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (int attempt = 0; attempt < 100; ++attempt) {
        rng.shuffle(perm);
        bool fixed_point = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (manifest.pairs[perm[i]].second == manifest.pairs[i].second) {
                fixed_point = true;
                break;
            }
        }
        if (!fixed_point) break;  // a derangement; otherwise keep the last draw
    }
    PairManifest out;
    out.left_source = manifest.left_source;
    out.right_source = manifest.right_source + " (shuffled)";
    out.pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.pairs.emplace_back(manifest.pairs[i].first, manifest.pairs[perm[i]].second);
    }
    return out;
}

}  // namespace repsim
