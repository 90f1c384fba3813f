#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repsim/metrics.hpp"
#include "repsim/pointcloud.hpp"
#include "repsim/table.hpp"
#include "repsim/tensorio.hpp"

namespace repsim {

enum class AggregationMode { LastToken, MeanLastT, ConcatLastT };

const char* aggregation_name(AggregationMode mode);
AggregationMode parse_aggregation(const std::string& name);

// How a (tokens x dim) block collapses to one row vector. The last
// drop_trailing tokens are excluded first (they tend to be punctuation
// rather than content).
struct AggregationSpec {
    AggregationMode mode = AggregationMode::MeanLastT;
    std::size_t t = 20;              // window for mean/concat
    std::size_t drop_trailing = 2;

    // tokens must exceed drop_trailing + (t - 1) for mean/concat.
    bool usable(std::size_t tokens) const;
};

// One metric evaluated at one (layer, layer) point of a profile.
struct ProfileRow {
    std::uint16_t layer = 0;        // left-store layer
    std::uint16_t layer_right = 0;  // differs only in cross-model profiles
    double relative_depth = 0.0;
    std::string metric;     // "ii", "cka", "no", "asymmetry"
    std::string direction;  // "x_to_y", "y_to_x", "symmetric", "x_to_y_minus_y_to_x"
    double value = 0.0;
    double std_dev = 0.0;
    std::size_t n_pairs = 0;
    std::size_t n_dropped = 0;
};

struct LayerProfile {
    std::string left_model;
    std::string right_model;
    AggregationSpec spec;
    std::vector<ProfileRow> rows;

    // Columns: layer, relative_depth, metric, direction, value, std,
    // n_pairs, aggregation, T, drop_trailing.
    Table to_table() const;
};

struct TauRow {
    std::uint16_t layer = 0;
    std::size_t tau = 0;
    double value = 0.0;  // II last-token -> token at distance tau
    double std_dev = 0.0;
    std::size_t n_contributing = 0;
};

struct TauProfile {
    std::vector<TauRow> rows;
    std::vector<std::string> warnings;  // taus omitted for lack of samples

    // Columns: layer, tau, value, std, n_contributing.
    Table to_table() const;
};

struct ProfileOptions {
    std::vector<MetricKind> metrics = {MetricKind::IIForward, MetricKind::IIReverse};
    int k = 10;
    std::size_t n_resamples = 5;
    std::uint64_t seed = 0;
};

// Collapses one layer of a store to an N x dim point cloud, rows in
// sample_ids order. Every sample must be usable under the spec.
PointCloud aggregate(const ActivationStore& store, std::uint16_t layer,
                     const AggregationSpec& spec,
                     const std::vector<std::string>& sample_ids);

// Layer-by-layer comparison of two same-depth stores over manifest
// pairs. Pairs unusable on either side are dropped on both.
LayerProfile layer_profile(const ActivationStore& xs, const ActivationStore& ys,
                           const PairManifest& manifest, const AggregationSpec& spec,
                           const ProfileOptions& opts);

// Stores of different depth, matched by nearest relative depth
// (ties resolve to the smaller right layer) unless explicit layer
// pairs are given.
LayerProfile cross_model_profile(
    const ActivationStore& xs, const ActivationStore& ys, const PairManifest& manifest,
    const AggregationSpec& spec, const ProfileOptions& opts,
    const std::optional<std::vector<std::pair<std::uint16_t, std::uint16_t>>>&
        depth_pairs = std::nullopt);

// II(X->Y) - II(Y->X) per layer, components retained as extra rows.
LayerProfile asymmetry_profile(const ActivationStore& xs, const ActivationStore& ys,
                               const PairManifest& manifest, const AggregationSpec& spec,
                               const ProfileOptions& opts);

// II from the last token to the token tau positions earlier, per layer.
// Taus with fewer than 3 long-enough samples are skipped with a warning.
TauProfile token_tau_profile(const ActivationStore& store,
                             const std::vector<std::uint16_t>& layers,
                             const std::vector<std::size_t>& taus,
                             std::size_t drop_trailing, std::size_t n_resamples,
                             std::uint64_t seed);

// Misalignment control: permutes the right-hand ids with a seeded
// shuffle, re-drawing (up to 100 times) until no pair keeps its
// original right id.
PairManifest shuffle_null(const PairManifest& manifest, std::uint64_t seed);

}  // namespace repsim
