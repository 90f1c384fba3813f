// Command-line surface for Information Imbalance / CKA / Neighborhood
// Overlap analyses: synthetic Gaussian sweeps, layer profiles over
// activation stores, token-tau profiles, and shuffle-null controls.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "repsim/error.hpp"
#include "repsim/metrics.hpp"
#include "repsim/parallel.hpp"
#include "repsim/pipeline.hpp"
#include "repsim/svg.hpp"
#include "repsim/synthbench.hpp"
#include "repsim/table.hpp"
#include "repsim/tensorio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kShuffleSeedOffset = 777;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_input_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw UsageError(std::string(what) + " file does not exist: " + path);
    }
}

// Every artifact gets a sidecar with the full run configuration, enough
// to re-run the command identically.
void emit_outputs(const fs::path& out_dir, const std::string& name,
                  const repsim::Table& table, const json& config, bool plot,
                  const std::vector<repsim::PlotSeries>& series,
                  const std::string& title, const std::string& x_label,
                  const std::string& y_label, bool log_x = false) {
    fs::create_directories(out_dir);
    repsim::write_text_file(out_dir / (name + ".csv"), table.to_csv());
    repsim::write_text_file(out_dir / (name + ".json"), table.to_json());
    repsim::write_text_file(out_dir / (name + "_config.json"), config.dump(2) + "\n");
    if (plot && !series.empty()) {
        repsim::write_text_file(out_dir / (name + ".svg"),
                                repsim::render_line_chart(title, x_label, y_label,
                                                          series, log_x));
    }
}

repsim::PlotSeries column_series(const repsim::Table& t, const std::string& label,
                                 const std::string& x_col, const std::string& y_col) {
    repsim::PlotSeries s;
    s.label = label;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        s.x.push_back(t.number_at(r, x_col));
        s.y.push_back(t.number_at(r, y_col));
    }
    return s;
}

std::vector<repsim::PlotSeries> sweep_series(const repsim::Table& t) {
    return {column_series(t, "II x->y", "sweep_param", "ii_xy"),
            column_series(t, "II y->x", "sweep_param", "ii_yx"),
            column_series(t, "CKA", "sweep_param", "cka"),
            column_series(t, "NO", "sweep_param", "no")};
}

// One series per (metric, direction) over relative depth.
std::vector<repsim::PlotSeries> profile_series(const repsim::Table& t) {
    std::vector<repsim::PlotSeries> out;
    const std::size_t mc = t.column_index("metric");
    const std::size_t dc = t.column_index("direction");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string key = std::get<std::string>(t.rows[r][mc]) + " " +
                                std::get<std::string>(t.rows[r][dc]);
        repsim::PlotSeries* s = nullptr;
        for (auto& existing : out) {
            if (existing.label == key) s = &existing;
        }
        if (!s) {
            out.push_back(repsim::PlotSeries{key, {}, {}});
            s = &out.back();
        }
        s->x.push_back(t.number_at(r, "relative_depth"));
        s->y.push_back(t.number_at(r, "value"));
    }
    return out;
}

std::vector<repsim::MetricKind> parse_metrics(const std::vector<std::string>& names) {
    std::vector<repsim::MetricKind> kinds;
    for (const auto& name : names) {
        if (name == "ii") {
            kinds.push_back(repsim::MetricKind::IIForward);
            kinds.push_back(repsim::MetricKind::IIReverse);
        } else if (name == "cka") {
            kinds.push_back(repsim::MetricKind::CKA);
        } else if (name == "no") {
            kinds.push_back(repsim::MetricKind::NeighborhoodOverlap);
        } else {
            throw UsageError("unknown metric '" + name + "' (expected ii, cka, no)");
        }
    }
    return kinds;
}

struct CommonFlags {
    std::string out = ".";
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool plot = false;
};

void add_common(CLI::App* cmd, CommonFlags& cf) {
    cmd->add_option("--out", cf.out, "Output directory");
    cmd->add_option("--seed", cf.seed, "Base RNG seed; all randomness derives from it");
    cmd->add_option("--threads", cf.threads,
                    "Worker cap (0 = all cores); never changes numeric output");
    cmd->add_flag("--plot", cf.plot, "Also emit an SVG line chart");
}

json common_config(const std::string& subcommand, const CommonFlags& cf) {
    json j;
    j["subcommand"] = subcommand;
    j["out"] = cf.out;
    j["seed"] = cf.seed;
    j["threads"] = cf.threads;
    j["plot"] = cf.plot;
    return j;
}

struct ProfileInputs {
    repsim::ActivationStore left;
    repsim::ActivationStore right;
    repsim::PairManifest manifest;
};

ProfileInputs load_profile_inputs(const std::string& left_path,
                                  const std::string& right_path,
                                  const std::string& manifest_path) {
    require_input_file(left_path, "left store");
    require_input_file(right_path, "right store");
    require_input_file(manifest_path, "manifest");
    return {repsim::load_store(left_path), repsim::load_store(right_path),
            repsim::load_manifest(manifest_path)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Information Imbalance and representation-similarity toolkit"};
    app.require_subcommand(1);

    // synth-rank
    auto* rank_cmd = app.add_subcommand(
        "synth-rank", "Gaussian low-rank-map sweep: II/CKA/NO vs map rank");
    CommonFlags rank_cf;
    repsim::RankSweepConfig rank_cfg;
    add_common(rank_cmd, rank_cf);
    rank_cmd->add_option("--p", rank_cfg.p, "Dimension")->check(CLI::PositiveNumber);
    rank_cmd->add_option("--n", rank_cfg.n, "Sample count")->check(CLI::Range(3u, 1000000u));
    rank_cmd->add_option("--sigma", rank_cfg.sigma, "Noise std")
        ->check(CLI::NonNegativeNumber);
    rank_cmd->add_option("--ranks", rank_cfg.ranks, "Target ranks (default 1..p)");
    rank_cmd->add_option("--resamples", rank_cfg.n_resamples, "Jackknife resamples")
        ->check(CLI::Range(2u, 10000u));
    rank_cmd->add_option("--k", rank_cfg.k, "Neighborhood size for NO")
        ->check(CLI::PositiveNumber);

    // synth-subset
    auto* subset_cmd = app.add_subcommand(
        "synth-subset", "Gaussian feature-subset sweep: II/CKA/NO vs shared fraction");
    CommonFlags subset_cf;
    repsim::SubsetSweepConfig subset_cfg;
    subset_cfg.fractions = {0.01, 0.05, 0.1, 0.25, 0.5, 1.0};
    add_common(subset_cmd, subset_cf);
    subset_cmd->add_option("--p", subset_cfg.p, "Dimension")->check(CLI::PositiveNumber);
    subset_cmd->add_option("--n", subset_cfg.n, "Sample count")
        ->check(CLI::Range(3u, 1000000u));
    subset_cmd->add_option("--fractions", subset_cfg.fractions,
                           "Feature fractions in (0,1], ascending");
    subset_cmd->add_option("--resamples", subset_cfg.n_resamples, "Jackknife resamples")
        ->check(CLI::Range(2u, 10000u));
    subset_cmd->add_option("--k", subset_cfg.k, "Neighborhood size for NO")
        ->check(CLI::PositiveNumber);

    // Shared options for store-based subcommands.
    struct StoreArgs {
        std::string left, right, manifest, store;
        std::string agg = "mean_last_T";
        std::size_t t = 20;
        std::size_t drop_trailing = 2;
        std::vector<std::string> metrics = {"ii"};
        int k = 10;
        std::size_t resamples = 5;
        bool shuffle_null = false;
        std::string depth_pairs;
        std::vector<std::size_t> layers;
        std::vector<std::size_t> taus;
        std::string out_manifest;
    };

    auto add_pair_store_opts = [](CLI::App* cmd, StoreArgs& sa, bool with_metrics) {
        cmd->add_option("--left", sa.left, "Left activation store")->required();
        cmd->add_option("--right", sa.right, "Right activation store")->required();
        cmd->add_option("--manifest", sa.manifest, "Pair manifest JSON")->required();
        cmd->add_option("--agg", sa.agg,
                        "Aggregation: last_token, mean_last_T, concat_last_T");
        cmd->add_option("--T", sa.t, "Token window for mean/concat")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--drop-trailing", sa.drop_trailing,
                        "Trailing tokens to exclude");
        cmd->add_option("--resamples", sa.resamples, "Jackknife resamples");
        cmd->add_option("--k", sa.k, "Neighborhood size for NO")
            ->check(CLI::PositiveNumber);
        if (with_metrics) {
            cmd->add_option("--metrics", sa.metrics, "Metrics: ii, cka, no");
        }
    };

    auto* profile_cmd = app.add_subcommand(
        "profile", "Layer-by-layer metric profile over two aligned stores");
    CommonFlags profile_cf;
    StoreArgs profile_sa;
    add_common(profile_cmd, profile_cf);
    add_pair_store_opts(profile_cmd, profile_sa, true);
    profile_cmd->add_flag("--shuffle-null", profile_sa.shuffle_null,
                          "Also run the batch-shuffled misalignment control");

    auto* cross_cmd = app.add_subcommand(
        "cross-profile", "Profile across stores of different depth (relative-depth match)");
    CommonFlags cross_cf;
    StoreArgs cross_sa;
    add_common(cross_cmd, cross_cf);
    add_pair_store_opts(cross_cmd, cross_sa, true);
    cross_cmd->add_option("--depth-pairs", cross_sa.depth_pairs,
                          "Explicit layer matches 'l1:l2,l1:l2,...'");

    auto* asym_cmd = app.add_subcommand(
        "asymmetry", "II asymmetry profile: Delta(X->Y) - Delta(Y->X) per layer");
    CommonFlags asym_cf;
    StoreArgs asym_sa;
    add_common(asym_cmd, asym_cf);
    add_pair_store_opts(asym_cmd, asym_sa, false);

    auto* tau_cmd = app.add_subcommand(
        "token-tau", "II from the last token to the token tau positions earlier");
    CommonFlags tau_cf;
    StoreArgs tau_sa;
    add_common(tau_cmd, tau_cf);
    tau_cmd->add_option("--store", tau_sa.store, "Activation store")->required();
    tau_cmd->add_option("--layers", tau_sa.layers, "Layers to analyze (default: all)");
    tau_cmd->add_option("--taus", tau_sa.taus, "Token distances (default: 1..16)");
    tau_cmd->add_option("--drop-trailing", tau_sa.drop_trailing,
                        "Trailing tokens to exclude");
    tau_cmd->add_option("--resamples", tau_sa.resamples, "Jackknife resamples");

    auto* shuffle_cmd = app.add_subcommand(
        "shuffle-null", "Write a batch-shuffled (misaligned) copy of a manifest");
    CommonFlags shuffle_cf;
    StoreArgs shuffle_sa;
    add_common(shuffle_cmd, shuffle_cf);
    shuffle_cmd->add_option("--manifest", shuffle_sa.manifest, "Input manifest")
        ->required();
    shuffle_cmd->add_option("--out-manifest", shuffle_sa.out_manifest,
                            "Output manifest path")->required();

    auto* validate_cmd = app.add_subcommand(
        "validate-store", "Check a store file and optionally a manifest against it");
    CommonFlags validate_cf;
    StoreArgs validate_sa;
    add_common(validate_cmd, validate_cf);
    validate_cmd->add_option("--store", validate_sa.store, "Activation store")
        ->required();
    validate_cmd->add_option("--right", validate_sa.right,
                             "Right store for manifest validation");
    validate_cmd->add_option("--manifest", validate_sa.manifest,
                             "Manifest to validate against the store(s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (rank_cmd->parsed()) {
            repsim::set_max_threads(rank_cf.threads);
            rank_cfg.seed = rank_cf.seed;
            for (const std::size_t r : rank_cfg.ranks) {
                if (r < 1 || r > rank_cfg.p) {
                    throw UsageError("rank " + std::to_string(r) + " out of [1, p]");
                }
            }
            const repsim::Table t = run_rank_sweep(rank_cfg);
            json cfg = common_config("synth-rank", rank_cf);
            cfg["p"] = rank_cfg.p;
            cfg["n"] = rank_cfg.n;
            cfg["sigma"] = rank_cfg.sigma;
            cfg["ranks"] = rank_cfg.ranks;
            cfg["resamples"] = rank_cfg.n_resamples;
            cfg["k"] = rank_cfg.k;
            emit_outputs(rank_cf.out, "rank_sweep", t, cfg, rank_cf.plot, sweep_series(t),
                         "Gaussian low-rank-map sweep", "map rank r", "metric value");
        } else if (subset_cmd->parsed()) {
            repsim::set_max_threads(subset_cf.threads);
            subset_cfg.seed = subset_cf.seed;
            if (subset_cfg.fractions.empty()) throw UsageError("empty fraction list");
            for (const double f : subset_cfg.fractions) {
                if (!(f > 0.0) || f > 1.0) {
                    throw UsageError("fraction " + repsim::format_double(f) +
                                     " out of (0, 1]");
                }
            }
            const repsim::Table t = run_subset_sweep(subset_cfg);
            json cfg = common_config("synth-subset", subset_cf);
            cfg["p"] = subset_cfg.p;
            cfg["n"] = subset_cfg.n;
            cfg["fractions"] = subset_cfg.fractions;
            cfg["resamples"] = subset_cfg.n_resamples;
            cfg["k"] = subset_cfg.k;
            emit_outputs(subset_cf.out, "subset_sweep", t, cfg, subset_cf.plot,
                         sweep_series(t), "Gaussian feature-subset sweep",
                         "feature fraction", "metric value");
        } else if (profile_cmd->parsed() || cross_cmd->parsed() || asym_cmd->parsed()) {
            const bool is_cross = cross_cmd->parsed();
            const bool is_asym = asym_cmd->parsed();
            CommonFlags& cf = is_cross ? cross_cf : (is_asym ? asym_cf : profile_cf);
            StoreArgs& sa = is_cross ? cross_sa : (is_asym ? asym_sa : profile_sa);
            repsim::set_max_threads(cf.threads);

            const ProfileInputs in = load_profile_inputs(sa.left, sa.right, sa.manifest);
            repsim::AggregationSpec spec;
            spec.mode = repsim::parse_aggregation(sa.agg);
            spec.t = sa.t;
            spec.drop_trailing = sa.drop_trailing;
            repsim::ProfileOptions opts;
            opts.metrics = parse_metrics(sa.metrics);
            opts.k = sa.k;
            opts.n_resamples = sa.resamples;
            opts.seed = cf.seed;

            json cfg = common_config(is_cross ? "cross-profile"
                                              : (is_asym ? "asymmetry" : "profile"),
                                     cf);
            cfg["left"] = sa.left;
            cfg["right"] = sa.right;
            cfg["manifest"] = sa.manifest;
            cfg["agg"] = sa.agg;
            cfg["T"] = sa.t;
            cfg["drop_trailing"] = sa.drop_trailing;
            cfg["metrics"] = sa.metrics;
            cfg["k"] = sa.k;
            cfg["resamples"] = sa.resamples;

            std::string name;
            repsim::LayerProfile prof;
            if (is_cross) {
                std::optional<std::vector<std::pair<std::uint16_t, std::uint16_t>>> dp;
                if (!sa.depth_pairs.empty()) {
                    dp.emplace();
                    std::stringstream ss(sa.depth_pairs);
                    std::string item;
                    while (std::getline(ss, item, ',')) {
                        const auto colon = item.find(':');
                        if (colon == std::string::npos) {
                            throw UsageError("bad --depth-pairs entry '" + item + "'");
                        }
                        dp->emplace_back(
                            static_cast<std::uint16_t>(std::stoul(item.substr(0, colon))),
                            static_cast<std::uint16_t>(std::stoul(item.substr(colon + 1))));
                    }
                    cfg["depth_pairs"] = sa.depth_pairs;
                }
                prof = cross_model_profile(in.left, in.right, in.manifest, spec, opts, dp);
                name = "cross_profile";
            } else if (is_asym) {
                prof = asymmetry_profile(in.left, in.right, in.manifest, spec, opts);
                name = "asymmetry_profile";
            } else {
                prof = layer_profile(in.left, in.right, in.manifest, spec, opts);
                name = "profile";
            }
            const repsim::Table t = prof.to_table();
            emit_outputs(cf.out, name, t, cfg, cf.plot, profile_series(t),
                         prof.left_model + " vs " + prof.right_model, "relative depth",
                         "metric value");

            if (!is_cross && !is_asym && profile_sa.shuffle_null) {
                cfg["shuffle_null_seed"] = cf.seed + kShuffleSeedOffset;
                const repsim::PairManifest shuffled =
                    repsim::shuffle_null(in.manifest, cf.seed + kShuffleSeedOffset);
                const repsim::LayerProfile null_prof =
                    layer_profile(in.left, in.right, shuffled, spec, opts);
                const repsim::Table nt = null_prof.to_table();
                emit_outputs(cf.out, name + "_shuffled", nt, cfg, cf.plot,
                             profile_series(nt), "shuffled control", "relative depth",
                             "metric value");
            }
        } else if (tau_cmd->parsed()) {
            repsim::set_max_threads(tau_cf.threads);
            require_input_file(tau_sa.store, "store");
            const repsim::ActivationStore store = repsim::load_store(tau_sa.store);
            std::vector<std::uint16_t> layers;
            if (tau_sa.layers.empty()) {
                for (std::uint32_t l = 0; l < store.n_layers(); ++l) {
                    layers.push_back(static_cast<std::uint16_t>(l));
                }
            } else {
                for (const std::size_t l : tau_sa.layers) {
                    layers.push_back(static_cast<std::uint16_t>(l));
                }
            }
            std::vector<std::size_t> taus = tau_sa.taus;
            if (taus.empty()) {
                for (std::size_t t = 1; t <= 16; ++t) taus.push_back(t);
            }
            const repsim::TauProfile prof = token_tau_profile(
                store, layers, taus, tau_sa.drop_trailing, tau_sa.resamples, tau_cf.seed);
            for (const auto& w : prof.warnings) std::cerr << "warning: " << w << "\n";
            json cfg = common_config("token-tau", tau_cf);
            cfg["store"] = tau_sa.store;
            cfg["layers"] = tau_sa.layers;
            cfg["taus"] = taus;
            cfg["drop_trailing"] = tau_sa.drop_trailing;
            cfg["resamples"] = tau_sa.resamples;
            cfg["warnings"] = prof.warnings;
            const repsim::Table t = prof.to_table();
            std::vector<repsim::PlotSeries> series;
            for (const std::uint16_t layer : layers) {
                repsim::PlotSeries s;
                s.label = "layer " + std::to_string(layer);
                for (const auto& row : prof.rows) {
                    if (row.layer == layer) {
                        s.x.push_back(static_cast<double>(row.tau));
                        s.y.push_back(row.value);
                    }
                }
                if (!s.x.empty()) series.push_back(std::move(s));
            }
            emit_outputs(tau_cf.out, "token_tau", t, cfg, tau_cf.plot, series,
                         "token-token II vs tau", "tau", "II last -> previous",
                         /*log_x=*/true);
        } else if (shuffle_cmd->parsed()) {
            require_input_file(shuffle_sa.manifest, "manifest");
            const repsim::PairManifest m = repsim::load_manifest(shuffle_sa.manifest);
            const repsim::PairManifest shuffled = repsim::shuffle_null(m, shuffle_cf.seed);
            repsim::write_manifest(shuffled, shuffle_sa.out_manifest);
            json cfg = common_config("shuffle-null", shuffle_cf);
            cfg["manifest"] = shuffle_sa.manifest;
            cfg["out_manifest"] = shuffle_sa.out_manifest;
            repsim::write_text_file(shuffle_sa.out_manifest + "_config.json",
                                    cfg.dump(2) + "\n");
        } else if (validate_cmd->parsed()) {
            require_input_file(validate_sa.store, "store");
            const repsim::ActivationStore store = repsim::load_store(validate_sa.store);
            std::cout << "store ok: model='" << store.model() << "' layers="
                      << store.n_layers() << " dim=" << store.dim() << " records="
                      << store.records().size() << " samples="
                      << store.sample_ids().size() << "\n";
            if (!validate_sa.manifest.empty()) {
                require_input_file(validate_sa.manifest, "manifest");
                const repsim::PairManifest m = repsim::load_manifest(validate_sa.manifest);
                const repsim::ActivationStore* right = &store;
                repsim::ActivationStore right_store;
                if (!validate_sa.right.empty()) {
                    require_input_file(validate_sa.right, "right store");
                    right_store = repsim::load_store(validate_sa.right);
                    right = &right_store;
                }
                validate_manifest(m, store, *right);
                std::cout << "manifest ok: " << m.pairs.size() << " pairs ("
                          << m.left_source << " -> " << m.right_source << ")\n";
            }
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const repsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
