#pragma once

// Experiment configuration document shared by every CLI command.

#include <optional>
#include <string>
#include <vector>

#include "lobqr/json_util.hpp"
#include "lobqr/metrics.hpp"
#include "lobqr/models.hpp"
#include "lobqr/sim.hpp"

namespace lobqr {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunConfig {
    struct Data {
        std::vector<std::string> paths;
        bool pool_depths = false;     // one QR/SAQR table for all depths
        std::vector<int> depths;      // DQR training depths; empty means all
    } data;

    struct Features {
        std::array<double, 4> horizons = kDefaultHorizons;
    } features;

    struct Model {
        std::string kind = "qr";
        std::vector<int> widths;       // empty: family default
        std::vector<int> size_widths;  // mdqr size network; empty: default
        int embedding_dim = kEmbeddingDim;
    } model;

    struct Train {
        TrainConfig config;
        double split_ratio = 0.8;
        std::uint64_t init_seed = 1;
    } train;

    struct Sim {
        int depth = kDefaultDepth;
        double start_time = 0.0;
        double horizon = 3600.0;
        std::size_t paths = 1;
        std::uint64_t seed = 0;
        std::optional<BookState> initial_book;
        std::optional<std::size_t> max_events;
    } sim;

    struct Experiments {
        std::vector<std::int64_t> q_list;                 // lots; empty: fractions of the 5-minute volume
        std::vector<double> q_fractions{0.25, 0.5, 1.0, 2.0};
        std::size_t impact_paths = 50;
        ImpactOptions impact;
        FillRatioOptions fill;
        std::size_t fill_paths = 8;
        double fill_horizon = 3600.0;
        std::size_t bench_events = 100000;
        std::size_t validate_paths = 4;
    } experiments;

    unsigned threads = 0;  // 0: MDQR_THREADS or the hardware concurrency

    /// Throws ConfigError on unknown keys, bad types or invalid values.
    static RunConfig from_json(const json& j);
    static RunConfig load(const std::string& path);
    ordered_json to_json() const;
    /// Hash of the canonical JSON form.
    std::string hash() const;

    unsigned worker_count() const;
    NeuralOptions neural_options() const;
    /// Simulation settings; the initial book defaults to the model's queue-init means.
    SimConfig sim_config(const IntensityModel& model) const;
};

struct Calibration {
    std::unique_ptr<IntensityModel> model;
    ordered_json history;  // per-network training history (with wall-clock seconds)
};

/// Fits cfg.model.kind on the records. The model's metadata carries a
/// deterministic summary of the training run.
Calibration calibrate(const std::vector<EventRecord>& records, const RunConfig& cfg);

BookState book_from_json(const json& j, const std::string& context);
ordered_json book_to_json(const BookState& b);

}  // namespace lobqr
