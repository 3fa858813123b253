#pragma once

// Event-driven simulation from an intensity model: exponential waiting times
// from the total rate, categorical (level, type) draws, sizes from the model,
// reference moves with queue re-initialization, and TWAP execution agents.

#include <functional>
#include <optional>
#include <vector>

#include "lobqr/features.hpp"
#include "lobqr/models.hpp"

namespace lobqr {

struct SimConfig {
    double start_time = 0.0;
    double horizon = 3600.0;
    std::size_t paths = 1;
    std::uint64_t seed = 0;
    BookState initial{kDefaultDepth, 10000, 0.01};
    std::optional<std::size_t> max_events;
    unsigned threads = 1;
    bool record_events = true;
    std::array<double, 4> horizons = kDefaultHorizons;

    /// Throws ConfigError (horizon, paths, session bounds, book shape).
    void validate() const;
    std::uint64_t path_seed(std::size_t path) const { return derive_seed(seed, path); }
};

struct AgentFill {
    double t = 0.0;
    std::size_t child = 0;
    int level = 1;
    std::int64_t lots = 0;
    double price_ticks = 0.0;
};

struct SimResult {
    std::size_t path = 0;
    std::uint64_t seed = 0;
    std::vector<EventRecord> events;
    std::vector<bool> agent;            // per event: submitted by the execution agent
    std::vector<double> mid;            // mid (ticks) after each event
    double initial_mid = 0.0;
    std::vector<RefPriceChange> ref_changes;
    std::vector<AgentFill> fills;
    std::size_t event_count = 0;        // counted even when events are not recorded
    std::int64_t traded_lots = 0;       // endogenous market-order volume
    double end_time = 0.0;

    /// Mid in ticks in effect at time t (after all events at or before t).
    double mid_at(double t) const;
};

/// One path's simulation state; advances one event at a time.
class Simulator {
public:
    Simulator(const IntensityModel& model, const BookState& initial, std::uint64_t seed, double start_time,
              const std::array<double, 4>& horizons = kDefaultHorizons, bool record = true);
    /// Continues from an existing market state (book, trade tape, last events).
    Simulator(const IntensityModel& model, MarketTracker tracker, std::uint64_t seed, double start_time, bool record = true);

    /// Draws the next event. If it would land after `until`, nothing is
    /// applied, the clock moves to `until` and false is returned.
    bool step(double until);
    /// Applies a market order of `lots` on the given side (+1 buys from the
    /// ask side, -1 sells into the bid side) at the current time, walking
    /// through levels as queues deplete. Returns the executed lots.
    std::int64_t market_order(int side, std::int64_t lots, std::size_t child);

    double now() const { return t_; }
    const MarketTracker& tracker() const { return tracker_; }
    SimResult& result() { return result_; }
    SimResult take_result();
    const Intensities& last_intensities() const { return lambda_; }

private:
    void apply(const LobEvent& ev, bool agent);
    void replenish();
    double next_time();

    const IntensityModel& model_;
    MarketTracker tracker_;
    Rng rng_;
    double t_;
    bool record_;
    Intensities lambda_{};
    SimResult result_;
};

/// Simulates one path to the horizon (or max_events).
SimResult run_path(const IntensityModel& model, const SimConfig& cfg, std::size_t path);
/// All cfg.paths paths; deterministic per (seed, path) whatever the thread count.
std::vector<SimResult> run(const IntensityModel& model, const SimConfig& cfg);

struct TwapOrder {
    std::int64_t quantity = 0;
    double duration = 300.0;
    int children = 10;
    double interval = 30.0;
    int side = 1;             // +1 buy, -1 sell
    double start = 0.0;       // offset from the simulation start

    void validate() const;
    /// floor(Q / n) each, the remainder spread one lot at a time over the earliest children.
    std::vector<std::int64_t> child_sizes() const;
};

SimResult twap_execute(const IntensityModel& model, const SimConfig& cfg, const TwapOrder& order, std::size_t path);

struct ImpactCurve {
    std::int64_t quantity = 0;
    std::vector<double> mean;  // average mid deviation (ticks) on the grid
    std::vector<double> se;
    double max_impact = 0.0;
    std::int64_t filled = 0;   // total agent lots over all paths
};

struct ImpactResult {
    std::vector<double> grid;  // seconds after the start
    std::vector<ImpactCurve> curves;
    double avg_5min_volume = 0.0;
};

struct ImpactOptions {
    double grid_step = 10.0;
    double after_end = 900.0;  // report this long after the execution window
    TwapOrder order;           // quantity overwritten per curve
};

/// Mid deviation of TWAP paths against same-seed paths without the agent,
/// averaged over cfg.paths paths for each quantity.
ImpactResult impact_experiment(const IntensityModel& model, const SimConfig& cfg, const std::vector<std::int64_t>& quantities,
                               const ImpactOptions& opts = {});

/// Endogenous market-order volume per 300 s over the given paths.
double average_5min_volume(const std::vector<SimResult>& results, double horizon);

struct BenchResult {
    std::size_t events = 0;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double events_per_second = 0.0;
    double total_seconds = 0.0;
};

/// Times `n_events` consecutive steps (no recording, no I/O).
BenchResult throughput_bench(const IntensityModel& model, const BookState& initial, std::size_t n_events,
                             std::uint64_t seed = 0);

/// Worker count: MDQR_THREADS when set, else the hardware concurrency.
unsigned default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace lobqr
