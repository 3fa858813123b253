#pragma once

// Stylized-fact analytics over event logs and simulated paths, plus the
// fill-ratio and mid-price classification experiments.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lobqr/event_log.hpp"
#include "lobqr/json_util.hpp"
#include "lobqr/sim.hpp"

namespace lobqr {

// ---------------------------------------------------------------- transitions

enum class TransitionLabeling {
    SingleQueue,  // successive events at the same price, labels L/C/M
    BestQuotes,   // successive events at the best bid or ask, side-qualified labels
};

struct TransitionMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd p;                 // p(i, j) = P(next = j | previous = i)
    std::vector<std::uint64_t> row_counts;
    std::vector<std::string> empty_rows;  // source labels never observed; their row is all zero

    double max_abs_diff(const TransitionMatrix& other) const;
    /// Largest spread of any column across the observed rows.
    double max_row_spread() const;
    ordered_json to_json() const;
    void write_csv(const std::string& path) const;
};

/// Transition frequencies of a label sequence; labels index into `names`.
TransitionMatrix transition_matrix(std::span<const int> sequence, std::vector<std::string> names);
/// Throws ValueError with fewer than 2 events.
TransitionMatrix transition_matrix(const std::vector<EventRecord>& events, TransitionLabeling labeling);

// ----------------------------------------------------------- intraday profile

struct IntradayProfile {
    std::array<double, kHours> rate{};      // events per second
    std::array<double, kHours> exposure{};  // seconds of [start, end) inside each hour
    std::array<std::uint64_t, kHours> counts{};

    double total_rate() const;
    ordered_json to_json() const;
};

/// Per-hour event rate over [start, end); `type` filters events when set.
/// Throws ValueError when the window is shorter than one hour.
IntradayProfile intraday_profile(const std::vector<EventRecord>& events, std::optional<EventType> type, double start,
                                 double end);

// ------------------------------------------------------------------ gamma fit

struct GammaFit {
    double shape = 0.0;
    double scale = 0.0;
    double log_likelihood = 0.0;
    std::size_t n = 0;
    int iterations = 0;
    bool converged = false;  // false: method-of-moments estimate

    ordered_json to_json() const;
};

/// Maximum likelihood with Newton steps on the shape equation from the
/// method-of-moments start. Throws NonPositiveSample, ValueError (n < 100).
GammaFit gamma_fit(std::span<const double> samples);

// -------------------------------------------------------------- power law fit

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;

    ordered_json to_json() const;
};

/// OLS of log I on log Q. Throws NonPositiveValue, ValueError (fewer than 3 points).
PowerLawFit sqrt_law_fit(std::span<const double> q, std::span<const double> impact);

// ------------------------------------------------------------------ mid paths

/// Piecewise-constant mid price (ticks) over [start, end].
struct MidPath {
    double start = 0.0;
    double end = 0.0;
    double initial = 0.0;
    std::vector<double> t;
    std::vector<double> mid;  // after the event at t[i]

    double at(double time) const;
};

MidPath mid_path(const SimResult& r, double start, double end);
/// Mid after event k is taken from the snapshot of record k + 1.
MidPath mid_path(const std::vector<EventRecord>& records, double start, double end);

/// Mid differences between the ends of consecutive complete minutes, so a
/// path spanning S seconds yields floor(S / 60) - 1 returns.
std::vector<double> returns_1min(const MidPath& path);

// ------------------------------------------------------------ window counters

struct WindowStats {
    double window = 300.0;
    std::vector<double> starts;
    std::vector<std::array<std::uint64_t, kEventTypes>> counts;
    std::vector<std::array<std::int64_t, kEventTypes>> volumes;  // requested lots

    ordered_json to_json() const;
    void write_csv(const std::string& path) const;
};

/// Tumbling windows over [start, end); empty windows are kept.
WindowStats window_event_stats(const std::vector<EventRecord>& events, double start, double end, double window = 300.0);

// ---------------------------------------------------------------- correlation

struct CorrelationMatrix {
    Eigen::MatrixXd r;                       // NaN where undefined
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> defined;

    ordered_json to_json() const;
};

/// Pearson coefficient of every pair of columns; zero-variance columns are undefined.
CorrelationMatrix pearson_matrix(const Eigen::MatrixXd& columns);
/// 10 x 10 matrix of queue sizes over the pre-event snapshots (price order).
CorrelationMatrix queue_corr_matrix(const std::vector<EventRecord>& records);

double pearson(std::span<const double> x, std::span<const double> y);
/// Pearson on average ranks; 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

// --------------------------------------------------------------------- quantiles

/// Linear-interpolation quantile of unsorted data, p in [0, 1].
double quantile(std::vector<double> data, double p);

struct QqData {
    std::vector<double> percentiles;  // 1..99
    std::vector<double> a;
    std::vector<double> b;

    ordered_json to_json() const;
};

QqData qq_data(const std::vector<double>& a, const std::vector<double>& b);

// ----------------------------------------------------------------- fill ratio

inline double fill_ratio(double quantity, double remaining) { return 1.0 - remaining / quantity; }

struct FillGridAxes {
    std::vector<std::int64_t> quantities{1, 2, 5, 10, 20, 50, 60};
    std::vector<double> lifetimes{1, 5, 10, 30, 60, 300};
    std::vector<int> levels{0, 1, 2, 3, 4};
};

struct ShadowOrder {
    int side = -1;             // -1 resting bid, +1 resting ask
    std::int64_t price_key = 0;
    std::int64_t quantity = 1;
    double queue_ahead = 0.0;
    double filled = 0.0;
    bool done = false;

    /// Updates the order with one event given the book before it.
    void on_event(const EventRecord& pre_event);
    /// Checks the book (pre-event snapshot) for a crossing or an off-grid price.
    void on_book(const EventRecord& snapshot);
    double ratio() const { return std::min(1.0, filled / static_cast<double>(quantity)); }
};

/// Places the order at the first record after `t` and follows it for `lifetime` seconds.
/// Returns nullopt when the price is outside the visible book at placement.
std::optional<double> shadow_fill(const std::vector<EventRecord>& records, double t, int side, int level_behind,
                                  std::int64_t quantity, double lifetime);

struct FillSample {
    std::int64_t quantity = 0;
    double lifetime = 0.0;
    int level = 0;
    double ratio = 0.0;
};

struct FillGrid {
    FillGridAxes axes;
    std::vector<FillSample> samples;
    std::size_t skipped = 0;  // orders priced outside the visible book

    struct Marginal {
        std::vector<double> mean;
        std::vector<double> se;
    };
    Marginal by_level() const;
    Marginal by_lifetime() const;
    Marginal by_quantity() const;
    ordered_json to_json() const;
    void write_csv(const std::string& path) const;
};

struct FillRatioOptions {
    FillGridAxes axes;
    std::size_t orders_per_cell = 250;
};

/// Shadow orders on simulated paths: cfg.paths paths of cfg.horizon seconds;
/// order j of every cell starts at the same path and time.
FillGrid fill_ratio_experiment(const IntensityModel& model, const SimConfig& cfg, const FillRatioOptions& opts);
FillGrid fill_ratio_on_paths(const std::vector<std::vector<EventRecord>>& paths, double start, double end,
                             const FillRatioOptions& opts, std::uint64_t seed, unsigned threads = 1);

struct FillCorrelations {
    double level = 0.0;
    double lifetime = 0.0;
    double quantity = 0.0;

    ordered_json to_json() const;
};

FillCorrelations fill_ratio_correlations(const FillGrid& grid);

// ------------------------------------------------------------- mid-price labels

enum class MoveLabel { Down = 0, Stationary = 1, Up = 2 };
const char* to_string(MoveLabel l);

struct LabelOptions {
    std::size_t k = 500;
    double threshold_bp = 20.0;
};

/// Mid (ticks) of each record's pre-event snapshot.
std::vector<double> record_mids(const std::vector<EventRecord>& records);

/// r = (mean of the next k mids - mean of the last k mids including the
/// anchor) / anchor mid; up when r > threshold, down when r < -threshold.
MoveLabel label_at(std::span<const double> mids, std::size_t anchor, const LabelOptions& opts);
/// Throws InsufficientHistory unless k <= anchor + 1 and anchor + k < size.
std::vector<MoveLabel> midprice_labels(std::span<const double> mids, std::span<const std::size_t> anchors,
                                       const LabelOptions& opts);

/// Market trackers synchronized to the snapshot of each anchor record.
std::vector<MarketTracker> trackers_at(const std::vector<EventRecord>& records, std::span<const std::size_t> anchors,
                                       double tick_size = 1.0, const std::array<double, 4>& horizons = kDefaultHorizons);

/// Predicts each anchor's label from k simulated events forward of it.
std::vector<MoveLabel> simulate_forward_classify(const IntensityModel& model, const std::vector<EventRecord>& records,
                                                 std::span<const double> mids, std::span<const std::size_t> anchors,
                                                 const LabelOptions& opts, std::uint64_t seed, unsigned threads = 1);

struct ClassificationScore {
    std::array<std::array<std::uint64_t, 3>, 3> confusion{};  // [truth][predicted]
    double balanced_accuracy = 0.0;
    double macro_f1 = 0.0;

    ordered_json to_json() const;
};

ClassificationScore score_labels(std::span<const MoveLabel> truth, std::span<const MoveLabel> predicted);

// ------------------------------------------------------------------- reports

void write_vector_csv(const std::string& path, const std::string& header, const std::vector<std::vector<double>>& rows);

}  // namespace lobqr
