#pragma once

// Ground-truth order-flow generators. Each queue runs a conditional Poisson
// clock whose rates are known in closed form, so calibrated models can be
// checked against the truth.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lobqr/book.hpp"
#include "lobqr/event_log.hpp"
#include "lobqr/json_util.hpp"

namespace lobqr {

enum class SyntheticKind { QrTable, StateDependent, MarkovModulated };

const char* to_string(SyntheticKind kind);

/// Rate of one event type as a function of the queue size (lots).
/// Tabulated curves hold the last entry beyond the table; parametric curves
/// evaluate base + linear*q + amp*exp(-q/decay) + sat*q/(q+sat_scale).
struct IntensityCurve {
    std::vector<double> table;
    double base = 0.0;
    double linear = 0.0;
    double amp = 0.0;
    double decay = 1.0;
    double sat = 0.0;
    double sat_scale = 1.0;

    bool tabulated() const { return !table.empty(); }
    double operator()(std::int64_t q) const;

    static IntensityCurve constant(double rate) {
        IntensityCurve c;
        c.base = rate;
        return c;
    }
};

using QueueIntensity = std::array<IntensityCurve, kEventTypes>;
using SizeLaw = std::array<DiscreteDistribution, kEventTypes>;

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::QrTable;
    std::uint64_t seed = 0;
    double start_time = 0.0;
    double horizon = 3600.0;
    std::optional<std::size_t> max_events;
    double tick_size = 0.01;
    std::int64_t ref_price = 10000;
    std::array<std::int64_t, kLevels> initial_queues{};
    /// One entry shared by all depths, or one per depth 1..K.
    std::vector<QueueIntensity> intensities;
    /// Row = last event type at the level, column = next type (markov kind).
    std::array<std::array<double, kEventTypes>, kEventTypes> excitation{};
    /// Rate multiplier per session hour (9 entries).
    std::vector<double> hour_profile;
    /// One entry shared by all depths, or one per depth.
    std::vector<SizeLaw> sizes;
    DiscreteDistribution queue_init;

    /// Throws ConfigError on any invariant violation.
    void validate() const;

    /// Ground-truth rate of (type, level) given the queue size, the session
    /// hour and the last event type seen at that level.
    double intensity(EventType type, int level, std::int64_t q, int hour, EventType last_at_level) const;
    const QueueIntensity& curves_for(int level) const;
    const SizeLaw& sizes_for(int level) const;

    BookState initial_book() const;

    static SyntheticSpec from_json(const json& j);
    ordered_json to_json() const;
};

/// Session hour used by the generator (clamped to the last hour).
int generator_hour(double t);

/// Draws events until the horizon (or max_events). Each step samples the
/// waiting time from Exp(total rate) and the (type, level) with probability
/// rate / total; sizes come from the size law. C/M sizes are recorded as
/// requested, the book removes at most the resting quantity. When a whole
/// side empties, a replenishing limit order is inserted at the outermost level
/// of that side. Throws ZeroTotalIntensity if every rate vanishes.
std::vector<EventRecord> generate_synthetic(const SyntheticSpec& spec, Rng& rng);
std::vector<EventRecord> generate_synthetic(const SyntheticSpec& spec);

}  // namespace lobqr
