#pragma once

// Order-book state on a fixed price grid around a reference price, and the
// event semantics (limit / cancel / market) that act on it.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lobqr/discrete.hpp"
#include "lobqr/random.hpp"

namespace lobqr {

enum class EventType : std::uint8_t { Limit = 0, Cancel = 1, Market = 2 };

inline constexpr int kEventTypes = 3;
inline constexpr int kDefaultDepth = 5;

char to_char(EventType type);
/// Throws ValueError for anything other than 'L', 'C' or 'M'.
EventType event_type_from_char(char c);
inline int index_of(EventType type) { return static_cast<int>(type); }

struct LobEvent {
    EventType type = EventType::Limit;
    int level = 1;           // signed: -K..-1 bid, 1..K ask
    std::int64_t size = 1;   // lots
    double t = 0.0;          // seconds since session open
};

struct RefPriceChange {
    double t = 0.0;
    std::int64_t old_ref = 0;
    std::int64_t new_ref = 0;
    int direction = 0;  // +1 or -1

    bool operator==(const RefPriceChange&) const = default;
};

struct ApplyResult {
    std::int64_t executed = 0;
    /// Set when a best queue was depleted. The book has NOT been shifted yet;
    /// the caller follows up with shift_reference().
    std::optional<RefPriceChange> ref_change;
};

/// Distribution of queue sizes drawn for price levels newly exposed by a
/// reference-price move. Keyed by signed level with a fallback.
class QueueInitSampler {
public:
    QueueInitSampler() = default;
    explicit QueueInitSampler(DiscreteDistribution fallback) : fallback_(std::move(fallback)) {}

    static QueueInitSampler constant(std::int64_t lots) { return QueueInitSampler(DiscreteDistribution::point(lots)); }

    void set_level(int level, DiscreteDistribution dist) { by_level_[level] = std::move(dist); }
    void set_fallback(DiscreteDistribution dist) { fallback_ = std::move(dist); }

    /// Draws for `level`; uses the fallback when the level has no histogram,
    /// and 0 when neither exists.
    std::int64_t sample(int level, Rng& rng) const;

    const std::map<int, DiscreteDistribution>& levels() const { return by_level_; }
    const DiscreteDistribution& fallback() const { return fallback_; }

private:
    std::map<int, DiscreteDistribution> by_level_;
    DiscreteDistribution fallback_;
};

/// Queues are stored in price order: slot 0 is level -K, slot 2K-1 is level K.
/// Ask level i sits at ref + (i - 0.5) ticks, bid level -i at ref - (i - 0.5).
class BookState {
public:
    explicit BookState(int depth = kDefaultDepth, std::int64_t ref_price = 0, double tick_size = 1.0);

    /// bids[i] is the queue at level -(i+1); asks[i] at level i+1.
    static BookState from_sides(std::span<const std::int64_t> bids, std::span<const std::int64_t> asks,
                                std::int64_t ref_price, double tick_size = 1.0);

    int depth() const { return depth_; }
    std::int64_t ref_price() const { return ref_price_; }
    void set_ref_price(std::int64_t ref) { ref_price_ = ref; }
    double tick_size() const { return tick_size_; }
    double session_time() const { return session_time_; }
    void set_session_time(double t) { session_time_ = t; }

    bool valid_level(int level) const { return level != 0 && level >= -depth_ && level <= depth_; }
    int slot(int level) const { return level < 0 ? depth_ + level : depth_ + level - 1; }
    int level_of_slot(int slot) const { return slot < depth_ ? slot - depth_ : slot - depth_ + 1; }
    int slot_count() const { return 2 * depth_; }

    /// Throws InvalidLevel.
    std::int64_t queue(int level) const;
    /// Throws InvalidLevel, or InvalidSize for negative lots.
    void set_queue(int level, std::int64_t lots);

    std::span<const std::int64_t> slots() const { return queues_; }
    std::span<std::int64_t> mutable_slots() { return queues_; }

    /// Innermost nonempty level on each side, if any.
    std::optional<int> best_ask_level() const;
    std::optional<int> best_bid_level() const;

    /// Price of a level in ticks (half-integer on this grid).
    double price_ticks(int level) const;
    /// Twice the price in ticks; an exact integer key for a grid price.
    std::int64_t price_key(int level) const;
    /// Level currently quoting the given price key, if it is on the grid.
    std::optional<int> level_at_key(std::int64_t key) const;

    std::int64_t total_lots() const;

    bool same_queues(const BookState& other) const { return ref_price_ == other.ref_price_ && queues_ == other.queues_; }
    bool operator==(const BookState& other) const = default;

private:
    int depth_;
    std::int64_t ref_price_;
    double tick_size_;
    double session_time_ = 0.0;
    std::vector<std::int64_t> queues_;
};

/// Applies one event in place. L adds lots; C and M remove min(size, queue).
/// When a C/M takes level +1 or -1 from nonempty to empty the result carries
/// the triggered reference move (+1 for the ask side, -1 for the bid side).
/// Throws InvalidLevel / InvalidSize.
ApplyResult apply_event(BookState& book, const LobEvent& ev);

/// Spread between innermost nonempty levels, in ticks. Throws EmptySide.
std::int64_t spread_ticks(const BookState& book);

/// Mid price in ticks and in price units. Throws EmptySide.
double mid_ticks(const BookState& book);
double mid_price(const BookState& book);

/// Moves the reference price one tick and relabels queues by price. The level
/// exposed at the far end (+K on an up move, -K on a down move) is drawn from
/// `init`; the queue pushed off the opposite end is dropped.
void shift_reference(BookState& book, int direction, const QueueInitSampler& init, Rng& rng);

/// Rotates any per-slot array the same way shift_reference rotates queues.
template <typename T>
void shift_slots(std::span<T> slots, int direction, T exposed) {
    const std::size_t n = slots.size();
    if (n == 0) return;
    if (direction > 0) {
        for (std::size_t j = 0; j + 1 < n; ++j) slots[j] = slots[j + 1];
        slots[n - 1] = exposed;
    } else {
        for (std::size_t j = n - 1; j > 0; --j) slots[j] = slots[j - 1];
        slots[0] = exposed;
    }
}

std::string describe(const BookState& book);

}  // namespace lobqr
