#pragma once

// Model inputs: queue sizes, spread, trade imbalance over several horizons,
// last event type per level and the session hour.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lobqr/book.hpp"
#include "lobqr/event_log.hpp"

namespace lobqr {

inline constexpr int kHours = 9;
inline constexpr double kSessionLength = 9.0 * 3600.0;
inline constexpr std::array<double, 4> kDefaultHorizons{20.0, 60.0, 300.0, 900.0};

enum class TradeSide : std::uint8_t { Bid, Ask };

/// Executed trades in time order with prefix sums per side, so windowed
/// volumes cost two binary searches.
class TradeTape {
public:
    /// Throws ValueError for volume <= 0 or a timestamp earlier than the last.
    void add(double t, TradeSide side, double volume);

    /// Bid and ask volume traded in [from, to].
    std::pair<double, double> volumes(double from, double to) const;
    std::size_t size() const { return times_.size(); }
    void clear();

private:
    std::vector<double> times_;
    std::vector<double> cum_bid_{0.0};
    std::vector<double> cum_ask_{0.0};
};

/// (Vb - Va) / (Vb + Va) over [t - tau, t]; 0 when the window saw no trades.
double trade_imbalance(const TradeTape& tape, double tau, double t);

/// floor(t / 3600) for t in the 9-hour session; throws OutOfSession otherwise.
int hour_index(double t);

using LastEvents = std::array<EventType, kLevels>;

inline LastEvents initial_last_events() {
    LastEvents e;
    e.fill(EventType::Limit);
    return e;
}

struct StateVector {
    std::array<double, kLevels> log_queues{};  // ln(1 + q), price order
    std::array<std::int64_t, kLevels> queues{};
    std::int64_t spread_ticks = 1;
    std::array<double, 4> ti{};
    LastEvents last_event = initial_last_events();
    int hour = 0;

    bool operator==(const StateVector&) const = default;
};

/// Throws EmptySide when either side of the book is empty, OutOfSession when
/// t is outside the session.
StateVector build_state(const BookState& book, const TradeTape& tape, const LastEvents& last_events, double t,
                        const std::array<double, 4>& horizons = kDefaultHorizons);
StateVector build_state(std::span<const std::int64_t> queues, const TradeTape& tape, const LastEvents& last_events,
                        double t, const std::array<double, 4>& horizons = kDefaultHorizons);

/// Book, trade tape and per-level last events evolving together.
class MarketTracker {
public:
    explicit MarketTracker(BookState book, std::array<double, 4> horizons = kDefaultHorizons);

    /// Applies the event, records trades, and performs the reference shift
    /// (drawing the exposed queue from `init`) when one is triggered.
    ApplyResult apply(const LobEvent& ev, const QueueInitSampler& init, Rng& rng);

    StateVector state() const { return build_state(book_, tape_, last_, book_.session_time(), horizons_); }
    StateVector state_at(double t) const { return build_state(book_, tape_, last_, t, horizons_); }

    const BookState& book() const { return book_; }
    BookState& mutable_book() { return book_; }
    const TradeTape& tape() const { return tape_; }
    const LastEvents& last_events() const { return last_; }
    const std::array<double, 4>& horizons() const { return horizons_; }

private:
    BookState book_;
    TradeTape tape_;
    LastEvents last_ = initial_last_events();
    std::array<double, 4> horizons_;
};

/// Which encoding of the state a network consumes.
enum class InputKind {
    Queue,      // one queue: own size, spread, TI, own last event, hour, depth
    Book,       // whole book: all queues, spread, TI, all last events, hour
    BookSized,  // Book plus the event type and level of the event being sized
};

const char* to_string(InputKind kind);
InputKind input_kind_from_string(const std::string& s);

struct InputLayout {
    InputKind kind = InputKind::Book;
    int numeric = 0;
    std::vector<int> cardinalities;

    static InputLayout make(InputKind kind);
    /// Version tag stored in serialized models; differs whenever the layout does.
    std::string schema() const;
};

/// Column-per-sample input block.
struct Inputs {
    Eigen::MatrixXd numeric;
    Eigen::MatrixXi categorical;

    Eigen::Index cols() const { return numeric.cols(); }
    void resize(const InputLayout& layout, Eigen::Index n);
    Inputs select(const std::vector<Eigen::Index>& columns) const;
};

/// Writes one sample into column `col`. `level` is the queue (Queue kind) or
/// the sized event's level (BookSized); `type` is the sized event's type.
void encode(const StateVector& s, const InputLayout& layout, Inputs& out, Eigen::Index col, int level = 1,
            EventType type = EventType::Limit);

/// Training samples: inputs, realized class, and the interval preceding the event.
struct Dataset {
    InputLayout layout;
    Inputs inputs;
    std::vector<int> label;
    std::vector<double> dt;
    std::size_t clipped = 0;  // size samples above the class cap

    std::size_t size() const { return label.size(); }
    Dataset subset(const std::vector<std::size_t>& idx) const;
};

struct DatasetSplit {
    Dataset train;
    Dataset validation;
    bool empty_validation = false;
};

/// Replays a log and returns the pre-event state of every record, built at the
/// previous event's time. States with an empty side are returned as nullopt.
std::vector<std::optional<StateVector>> replay_states(const std::vector<EventRecord>& records,
                                                      const std::array<double, 4>& horizons = kDefaultHorizons);

inline constexpr int kSizeClasses = 200;

struct DatasetOptions {
    double split_ratio = 0.8;
    std::array<double, 4> horizons = kDefaultHorizons;
    /// Queue datasets: depths (1..5) included; empty means all.
    std::vector<int> depths;
};

/// One sample per event at a queue with a defined per-queue interval; label = type.
DatasetSplit build_queue_dataset(const std::vector<EventRecord>& records, const DatasetOptions& opts = {});
/// One sample per event with a defined book-wide interval; label = slot * 3 + type.
DatasetSplit build_book_dataset(const std::vector<EventRecord>& records, const DatasetOptions& opts = {});
/// One sample per event; label = min(size, 200) - 1.
DatasetSplit build_size_dataset(const std::vector<EventRecord>& records, const DatasetOptions& opts = {});

/// Category index used by whole-book models: slot * 3 + type.
inline int category_index(int slot, EventType type) { return slot * kEventTypes + index_of(type); }

}  // namespace lobqr
