#pragma once

// Event-log records, the CSV schema they travel in, and the preprocessing
// used before calibration (AES normalization, reference-price segments,
// chronological split).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lobqr/book.hpp"

namespace lobqr {

inline constexpr int kLevels = 2 * kDefaultDepth;

/// Exact header of the event-log CSV.
inline constexpr const char* kEventLogHeader = "t,level,type,size,qb5,qb4,qb3,qb2,qb1,qa1,qa2,qa3,qa4,qa5,ref_price";

struct EventRecord {
    double t = 0.0;
    int level = 1;
    EventType type = EventType::Limit;
    std::int64_t size = 1;
    /// Pre-event snapshot in price order (qb5..qb1, qa1..qa5).
    std::array<std::int64_t, kLevels> queues{};
    std::int64_t ref_price = 0;

    std::int64_t queue(int lvl) const { return queues[static_cast<std::size_t>(lvl < 0 ? kDefaultDepth + lvl : kDefaultDepth + lvl - 1)]; }
    LobEvent event() const { return {type, level, size, t}; }
    BookState book(double tick_size = 1.0) const;

    bool operator==(const EventRecord&) const = default;
};

EventRecord make_record(const BookState& pre_event, const LobEvent& ev);

/// Throws SchemaError (header / column count), ValueError (bad field),
/// OrderError (decreasing timestamps). Error messages carry the line number.
std::vector<EventRecord> parse_event_log(const std::string& path);
std::vector<EventRecord> parse_event_log(std::istream& in);

/// Writes the header and one row per record; timestamps use the shortest
/// representation that parses back to the same double.
void write_event_log(const std::string& path, const std::vector<EventRecord>& records);
void write_event_log(std::ostream& out, const std::vector<EventRecord>& records);
std::string format_record(const EventRecord& r);

/// Average event size per signed level.
struct AesTable {
    std::map<int, double> by_level;
    std::vector<int> missing_levels;  // levels with no events (entry omitted)

    bool has(int level) const { return by_level.count(level) > 0; }
    /// Returns the level's AES, or 1.0 when the level had no events.
    double at_or_unit(int level) const;
};

AesTable compute_aes(const std::vector<EventRecord>& records);

/// ceil(q / aes). Requires aes > 0 and q >= 0.
std::int64_t normalize_queue(double q, double aes);

/// Maximal run of records sharing one reference price. `dt[i]` is the time
/// since the previous event of the same run (book-wide); empty for the first.
struct Segment {
    std::size_t first = 0;
    std::size_t count = 0;
    std::int64_t ref_price = 0;
    std::vector<std::optional<double>> dt;

    std::size_t end() const { return first + count; }
};

std::vector<Segment> segment_by_ref_price(const std::vector<EventRecord>& records);

/// Per-record time since the previous event at the same level inside the
/// same segment (queue-local clock used by the single-queue estimators).
std::vector<std::optional<double>> queue_intervals(const std::vector<EventRecord>& records,
                                                   const std::vector<Segment>& segments);

struct SegmentSplit {
    std::vector<Segment> train;
    std::vector<Segment> validation;
    bool empty_validation = false;
};

/// Earliest ceil(ratio * n) segments go to training. Throws ValueError unless
/// 0 < ratio < 1.
SegmentSplit split_chronological(const std::vector<Segment>& segments, double ratio = 0.8);

struct ReplayMismatch {
    std::size_t index = 0;  // row whose event failed to reproduce the next row
    std::string reason;
};

/// Applies each row's event to its snapshot and checks the next row's
/// snapshot (exact equality inside a reference-price segment; direction of
/// the move across a segment boundary).
std::optional<ReplayMismatch> check_replay(const std::vector<EventRecord>& records);

/// Histograms of newly exposed outer queues observed right after reference
/// moves; levels without observations fall back to their unconditional
/// snapshot histogram.
QueueInitSampler collect_queue_init(const std::vector<EventRecord>& records);

}  // namespace lobqr
