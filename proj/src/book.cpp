#include "lobqr/book.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "lobqr/errors.hpp"

namespace lobqr {

char to_char(EventType type) {
    switch (type) {
        case EventType::Limit: return 'L';
        case EventType::Cancel: return 'C';
        case EventType::Market: return 'M';
    }
    return '?';
}

EventType event_type_from_char(char c) {
    switch (c) {
        case 'L': return EventType::Limit;
        case 'C': return EventType::Cancel;
        case 'M': return EventType::Market;
        default: throw ValueError(std::string("unknown event type token '") + c + "'");
    }
}

std::int64_t QueueInitSampler::sample(int level, Rng& rng) const {
    if (auto it = by_level_.find(level); it != by_level_.end() && !it->second.empty()) return it->second.sample(rng);
    if (!fallback_.empty()) return fallback_.sample(rng);
    return 0;
}

BookState::BookState(int depth, std::int64_t ref_price, double tick_size)
    : depth_(depth), ref_price_(ref_price), tick_size_(tick_size), queues_(static_cast<std::size_t>(2 * depth), 0) {
    if (depth < 1) throw InvalidLevel("book depth must be at least 1");
}

BookState BookState::from_sides(std::span<const std::int64_t> bids, std::span<const std::int64_t> asks,
                                std::int64_t ref_price, double tick_size) {
    if (bids.size() != asks.size() || bids.empty()) throw InvalidLevel("bid and ask sides must have equal nonzero depth");
    BookState book(static_cast<int>(bids.size()), ref_price, tick_size);
    for (std::size_t i = 0; i < bids.size(); ++i) {
        book.set_queue(-static_cast<int>(i) - 1, bids[i]);
        book.set_queue(static_cast<int>(i) + 1, asks[i]);
    }
    return book;
}

std::int64_t BookState::queue(int level) const {
    if (!valid_level(level)) throw InvalidLevel("level " + std::to_string(level) + " outside grid of depth " + std::to_string(depth_));
    return queues_[static_cast<std::size_t>(slot(level))];
}

void BookState::set_queue(int level, std::int64_t lots) {
    if (!valid_level(level)) throw InvalidLevel("level " + std::to_string(level) + " outside grid of depth " + std::to_string(depth_));
    if (lots < 0) throw InvalidSize("queue size must be nonnegative");
    queues_[static_cast<std::size_t>(slot(level))] = lots;
}

std::optional<int> BookState::best_ask_level() const {
    for (int i = 1; i <= depth_; ++i)
        if (queues_[static_cast<std::size_t>(slot(i))] > 0) return i;
    return std::nullopt;
}

std::optional<int> BookState::best_bid_level() const {
    for (int i = 1; i <= depth_; ++i)
        if (queues_[static_cast<std::size_t>(slot(-i))] > 0) return -i;
    return std::nullopt;
}

double BookState::price_ticks(int level) const {
    return static_cast<double>(price_key(level)) / 2.0;
}

std::int64_t BookState::price_key(int level) const {
    return level > 0 ? 2 * (ref_price_ + level) - 1 : 2 * (ref_price_ + level) + 1;
}

std::optional<int> BookState::level_at_key(std::int64_t key) const {
    // keys are odd; ask level i has key 2(ref+i)-1, bid level -i has 2(ref-i)+1
    const std::int64_t offset = key - 2 * ref_price_;
    if (offset > 0) {
        const std::int64_t level = (offset + 1) / 2;
        if ((offset + 1) % 2 == 0 && level <= depth_) return static_cast<int>(level);
    } else if (offset < 0) {
        const std::int64_t level = (offset - 1) / 2;
        if ((-offset + 1) % 2 == 0 && -level <= depth_) return static_cast<int>(level);
    }
    return std::nullopt;
}

std::int64_t BookState::total_lots() const { return std::accumulate(queues_.begin(), queues_.end(), std::int64_t{0}); }

ApplyResult apply_event(BookState& book, const LobEvent& ev) {
    if (!book.valid_level(ev.level))
        throw InvalidLevel("event level " + std::to_string(ev.level) + " outside grid of depth " + std::to_string(book.depth()));
    if (ev.size < 1) throw InvalidSize("event size must be at least 1 lot, got " + std::to_string(ev.size));

    auto& q = book.mutable_slots()[static_cast<std::size_t>(book.slot(ev.level))];
    ApplyResult result;
    if (ev.type == EventType::Limit) {
        q += ev.size;
        result.executed = ev.size;
        return result;
    }
    const std::int64_t before = q;
    result.executed = std::min(ev.size, before);
    q -= result.executed;
    if (before > 0 && q == 0 && (ev.level == 1 || ev.level == -1)) {
        const int direction = ev.level > 0 ? 1 : -1;
        result.ref_change = RefPriceChange{ev.t, book.ref_price(), book.ref_price() + direction, direction};
    }
    return result;
}

std::int64_t spread_ticks(const BookState& book) {
    const auto ask = book.best_ask_level();
    const auto bid = book.best_bid_level();
    if (!ask) throw EmptySide("ask side is empty");
    if (!bid) throw EmptySide("bid side is empty");
    return *ask - *bid - 1;
}

double mid_ticks(const BookState& book) {
    const auto ask = book.best_ask_level();
    const auto bid = book.best_bid_level();
    if (!ask) throw EmptySide("ask side is empty");
    if (!bid) throw EmptySide("bid side is empty");
    return static_cast<double>(book.price_key(*ask) + book.price_key(*bid)) / 4.0;
}

double mid_price(const BookState& book) { return mid_ticks(book) * book.tick_size(); }

void shift_reference(BookState& book, int direction, const QueueInitSampler& init, Rng& rng) {
    if (direction != 1 && direction != -1) throw ValueError("reference shift direction must be +1 or -1");
    const int exposed_level = direction > 0 ? book.depth() : -book.depth();
    const std::int64_t fresh = init.sample(exposed_level, rng);
    if (fresh < 0) throw InvalidSize("queue init sampler produced a negative size");
    shift_slots<std::int64_t>(book.mutable_slots(), direction, fresh);
    book.set_ref_price(book.ref_price() + direction);
}

std::string describe(const BookState& book) {
    std::ostringstream os;
    os << "ref=" << book.ref_price() << " bids[";
    for (int i = 1; i <= book.depth(); ++i) os << (i > 1 ? "," : "") << book.queue(-i);
    os << "] asks[";
    for (int i = 1; i <= book.depth(); ++i) os << (i > 1 ? "," : "") << book.queue(i);
    os << "]";
    return os.str();
}

}  // namespace lobqr
