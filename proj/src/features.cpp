#include "lobqr/features.hpp"

#include <algorithm>
#include <cmath>

#include "lobqr/errors.hpp"

namespace lobqr {

void TradeTape::add(double t, TradeSide side, double volume) {
    if (!(volume > 0.0)) throw ValueError("trade volume must be positive");
    if (!times_.empty() && t < times_.back()) throw ValueError("trade timestamps must be nondecreasing");
    times_.push_back(t);
    cum_bid_.push_back(cum_bid_.back() + (side == TradeSide::Bid ? volume : 0.0));
    cum_ask_.push_back(cum_ask_.back() + (side == TradeSide::Ask ? volume : 0.0));
}

std::pair<double, double> TradeTape::volumes(double from, double to) const {
    const auto lo = static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), from) - times_.begin());
    const auto hi = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), to) - times_.begin());
    if (hi <= lo) return {0.0, 0.0};
    return {cum_bid_[hi] - cum_bid_[lo], cum_ask_[hi] - cum_ask_[lo]};
}

void TradeTape::clear() {
    times_.clear();
    cum_bid_.assign(1, 0.0);
    cum_ask_.assign(1, 0.0);
}

double trade_imbalance(const TradeTape& tape, double tau, double t) {
    const auto [vb, va] = tape.volumes(t - tau, t);
    const double total = vb + va;
    if (!(total > 0.0)) return 0.0;
    return std::clamp((vb - va) / total, -1.0, 1.0);
}

int hour_index(double t) {
    if (!(t >= 0.0 && t < kSessionLength))
        throw OutOfSession("time " + std::to_string(t) + " s is outside the 9-hour session");
    return static_cast<int>(std::floor(t / 3600.0));
}

StateVector build_state(std::span<const std::int64_t> queues, const TradeTape& tape, const LastEvents& last_events,
                        double t, const std::array<double, 4>& horizons) {
    if (queues.size() != static_cast<std::size_t>(kLevels)) throw ShapeMismatch("state needs 10 queues");
    StateVector s;
    int best_bid = 0, best_ask = 0;
    for (int i = kDefaultDepth - 1; i >= 0 && best_bid == 0; --i)
        if (queues[static_cast<std::size_t>(i)] > 0) best_bid = i - kDefaultDepth;
    for (int i = kDefaultDepth; i < kLevels && best_ask == 0; ++i)
        if (queues[static_cast<std::size_t>(i)] > 0) best_ask = i - kDefaultDepth + 1;
    if (best_bid == 0 || best_ask == 0) throw EmptySide("cannot build a state with an empty side");
    // ask level i at i - 0.5, bid level -j at -(j - 0.5): distance in ticks
    s.spread_ticks = best_ask - best_bid - 1;
    for (std::size_t i = 0; i < s.queues.size(); ++i) {
        s.queues[i] = queues[i];
        s.log_queues[i] = std::log1p(static_cast<double>(queues[i]));
    }
    for (std::size_t h = 0; h < horizons.size(); ++h) s.ti[h] = trade_imbalance(tape, horizons[h], t);
    s.last_event = last_events;
    s.hour = hour_index(t);
    return s;
}

StateVector build_state(const BookState& book, const TradeTape& tape, const LastEvents& last_events, double t,
                        const std::array<double, 4>& horizons) {
    if (book.depth() != kDefaultDepth) throw ShapeMismatch("state needs a book of depth 5");
    return build_state(book.slots(), tape, last_events, t, horizons);
}

MarketTracker::MarketTracker(BookState book, std::array<double, 4> horizons)
    : book_(std::move(book)), horizons_(horizons) {}

ApplyResult MarketTracker::apply(const LobEvent& ev, const QueueInitSampler& init, Rng& rng) {
    const ApplyResult res = apply_event(book_, ev);
    book_.set_session_time(ev.t);
    if (ev.type == EventType::Market && res.executed > 0)
        tape_.add(ev.t, ev.level < 0 ? TradeSide::Bid : TradeSide::Ask, static_cast<double>(res.executed));
    last_[static_cast<std::size_t>(book_.slot(ev.level))] = ev.type;
    if (res.ref_change) {
        shift_reference(book_, res.ref_change->direction, init, rng);
        shift_slots<EventType>(last_, res.ref_change->direction, EventType::Limit);
    }
    return res;
}

const char* to_string(InputKind kind) {
    switch (kind) {
        case InputKind::Queue: return "queue";
        case InputKind::Book: return "book";
        case InputKind::BookSized: return "book_sized";
    }
    return "?";
}

InputKind input_kind_from_string(const std::string& s) {
    if (s == "queue") return InputKind::Queue;
    if (s == "book") return InputKind::Book;
    if (s == "book_sized") return InputKind::BookSized;
    throw FormatError("unknown input kind '" + s + "'");
}

InputLayout InputLayout::make(InputKind kind) {
    InputLayout l;
    l.kind = kind;
    if (kind == InputKind::Queue) {
        l.numeric = 6;
        l.cardinalities = {kEventTypes, kHours, kDefaultDepth};
        return l;
    }
    l.numeric = kLevels + 1 + 4;
    l.cardinalities.assign(kLevels, kEventTypes);
    l.cardinalities.push_back(kHours);
    if (kind == InputKind::BookSized) {
        l.cardinalities.push_back(kEventTypes);
        l.cardinalities.push_back(kLevels);
    }
    return l;
}

std::string InputLayout::schema() const {
    std::string s = std::string("lobqr-features/1:") + to_string(kind) + ":n" + std::to_string(numeric) + ":c";
    for (std::size_t i = 0; i < cardinalities.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(cardinalities[i]);
    }
    return s;
}

void Inputs::resize(const InputLayout& layout, Eigen::Index n) {
    numeric.resize(layout.numeric, n);
    categorical.resize(static_cast<Eigen::Index>(layout.cardinalities.size()), n);
}

Inputs Inputs::select(const std::vector<Eigen::Index>& columns) const {
    Inputs out;
    out.numeric.resize(numeric.rows(), static_cast<Eigen::Index>(columns.size()));
    out.categorical.resize(categorical.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out.numeric.col(static_cast<Eigen::Index>(j)) = numeric.col(columns[j]);
        out.categorical.col(static_cast<Eigen::Index>(j)) = categorical.col(columns[j]);
    }
    return out;
}

void encode(const StateVector& s, const InputLayout& layout, Inputs& out, Eigen::Index col, int level, EventType type) {
    auto num = out.numeric.col(col);
    auto cat = out.categorical.col(col);
    if (layout.kind == InputKind::Queue) {
        const auto slot = static_cast<std::size_t>(level < 0 ? kDefaultDepth + level : kDefaultDepth + level - 1);
        num(0) = s.log_queues[slot];
        num(1) = static_cast<double>(s.spread_ticks);
        for (int h = 0; h < 4; ++h) num(2 + h) = s.ti[static_cast<std::size_t>(h)];
        cat(0) = index_of(s.last_event[slot]);
        cat(1) = s.hour;
        cat(2) = std::abs(level) - 1;
        return;
    }
    for (int i = 0; i < kLevels; ++i) num(i) = s.log_queues[static_cast<std::size_t>(i)];
    num(kLevels) = static_cast<double>(s.spread_ticks);
    for (int h = 0; h < 4; ++h) num(kLevels + 1 + h) = s.ti[static_cast<std::size_t>(h)];
    for (int i = 0; i < kLevels; ++i) cat(i) = index_of(s.last_event[static_cast<std::size_t>(i)]);
    cat(kLevels) = s.hour;
    if (layout.kind == InputKind::BookSized) {
        cat(kLevels + 1) = index_of(type);
        cat(kLevels + 2) = level < 0 ? kDefaultDepth + level : kDefaultDepth + level - 1;
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
    Dataset d;
    d.layout = layout;
    std::vector<Eigen::Index> cols(idx.begin(), idx.end());
    d.inputs = inputs.select(cols);
    for (auto i : idx) {
        d.label.push_back(label[i]);
        d.dt.push_back(dt[i]);
    }
    return d;
}

std::vector<std::optional<StateVector>> replay_states(const std::vector<EventRecord>& records,
                                                      const std::array<double, 4>& horizons) {
    std::vector<std::optional<StateVector>> out;
    out.reserve(records.size());
    TradeTape tape;
    LastEvents last = initial_last_events();
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        const double t_state = k == 0 ? r.t : records[k - 1].t;
        try {
            out.emplace_back(build_state(r.queues, tape, last, t_state, horizons));
        } catch (const EmptySide&) {
            out.emplace_back(std::nullopt);
        }
        const auto pre = r.queue(r.level);
        if (r.type == EventType::Market && std::min(pre, r.size) > 0)
            tape.add(r.t, r.level < 0 ? TradeSide::Bid : TradeSide::Ask, static_cast<double>(std::min(pre, r.size)));
        const auto slot = static_cast<std::size_t>(r.level < 0 ? kDefaultDepth + r.level : kDefaultDepth + r.level - 1);
        last[slot] = r.type;
        if (k + 1 < records.size() && records[k + 1].ref_price != r.ref_price)
            shift_slots<EventType>(last, records[k + 1].ref_price > r.ref_price ? 1 : -1, EventType::Limit);
    }
    return out;
}

namespace {

// Chronological split by reference-price segment; when every record sits in
// one segment, split by record index instead.
std::vector<bool> training_mask(const std::vector<EventRecord>& records, double ratio) {
    std::vector<bool> train(records.size(), true);
    const auto segments = segment_by_ref_price(records);
    const auto split = split_chronological(segments, ratio);
    if (!split.empty_validation) {
        for (const auto& seg : split.validation)
            for (std::size_t i = seg.first; i < seg.end(); ++i) train[i] = false;
        return train;
    }
    const auto cut = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(records.size())));
    for (std::size_t i = cut; i < records.size(); ++i) train[i] = false;
    return train;
}

struct Sample {
    std::size_t record;
    int level;
    int label;
    double dt;
};

DatasetSplit assemble(const std::vector<EventRecord>& records, const std::vector<std::optional<StateVector>>& states,
                      const std::vector<Sample>& samples, const InputLayout& layout, double ratio) {
    const auto mask = training_mask(records, ratio);
    std::size_t n_train = 0;
    for (const auto& s : samples) n_train += mask[s.record] ? 1 : 0;
    DatasetSplit out;
    out.train.layout = layout;
    out.validation.layout = layout;
    out.train.inputs.resize(layout, static_cast<Eigen::Index>(n_train));
    out.validation.inputs.resize(layout, static_cast<Eigen::Index>(samples.size() - n_train));
    for (const auto& s : samples) {
        Dataset& d = mask[s.record] ? out.train : out.validation;
        const auto col = static_cast<Eigen::Index>(d.label.size());
        encode(*states[s.record], layout, d.inputs, col, s.level, records[s.record].type);
        d.label.push_back(s.label);
        d.dt.push_back(s.dt);
    }
    out.empty_validation = out.validation.size() == 0;
    return out;
}

bool depth_selected(const DatasetOptions& opts, int level) {
    return opts.depths.empty() || std::find(opts.depths.begin(), opts.depths.end(), std::abs(level)) != opts.depths.end();
}

}  // namespace

DatasetSplit build_queue_dataset(const std::vector<EventRecord>& records, const DatasetOptions& opts) {
    const auto states = replay_states(records, opts.horizons);
    const auto segments = segment_by_ref_price(records);
    const auto dt = queue_intervals(records, segments);
    std::vector<Sample> samples;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (!dt[k] || !states[k] || !depth_selected(opts, records[k].level)) continue;
        samples.push_back({k, records[k].level, index_of(records[k].type), *dt[k]});
    }
    return assemble(records, states, samples, InputLayout::make(InputKind::Queue), opts.split_ratio);
}

DatasetSplit build_book_dataset(const std::vector<EventRecord>& records, const DatasetOptions& opts) {
    const auto states = replay_states(records, opts.horizons);
    const auto segments = segment_by_ref_price(records);
    std::vector<Sample> samples;
    for (const auto& seg : segments) {
        for (std::size_t i = 1; i < seg.count; ++i) {
            const std::size_t k = seg.first + i;
            if (!states[k]) continue;
            const auto& r = records[k];
            const int slot = r.level < 0 ? kDefaultDepth + r.level : kDefaultDepth + r.level - 1;
            samples.push_back({k, r.level, category_index(slot, r.type), *seg.dt[i]});
        }
    }
    return assemble(records, states, samples, InputLayout::make(InputKind::Book), opts.split_ratio);
}

DatasetSplit build_size_dataset(const std::vector<EventRecord>& records, const DatasetOptions& opts) {
    const auto states = replay_states(records, opts.horizons);
    std::vector<Sample> samples;
    std::size_t clipped = 0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (!states[k]) continue;
        const auto& r = records[k];
        if (r.size > kSizeClasses) ++clipped;
        const int cls = static_cast<int>(std::min<std::int64_t>(r.size, kSizeClasses)) - 1;
        samples.push_back({k, r.level, cls, 0.0});
    }
    auto out = assemble(records, states, samples, InputLayout::make(InputKind::BookSized), opts.split_ratio);
    out.train.clipped = clipped;
    return out;
}

}  // namespace lobqr
