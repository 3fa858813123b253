#include "lobqr/event_log.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "lobqr/errors.hpp"

namespace lobqr {
namespace {

constexpr std::size_t kColumns = 15;

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

double parse_double(std::string_view s, std::size_t line, const char* what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw ValueError(at_line(line) + what + " '" + std::string(s) + "' is not a finite number");
    return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line, const char* what) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ValueError(at_line(line) + what + " '" + std::string(s) + "' is not an integer");
    return v;
}

std::string_view trim_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

}  // namespace

BookState EventRecord::book(double tick_size) const {
    BookState b(kDefaultDepth, ref_price, tick_size);
    auto slots = b.mutable_slots();
    for (std::size_t i = 0; i < queues.size(); ++i) slots[i] = queues[i];
    b.set_session_time(t);
    return b;
}

EventRecord make_record(const BookState& pre_event, const LobEvent& ev) {
    if (pre_event.depth() != kDefaultDepth) throw ValueError("event records require a book of depth 5");
    EventRecord r;
    r.t = ev.t;
    r.level = ev.level;
    r.type = ev.type;
    r.size = ev.size;
    r.ref_price = pre_event.ref_price();
    const auto slots = pre_event.slots();
    for (std::size_t i = 0; i < r.queues.size(); ++i) r.queues[i] = slots[i];
    return r;
}

std::vector<EventRecord> parse_event_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open event log '" + path + "'");
    return parse_event_log(in);
}

std::vector<EventRecord> parse_event_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("event log is empty (missing header)");
    if (trim_cr(line) != kEventLogHeader)
        throw SchemaError("header mismatch: expected '" + std::string(kEventLogHeader) + "'");

    std::vector<EventRecord> records;
    std::array<std::string_view, kColumns> fields;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view row = trim_cr(line);
        if (row.empty()) continue;

        std::size_t n = 0, start = 0;
        for (std::size_t i = 0; i <= row.size(); ++i) {
            if (i == row.size() || row[i] == ',') {
                if (n == kColumns) throw SchemaError(at_line(lineno) + "too many columns");
                fields[n++] = row.substr(start, i - start);
                start = i + 1;
            }
        }
        if (n != kColumns) throw SchemaError(at_line(lineno) + "expected 15 columns, found " + std::to_string(n));

        EventRecord r;
        r.t = parse_double(fields[0], lineno, "timestamp");
        const auto level = parse_int(fields[1], lineno, "level");
        if (level == 0 || level < -kDefaultDepth || level > kDefaultDepth)
            throw ValueError(at_line(lineno) + "level " + std::to_string(level) + " outside -5..-1,1..5");
        r.level = static_cast<int>(level);
        if (fields[2].size() != 1) throw ValueError(at_line(lineno) + "unknown event type token '" + std::string(fields[2]) + "'");
        try {
            r.type = event_type_from_char(fields[2][0]);
        } catch (const ValueError& e) {
            throw ValueError(at_line(lineno) + e.what());
        }
        r.size = parse_int(fields[3], lineno, "size");
        if (r.size < 1) throw ValueError(at_line(lineno) + "size must be at least 1");
        for (std::size_t i = 0; i < r.queues.size(); ++i) {
            r.queues[i] = parse_int(fields[4 + i], lineno, "queue size");
            if (r.queues[i] < 0) throw ValueError(at_line(lineno) + "negative queue size");
        }
        r.ref_price = parse_int(fields[14], lineno, "ref_price");
        if (!records.empty() && r.t < records.back().t)
            throw OrderError(at_line(lineno) + "timestamp decreases from " + std::to_string(records.back().t) + " to " +
                             std::to_string(r.t));
        records.push_back(r);
    }
    return records;
}

std::string format_record(const EventRecord& r) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), r.t);
    std::string out(buf, res.ptr);
    out += ',';
    out += std::to_string(r.level);
    out += ',';
    out += to_char(r.type);
    out += ',';
    out += std::to_string(r.size);
    for (auto q : r.queues) {
        out += ',';
        out += std::to_string(q);
    }
    out += ',';
    out += std::to_string(r.ref_price);
    return out;
}

void write_event_log(std::ostream& out, const std::vector<EventRecord>& records) {
    out << kEventLogHeader << '\n';
    for (const auto& r : records) out << format_record(r) << '\n';
}

void write_event_log(const std::string& path, const std::vector<EventRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot write event log '" + path + "'");
    write_event_log(out, records);
}

double AesTable::at_or_unit(int level) const {
    const auto it = by_level.find(level);
    return it == by_level.end() ? 1.0 : it->second;
}

AesTable compute_aes(const std::vector<EventRecord>& records) {
    std::map<int, std::pair<double, std::size_t>> acc;
    for (const auto& r : records) {
        auto& [sum, n] = acc[r.level];
        sum += static_cast<double>(r.size);
        ++n;
    }
    AesTable table;
    for (int level = -kDefaultDepth; level <= kDefaultDepth; ++level) {
        if (level == 0) continue;
        const auto it = acc.find(level);
        if (it == acc.end()) {
            table.missing_levels.push_back(level);
        } else {
            table.by_level[level] = it->second.first / static_cast<double>(it->second.second);
        }
    }
    return table;
}

std::int64_t normalize_queue(double q, double aes) {
    if (!(aes > 0.0)) throw ValueError("average event size must be positive");
    if (q < 0.0) throw ValueError("queue size must be nonnegative");
    return static_cast<std::int64_t>(std::ceil(q / aes));
}

std::vector<Segment> segment_by_ref_price(const std::vector<EventRecord>& records) {
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (segments.empty() || records[i].ref_price != segments.back().ref_price) {
            Segment s;
            s.first = i;
            s.ref_price = records[i].ref_price;
            segments.push_back(std::move(s));
        }
        auto& s = segments.back();
        if (s.count == 0) {
            s.dt.emplace_back(std::nullopt);
        } else {
            s.dt.emplace_back(records[i].t - records[i - 1].t);
        }
        ++s.count;
    }
    return segments;
}

std::vector<std::optional<double>> queue_intervals(const std::vector<EventRecord>& records,
                                                   const std::vector<Segment>& segments) {
    std::vector<std::optional<double>> dt(records.size());
    for (const auto& seg : segments) {
        std::array<std::optional<double>, kLevels> last{};
        for (std::size_t i = seg.first; i < seg.end(); ++i) {
            const auto& r = records[i];
            const auto slot = static_cast<std::size_t>(r.level < 0 ? kDefaultDepth + r.level : kDefaultDepth + r.level - 1);
            if (last[slot]) dt[i] = r.t - *last[slot];
            last[slot] = r.t;
        }
    }
    return dt;
}

SegmentSplit split_chronological(const std::vector<Segment>& segments, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValueError("split ratio must lie in (0, 1)");
    const auto n_train = std::min(segments.size(), static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(segments.size()))));
    SegmentSplit split;
    split.train.assign(segments.begin(), segments.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(segments.begin() + static_cast<std::ptrdiff_t>(n_train), segments.end());
    split.empty_validation = split.validation.empty();
    return split;
}

std::optional<ReplayMismatch> check_replay(const std::vector<EventRecord>& records) {
    static const QueueInitSampler kNoInit;
    for (std::size_t k = 0; k + 1 < records.size(); ++k) {
        BookState book = records[k].book();
        ApplyResult res;
        try {
            res = apply_event(book, records[k].event());
        } catch (const Error& e) {
            return ReplayMismatch{k, e.what()};
        }
        const auto& next = records[k + 1];
        if (next.ref_price == records[k].ref_price) {
            if (res.ref_change) return ReplayMismatch{k, "event moved the reference price but the next row did not"};
            for (std::size_t i = 0; i < next.queues.size(); ++i) {
                if (book.slots()[i] != next.queues[i]) {
                    std::ostringstream os;
                    os << "slot " << i << " expected " << book.slots()[i] << " found " << next.queues[i];
                    return ReplayMismatch{k, os.str()};
                }
            }
        } else {
            if (!res.ref_change || res.ref_change->new_ref != next.ref_price)
                return ReplayMismatch{k, "reference price changed without a matching best-queue depletion"};
            Rng unused(0);
            shift_reference(book, res.ref_change->direction, kNoInit, unused);
            // every slot except the freshly exposed one must carry over
            const std::size_t exposed = res.ref_change->direction > 0 ? next.queues.size() - 1 : 0;
            for (std::size_t i = 0; i < next.queues.size(); ++i) {
                if (i != exposed && book.slots()[i] != next.queues[i])
                    return ReplayMismatch{k, "relabelled queues do not match the next row after a reference move"};
            }
        }
    }
    return std::nullopt;
}

QueueInitSampler collect_queue_init(const std::vector<EventRecord>& records) {
    std::vector<std::int64_t> up, down, outer_ask, outer_bid;
    for (std::size_t k = 0; k < records.size(); ++k) {
        outer_ask.push_back(records[k].queue(kDefaultDepth));
        outer_bid.push_back(records[k].queue(-kDefaultDepth));
        if (k + 1 < records.size() && records[k + 1].ref_price != records[k].ref_price) {
            if (records[k + 1].ref_price > records[k].ref_price) {
                up.push_back(records[k + 1].queue(kDefaultDepth));
            } else {
                down.push_back(records[k + 1].queue(-kDefaultDepth));
            }
        }
    }
    QueueInitSampler sampler;
    if (!up.empty()) {
        sampler.set_level(kDefaultDepth, DiscreteDistribution::from_samples(up));
    } else if (!outer_ask.empty()) {
        sampler.set_level(kDefaultDepth, DiscreteDistribution::from_samples(outer_ask));
    }
    if (!down.empty()) {
        sampler.set_level(-kDefaultDepth, DiscreteDistribution::from_samples(down));
    } else if (!outer_bid.empty()) {
        sampler.set_level(-kDefaultDepth, DiscreteDistribution::from_samples(outer_bid));
    }
    std::vector<std::int64_t> pooled = outer_ask;
    pooled.insert(pooled.end(), outer_bid.begin(), outer_bid.end());
    if (!pooled.empty()) sampler.set_fallback(DiscreteDistribution::from_samples(pooled));
    return sampler;
}

}  // namespace lobqr
