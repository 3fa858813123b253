#include "lobqr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lobqr/errors.hpp"

namespace lobqr {
namespace {

IntensityCurve curve_from_json(const json& j, const std::string& ctx) {
    IntensityCurve c;
    if (j.is_number()) return IntensityCurve::constant(j.get<double>());
    require_keys_subset(j, {"table", "base", "linear", "amp", "decay", "sat", "sat_scale"}, ctx);
    read_optional(j, "table", c.table, ctx);
    read_optional(j, "base", c.base, ctx);
    read_optional(j, "linear", c.linear, ctx);
    read_optional(j, "amp", c.amp, ctx);
    read_optional(j, "decay", c.decay, ctx);
    read_optional(j, "sat", c.sat, ctx);
    read_optional(j, "sat_scale", c.sat_scale, ctx);
    return c;
}

ordered_json curve_to_json(const IntensityCurve& c) {
    ordered_json j;
    if (c.tabulated()) {
        j["table"] = c.table;
        return j;
    }
    j["base"] = c.base;
    j["linear"] = c.linear;
    j["amp"] = c.amp;
    j["decay"] = c.decay;
    j["sat"] = c.sat;
    j["sat_scale"] = c.sat_scale;
    return j;
}

DiscreteDistribution dist_from_json(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object mapping value to probability");
    std::map<std::int64_t, double> w;
    double total = 0.0;
    for (const auto& [k, v] : j.items()) {
        std::int64_t value = 0;
        try {
            std::size_t pos = 0;
            value = std::stoll(k, &pos);
            if (pos != k.size()) throw std::invalid_argument(k);
        } catch (const std::exception&) {
            throw ConfigError(ctx + ": key '" + k + "' is not an integer");
        }
        if (!v.is_number()) throw ConfigError(ctx + ": probability for " + k + " is not a number");
        const double p = v.get<double>();
        if (p < 0.0) throw ConfigError(ctx + ": negative probability for " + k);
        w[value] = p;
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError(ctx + ": probabilities sum to " + std::to_string(total) + ", not 1");
    try {
        return DiscreteDistribution(w);
    } catch (const ValueError& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

ordered_json dist_to_json(const DiscreteDistribution& d) {
    ordered_json j = ordered_json::object();
    for (const auto& [v, p] : d.as_map()) j[std::to_string(v)] = p;
    return j;
}

const char* kTypeKeys[kEventTypes] = {"L", "C", "M"};

}  // namespace

const char* to_string(SyntheticKind kind) {
    switch (kind) {
        case SyntheticKind::QrTable: return "qr_table";
        case SyntheticKind::StateDependent: return "state_dependent";
        case SyntheticKind::MarkovModulated: return "markov_modulated";
    }
    return "?";
}

double IntensityCurve::operator()(std::int64_t q) const {
    if (tabulated()) {
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max<std::int64_t>(q, 0)), table.size() - 1);
        return table[idx];
    }
    const double x = static_cast<double>(q);
    const double v = base + linear * x + amp * std::exp(-x / decay) + sat * x / (x + sat_scale);
    return v > 0.0 ? v : 0.0;
}

const QueueIntensity& SyntheticSpec::curves_for(int level) const {
    return intensities.size() == 1 ? intensities.front() : intensities[static_cast<std::size_t>(std::abs(level) - 1)];
}

const SizeLaw& SyntheticSpec::sizes_for(int level) const {
    return sizes.size() == 1 ? sizes.front() : sizes[static_cast<std::size_t>(std::abs(level) - 1)];
}

double SyntheticSpec::intensity(EventType type, int level, std::int64_t q, int hour, EventType last_at_level) const {
    double rate = curves_for(level)[static_cast<std::size_t>(index_of(type))](q);
    if (!hour_profile.empty()) rate *= hour_profile[static_cast<std::size_t>(std::clamp(hour, 0, 8))];
    if (kind == SyntheticKind::MarkovModulated)
        rate *= excitation[static_cast<std::size_t>(index_of(last_at_level))][static_cast<std::size_t>(index_of(type))];
    return rate;
}

BookState SyntheticSpec::initial_book() const {
    BookState book(kDefaultDepth, ref_price, tick_size);
    auto slots = book.mutable_slots();
    for (std::size_t i = 0; i < initial_queues.size(); ++i) slots[i] = initial_queues[i];
    book.set_session_time(start_time);
    return book;
}

void SyntheticSpec::validate() const {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("synthetic spec: horizon must be a finite value >= 0");
    if (!(start_time >= 0.0)) throw ConfigError("synthetic spec: start_time must be >= 0");
    if (!(tick_size > 0.0)) throw ConfigError("synthetic spec: tick_size must be positive");
    if (intensities.size() != 1 && intensities.size() != static_cast<std::size_t>(kDefaultDepth))
        throw ConfigError("synthetic spec: intensities must list 1 or 5 depth entries");
    if (sizes.size() != 1 && sizes.size() != static_cast<std::size_t>(kDefaultDepth))
        throw ConfigError("synthetic spec: sizes must list 1 or 5 depth entries");
    for (const auto& qi : intensities) {
        for (int e = 0; e < kEventTypes; ++e) {
            const auto& c = qi[static_cast<std::size_t>(e)];
            if (kind == SyntheticKind::QrTable && !c.tabulated())
                throw ConfigError("synthetic spec: qr_table intensities must be tabulated");
            for (double v : c.table)
                if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("synthetic spec: negative or non-finite tabulated intensity");
            if (!c.tabulated() && !(c.decay > 0.0 && c.sat_scale > 0.0))
                throw ConfigError("synthetic spec: decay and sat_scale must be positive");
        }
    }
    for (const auto& law : sizes)
        for (const auto& d : law) {
            if (d.empty()) throw ConfigError("synthetic spec: every event type needs a size distribution");
            if (d.values().front() < 1) throw ConfigError("synthetic spec: order sizes must be at least 1 lot");
        }
    if (!hour_profile.empty()) {
        if (hour_profile.size() != 9) throw ConfigError("synthetic spec: hour_profile needs 9 entries");
        for (double h : hour_profile)
            if (!(h >= 0.0)) throw ConfigError("synthetic spec: hour multipliers must be >= 0");
    }
    if (kind == SyntheticKind::MarkovModulated) {
        for (const auto& row : excitation)
            for (double v : row)
                if (!(v >= 0.0)) throw ConfigError("synthetic spec: excitation weights must be >= 0");
    }
    for (auto q : initial_queues)
        if (q < 0) throw ConfigError("synthetic spec: initial queues must be >= 0");
    if (queue_init.empty()) throw ConfigError("synthetic spec: queue_init distribution is required");
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
    const std::string ctx = "synthetic spec";
    require_keys_subset(j, {"kind", "seed", "start_time", "horizon", "max_events", "tick_size", "initial_book", "queue_init",
                            "intensities", "sizes", "excitation", "hour_profile"},
                        ctx);
    SyntheticSpec s;
    const auto kind = read_required<std::string>(j, "kind", ctx);
    if (kind == "qr_table") {
        s.kind = SyntheticKind::QrTable;
    } else if (kind == "state_dependent") {
        s.kind = SyntheticKind::StateDependent;
    } else if (kind == "markov_modulated") {
        s.kind = SyntheticKind::MarkovModulated;
    } else {
        throw ConfigError(ctx + ": unknown kind '" + kind + "'");
    }
    read_optional(j, "seed", s.seed, ctx);
    read_optional(j, "start_time", s.start_time, ctx);
    s.horizon = read_required<double>(j, "horizon", ctx);
    std::size_t max_events = 0;
    if (read_optional(j, "max_events", max_events, ctx)) s.max_events = max_events;
    read_optional(j, "tick_size", s.tick_size, ctx);

    const auto book = j.find("initial_book");
    if (book == j.end()) throw ConfigError(ctx + ": missing required key 'initial_book'");
    require_keys_subset(*book, {"ref_price", "bids", "asks"}, ctx + ".initial_book");
    s.ref_price = read_required<std::int64_t>(*book, "ref_price", ctx + ".initial_book");
    const auto bids = read_required<std::vector<std::int64_t>>(*book, "bids", ctx + ".initial_book");
    const auto asks = read_required<std::vector<std::int64_t>>(*book, "asks", ctx + ".initial_book");
    if (bids.size() != static_cast<std::size_t>(kDefaultDepth) || asks.size() != static_cast<std::size_t>(kDefaultDepth))
        throw ConfigError(ctx + ".initial_book: bids and asks need 5 entries each (level 1 first)");
    for (int i = 0; i < kDefaultDepth; ++i) {
        s.initial_queues[static_cast<std::size_t>(kDefaultDepth - 1 - i)] = bids[static_cast<std::size_t>(i)];
        s.initial_queues[static_cast<std::size_t>(kDefaultDepth + i)] = asks[static_cast<std::size_t>(i)];
    }

    const auto qi = j.find("queue_init");
    if (qi == j.end()) throw ConfigError(ctx + ": missing required key 'queue_init'");
    s.queue_init = dist_from_json(*qi, ctx + ".queue_init");

    const auto inten = j.find("intensities");
    if (inten == j.end()) throw ConfigError(ctx + ": missing required key 'intensities'");
    const json list = inten->is_array() ? *inten : json::array({*inten});
    for (std::size_t d = 0; d < list.size(); ++d) {
        const std::string c = ctx + ".intensities[" + std::to_string(d) + "]";
        require_keys_subset(list[d], {"L", "C", "M"}, c);
        QueueIntensity q;
        for (int e = 0; e < kEventTypes; ++e) {
            const auto it = list[d].find(kTypeKeys[e]);
            if (it == list[d].end()) throw ConfigError(c + ": missing curve for " + kTypeKeys[e]);
            q[static_cast<std::size_t>(e)] = curve_from_json(*it, c + "." + kTypeKeys[e]);
        }
        s.intensities.push_back(std::move(q));
    }

    const auto sizes = j.find("sizes");
    if (sizes == j.end()) {
        s.sizes.push_back({DiscreteDistribution::point(1), DiscreteDistribution::point(1), DiscreteDistribution::point(1)});
    } else {
        const json slist = sizes->is_array() ? *sizes : json::array({*sizes});
        for (std::size_t d = 0; d < slist.size(); ++d) {
            const std::string c = ctx + ".sizes[" + std::to_string(d) + "]";
            require_keys_subset(slist[d], {"L", "C", "M"}, c);
            SizeLaw law;
            for (int e = 0; e < kEventTypes; ++e) {
                const auto it = slist[d].find(kTypeKeys[e]);
                law[static_cast<std::size_t>(e)] =
                    it == slist[d].end() ? DiscreteDistribution::point(1) : dist_from_json(*it, c + "." + kTypeKeys[e]);
            }
            s.sizes.push_back(std::move(law));
        }
    }

    if (s.kind == SyntheticKind::MarkovModulated) {
        const auto ex = read_required<std::vector<std::vector<double>>>(j, "excitation", ctx);
        if (ex.size() != 3) throw ConfigError(ctx + ": excitation must be 3x3");
        for (std::size_t r = 0; r < 3; ++r) {
            if (ex[r].size() != 3) throw ConfigError(ctx + ": excitation must be 3x3");
            for (std::size_t c = 0; c < 3; ++c) s.excitation[r][c] = ex[r][c];
        }
    } else if (j.contains("excitation")) {
        throw ConfigError(ctx + ": excitation only applies to markov_modulated");
    }
    read_optional(j, "hour_profile", s.hour_profile, ctx);
    s.validate();
    return s;
}

ordered_json SyntheticSpec::to_json() const {
    ordered_json j;
    j["kind"] = to_string(kind);
    j["seed"] = seed;
    j["start_time"] = start_time;
    j["horizon"] = horizon;
    if (max_events) j["max_events"] = *max_events;
    j["tick_size"] = tick_size;
    std::vector<std::int64_t> bids, asks;
    for (int i = 0; i < kDefaultDepth; ++i) {
        bids.push_back(initial_queues[static_cast<std::size_t>(kDefaultDepth - 1 - i)]);
        asks.push_back(initial_queues[static_cast<std::size_t>(kDefaultDepth + i)]);
    }
    j["initial_book"] = {{"ref_price", ref_price}, {"bids", bids}, {"asks", asks}};
    j["queue_init"] = dist_to_json(queue_init);
    ordered_json inten = ordered_json::array();
    for (const auto& q : intensities) {
        ordered_json e;
        for (int t = 0; t < kEventTypes; ++t) e[kTypeKeys[t]] = curve_to_json(q[static_cast<std::size_t>(t)]);
        inten.push_back(e);
    }
    j["intensities"] = inten;
    ordered_json sz = ordered_json::array();
    for (const auto& law : sizes) {
        ordered_json e;
        for (int t = 0; t < kEventTypes; ++t) e[kTypeKeys[t]] = dist_to_json(law[static_cast<std::size_t>(t)]);
        sz.push_back(e);
    }
    j["sizes"] = sz;
    if (kind == SyntheticKind::MarkovModulated) {
        ordered_json ex = ordered_json::array();
        for (const auto& row : excitation) ex.push_back(std::vector<double>(row.begin(), row.end()));
        j["excitation"] = ex;
    }
    if (!hour_profile.empty()) j["hour_profile"] = hour_profile;
    return j;
}

int generator_hour(double t) { return std::clamp(static_cast<int>(std::floor(t / 3600.0)), 0, 8); }

std::vector<EventRecord> generate_synthetic(const SyntheticSpec& spec) {
    Rng rng(spec.seed);
    return generate_synthetic(spec, rng);
}

std::vector<EventRecord> generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
    spec.validate();
    QueueInitSampler init(spec.queue_init);
    BookState book = spec.initial_book();
    std::array<EventType, kLevels> last{};
    last.fill(EventType::Limit);

    std::vector<EventRecord> out;
    std::array<double, kLevels * kEventTypes> rates{};
    const double end = spec.start_time + spec.horizon;
    double t = spec.start_time;

    auto record = [&](const LobEvent& ev) {
        out.push_back(make_record(book, ev));
        const ApplyResult res = apply_event(book, ev);
        last[static_cast<std::size_t>(book.slot(ev.level))] = ev.type;
        if (res.ref_change) {
            shift_reference(book, res.ref_change->direction, init, rng);
            shift_slots<EventType>(last, res.ref_change->direction, EventType::Limit);
        }
    };

    while (!spec.max_events || out.size() < *spec.max_events) {
        const int hour = generator_hour(t);
        double total = 0.0;
        for (int s = 0; s < kLevels; ++s) {
            const int level = book.level_of_slot(s);
            const auto q = book.slots()[static_cast<std::size_t>(s)];
            for (int e = 0; e < kEventTypes; ++e) {
                const double r = spec.intensity(static_cast<EventType>(e), level, q, hour, last[static_cast<std::size_t>(s)]);
                rates[static_cast<std::size_t>(s * kEventTypes + e)] = r;
                total += r;
            }
        }
        if (!(total > 0.0)) throw ZeroTotalIntensity("every intensity is zero in state " + describe(book));
        const double dt = rng.exponential(total);
        if (t + dt > end) break;
        t += dt;
        const auto idx = static_cast<int>(rng.categorical(rates, total));
        const int level = book.level_of_slot(idx / kEventTypes);
        const auto type = static_cast<EventType>(idx % kEventTypes);
        const auto size = spec.sizes_for(level)[static_cast<std::size_t>(index_of(type))].sample(rng);
        record(LobEvent{type, level, size, t});
        book.set_session_time(t);

        // keep both sides quoted: replenish the outer level of an emptied side
        for (int side : {1, -1}) {
            const bool empty = side > 0 ? !book.best_ask_level() : !book.best_bid_level();
            if (!empty || (spec.max_events && out.size() >= *spec.max_events)) continue;
            const int outer = side * kDefaultDepth;
            const auto lots = std::max<std::int64_t>(1, init.sample(outer, rng));
            t = std::nextafter(t, std::numeric_limits<double>::infinity());
            record(LobEvent{EventType::Limit, outer, lots, t});
        }
    }
    return out;
}

}  // namespace lobqr
