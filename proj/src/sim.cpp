#include "lobqr/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "lobqr/errors.hpp"

namespace lobqr {

void SimConfig::validate() const {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ConfigError("sim horizon must be a finite value >= 0");
    if (paths < 1) throw ConfigError("sim needs at least one path");
    if (!(start_time >= 0.0) || start_time + horizon > kSessionLength)
        throw ConfigError("simulation window must lie inside the 9-hour session");
    if (initial.depth() != kDefaultDepth) throw ConfigError("initial book must have depth 5");
    if (!initial.best_ask_level() || !initial.best_bid_level()) throw ConfigError("initial book needs both sides quoted");
}

double SimResult::mid_at(double t) const {
    const auto it = std::upper_bound(events.begin(), events.end(), t, [](double x, const EventRecord& r) { return x < r.t; });
    if (it == events.begin()) return initial_mid;
    return mid[static_cast<std::size_t>(it - events.begin()) - 1];
}

Simulator::Simulator(const IntensityModel& model, const BookState& initial, std::uint64_t seed, double start_time,
                     const std::array<double, 4>& horizons, bool record)
    : model_(model), tracker_(initial, horizons), rng_(seed), t_(start_time), record_(record) {
    tracker_.mutable_book().set_session_time(start_time);
    result_.seed = seed;
    result_.initial_mid = mid_ticks(initial);
}

Simulator::Simulator(const IntensityModel& model, MarketTracker tracker, std::uint64_t seed, double start_time, bool record)
    : model_(model), tracker_(std::move(tracker)), rng_(seed), t_(start_time), record_(record) {
    tracker_.mutable_book().set_session_time(start_time);
    result_.seed = seed;
    const auto& b = tracker_.book();
    if (b.best_ask_level() && b.best_bid_level()) {
        result_.initial_mid = mid_ticks(b);
    } else {
        replenish();
        result_.initial_mid = mid_ticks(tracker_.book());
    }
}

void Simulator::apply(const LobEvent& ev, bool agent) {
    if (record_) {
        result_.events.push_back(make_record(tracker_.book(), ev));
        result_.agent.push_back(agent);
    }
    const ApplyResult res = tracker_.apply(ev, model_.queue_init(), rng_);
    if (ev.type == EventType::Market && !agent) result_.traded_lots += res.executed;
    if (res.ref_change) {
        RefPriceChange c = *res.ref_change;
        c.t = ev.t;
        result_.ref_changes.push_back(c);
    }
    ++result_.event_count;
    if (record_) {
        const auto& b = tracker_.book();
        const bool quoted = b.best_ask_level() && b.best_bid_level();
        result_.mid.push_back(quoted ? mid_ticks(b) : (result_.mid.empty() ? result_.initial_mid : result_.mid.back()));
    }
}

void Simulator::replenish() {
    for (int side : {1, -1}) {
        const auto& b = tracker_.book();
        const bool empty = side > 0 ? !b.best_ask_level() : !b.best_bid_level();
        if (!empty) continue;
        const int outer = side * kDefaultDepth;
        const auto lots = std::max<std::int64_t>(1, model_.queue_init().sample(outer, rng_));
        t_ = next_time();
        apply(LobEvent{EventType::Limit, outer, lots, t_}, false);
    }
}

double Simulator::next_time() { return std::nextafter(t_, std::numeric_limits<double>::infinity()); }

bool Simulator::step(double until) {
    if (t_ >= until) return false;
    const StateVector s = tracker_.state_at(t_);
    model_.intensities(s, lambda_);
    double total = 0.0;
    for (double l : lambda_) total += l;
    if (!(total > 0.0) || !std::isfinite(total))
        throw ZeroTotalIntensity("total intensity is " + std::to_string(total) + " in state " + describe(tracker_.book()));
    const double dt = rng_.exponential(total);
    if (t_ + dt > until) {
        t_ = until;
        return false;
    }
    t_ = t_ + dt > t_ ? t_ + dt : next_time();
    const auto idx = static_cast<int>(rng_.categorical(lambda_, total));
    const int slot = idx / kEventTypes;
    const int level = tracker_.book().level_of_slot(slot);
    const auto type = static_cast<EventType>(idx % kEventTypes);
    const auto size = std::max<std::int64_t>(1, model_.sample_size(type, level, s, rng_));
    apply(LobEvent{type, level, size, t_}, false);
    replenish();
    return true;
}

std::int64_t Simulator::market_order(int side, std::int64_t lots, std::size_t child) {
    std::int64_t done = 0;
    bool first = true;
    while (done < lots) {
        const auto& b = tracker_.book();
        const auto best = side > 0 ? b.best_ask_level() : b.best_bid_level();
        if (!best) break;
        const auto take = std::min(lots - done, b.queue(*best));
        const double price = b.price_ticks(*best);
        if (!first || (!result_.events.empty() && result_.events.back().t >= t_)) t_ = next_time();
        first = false;
        apply(LobEvent{EventType::Market, *best, take, t_}, true);
        result_.fills.push_back({t_, child, *best, take, price});
        done += take;
        replenish();
    }
    return done;
}

SimResult Simulator::take_result() {
    result_.end_time = t_;
    return std::move(result_);
}

SimResult run_path(const IntensityModel& model, const SimConfig& cfg, std::size_t path) {
    cfg.validate();
    Simulator sim(model, cfg.initial, cfg.path_seed(path), cfg.start_time, cfg.horizons, cfg.record_events);
    const double end = cfg.start_time + cfg.horizon;
    while (!cfg.max_events || sim.result().event_count < *cfg.max_events)
        if (!sim.step(end)) break;
    auto r = sim.take_result();
    r.path = path;
    return r;
}

std::vector<SimResult> run(const IntensityModel& model, const SimConfig& cfg) {
    cfg.validate();
    std::vector<SimResult> out(cfg.paths);
    parallel_for(cfg.paths, cfg.threads, [&](std::size_t p) { out[p] = run_path(model, cfg, p); });
    return out;
}

void TwapOrder::validate() const {
    if (quantity < 0) throw ConfigError("TWAP quantity must be >= 0");
    if (children < 1 || !(interval > 0.0)) throw ConfigError("TWAP needs at least one child and a positive interval");
    if (static_cast<double>(children) * interval > duration + interval + 1e-9)
        throw ConfigError("TWAP children do not fit in the duration");
    if (side != 1 && side != -1) throw ConfigError("TWAP side must be +1 (buy) or -1 (sell)");
}

std::vector<std::int64_t> TwapOrder::child_sizes() const {
    validate();
    const auto n = static_cast<std::int64_t>(children);
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(children), quantity / n);
    for (std::int64_t i = 0; i < quantity % n; ++i) ++sizes[static_cast<std::size_t>(i)];
    return sizes;
}

SimResult twap_execute(const IntensityModel& model, const SimConfig& cfg, const TwapOrder& order, std::size_t path) {
    cfg.validate();
    const auto sizes = order.child_sizes();
    Simulator sim(model, cfg.initial, cfg.path_seed(path), cfg.start_time, cfg.horizons, cfg.record_events);
    const double end = cfg.start_time + cfg.horizon;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double at = cfg.start_time + order.start + static_cast<double>(i) * order.interval;
        if (sizes[i] == 0) continue;
        if (at > end) break;
        while (sim.step(at)) {
        }
        sim.market_order(order.side, sizes[i], i);
    }
    while (sim.step(end)) {
    }
    auto r = sim.take_result();
    r.path = path;
    return r;
}

double average_5min_volume(const std::vector<SimResult>& results, double horizon) {
    if (results.empty() || !(horizon > 0.0)) return 0.0;
    double lots = 0.0;
    for (const auto& r : results) lots += static_cast<double>(r.traded_lots);
    return lots / static_cast<double>(results.size()) / (horizon / 300.0);
}

ImpactResult impact_experiment(const IntensityModel& model, const SimConfig& cfg, const std::vector<std::int64_t>& quantities,
                               const ImpactOptions& opts) {
    cfg.validate();
    if (cfg.paths < 2) throw ConfigError("impact experiment needs at least 2 paths");
    SimConfig run_cfg = cfg;
    run_cfg.record_events = true;
    const double span = opts.order.start + opts.order.duration + opts.after_end;
    if (span > cfg.horizon + 1e-9) throw ConfigError("sim horizon is shorter than the impact reporting window");
    ImpactResult result;
    for (double g = 0.0; g <= span + 1e-9; g += opts.grid_step) result.grid.push_back(g);
    const std::size_t ng = result.grid.size();

    // per path: baseline volume and one deviation curve per quantity
    std::vector<std::vector<std::vector<double>>> dev(cfg.paths);
    std::vector<std::vector<std::int64_t>> filled(cfg.paths);
    std::vector<SimResult> baselines_light(cfg.paths);
    parallel_for(cfg.paths, cfg.threads, [&](std::size_t p) {
        const SimResult base = run_path(model, run_cfg, p);
        baselines_light[p].traded_lots = base.traded_lots;
        dev[p].resize(quantities.size());
        filled[p].resize(quantities.size());
        for (std::size_t qi = 0; qi < quantities.size(); ++qi) {
            TwapOrder order = opts.order;
            order.quantity = quantities[qi];
            const SimResult agent = twap_execute(model, run_cfg, order, p);
            auto& d = dev[p][qi];
            d.resize(ng);
            for (std::size_t g = 0; g < ng; ++g) {
                const double t = cfg.start_time + result.grid[g];
                d[g] = agent.mid_at(t) - base.mid_at(t);
            }
            std::int64_t lots = 0;
            for (const auto& f : agent.fills) lots += f.lots;
            filled[p][qi] = lots;
        }
    });
    result.avg_5min_volume = average_5min_volume(baselines_light, cfg.horizon);
    const double n = static_cast<double>(cfg.paths);
    for (std::size_t qi = 0; qi < quantities.size(); ++qi) {
        ImpactCurve c;
        c.quantity = quantities[qi];
        c.mean.assign(ng, 0.0);
        c.se.assign(ng, 0.0);
        for (std::size_t g = 0; g < ng; ++g) {
            double s = 0.0, ss = 0.0;
            for (std::size_t p = 0; p < cfg.paths; ++p) {
                s += dev[p][qi][g];
                ss += dev[p][qi][g] * dev[p][qi][g];
            }
            const double mean = s / n;
            const double var = std::max(0.0, (ss - n * mean * mean) / (n - 1.0));
            c.mean[g] = mean;
            c.se[g] = std::sqrt(var / n);
        }
        for (std::size_t p = 0; p < cfg.paths; ++p) c.filled += filled[p][qi];
        c.max_impact = 0.0;
        for (double m : c.mean) c.max_impact = std::max(c.max_impact, opts.order.side * m);
        result.curves.push_back(std::move(c));
    }
    return result;
}

BenchResult throughput_bench(const IntensityModel& model, const BookState& initial, std::size_t n_events, std::uint64_t seed) {
    if (n_events < 10000) throw ConfigError("bench needs at least 10000 events");
    using clock = std::chrono::steady_clock;
    std::size_t restarts = 0;
    auto sim = std::make_unique<Simulator>(model, initial, derive_seed(seed, restarts), 0.0, kDefaultHorizons, false);
    const double end = kSessionLength - 1.0;
    double sum = 0.0, sum2 = 0.0;
    BenchResult r;
    while (r.events < n_events) {
        const auto t0 = clock::now();
        const bool ok = sim->step(end);
        const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        if (!ok) {
            sim = std::make_unique<Simulator>(model, initial, derive_seed(seed, ++restarts), 0.0, kDefaultHorizons, false);
            continue;
        }
        sum += ms;
        sum2 += ms * ms;
        ++r.events;
    }
    const double n = static_cast<double>(r.events);
    r.mean_ms = sum / n;
    r.std_ms = n > 1 ? std::sqrt(std::max(0.0, (sum2 - n * r.mean_ms * r.mean_ms) / (n - 1.0))) : 0.0;
    r.total_seconds = sum / 1000.0;
    r.events_per_second = r.total_seconds > 0.0 ? n / r.total_seconds : 0.0;
    return r;
}

unsigned default_threads() {
    if (const char* env = std::getenv("MDQR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const auto workers = std::min<std::size_t>(threads, n);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace lobqr
