#include "lobqr/run_config.hpp"

#include <cmath>

#include "lobqr/errors.hpp"

namespace lobqr {

BookState book_from_json(const json& j, const std::string& context) {
    require_keys_subset(j, {"ref_price", "tick_size", "bids", "asks"}, context);
    const auto ref = read_required<std::int64_t>(j, "ref_price", context);
    double tick = 0.01;
    read_optional(j, "tick_size", tick, context);
    if (!(tick > 0.0)) throw ConfigError(context + ": tick_size must be positive");
    const auto bids = read_required<std::vector<std::int64_t>>(j, "bids", context);
    const auto asks = read_required<std::vector<std::int64_t>>(j, "asks", context);
    if (bids.size() != static_cast<std::size_t>(kDefaultDepth) || asks.size() != static_cast<std::size_t>(kDefaultDepth))
        throw ConfigError(context + ": bids and asks need 5 entries each (level 1 first)");
    for (auto q : bids)
        if (q < 0) throw ConfigError(context + ": queue sizes must be >= 0");
    for (auto q : asks)
        if (q < 0) throw ConfigError(context + ": queue sizes must be >= 0");
    return BookState::from_sides(bids, asks, ref, tick);
}

ordered_json book_to_json(const BookState& b) {
    std::vector<std::int64_t> bids, asks;
    for (int i = 1; i <= b.depth(); ++i) {
        bids.push_back(b.queue(-i));
        asks.push_back(b.queue(i));
    }
    ordered_json j;
    j["ref_price"] = b.ref_price();
    j["tick_size"] = b.tick_size();
    j["bids"] = bids;
    j["asks"] = asks;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    const std::string ctx = "config";
    require_keys_subset(j, {"data", "features", "model", "train", "sim", "experiments", "threads"}, ctx);
    RunConfig c;
    read_optional(j, "threads", c.threads, ctx);

    if (const auto it = j.find("data"); it != j.end()) {
        const auto& d = *it;
        require_keys_subset(d, {"paths", "pool_depths", "depths"}, ctx + ".data");
        read_optional(d, "paths", c.data.paths, ctx + ".data");
        read_optional(d, "pool_depths", c.data.pool_depths, ctx + ".data");
        read_optional(d, "depths", c.data.depths, ctx + ".data");
        for (int depth : c.data.depths)
            if (depth < 1 || depth > kDefaultDepth) throw ConfigError(ctx + ".data.depths: entries must lie in 1..5");
    }
    if (const auto it = j.find("features"); it != j.end()) {
        require_keys_subset(*it, {"ti_horizons"}, ctx + ".features");
        std::vector<double> h;
        if (read_optional(*it, "ti_horizons", h, ctx + ".features")) {
            if (h.size() != 4) throw ConfigError(ctx + ".features.ti_horizons needs 4 entries");
            for (std::size_t i = 0; i < 4; ++i) {
                if (!(h[i] > 0.0)) throw ConfigError(ctx + ".features.ti_horizons must be positive");
                c.features.horizons[i] = h[i];
            }
        }
    }
    if (const auto it = j.find("model"); it != j.end()) {
        const auto& m = *it;
        const std::string mctx = ctx + ".model";
        require_keys_subset(m, {"kind", "widths", "size_widths", "embedding_dim"}, mctx);
        read_optional(m, "kind", c.model.kind, mctx);
        read_optional(m, "widths", c.model.widths, mctx);
        read_optional(m, "size_widths", c.model.size_widths, mctx);
        read_optional(m, "embedding_dim", c.model.embedding_dim, mctx);
        if (c.model.kind != "qr" && c.model.kind != "saqr" && c.model.kind != "dqr" && c.model.kind != "mdqr")
            throw ConfigError(mctx + ".kind must be one of qr, saqr, dqr, mdqr");
        if (c.model.embedding_dim != kEmbeddingDim) throw ConfigError(mctx + ".embedding_dim: only 2 is supported");
        for (int w : c.model.widths)
            if (w < 1) throw ConfigError(mctx + ".widths must be positive");
        for (int w : c.model.size_widths)
            if (w < 1) throw ConfigError(mctx + ".size_widths must be positive");
    }
    if (const auto it = j.find("train"); it != j.end()) {
        const auto& t = *it;
        const std::string tctx = ctx + ".train";
        require_keys_subset(t, {"lr_min", "lr_max", "cycle_steps", "batch", "patience", "max_epochs", "fallback_epochs", "seed",
                                "init_seed", "split_ratio"},
                            tctx);
        auto& tc = c.train.config;
        read_optional(t, "lr_min", tc.lr_min, tctx);
        read_optional(t, "lr_max", tc.lr_max, tctx);
        read_optional(t, "cycle_steps", tc.cycle_steps, tctx);
        read_optional(t, "batch", tc.batch_size, tctx);
        read_optional(t, "patience", tc.patience, tctx);
        read_optional(t, "max_epochs", tc.max_epochs, tctx);
        read_optional(t, "fallback_epochs", tc.fallback_epochs, tctx);
        read_optional(t, "seed", tc.seed, tctx);
        read_optional(t, "init_seed", c.train.init_seed, tctx);
        read_optional(t, "split_ratio", c.train.split_ratio, tctx);
        try {
            tc.validate();
        } catch (const Error& e) {
            throw ConfigError(tctx + ": " + e.what());
        }
        if (!(c.train.split_ratio > 0.0 && c.train.split_ratio <= 1.0)) throw ConfigError(tctx + ".split_ratio must lie in (0, 1]");
    }
    if (const auto it = j.find("sim"); it != j.end()) {
        const auto& s = *it;
        const std::string sctx = ctx + ".sim";
        require_keys_subset(s, {"K", "start_time", "horizon", "paths", "seed", "initial_book", "max_events"}, sctx);
        read_optional(s, "K", c.sim.depth, sctx);
        read_optional(s, "start_time", c.sim.start_time, sctx);
        read_optional(s, "horizon", c.sim.horizon, sctx);
        read_optional(s, "paths", c.sim.paths, sctx);
        read_optional(s, "seed", c.sim.seed, sctx);
        std::size_t max_events = 0;
        if (read_optional(s, "max_events", max_events, sctx)) c.sim.max_events = max_events;
        if (const auto b = s.find("initial_book"); b != s.end()) c.sim.initial_book = book_from_json(*b, sctx + ".initial_book");
        if (c.sim.depth != kDefaultDepth) throw ConfigError(sctx + ".K: only 5 levels per side are supported");
        if (!(c.sim.horizon > 0.0)) throw ConfigError(sctx + ".horizon must be > 0");
        if (c.sim.paths < 1) throw ConfigError(sctx + ".paths must be >= 1");
    }
    if (const auto it = j.find("experiments"); it != j.end()) {
        const auto& e = *it;
        const std::string ectx = ctx + ".experiments";
        require_keys_subset(e, {"impact", "fill_ratio", "bench", "validate"}, ectx);
        auto& x = c.experiments;
        if (const auto im = e.find("impact"); im != e.end()) {
            const std::string ictx = ectx + ".impact";
            require_keys_subset(*im, {"q_list", "q_fractions", "paths", "grid_step", "after_end", "duration", "children",
                                      "interval", "side"},
                                ictx);
            read_optional(*im, "q_list", x.q_list, ictx);
            read_optional(*im, "q_fractions", x.q_fractions, ictx);
            read_optional(*im, "paths", x.impact_paths, ictx);
            read_optional(*im, "grid_step", x.impact.grid_step, ictx);
            read_optional(*im, "after_end", x.impact.after_end, ictx);
            read_optional(*im, "duration", x.impact.order.duration, ictx);
            read_optional(*im, "children", x.impact.order.children, ictx);
            read_optional(*im, "interval", x.impact.order.interval, ictx);
            std::string side = "buy";
            if (read_optional(*im, "side", side, ictx)) {
                if (side != "buy" && side != "sell") throw ConfigError(ictx + ".side must be buy or sell");
                x.impact.order.side = side == "buy" ? 1 : -1;
            }
            for (auto q : x.q_list)
                if (q < 0) throw ConfigError(ictx + ".q_list entries must be >= 0");
            for (auto f : x.q_fractions)
                if (!(f >= 0.0)) throw ConfigError(ictx + ".q_fractions entries must be >= 0");
            if (x.impact_paths < 2) throw ConfigError(ictx + ".paths must be >= 2");
            if (!(x.impact.grid_step > 0.0)) throw ConfigError(ictx + ".grid_step must be > 0");
            x.impact.order.validate();
        }
        if (const auto fr = e.find("fill_ratio"); fr != e.end()) {
            const std::string fctx = ectx + ".fill_ratio";
            require_keys_subset(*fr, {"quantities", "lifetimes", "levels", "orders_per_cell", "paths", "horizon"}, fctx);
            read_optional(*fr, "quantities", x.fill.axes.quantities, fctx);
            read_optional(*fr, "lifetimes", x.fill.axes.lifetimes, fctx);
            read_optional(*fr, "levels", x.fill.axes.levels, fctx);
            read_optional(*fr, "orders_per_cell", x.fill.orders_per_cell, fctx);
            read_optional(*fr, "paths", x.fill_paths, fctx);
            read_optional(*fr, "horizon", x.fill_horizon, fctx);
            if (x.fill.orders_per_cell < 1) throw ConfigError(fctx + ".orders_per_cell must be >= 1");
            if (x.fill_paths < 1) throw ConfigError(fctx + ".paths must be >= 1");
        }
        if (const auto b = e.find("bench"); b != e.end()) {
            require_keys_subset(*b, {"n"}, ectx + ".bench");
            read_optional(*b, "n", x.bench_events, ectx + ".bench");
            if (x.bench_events < 1) throw ConfigError(ectx + ".bench.n must be >= 1");
        }
        if (const auto v = e.find("validate"); v != e.end()) {
            require_keys_subset(*v, {"paths"}, ectx + ".validate");
            read_optional(*v, "paths", x.validate_paths, ectx + ".validate");
            if (x.validate_paths < 1) throw ConfigError(ectx + ".validate.paths must be >= 1");
        }
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) { return from_json(load_json_file(path)); }

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["data"] = {{"paths", data.paths}, {"pool_depths", data.pool_depths}, {"depths", data.depths}};
    j["features"] = {{"ti_horizons", features.horizons}};
    j["model"] = {{"kind", model.kind}, {"widths", model.widths}, {"size_widths", model.size_widths}, {"embedding_dim", model.embedding_dim}};
    const auto& tc = train.config;
    j["train"] = {{"lr_min", tc.lr_min},         {"lr_max", tc.lr_max},           {"cycle_steps", tc.cycle_steps},
                  {"batch", tc.batch_size},      {"patience", tc.patience},       {"max_epochs", tc.max_epochs},
                  {"fallback_epochs", tc.fallback_epochs}, {"seed", tc.seed}, {"init_seed", train.init_seed},
                  {"split_ratio", train.split_ratio}};
    ordered_json s = {{"K", sim.depth}, {"start_time", sim.start_time}, {"horizon", sim.horizon}, {"paths", sim.paths}, {"seed", sim.seed}};
    if (sim.initial_book) s["initial_book"] = book_to_json(*sim.initial_book);
    if (sim.max_events) s["max_events"] = *sim.max_events;
    j["sim"] = std::move(s);
    const auto& x = experiments;
    j["experiments"] = {
        {"impact",
         {{"q_list", x.q_list},
          {"q_fractions", x.q_fractions},
          {"paths", x.impact_paths},
          {"grid_step", x.impact.grid_step},
          {"after_end", x.impact.after_end},
          {"duration", x.impact.order.duration},
          {"children", x.impact.order.children},
          {"interval", x.impact.order.interval},
          {"side", x.impact.order.side > 0 ? "buy" : "sell"}}},
        {"fill_ratio",
         {{"quantities", x.fill.axes.quantities},
          {"lifetimes", x.fill.axes.lifetimes},
          {"levels", x.fill.axes.levels},
          {"orders_per_cell", x.fill.orders_per_cell},
          {"paths", x.fill_paths},
          {"horizon", x.fill_horizon}}},
        {"bench", {{"n", x.bench_events}}},
        {"validate", {{"paths", x.validate_paths}}}};
    j["threads"] = threads;
    return j;
}

std::string RunConfig::hash() const {
    // threads never change results, so they stay out of the hash
    auto j = to_json();
    j.erase("threads");
    return hash_hex(j.dump());
}

unsigned RunConfig::worker_count() const { return threads > 0 ? threads : default_threads(); }

NeuralOptions RunConfig::neural_options() const {
    NeuralOptions o;
    o.train = train.config;
    o.hidden = model.widths;
    o.init_seed = train.init_seed;
    o.data.split_ratio = train.split_ratio;
    o.data.horizons = features.horizons;
    o.data.depths = data.depths;
    return o;
}

SimConfig RunConfig::sim_config(const IntensityModel& model) const {
    SimConfig c;
    c.start_time = sim.start_time;
    c.horizon = sim.horizon;
    c.paths = sim.paths;
    c.seed = sim.seed;
    c.max_events = sim.max_events;
    c.threads = worker_count();
    c.horizons = features.horizons;
    if (sim.initial_book) {
        c.initial = *sim.initial_book;
    } else {
        const auto& init = model.queue_init();
        BookState b(kDefaultDepth, 10000, 0.01);
        for (int side : {-1, 1})
            for (int i = 1; i <= kDefaultDepth; ++i) {
                const int level = side * i;
                const auto it = init.levels().find(level);
                double mean = 0.0;
                if (it != init.levels().end() && !it->second.empty()) mean = it->second.mean();
                else if (!init.fallback().empty()) mean = init.fallback().mean();
                b.set_queue(level, std::max<std::int64_t>(1, std::llround(mean)));
            }
        c.initial = b;
    }
    return c;
}

namespace {

ordered_json net_summary(const TrainedNet& t) {
    ordered_json j;
    j["train_samples"] = t.train_samples;
    j["validation_samples"] = t.validation_samples;
    j["epochs"] = t.history.epochs.size();
    j["best_epoch"] = t.history.best_epoch;
    if (!t.history.epochs.empty()) {
        const auto& best = t.history.epochs[std::min(t.history.best_epoch, t.history.epochs.size() - 1)];
        j["best_validation_loss"] = best.val_loss;
        j["best_train_loss"] = best.train_loss;
    }
    j["warnings"] = t.history.warnings;
    if (t.clipped) j["clipped_sizes"] = t.clipped;
    return j;
}

}  // namespace

Calibration calibrate(const std::vector<EventRecord>& records, const RunConfig& cfg) {
    if (records.empty()) throw ValueError("calibration data is empty");
    Calibration c;
    const auto& kind = cfg.model.kind;
    ordered_json meta;
    meta["kind"] = kind;
    meta["events"] = records.size();
    meta["config_hash"] = cfg.hash();
    if (kind == "qr" || kind == "saqr") {
        if (kind == "qr")
            c.model = fit_qr(records, cfg.data.pool_depths);
        else
            c.model = fit_saqr(records, cfg.data.pool_depths);
        meta["pooled"] = cfg.data.pool_depths;
        c.history = meta;
    } else if (kind == "dqr") {
        const auto opts = cfg.neural_options();
        const auto split = build_queue_dataset(records, opts.data);
        auto trained = train_dqr(split, opts);
        meta["intensity"] = net_summary(trained);
        c.history["intensity"] = trained.history.to_json();
        auto model = std::make_unique<DqrModel>(std::move(trained.net), compute_aes(records));
        model->set_queue_init(collect_queue_init(records));
        c.model = std::move(model);
    } else if (kind == "mdqr") {
        auto opts = cfg.neural_options();
        const auto split = build_book_dataset(records, opts.data);
        auto trained = train_mdqr(split, opts);
        opts.hidden = cfg.model.size_widths;
        const auto size_split = build_size_dataset(records, opts.data);
        auto sizes = train_size(size_split, opts);
        meta["intensity"] = net_summary(trained);
        meta["size"] = net_summary(sizes);
        c.history["intensity"] = trained.history.to_json();
        c.history["size"] = sizes.history.to_json();
        auto model = std::make_unique<MdqrModel>(std::move(trained.net), std::make_shared<SizeModel>(std::move(sizes.net)));
        model->set_queue_init(collect_queue_init(records));
        c.model = std::move(model);
    } else {
        throw ConfigError("unknown model kind '" + kind + "'");
    }
    c.model->metadata = meta;
    return c;
}

}  // namespace lobqr
