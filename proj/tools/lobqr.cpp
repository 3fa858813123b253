#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lobqr/errors.hpp"
#include "lobqr/event_log.hpp"
#include "lobqr/metrics.hpp"
#include "lobqr/run_config.hpp"
#include "lobqr/synthetic.hpp"

namespace fs = std::filesystem;
using namespace lobqr;

namespace {

struct Common {
    std::string config;
    std::string out = "lobqr_out";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
    cmd->add_option("--config", c.config, "run configuration JSON")->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", c.out, "output directory");
    if (out_required) out->required();
    cmd->add_option("--seed", c.seed, "seed override");
    cmd->add_option("--threads", c.threads, "worker threads (MDQR_THREADS also applies)");
}

RunConfig load_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : RunConfig::load(c.config);
    if (c.threads) cfg.threads = *c.threads;
    if (c.seed) {
        cfg.sim.seed = *c.seed;
        cfg.train.config.seed = *c.seed;
    }
    return cfg;
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    const RunConfig& cfg, const ordered_json& seeds, ordered_json extra = ordered_json::object()) {
    ordered_json m;
    m["tool"] = "lobqr";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["args"] = args;
    m["config_hash"] = cfg.hash();
    m["config"] = cfg.to_json();
    m["seeds"] = seeds;
    for (auto& [k, v] : extra.items()) m[k] = v;
    save_json_file((dir / "manifest.json").string(), m);
}

std::string path_name(std::size_t p, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "path_%03zu.%s", p, ext);
    return buf;
}

ordered_json path_seeds(const SimConfig& sim) {
    ordered_json s;
    s["seed"] = sim.seed;
    std::vector<std::uint64_t> per;
    for (std::size_t p = 0; p < sim.paths; ++p) per.push_back(sim.path_seed(p));
    s["paths"] = per;
    return s;
}

std::vector<std::int64_t> parse_q_list(const std::string& text) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("--q-list entry '" + item + "' is not an integer");
        }
        if (used != item.size() || v < 0) throw ConfigError("--q-list entry '" + item + "' must be a nonnegative integer");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("--q-list is empty");
    return out;
}

std::vector<EventRecord> load_logs(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ConfigError("no data file given (use --data or data.paths)");
    std::vector<EventRecord> all;
    for (const auto& p : paths) {
        auto part = parse_event_log(p);
        if (!all.empty() && !part.empty() && !(part.front().t > all.back().t))
            throw OrderError(p + " does not continue the previous log in time");
        all.insert(all.end(), part.begin(), part.end());
    }
    return all;
}

ordered_json sidecar(const SimResult& r, const std::string& config_hash) {
    ordered_json j;
    j["path"] = r.path;
    j["seed"] = r.seed;
    j["config_hash"] = config_hash;
    j["events"] = r.event_count;
    j["traded_lots"] = r.traded_lots;
    j["end_time"] = r.end_time;
    ordered_json refs = ordered_json::array();
    for (const auto& c : r.ref_changes) refs.push_back({{"t", c.t}, {"old", c.old_ref}, {"new", c.new_ref}});
    j["ref_changes"] = std::move(refs);
    ordered_json fills = ordered_json::array();
    for (const auto& f : r.fills)
        fills.push_back({{"t", f.t}, {"child", f.child}, {"level", f.level}, {"lots", f.lots}, {"price_ticks", f.price_ticks}});
    j["agent_fills"] = std::move(fills);
    return j;
}

// ------------------------------------------------------------------- commands

int cmd_gen_synthetic(const std::string& spec_path, const Common& c, const std::vector<std::string>& args) {
    auto spec = SyntheticSpec::from_json(load_json_file(spec_path));
    if (c.seed) spec.seed = *c.seed;
    const auto records = generate_synthetic(spec);
    if (const auto bad = check_replay(records)) throw std::runtime_error("generated log failed replay: " + bad->reason);
    const auto dir = prepare_out(c.out);
    write_event_log((dir / "events.csv").string(), records);
    save_json_file((dir / "spec.json").string(), spec.to_json());
    RunConfig cfg = load_config(c);
    write_manifest(dir, "gen-synthetic", args, cfg, {{"seed", spec.seed}},
                   {{"spec_hash", hash_hex(spec.to_json().dump())}, {"events", records.size()}});
    std::cout << "wrote " << records.size() << " events to " << (dir / "events.csv").string() << "\n";
    return 0;
}

int cmd_calibrate(const std::vector<std::string>& data, const std::string& kind, const Common& c,
                  const std::vector<std::string>& args) {
    RunConfig cfg = load_config(c);
    if (!data.empty()) cfg.data.paths = data;
    if (!kind.empty()) {
        json j = json::parse(cfg.to_json().dump());
        j["model"]["kind"] = kind;
        cfg = RunConfig::from_json(j);
        if (c.threads) cfg.threads = *c.threads;
    }
    const auto records = load_logs(cfg.data.paths);
    const auto cal = calibrate(records, cfg);
    const auto dir = prepare_out(c.out);
    save_model(*cal.model, (dir / "model.json").string());
    save_json_file((dir / "history.json").string(), cal.history);
    write_manifest(dir, "calibrate", args, cfg, {{"train_seed", cfg.train.config.seed}, {"init_seed", cfg.train.init_seed}},
                   {{"events", records.size()}});
    std::cout << "calibrated " << cfg.model.kind << " on " << records.size() << " events\n";
    return 0;
}

int cmd_simulate(const std::string& model_path, std::optional<std::size_t> paths, std::optional<double> horizon,
                 const Common& c, const std::vector<std::string>& args) {
    RunConfig cfg = load_config(c);
    if (paths) cfg.sim.paths = *paths;
    if (horizon) cfg.sim.horizon = *horizon;
    const auto model = load_model(model_path);
    const auto sim = cfg.sim_config(*model);
    const auto results = run(*model, sim);
    const auto dir = prepare_out(c.out);
    const auto hash = cfg.hash();
    ordered_json summary = ordered_json::array();
    for (const auto& r : results) {
        write_event_log((dir / path_name(r.path, "csv")).string(), r.events);
        save_json_file((dir / path_name(r.path, "json")).string(), sidecar(r, hash));
        summary.push_back({{"path", r.path}, {"events", r.event_count}, {"traded_lots", r.traded_lots}});
    }
    save_json_file((dir / "summary.json").string(), ordered_json{{"model", model->kind()}, {"paths", summary}});
    write_manifest(dir, "simulate", args, cfg, path_seeds(sim), {{"model", model_path}});
    std::cout << "simulated " << results.size() << " paths\n";
    return 0;
}

// Stylized facts of one event stream (or several paths of one).
ordered_json stylized(const std::vector<std::vector<EventRecord>>& paths, double start, double end, const fs::path& dir,
                      const std::string& tag, std::vector<double>& returns, std::array<std::vector<double>, 3>& sizes) {
    ordered_json j;
    std::vector<EventRecord> pooled;
    std::vector<double> best_queues;
    std::array<std::uint64_t, kEventTypes> type_counts{};
    WindowStats windows;
    for (const auto& p : paths) {
        for (const auto& r : p) {
            ++type_counts[static_cast<std::size_t>(index_of(r.type))];
            sizes[static_cast<std::size_t>(index_of(r.type))].push_back(static_cast<double>(r.size));
            for (int side : {-1, 1})
                if (const auto q = r.queue(side); q > 0) best_queues.push_back(static_cast<double>(q));
        }
        if (p.size() > 1) {
            const auto mp = mid_path(p, start, end);
            if (end - start >= 120.0) {
                const auto r = returns_1min(mp);
                returns.insert(returns.end(), r.begin(), r.end());
            }
        }
        const auto w = window_event_stats(p, start, end);
        windows.window = w.window;
        windows.starts.insert(windows.starts.end(), w.starts.begin(), w.starts.end());
        windows.counts.insert(windows.counts.end(), w.counts.begin(), w.counts.end());
        windows.volumes.insert(windows.volumes.end(), w.volumes.begin(), w.volumes.end());
    }
    const std::uint64_t total = type_counts[0] + type_counts[1] + type_counts[2];
    j["events"] = total;
    j["type_frequencies"] = {{"L", total ? static_cast<double>(type_counts[0]) / total : 0.0},
                             {"C", total ? static_cast<double>(type_counts[1]) / total : 0.0},
                             {"M", total ? static_cast<double>(type_counts[2]) / total : 0.0}};
    if (!paths.empty() && paths.front().size() >= 2) {
        const auto tq = transition_matrix(paths.front(), TransitionLabeling::SingleQueue);
        const auto tb = transition_matrix(paths.front(), TransitionLabeling::BestQuotes);
        tq.write_csv((dir / (tag + "_transition_queue.csv")).string());
        tb.write_csv((dir / (tag + "_transition_best.csv")).string());
        j["transition_queue"] = tq.to_json();
        j["transition_best"] = tb.to_json();
        const auto corr = queue_corr_matrix(paths.front());
        j["queue_correlation"] = corr.to_json();
    }
    if (end - start >= 3600.0 && !paths.empty()) j["intraday_market"] = intraday_profile(paths.front(), EventType::Market, start, end).to_json();
    if (best_queues.size() >= 100) j["best_queue_gamma"] = gamma_fit(best_queues).to_json();
    windows.write_csv((dir / (tag + "_windows.csv")).string());
    std::vector<double> counts;
    for (const auto& c : windows.counts) counts.push_back(static_cast<double>(c[0] + c[1] + c[2]));
    if (!counts.empty()) {
        double mean = 0.0;
        for (double v : counts) mean += v;
        mean /= static_cast<double>(counts.size());
        j["window_count_mean"] = mean;
    }
    j["returns_1min"] = returns.size();
    return j;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    std::map<double, double> pa, pb;
    for (double v : a) pa[v] += 1.0 / static_cast<double>(a.size());
    for (double v : b) pb[v] += 1.0 / static_cast<double>(b.size());
    double tv = 0.0;
    for (const auto& [k, v] : pa) tv += std::abs(v - (pb.count(k) ? pb[k] : 0.0));
    for (const auto& [k, v] : pb)
        if (!pa.count(k)) tv += v;
    return tv / 2.0;
}

int cmd_validate(const std::string& model_path, const std::string& ref_path, const Common& c,
                 const std::vector<std::string>& args) {
    RunConfig cfg = load_config(c);
    const auto model = load_model(model_path);
    const auto ref = parse_event_log(ref_path);
    if (ref.size() < 2) throw ValueError("reference log needs at least 2 events");
    const double start = ref.front().t;
    const double end = std::min(kSessionLength, ref.back().t);
    SimConfig sim = cfg.sim_config(*model);
    sim.start_time = start;
    sim.horizon = end - start;
    sim.paths = cfg.experiments.validate_paths;
    sim.initial = ref.front().book(sim.initial.tick_size());
    const auto results = run(*model, sim);
    const auto dir = prepare_out(c.out);

    std::vector<double> ref_returns, sim_returns;
    std::array<std::vector<double>, 3> ref_sizes, sim_sizes;
    ordered_json report;
    report["reference"] = stylized({ref}, start, end, dir, "reference", ref_returns, ref_sizes);
    std::vector<std::vector<EventRecord>> sim_paths;
    for (const auto& r : results) sim_paths.push_back(r.events);
    report["simulated"] = stylized(sim_paths, start, end, dir, "simulated", sim_returns, sim_sizes);
    ordered_json cmp;
    if (report["reference"].contains("transition_queue") && report["simulated"].contains("transition_queue")) {
        const auto a = transition_matrix(ref, TransitionLabeling::SingleQueue);
        const auto b = transition_matrix(sim_paths.front(), TransitionLabeling::SingleQueue);
        cmp["transition_queue_max_abs_diff"] = a.max_abs_diff(b);
    }
    for (int k = 0; k < kEventTypes; ++k) {
        const std::string name(1, to_char(static_cast<EventType>(k)));
        if (!ref_sizes[static_cast<std::size_t>(k)].empty() && !sim_sizes[static_cast<std::size_t>(k)].empty())
            cmp["size_tv_" + name] = total_variation(ref_sizes[static_cast<std::size_t>(k)], sim_sizes[static_cast<std::size_t>(k)]);
    }
    if (!ref_returns.empty() && !sim_returns.empty()) {
        const auto qq = qq_data(ref_returns, sim_returns);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < qq.percentiles.size(); ++i) rows.push_back({qq.percentiles[i], qq.a[i], qq.b[i]});
        write_vector_csv((dir / "returns_qq.csv").string(), "percentile,reference,simulated", rows);
        cmp["returns_qq"] = qq.to_json();
    }
    report["comparison"] = std::move(cmp);
    save_json_file((dir / "report.json").string(), report);
    write_manifest(dir, "validate", args, cfg, path_seeds(sim), {{"model", model_path}, {"reference", ref_path}});
    std::cout << "validation report written to " << (dir / "report.json").string() << "\n";
    return 0;
}

int cmd_impact(const std::string& model_path, const std::string& q_text, std::optional<std::size_t> paths, const Common& c,
               const std::vector<std::string>& args) {
    RunConfig cfg = load_config(c);
    const auto model = load_model(model_path);
    const auto& ex = cfg.experiments;
    SimConfig sim = cfg.sim_config(*model);
    sim.paths = paths ? *paths : ex.impact_paths;
    sim.horizon = ex.impact.order.start + ex.impact.order.duration + ex.impact.after_end;
    sim.max_events.reset();
    std::vector<std::int64_t> qs = q_text.empty() ? ex.q_list : parse_q_list(q_text);
    double v5 = 0.0;
    if (qs.empty()) {
        SimConfig base = sim;
        base.record_events = false;
        v5 = average_5min_volume(run(*model, base), base.horizon);
        for (double f : ex.q_fractions) qs.push_back(std::llround(f * v5));
    }
    const auto res = impact_experiment(*model, sim, qs, ex.impact);
    const auto dir = prepare_out(c.out);
    std::vector<std::vector<double>> rows;
    std::string header = "t";
    for (const auto& cv : res.curves) header += ",mean_" + std::to_string(cv.quantity) + ",se_" + std::to_string(cv.quantity);
    for (std::size_t g = 0; g < res.grid.size(); ++g) {
        std::vector<double> row{res.grid[g]};
        for (const auto& cv : res.curves) {
            row.push_back(cv.mean[g]);
            row.push_back(cv.se[g]);
        }
        rows.push_back(std::move(row));
    }
    write_vector_csv((dir / "impact.csv").string(), header, rows);
    ordered_json j;
    j["avg_5min_volume"] = res.avg_5min_volume;
    j["paths"] = sim.paths;
    ordered_json curves = ordered_json::array();
    std::vector<double> fq, fi;
    for (const auto& cv : res.curves) {
        curves.push_back({{"quantity", cv.quantity}, {"max_impact", cv.max_impact}, {"filled", cv.filled}});
        if (cv.quantity > 0 && cv.max_impact > 0.0) {
            fq.push_back(static_cast<double>(cv.quantity));
            fi.push_back(cv.max_impact);
        }
    }
    j["curves"] = std::move(curves);
    if (fq.size() >= 3) j["power_law"] = sqrt_law_fit(fq, fi).to_json();
    save_json_file((dir / "impact.json").string(), j);
    write_manifest(dir, "impact", args, cfg, path_seeds(sim), {{"model", model_path}});
    std::cout << "impact curves for " << qs.size() << " quantities written to " << dir.string() << "\n";
    return 0;
}

int cmd_fill_ratio(const std::string& model_path, const std::string& grid_path, const Common& c,
                   const std::vector<std::string>& args) {
    RunConfig cfg = load_config(c);
    if (!grid_path.empty()) {
        json j = json::parse(cfg.to_json().dump());
        j["experiments"]["fill_ratio"] = load_json_file(grid_path);
        const auto threads = cfg.threads;
        cfg = RunConfig::from_json(j);
        cfg.threads = threads;
    }
    const auto model = load_model(model_path);
    SimConfig sim = cfg.sim_config(*model);
    sim.paths = cfg.experiments.fill_paths;
    sim.horizon = cfg.experiments.fill_horizon;
    const auto grid = fill_ratio_experiment(*model, sim, cfg.experiments.fill);
    const auto dir = prepare_out(c.out);
    grid.write_csv((dir / "fill_ratio.csv").string());
    auto j = grid.to_json();
    j["spearman"] = fill_ratio_correlations(grid).to_json();
    save_json_file((dir / "fill_ratio.json").string(), j);
    write_manifest(dir, "fill-ratio", args, cfg, path_seeds(sim), {{"model", model_path}});
    std::cout << "fill-ratio grid with " << grid.samples.size() << " orders written to " << dir.string() << "\n";
    return 0;
}

int cmd_bench(const std::string& model_path, std::optional<std::size_t> n, const Common& c, const std::vector<std::string>& args) {
    RunConfig cfg = load_config(c);
    const auto model = load_model(model_path);
    const auto sim = cfg.sim_config(*model);
    const auto events = n ? *n : cfg.experiments.bench_events;
    const auto b = throughput_bench(*model, sim.initial, events, cfg.sim.seed);
    const auto dir = prepare_out(c.out);
    ordered_json j;
    j["model"] = model->kind();
    j["events"] = b.events;
    j["mean_ms"] = b.mean_ms;
    j["std_ms"] = b.std_ms;
    j["events_per_second"] = b.events_per_second;
    j["total_seconds"] = b.total_seconds;
    save_json_file((dir / "bench.json").string(), j);
    write_manifest(dir, "bench", args, cfg, {{"seed", cfg.sim.seed}}, {{"model", model_path}});
    std::cout << model->kind() << ": " << b.mean_ms << " +- " << b.std_ms << " ms/event, " << b.events_per_second
              << " events/s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Queue-reactive limit order book calibration and simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    const std::vector<std::string> args(argv + 1, argv + argc);

    Common common;
    std::string spec, model, ref, kind, q_list, grid;
    std::vector<std::string> data;
    std::optional<std::size_t> paths, n;
    std::optional<double> horizon;

    auto* gen = app.add_subcommand("gen-synthetic", "generate an event log from a synthetic spec");
    gen->add_option("--spec", spec, "synthetic spec JSON")->required()->check(CLI::ExistingFile);
    add_common(gen, common, true);

    auto* cal = app.add_subcommand("calibrate", "fit a model to event logs");
    cal->add_option("--data", data, "event-log CSV (repeatable)");
    cal->add_option("--model-kind", kind, "qr, saqr, dqr or mdqr");
    add_common(cal, common, true);

    auto* simc = app.add_subcommand("simulate", "simulate paths from a model");
    simc->add_option("--model", model, "model JSON")->required();
    simc->add_option("--paths", paths, "number of paths");
    simc->add_option("--horizon", horizon, "seconds per path");
    add_common(simc, common, true);

    auto* val = app.add_subcommand("validate", "compare stylized facts of a model against a reference log");
    val->add_option("--model", model, "model JSON")->required();
    val->add_option("--ref", ref, "reference event-log CSV")->required();
    add_common(val, common, true);

    auto* imp = app.add_subcommand("impact", "TWAP market-impact experiment");
    imp->add_option("--model", model, "model JSON")->required();
    imp->add_option("--q-list", q_list, "comma-separated quantities in lots");
    imp->add_option("--paths", paths, "paths per quantity");
    add_common(imp, common, false);

    auto* fill = app.add_subcommand("fill-ratio", "passive order fill-ratio grid");
    fill->add_option("--model", model, "model JSON")->required();
    fill->add_option("--grid", grid, "grid JSON (quantities, lifetimes, levels, orders_per_cell, paths, horizon)");
    add_common(fill, common, false);

    auto* bench = app.add_subcommand("bench", "per-event simulation latency");
    bench->add_option("--model", model, "model JSON")->required();
    bench->add_option("--n", n, "events to time");
    add_common(bench, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_synthetic(spec, common, args);
        if (cal->parsed()) return cmd_calibrate(data, kind, common, args);
        if (simc->parsed()) return cmd_simulate(model, paths, horizon, common, args);
        if (val->parsed()) return cmd_validate(model, ref, common, args);
        if (imp->parsed()) return cmd_impact(model, q_list, paths, common, args);
        if (fill->parsed()) return cmd_fill_ratio(model, grid, common, args);
        if (bench->parsed()) return cmd_bench(model, n, common, args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
