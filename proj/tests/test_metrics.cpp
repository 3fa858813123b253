#include "doctest.h"

#include <cmath>
#include <random>

#include "lobqr/errors.hpp"
#include "lobqr/metrics.hpp"

using namespace lobqr;

namespace {

EventRecord rec(double t, EventType type, int level, std::int64_t size = 1, std::int64_t q = 5, std::int64_t ref = 100) {
    EventRecord r;
    r.t = t;
    r.type = type;
    r.level = level;
    r.size = size;
    r.queues.fill(q);
    r.ref_price = ref;
    return r;
}

std::vector<double> gamma_draws(double shape, double scale, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::gamma_distribution<double> g(shape, scale);
    std::vector<double> x(n);
    for (auto& v : x) v = g(gen);
    return x;
}

}  // namespace

TEST_CASE("transition matrix of deterministic cycles") {
    std::vector<int> seq;
    for (int i = 0; i < 300; ++i) seq.push_back(i % 3);
    const auto tm = transition_matrix(seq, {"L", "C", "M"});
    CHECK(tm.p(0, 1) == 1.0);
    CHECK(tm.p(1, 2) == 1.0);
    CHECK(tm.p(2, 0) == 1.0);
    std::vector<int> rev(seq.rbegin(), seq.rend());
    const auto tr = transition_matrix(rev, {"L", "C", "M"});
    CHECK((tr.p - tm.p.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(transition_matrix(std::vector<int>{1}, {"L", "C", "M"}), ValueError);

    const auto partial = transition_matrix(std::vector<int>{0, 1, 0, 1}, {"L", "C", "M"});
    REQUIRE(partial.empty_rows.size() == 1);
    CHECK(partial.empty_rows[0] == "M");
}

TEST_CASE("transition matrix of iid labels is flat within 3 sigma") {
    std::mt19937_64 gen(5);
    std::vector<int> seq(300000);
    for (auto& s : seq) s = static_cast<int>(gen() % 3);
    const auto tm = transition_matrix(seq, {"L", "C", "M"});
    for (int i = 0; i < 3; ++i) {
        CHECK(tm.p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        const double n = static_cast<double>(tm.row_counts[static_cast<std::size_t>(i)]);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(tm.p(i, j) - 1.0 / 3.0) < 3.0 * std::sqrt(2.0 / 9.0 / n));
    }
    CHECK(tm.max_row_spread() < 0.02);
}

TEST_CASE("single-queue and best-quote labelings") {
    std::vector<EventRecord> ev{rec(1, EventType::Limit, 1), rec(2, EventType::Cancel, 2), rec(3, EventType::Cancel, 1),
                                rec(4, EventType::Market, 2), rec(5, EventType::Market, 1)};
    const auto sq = transition_matrix(ev, TransitionLabeling::SingleQueue);
    CHECK(sq.p(0, 1) == 1.0);  // L then C at level 1
    CHECK(sq.p(1, 2) == 1.0);  // C then M at levels 1 and 2
    const auto bq = transition_matrix(ev, TransitionLabeling::BestQuotes);
    CHECK(bq.labels.size() == 6);
    CHECK(bq.p(3, 4) == 1.0);
    CHECK(bq.p(4, 5) == 1.0);
}

TEST_CASE("intraday profile partitions the rate") {
    std::vector<EventRecord> ev;
    for (int i = 0; i < 3600; ++i) ev.push_back(rec(0.5 + i, EventType::Limit, 1));
    const auto p = intraday_profile(ev, EventType::Limit, 0.0, 3.0 * 3600.0);
    CHECK(p.rate[0] == doctest::Approx(1.0));
    CHECK(p.rate[1] == 0.0);
    CHECK(p.rate[2] == 0.0);
    CHECK(p.total_rate() == doctest::Approx(1.0 / 3.0));
    CHECK(intraday_profile(ev, EventType::Cancel, 0.0, 3600.0).rate[0] == 0.0);
    CHECK_THROWS_AS(intraday_profile(ev, std::nullopt, 0.0, 100.0), ValueError);

    std::mt19937_64 gen(8);
    std::exponential_distribution<double> dt(2.0);
    std::vector<EventRecord> poisson;
    for (double t = dt(gen); t < 4 * 3600.0; t += dt(gen)) poisson.push_back(rec(t, EventType::Cancel, -1));
    const auto flat = intraday_profile(poisson, std::nullopt, 0.0, 4 * 3600.0);
    for (int h = 0; h < 4; ++h) CHECK(std::abs(flat.rate[static_cast<std::size_t>(h)] - 2.0) < 3.0 * std::sqrt(2.0 / 3600.0));
    double weighted = 0.0;
    for (int h = 0; h < kHours; ++h) weighted += flat.rate[static_cast<std::size_t>(h)] * flat.exposure[static_cast<std::size_t>(h)];
    CHECK(weighted / (4 * 3600.0) == doctest::Approx(flat.total_rate()));
}

TEST_CASE("gamma fit recovers parameters across shapes") {
    for (double shape : {0.5, 1.35, 2.0, 5.0}) {
        const auto x = gamma_draws(shape, 183.44, 100000, static_cast<std::uint64_t>(shape * 100));
        const auto f = gamma_fit(x);
        CHECK(f.converged);
        CHECK(std::abs(f.shape / shape - 1.0) < 0.05);
        CHECK(std::abs(f.scale / 183.44 - 1.0) < 0.05);
    }
    auto x = gamma_draws(1.0, 3.0, 20000, 4);
    const auto e = gamma_fit(x);
    CHECK(e.shape == doctest::Approx(1.0).epsilon(0.05));
    for (auto& v : x) v *= 7.0;
    const auto s = gamma_fit(x);
    CHECK(s.shape == doctest::Approx(e.shape).epsilon(1e-9));
    CHECK(s.scale == doctest::Approx(7.0 * e.scale).epsilon(1e-9));
    x[3] = 0.0;
    CHECK_THROWS_AS(gamma_fit(x), NonPositiveSample);
    CHECK_THROWS_AS(gamma_fit(std::vector<double>(10, 1.0)), ValueError);
}

TEST_CASE("power-law fit") {
    const std::vector<double> q{1, 4, 16};
    const std::vector<double> i{2, 4, 8};
    const auto f = sqrt_law_fit(q, i);
    CHECK(f.exponent == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.prefactor == doctest::Approx(2.0));
    const auto c = sqrt_law_fit(q, std::vector<double>{3, 3, 3});
    CHECK(c.exponent == doctest::Approx(0.0));
    std::vector<double> q2, i2;
    for (double v : {3.0, 7.0, 20.0, 55.0, 130.0}) {
        q2.push_back(v);
        i2.push_back(0.7 * std::pow(v, 0.55));
    }
    const auto g = sqrt_law_fit(q2, i2);
    CHECK(std::abs(g.exponent - 0.55) < 1e-9);
    CHECK(g.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(sqrt_law_fit(std::vector<double>{1, 2, 0}, i), NonPositiveValue);
    CHECK_THROWS_AS(sqrt_law_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValueError);
}

TEST_CASE("one-minute returns") {
    MidPath flat;
    flat.start = 0.0;
    flat.end = 600.0;
    flat.initial = 100.0;
    const auto r0 = returns_1min(flat);
    CHECK(r0.size() == 9);
    for (double v : r0) CHECK(v == 0.0);

    MidPath drift = flat;
    for (int s = 1; s <= 600; ++s) {
        drift.t.push_back(s);
        drift.mid.push_back(100.0 + 2.0 * s / 60.0);
    }
    for (double v : returns_1min(drift)) CHECK(v == doctest::Approx(2.0));
    flat.end = 90.0;
    CHECK_THROWS_AS(returns_1min(flat), ValueError);
}

TEST_CASE("window event stats keep empty windows") {
    std::vector<EventRecord> ev;
    for (int i = 0; i < 10; ++i) ev.push_back(rec(10.0 + i, i % 2 ? EventType::Limit : EventType::Market, 1, i + 1));
    const auto w = window_event_stats(ev, 0.0, 900.0);
    REQUIRE(w.counts.size() == 3);
    CHECK(w.counts[0][0] + w.counts[0][2] == 10);
    CHECK(w.counts[1] == std::array<std::uint64_t, 3>{0, 0, 0});
    CHECK(w.volumes[0][0] + w.volumes[0][2] == 55);
}

TEST_CASE("correlations") {
    Eigen::MatrixXd m(5, 3);
    m << 1, -1, 4, 2, -2, 4, 3, -3, 4, 4, -4, 4, 7, -7, 4;
    const auto c = pearson_matrix(m);
    CHECK(c.r(0, 0) == doctest::Approx(1.0));
    CHECK(c.r(0, 1) == doctest::Approx(-1.0));
    CHECK(!c.defined(0, 2));
    CHECK(std::isnan(c.r(2, 2)));
    const std::vector<double> x{1, 2, 3, 4}, y{10, 20, 25, 100}, k{5, 5, 5, 5};
    CHECK(spearman(x, y) == doctest::Approx(1.0));
    CHECK(spearman(x, k) == 0.0);
    std::vector<EventRecord> ev{rec(1, EventType::Limit, 1, 1, 3), rec(2, EventType::Limit, 1, 1, 4)};
    CHECK(queue_corr_matrix(ev).r.rows() == 10);
}

TEST_CASE("quantiles and qq data") {
    std::vector<double> d{4, 1, 3, 2, 5};
    CHECK(quantile(d, 0.5) == 3.0);
    CHECK(quantile(d, 0.25) == 2.0);
    CHECK(quantile(d, 0.1) == doctest::Approx(1.4));
    const auto q = qq_data(d, d);
    CHECK(q.percentiles.size() == 99);
    CHECK(q.a == q.b);
}

TEST_CASE("fill ratio arithmetic and shadow orders") {
    CHECK(fill_ratio(10, 4) == doctest::Approx(0.6));
    CHECK(fill_ratio(10, 0) == 1.0);
    CHECK(fill_ratio(10, 10) == 0.0);

    // resting bid at the best bid (level -1) behind 5 lots
    std::vector<EventRecord> ev{rec(1, EventType::Limit, 2), rec(2, EventType::Market, -1, 3), rec(3, EventType::Cancel, -1, 1, 5),
                                rec(4, EventType::Market, -1, 4), rec(5, EventType::Market, -1, 10)};
    ev[2].queues.fill(2);
    CHECK(shadow_fill(ev, 0.5, -1, 0, 10, 0.4) == doctest::Approx(0.0));
    // 3 lots from the 5 ahead, cancel of 1 of 2 halves the remaining 2 ahead, then 4 lots: 1 ahead, 3 fill
    CHECK(shadow_fill(ev, 0.5, -1, 0, 10, 3.0) == doctest::Approx(0.0));
    CHECK(shadow_fill(ev, 0.5, -1, 0, 10, 4.0) == doctest::Approx(0.3));
    CHECK(shadow_fill(ev, 0.5, -1, 0, 10, 10.0) == doctest::Approx(1.0));
    CHECK(!shadow_fill(ev, 0.5, -1, 5, 1, 10.0));

    // the ask dropping to the order's price fills it
    std::vector<EventRecord> cross{rec(1, EventType::Limit, 1), rec(2, EventType::Limit, 1, 1, 5, 99)};
    CHECK(shadow_fill(cross, 0.5, -1, 0, 3, 10.0) == doctest::Approx(1.0));
    // the order's price leaving the visible book finalizes it
    std::vector<EventRecord> away{rec(1, EventType::Limit, 1), rec(2, EventType::Market, -1, 100, 5, 106)};
    CHECK(shadow_fill(away, 0.5, -1, 0, 3, 10.0) == doctest::Approx(0.0));
}

TEST_CASE("fill grid correlations") {
    FillGrid g;
    for (int rep = 0; rep < 3; ++rep)
        for (int l = 0; l < 5; ++l) g.samples.push_back({1, 10.0, l, 1.0 - l / 5.0});
    CHECK(fill_ratio_correlations(g).level == doctest::Approx(-1.0));
    for (auto& s : g.samples) s.ratio = 0.5;
    const auto c = fill_ratio_correlations(g);
    CHECK(c.level == 0.0);
    CHECK(c.lifetime == 0.0);
    CHECK(c.quantity == 0.0);
}

TEST_CASE("mid-price labels") {
    LabelOptions opts;
    opts.k = 5;
    opts.threshold_bp = 20.0;
    std::vector<double> up, flat(20, 1000.0);
    for (int i = 0; i < 20; ++i) up.push_back(1000.0 + 10.0 * i);
    CHECK(label_at(up, 9, opts) == MoveLabel::Up);
    CHECK(label_at(flat, 9, opts) == MoveLabel::Stationary);
    std::vector<double> down(up.rbegin(), up.rend());
    CHECK(label_at(down, 9, opts) == MoveLabel::Down);
    CHECK_THROWS_AS(label_at(up, 2, opts), InsufficientHistory);
    CHECK_THROWS_AS(label_at(up, 15, opts), InsufficientHistory);

    // r equals the threshold exactly: 1024 anchor, means 1024 and 1024 + 1024 * 2^-9
    LabelOptions edge;
    edge.k = 2;
    edge.threshold_bp = 1e4 / 512.0;
    std::vector<double> m{1024, 1024, 1026, 1026};
    CHECK(label_at(m, 1, edge) == MoveLabel::Stationary);
    m[3] = 1026.5;
    CHECK(label_at(m, 1, edge) == MoveLabel::Up);

    LabelOptions zero;
    zero.k = 3;
    zero.threshold_bp = 0.0;
    std::mt19937_64 gen(2);
    std::vector<double> walk{1000.0};
    for (int i = 0; i < 200; ++i) walk.push_back(walk.back() + static_cast<double>(gen() % 3) - 1.0);
    for (std::size_t a = 2; a + 3 < walk.size(); ++a) {
        const auto l = label_at(walk, a, zero);
        if (l != MoveLabel::Stationary) continue;
        double minus = 0.0, plus = 0.0;
        for (std::size_t i = a - 2; i <= a; ++i) minus += walk[i];
        for (std::size_t i = a + 1; i <= a + 3; ++i) plus += walk[i];
        CHECK(minus == plus);
    }
}

TEST_CASE("classification scores") {
    const std::vector<MoveLabel> t{MoveLabel::Up, MoveLabel::Down, MoveLabel::Stationary, MoveLabel::Up};
    const auto perfect = score_labels(t, t);
    CHECK(perfect.balanced_accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    const std::vector<MoveLabel> all_up(4, MoveLabel::Up);
    const auto s = score_labels(t, all_up);
    CHECK(s.balanced_accuracy == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("forward classification runs from replayed states") {
    Intensities r{};
    r.fill(0.5);
    FrozenModel model(r);
    model.set_queue_init(QueueInitSampler::constant(3));
    SimConfig cfg;
    cfg.initial = BookState(kDefaultDepth, 1000, 1.0);
    for (int l = 1; l <= kDefaultDepth; ++l) {
        cfg.initial.set_queue(l, 3);
        cfg.initial.set_queue(-l, 3);
    }
    cfg.horizon = 600.0;
    const auto path = run_path(model, cfg, 0);
    const auto mids = record_mids(path.events);
    REQUIRE(mids.size() > 300);
    const std::vector<std::size_t> anchors{50, 120, 200};
    const auto trackers = trackers_at(path.events, anchors);
    for (std::size_t i = 0; i < anchors.size(); ++i) CHECK(trackers[i].book().same_queues(path.events[anchors[i]].book()));
    LabelOptions opts;
    opts.k = 40;
    opts.threshold_bp = 5.0;
    const auto truth = midprice_labels(mids, anchors, opts);
    const auto a = simulate_forward_classify(model, path.events, mids, anchors, opts, 4);
    const auto b = simulate_forward_classify(model, path.events, mids, anchors, opts, 4, 2);
    CHECK(a == b);
    CHECK(truth.size() == a.size());
}

TEST_CASE("fill-ratio experiment on a simulated book") {
    Intensities r{};
    r.fill(0.3);
    FrozenModel model(r);
    model.set_queue_init(QueueInitSampler::constant(3));
    SimConfig cfg;
    cfg.initial = BookState(kDefaultDepth, 1000, 1.0);
    for (int l = 1; l <= kDefaultDepth; ++l) {
        cfg.initial.set_queue(l, 3);
        cfg.initial.set_queue(-l, 3);
    }
    cfg.horizon = 1200.0;
    cfg.paths = 2;
    FillRatioOptions opts;
    opts.orders_per_cell = 20;
    opts.axes.quantities = {1, 10};
    opts.axes.lifetimes = {5, 300};
    const auto g = fill_ratio_experiment(model, cfg, opts);
    CHECK(g.samples.size() + g.skipped == 2 * 2 * 5 * 20);
    for (const auto& s : g.samples) {
        CHECK(s.ratio >= 0.0);
        CHECK(s.ratio <= 1.0);
    }
    const auto lt = g.by_lifetime();
    CHECK(lt.mean[1] >= lt.mean[0]);
}
