#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "lobqr/errors.hpp"
#include "lobqr/models.hpp"
#include "support/oracles.hpp"

using namespace lobqr;

namespace {

std::vector<QrSample> random_samples(Rng& rng, std::size_t n) {
    std::vector<QrSample> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({static_cast<EventType>(rng.below(3)), static_cast<std::int64_t>(rng.below(6)),
                       1 + static_cast<std::int64_t>(rng.below(4)), rng.exponential(2.0), 1});
    return out;
}

StateVector some_state(Rng& rng) {
    StateVector s;
    for (std::size_t i = 0; i < s.queues.size(); ++i) {
        s.queues[i] = 1 + static_cast<std::int64_t>(rng.below(20));
        s.log_queues[i] = std::log1p(static_cast<double>(s.queues[i]));
        s.last_event[i] = static_cast<EventType>(rng.below(3));
    }
    s.spread_ticks = 1;
    for (auto& v : s.ti) v = 2.0 * rng.uniform() - 1.0;
    s.hour = static_cast<int>(rng.below(9));
    return s;
}

}  // namespace

TEST_CASE("queue-reactive estimator hand example") {
    const std::vector<QrSample> s{{EventType::Limit, 3, 1, 0.4, 1},
                                  {EventType::Limit, 3, 1, 0.6, 1},
                                  {EventType::Cancel, 3, 1, 0.5, 1},
                                  {EventType::Market, 3, 1, 0.5, 1}};
    const auto t = qr_estimate(s);
    CHECK(t.intensity(EventType::Limit, 3) == doctest::Approx(1.0));
    CHECK(t.intensity(EventType::Cancel, 3) == doctest::Approx(0.5));
    CHECK(t.intensity(EventType::Market, 3) == doctest::Approx(0.5));
    CHECK(t.visits(3) == 4);
    CHECK_THROWS_AS(t.intensity(EventType::Limit, 4), ValueError);
    const auto only_l = qr_estimate(std::vector<QrSample>{{EventType::Limit, 1, 1, 1.0, 1}});
    CHECK(only_l.intensity(EventType::Cancel, 1) == 0.0);
}

TEST_CASE("size-aware estimator hand example") {
    std::vector<QrSample> s;
    for (int i = 0; i < 3; ++i) s.push_back({EventType::Limit, 2, 1, 0.25, 1});
    s.push_back({EventType::Market, 2, 2, 0.25, 1});
    const auto t = saqr_estimate(s, 10);
    CHECK(t.intensity(EventType::Limit, 1, 2) == doctest::Approx(3.0));
    CHECK(t.intensity(EventType::Market, 2, 2) == doctest::Approx(1.0));
    CHECK(t.intensity(EventType::Cancel, 1, 2) == 0.0);
}

TEST_CASE("estimator equals a brute-force count, and marginals match exactly") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = random_samples(rng, 1 + rng.below(300));
        const auto t = qr_estimate(s);
        for (std::int64_t n = 0; n < 6; ++n) {
            double count = 0, dt = 0, by_type[3] = {0, 0, 0};
            for (const auto& x : s)
                if (x.n == n) {
                    count += 1;
                    dt += x.dt;
                    by_type[index_of(x.type)] += 1;
                }
            if (count == 0) {
                CHECK(t.visits(n) == 0);
                continue;
            }
            for (int e = 0; e < 3; ++e)
                CHECK(t.intensity(static_cast<EventType>(e), n) == (by_type[e] / count) / (dt / count));
            double total = 0;
            for (int e = 0; e < 3; ++e) total += t.intensity(static_cast<EventType>(e), n);
            CHECK(total == doctest::Approx(1.0 / (dt / count)).epsilon(1e-12));
        }
        const auto m = saqr_estimate(s).marginal();
        for (const auto& [n, c] : t.counts)
            for (int e = 0; e < 3; ++e)
                CHECK(m.intensity(static_cast<EventType>(e), n) == t.intensity(static_cast<EventType>(e), n));
    }
}

TEST_CASE("table clamp picks the nearest visited size") {
    QrTable t;
    t.counts[2] = {1, 0, 0};
    t.counts[6] = {1, 0, 0};
    t.dt_sum[2] = t.dt_sum[6] = 1.0;
    CHECK(t.clamp(0) == 2);
    CHECK(t.clamp(4) == 2);
    CHECK(t.clamp(5) == 6);
    CHECK(t.clamp(100) == 6);
}

TEST_CASE("loss examples") {
    const std::vector<double> ones3{1, 1, 1};
    CHECK(dqr_nll(ones3, EventType::Limit, 1.0) == doctest::Approx(3.0));
    CHECK(dqr_nll(ones3, EventType::Limit, 0.0) == doctest::Approx(0.0));
    const std::vector<double> more{1, 2, 1};
    CHECK(dqr_nll(more, EventType::Limit, 1.0) > dqr_nll(ones3, EventType::Limit, 1.0));
    const std::vector<double> ones30(30, 1.0);
    CHECK(mdqr_nll(ones30, 4, 1.0) == doctest::Approx(30.0));
    std::vector<double> e2(30, 1.0);
    e2[7] = std::exp(2.0);
    CHECK(mdqr_nll(e2, 7, 0.0) == doctest::Approx(-2.0));
    std::vector<double> uni(200, 1.0 / 200);
    CHECK(size_ce_loss(uni, 17) == doctest::Approx(std::log(200.0)).epsilon(1e-4));
    std::vector<double> hot(200, 0.0);
    hot[3] = 1.0;
    CHECK(size_ce_loss(hot, 3) == 0.0);
    CHECK(std::isfinite(size_ce_loss(hot, 4)));
}

TEST_CASE("zero network predicts the floor") {
    MlpSpec spec;
    spec.layout = InputLayout::make(InputKind::Book);
    spec.hidden = {8, 4};
    spec.outputs = 30;
    Mlp net(spec, 1);
    for (auto& p : net.params()) p.setZero();
    MlpSpec sspec = spec;
    sspec.layout = InputLayout::make(InputKind::BookSized);
    sspec.outputs = kSizeClasses;
    sspec.output = OutputKind::Softmax;
    MdqrModel m(net, std::make_shared<SizeModel>(Mlp(sspec, 2)));
    Rng rng(1);
    const auto lam = predict_intensities(m, some_state(rng));
    double total = 0;
    for (double l : lam) {
        CHECK(l == kIntensityFloor);
        total += l;
    }
    CHECK(total > 0.0);
}

TEST_CASE("size sampling matches the predicted distribution") {
    MlpSpec sspec;
    sspec.layout = InputLayout::make(InputKind::BookSized);
    sspec.hidden = {8, 4};
    sspec.outputs = kSizeClasses;
    sspec.output = OutputKind::Softmax;
    Mlp net(sspec, 2);
    net.params()[net.bias_param(2)](6, 0) = 3.0;
    net.params()[net.bias_param(2)](0, 0) = 2.0;
    const SizeModel sm(net);
    Rng rng(5);
    const auto s = some_state(rng);
    const auto p = sm.probabilities(EventType::Limit, 2, s);
    const int draws = 100000;
    std::vector<int> count(kSizeClasses + 1, 0);
    for (int i = 0; i < draws; ++i) ++count[static_cast<std::size_t>(sm.sample(EventType::Limit, 2, s, rng))];
    for (int c : {1, 7, 50}) {
        const double pc = p(c - 1);
        const double sd = std::sqrt(draws * pc * (1 - pc));
        CHECK(std::abs(count[static_cast<std::size_t>(c)] - draws * pc) < 3.0 * sd + 1.0);
    }
}

TEST_CASE("model documents round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "lobqr_model_rt";
    std::filesystem::create_directories(dir);
    Rng rng(12);
    const auto samples = random_samples(rng, 500);
    AesTable aes;
    for (int l = -5; l <= 5; ++l)
        if (l) aes.by_level[l] = 1.0 + 0.1 * l * l;
    QrModel qr({qr_estimate(samples)}, aes);
    qr.set_queue_init(QueueInitSampler::constant(4));
    SaqrModel saqr({saqr_estimate(samples)}, aes);
    MlpSpec dspec;
    dspec.layout = InputLayout::make(InputKind::Queue);
    dspec.hidden = {8, 4};
    dspec.outputs = 3;
    Mlp dnet(dspec, 3);
    dnet.params()[dnet.bias_param(2)].setConstant(0.5);
    DqrModel dqr(dnet, aes);
    MlpSpec mspec = dspec;
    mspec.layout = InputLayout::make(InputKind::Book);
    mspec.outputs = 30;
    Mlp mnet(mspec, 4);
    mnet.params()[mnet.bias_param(2)].setConstant(0.5);
    MlpSpec sspec = mspec;
    sspec.layout = InputLayout::make(InputKind::BookSized);
    sspec.outputs = kSizeClasses;
    sspec.output = OutputKind::Softmax;
    MdqrModel mdqr(mnet, std::make_shared<SizeModel>(Mlp(sspec, 5)));

    for (const IntensityModel* m : std::vector<const IntensityModel*>{&qr, &saqr, &dqr, &mdqr}) {
        const auto path = (dir / (m->kind() + ".json")).string();
        save_model(*m, path);
        const auto back = load_model(path);
        CHECK(back->kind() == m->kind());
        Rng probe(7);
        for (int i = 0; i < 50; ++i) {
            const auto s = some_state(probe);
            CHECK(predict_intensities(*m, s) == predict_intensities(*back, s));
        }
    }
    std::filesystem::remove_all(dir);
}
