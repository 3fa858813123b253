#include "doctest.h"

#include "lobqr/errors.hpp"
#include "lobqr/run_config.hpp"

using namespace lobqr;

TEST_CASE("run config defaults, overrides and round trip") {
    const auto c = RunConfig::from_json(json::parse(R"({
      "model": {"kind": "mdqr", "widths": [32, 8]},
      "train": {"lr_max": 0.002, "patience": 4, "seed": 9},
      "sim": {"horizon": 120, "paths": 3, "initial_book": {"ref_price": 500, "bids": [1,2,3,4,5], "asks": [5,4,3,2,1]}},
      "experiments": {"impact": {"q_list": [0, 10], "side": "sell"}, "bench": {"n": 20000}}
    })"));
    CHECK(c.model.kind == "mdqr");
    CHECK(c.train.config.lr_max == 0.002);
    CHECK(c.train.config.patience == 4);
    CHECK(c.train.config.batch_size == 1024);
    CHECK(c.sim.initial_book->queue(-2) == 2);
    CHECK(c.sim.initial_book->queue(1) == 5);
    CHECK(c.experiments.impact.order.side == -1);
    const auto again = RunConfig::from_json(json::parse(c.to_json().dump()));
    CHECK(again.to_json() == c.to_json());
    CHECK(again.hash() == c.hash());
    RunConfig threaded = c;
    threaded.threads = 7;
    CHECK(threaded.hash() == c.hash());
    RunConfig other = c;
    other.sim.seed = 1;
    CHECK(other.hash() != c.hash());
}

TEST_CASE("run config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"extra": 1})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"sim": {"horizonn": 1}})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"model": {"kind": "lstm"}})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"model": {"embedding_dim": 3}})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"sim": {"paths": 0}})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"sim": {"K": 4}})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"train": {"lr_min": 1.0, "lr_max": 0.1}})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"experiments": {"impact": {"paths": 1}}})")), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"sim": {"paths": "two"}})")), ConfigError);
}

TEST_CASE("default initial book comes from the model's queue-init means") {
    Intensities r{};
    r.fill(1.0);
    FrozenModel m(r);
    m.set_queue_init(QueueInitSampler::constant(4));
    const auto sim = RunConfig{}.sim_config(m);
    for (int l = 1; l <= kDefaultDepth; ++l) {
        CHECK(sim.initial.queue(l) == 4);
        CHECK(sim.initial.queue(-l) == 4);
    }
}
