#include "doctest.h"

#include <array>

#include "lobqr/book.hpp"
#include "lobqr/errors.hpp"

using namespace lobqr;

namespace {

BookState sample_book() {
    const std::array<std::int64_t, 5> bids{3, 4, 5, 6, 7};
    const std::array<std::int64_t, 5> asks{2, 3, 4, 5, 6};
    return BookState::from_sides(bids, asks, 1000, 0.01);
}

}  // namespace

TEST_CASE("slot layout follows price order") {
    const auto b = sample_book();
    CHECK(b.queue(-1) == 3);
    CHECK(b.queue(-5) == 7);
    CHECK(b.queue(1) == 2);
    CHECK(b.slots()[0] == 7);
    CHECK(b.slots()[9] == 6);
    for (int s = 0; s < b.slot_count(); ++s) CHECK(b.slot(b.level_of_slot(s)) == s);
    CHECK(b.price_ticks(1) == doctest::Approx(1000.5));
    CHECK(b.price_ticks(-1) == doctest::Approx(999.5));
    CHECK(spread_ticks(b) == 1);
    CHECK(mid_ticks(b) == doctest::Approx(1000.0));
}

TEST_CASE("limit cancel market semantics") {
    auto b = sample_book();
    auto r = apply_event(b, {EventType::Limit, 2, 5, 0.1});
    CHECK(r.executed == 5);
    CHECK(b.queue(2) == 8);
    r = apply_event(b, {EventType::Cancel, 2, 100, 0.2});
    CHECK(r.executed == 8);
    CHECK(b.queue(2) == 0);
    CHECK_FALSE(r.ref_change);
    r = apply_event(b, {EventType::Market, 1, 2, 0.3});
    REQUIRE(r.ref_change);
    CHECK(r.ref_change->direction == 1);
    CHECK(r.ref_change->new_ref == 1001);
    CHECK(b.ref_price() == 1000);
}

TEST_CASE("no-op cancel at an empty queue does not shift") {
    auto b = sample_book();
    b.set_queue(1, 0);
    const auto r = apply_event(b, {EventType::Cancel, 1, 1, 0.0});
    CHECK(r.executed == 0);
    CHECK_FALSE(r.ref_change);
}

TEST_CASE("invalid events throw") {
    auto b = sample_book();
    CHECK_THROWS_AS(apply_event(b, {EventType::Limit, 0, 1, 0.0}), InvalidLevel);
    CHECK_THROWS_AS(apply_event(b, {EventType::Limit, 6, 1, 0.0}), InvalidLevel);
    CHECK_THROWS_AS(apply_event(b, {EventType::Limit, 1, 0, 0.0}), InvalidSize);
    CHECK_THROWS_AS(b.set_queue(1, -1), InvalidSize);
    CHECK_THROWS_AS(event_type_from_char('X'), ValueError);
}

TEST_CASE("empty side makes spread undefined") {
    BookState b(5, 0, 1.0);
    b.set_queue(-1, 4);
    CHECK_THROWS_AS(spread_ticks(b), EmptySide);
    CHECK_THROWS_AS(mid_price(b), EmptySide);
}

TEST_CASE("shift relabels queues by price") {
    auto b = sample_book();
    const auto before = b;
    Rng rng(1);
    shift_reference(b, 1, QueueInitSampler::constant(9), rng);
    CHECK(b.ref_price() == 1001);
    // every surviving price keeps its queue
    for (int level = -5; level <= 5; ++level) {
        if (level == 0) continue;
        const auto key = before.price_key(level);
        const auto now = b.level_at_key(key);
        if (now) CHECK(b.queue(*now) == before.queue(level));
    }
    CHECK(b.queue(5) == 9);
    CHECK(b.queue(-1) == before.queue(1));
    shift_reference(b, -1, QueueInitSampler::constant(11), rng);
    CHECK(b.queue(-5) == 11);
    CHECK(b.queue(1) == before.queue(1));
    CHECK_THROWS_AS(shift_reference(b, 2, QueueInitSampler{}, rng), ValueError);
}

TEST_CASE("queue conservation under random events") {
    Rng rng(42);
    auto b = sample_book();
    for (int k = 0; k < 2000; ++k) {
        const int level = static_cast<int>(rng.below(5)) + 1;
        const LobEvent ev{static_cast<EventType>(rng.below(3)), rng.below(2) ? level : -level,
                          static_cast<std::int64_t>(rng.below(4)) + 1, 0.0};
        const auto pre = b.queue(ev.level);
        const auto total = b.total_lots();
        const auto r = apply_event(b, ev);
        const auto delta = ev.type == EventType::Limit ? ev.size : -std::min(ev.size, pre);
        CHECK(b.queue(ev.level) == pre + delta);
        CHECK(b.total_lots() == total + delta);
        for (auto q : b.slots()) CHECK(q >= 0);
        if (r.ref_change) shift_reference(b, r.ref_change->direction, QueueInitSampler::constant(3), rng);
    }
}
