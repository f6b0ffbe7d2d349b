#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>

#include "bpec/errors.hpp"
#include "bpec/harness.hpp"

using namespace bpec;

TEST_CASE("bundled walkthrough replays without divergence") {
    const auto start = std::chrono::steady_clock::now();
    const GoldenReport report = replay_golden();
    const auto elapsed = std::chrono::steady_clock::now() - start;

    for (const GoldenCheck& c : report.checks) {
        INFO("slot ", c.slot, " ", c.what, ": ", c.detail);
        CHECK(c.pass);
    }
    CHECK(report.pass);
    CHECK(report.first_divergence == -1);
    CHECK(report.slots == 47);
    // 3 per phase-1 slot, 2 per later slot, snapshot and end-of-run blocks
    CHECK(report.checks.size() > 140);
    CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() <
          1000);
}

TEST_CASE("golden replay is deterministic") {
    const GoldenReport a = replay_golden("walkthrough");
    const GoldenReport b = replay_golden("walkthrough");
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        CHECK(a.checks[i].slot == b.checks[i].slot);
        CHECK(a.checks[i].what == b.checks[i].what);
        CHECK(a.checks[i].pass == b.checks[i].pass);
    }
}

TEST_CASE("unknown trace names are rejected") {
    CHECK_THROWS_AS(replay_golden("no_such_trace"), ConfigError);
}
