#include <doctest.h>

#include "ddc/schedule.hpp"

using namespace ddc;

TEST_CASE("single-step schedule") {
    const NoiseSchedule s = make_schedule(1, 0.1, 0.1);
    CHECK(s.timesteps() == 1);
    CHECK(s.alpha(1) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.alpha_bar(0) == 1.0);
}

TEST_CASE("zero-noise degenerate schedule") {
    const NoiseSchedule s = make_schedule(10, 0.0, 0.0);
    for (int t = 1; t <= 10; ++t) CHECK(s.alpha_bar(t) == 1.0);
}

TEST_CASE("default schedule terminal value") {
    // Frozen from an independent computation of the running product for the
    // linear beta schedule T=1000, beta in [1e-4, 0.02].
    const NoiseSchedule s = default_schedule();
    CHECK(s.alpha_bar(1000) ==
          doctest::Approx(4.035829765375694e-05).epsilon(1e-9));
}

TEST_CASE("alpha_bar equals the running product and is non-increasing") {
    for (auto kind : {ScheduleKind::Linear, ScheduleKind::ScaledLinear}) {
        const NoiseSchedule s = make_schedule(500, 3e-4, 0.015, kind);
        double running = 1.0;
        double prev = 1.0;
        for (int t = 1; t <= 500; ++t) {
            running *= s.alpha(t);
            CHECK(s.alpha_bar(t) ==
                  doctest::Approx(running).epsilon(1e-12));
            CHECK(s.alpha_bar(t) <= prev);
            CHECK(s.alpha_bar(t) > 0.0);
            CHECK(s.alpha(t) <= 1.0);
            prev = s.alpha_bar(t);
        }
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(make_schedule(0, 1e-4, 0.02), ParameterError);
    CHECK_THROWS_AS(make_schedule(10, -0.1, 0.02), ParameterError);
    CHECK_THROWS_AS(make_schedule(10, 0.03, 0.02), ParameterError);
    CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), ParameterError);
}

TEST_CASE("sampling timesteps are uniform, descending, in range") {
    const NoiseSchedule s = default_schedule();
    const auto ts = sampling_timesteps(s, 50);
    CHECK(ts.size() == 50);
    CHECK(ts.front() == 1000);
    CHECK(ts.back() == 20);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        CHECK(ts[i] < ts[i - 1]);
        CHECK(ts[i - 1] - ts[i] == 20);
    }

    const auto full = sampling_timesteps(s, 1000);
    CHECK(full.size() == 1000);
    CHECK(full.front() == 1000);
    CHECK(full.back() == 1);
}
