#include "swphm/error.hpp"
#include "swphm/prognosis.hpp"
#include "swphm/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace swphm;

namespace {

RegressionModel line(double intercept, double slope) {
    RegressionModel m;
    m.intercept = intercept;
    m.slope = slope;
    m.n = 10;
    return m;
}

std::vector<TrajectoryPoint> rts(const std::vector<double>& values) {
    std::vector<TrajectoryPoint> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        TrajectoryPoint p;
        p.version = "R" + std::to_string(i + 1);
        p.rt_ms = values[i];
        out.push_back(p);
    }
    return out;
}

EnvironmentSpec env(int bits, double ghz) {
    EnvironmentSpec e;
    e.os_bits = bits;
    e.clock_ghz = ghz;
    return e;
}

} // namespace

TEST_CASE("clock speed adjustment") {
    CHECK(std::abs(adjust_clock_speed(10000, 1.0, 1.1) - 8773.0) <= 1e-9);
    CHECK(adjust_clock_speed(10000, 1.0, 1.1, 1.227) == doctest::Approx(8773.0).epsilon(1e-14));
    CHECK(adjust_clock_speed(4321, 2.4, 2.4) == 4321);
    CHECK(adjust_clock_speed(8000, 1.8, 2.0) == doctest::Approx(8000.0 * (1.0 - 1.227 * 0.2 / 1.8)).epsilon(1e-14));
    CHECK(std::abs(adjust_clock_speed(8000, 1.8, 2.0) - 6909.33) <= 0.01);
    CHECK_THROWS_AS(adjust_clock_speed(1000, 0.0, 1.0), Error);
    CHECK_THROWS_AS(adjust_clock_speed(1000, 1.0, -1.0), Error);
    try {
        adjust_clock_speed(1000, 1.0, 2.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::out_of_range);
        CHECK(std::string(e.what()).find("outside calibrated range") != std::string::npos);
    }
}

TEST_CASE("clock adjustment direction") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const double rt = 100.0 + 10000.0 * rng.uniform01();
        const double from = 1.0 + 2.0 * rng.uniform01();
        const double faster = from * (1.0 + 0.5 * rng.uniform01() + 1e-6);
        const double slower = from * (1.0 - 0.5 * rng.uniform01() - 1e-6);
        CHECK(adjust_clock_speed(rt, from, faster) < rt);
        CHECK(adjust_clock_speed(rt, from, slower) > rt);
    }
}

TEST_CASE("OS factor estimation") {
    const std::vector<std::pair<double, double>> two = {{12000, 10000}, {14000, 10500}};
    CHECK(estimate_os_factor(two) == doctest::Approx((1.2 + 14000.0 / 10500.0) / 2.0).epsilon(1e-14));
    CHECK(std::abs(estimate_os_factor(two) - 1.26667) <= 1e-5);
    const std::vector<std::pair<double, double>> same = {{5000, 5000}, {7000, 7000}};
    CHECK(estimate_os_factor(same) == 1.0);
    const std::vector<std::pair<double, double>> one = {{11000, 10000}};
    CHECK(estimate_os_factor(one) == doctest::Approx(1.1).epsilon(1e-14));
    CHECK_THROWS_AS(estimate_os_factor({}), Error);
    const std::vector<std::pair<double, double>> bad = {{0, 10000}};
    CHECK_THROWS_AS(estimate_os_factor(bad), Error);
}

TEST_CASE("environment application") {
    EnvAdjustment adj;
    adj.os_factor_32_over_64 = 1.25;
    CHECK(apply_env(1234.5, env(64, 1.8), env(64, 1.8), adj) == 1234.5);
    CHECK(apply_env(8000, env(64, 1.8), env(32, 1.8), adj) == 10000);
    CHECK(apply_env(10000, env(32, 1.8), env(64, 1.8), adj) == 8000);
    CHECK(std::abs(apply_env(10000, env(32, 1.8), env(64, 2.0), adj) - 6909.33) <= 0.01);

    EnvironmentSpec a = env(64, 1.8);
    EnvironmentSpec b = a;
    b.ram_gb = 64;
    CHECK(apply_env(777, a, b, adj) == 777);

    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        EnvAdjustment r;
        r.os_factor_32_over_64 = 0.8 + rng.uniform01();
        const double rt = 10.0 + 20000.0 * rng.uniform01();
        const double ghz = 1.0 + 3.0 * rng.uniform01();
        const double there = apply_env(rt, env(32, ghz), env(64, ghz), r);
        CHECK(std::abs(apply_env(there, env(64, ghz), env(32, ghz), r) - rt) <= 1e-9 * rt);
        const EnvironmentSpec e = env(rng.uniform01() < 0.5 ? 32 : 64, ghz);
        CHECK(apply_env(rt, e, e, r) == rt);
    }
}

TEST_CASE("adjustment validation") {
    EnvAdjustment adj;
    CHECK_FALSE(adj.validate().has_value());
    adj.os_factor_32_over_64 = 0.9;
    CHECK(adj.validate().has_value());
    adj.os_factor_32_over_64 = 0.0;
    CHECK_THROWS_AS(adj.validate(), Error);
    adj = EnvAdjustment{};
    adj.clock_coefficient = -1;
    CHECK_THROWS_AS(adj.validate(), Error);
    CHECK(env_adjustment_from_json(to_json(EnvAdjustment{1.5, 1.3})) == EnvAdjustment{1.5, 1.3});
    CHECK_THROWS_AS(env_adjustment_from_json(json{{"os_factor_32_over_64", -2}}), Error);
}

TEST_CASE("trajectory") {
    const ModelSet models(line(1000, 500));
    std::vector<PlannedRelease> plan(2);
    plan[0] = {"R1", 4, {}, std::nullopt};
    plan[1] = {"R2", 8, {}, std::nullopt};
    const auto t = predict_trajectory(models, 0.0, plan);
    REQUIRE(t.size() == 2);
    CHECK(t[0].cpv == 4);
    CHECK(t[1].cpv == 12);
    CHECK(t[0].rt_ms == 3000);
    CHECK(t[1].rt_ms == 7000);
    CHECK(t[1].version == "R2");

    CHECK(predict_trajectory(models, 3.0, {}).empty());
    CHECK_THROWS_AS(predict_trajectory(ModelSet{}, 0.0, plan), Error);
}

TEST_CASE("trajectory chains environment changes release by release") {
    EnvAdjustment adj;
    adj.os_factor_32_over_64 = 1.25;
    const ModelSet models(line(4000, 0));
    std::vector<PlannedRelease> plan(3);
    plan[0] = {"R1", 0, env(64, 1.8), std::nullopt};
    plan[1] = {"R2", 0, env(64, 2.0), std::nullopt};
    plan[2] = {"R3", 0, env(32, 2.2), std::nullopt};
    const auto t = predict_trajectory(models, 0.0, plan, env(64, 1.8), adj);
    const double r1 = 4000;
    const double r2 = r1 * (1 - 1.227 * 0.2 / 1.8);
    const double r3 = r2 * 1.25 * (1 - 1.227 * 0.2 / 2.0);
    CHECK(t[0].rt_ms == doctest::Approx(r1).epsilon(1e-14));
    CHECK(t[1].rt_ms == doctest::Approx(r2).epsilon(1e-14));
    CHECK(t[2].rt_ms == doctest::Approx(r3).epsilon(1e-14));
    CHECK(t[2].rt_unadjusted_ms == 4000);
}

TEST_CASE("per-cluster model selection") {
    ModelSet models(line(1000, 1));
    models.per_cluster[1] = line(5000, 1);
    std::vector<PlannedRelease> plan(2);
    plan[0] = {"R1", 0, {}, 1};
    plan[1] = {"R2", 0, {}, 7};
    const auto t = predict_trajectory(models, 0.0, plan);
    CHECK(t[0].rt_ms == 5000);
    CHECK(t[1].rt_ms == 1000);
}

TEST_CASE("RUL hand examples") {
    const auto threshold = RtThreshold::from_seconds(10);
    const auto a = estimate_rul(rts({3000, 5000, 7000, 9000, 11000}), threshold);
    CHECK(a.rul_releases == 4);
    CHECK_FALSE(a.censored);
    const auto b = estimate_rul(rts({11000, 2000}), threshold);
    CHECK(b.rul_releases == 0);
    CHECK_FALSE(b.censored);
    const auto c = estimate_rul(rts({1000, 2000, 3000}), threshold);
    CHECK(c.rul_releases == 3);
    CHECK(c.censored);
    const auto d = estimate_rul(rts({10000}), threshold);
    CHECK(d.rul_releases == 0);
    const auto e = estimate_rul({}, threshold);
    CHECK(e.rul_releases == 0);
    CHECK(e.censored);
    CHECK_THROWS_AS(RtThreshold::from_seconds(0), Error);
    CHECK_THROWS_AS(RtThreshold::from_seconds(-3), Error);
}

TEST_CASE("RUL and trajectory properties") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const double slope = 1.0 + 500.0 * rng.uniform01();
        const ModelSet models(line(500.0 + 3000.0 * rng.uniform01(), slope));
        std::vector<PlannedRelease> plan(1 + rng.uniform_index(8));
        for (std::size_t k = 0; k < plan.size(); ++k) plan[k] = {"R" + std::to_string(k), 0.1 + 10.0 * rng.uniform01(), {}, std::nullopt};
        const auto t = predict_trajectory(models, 5.0 * rng.uniform01(), plan);
        for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k].rt_ms > t[k - 1].rt_ms);

        const double lo = 1000.0 + 10000.0 * rng.uniform01();
        const double hi = lo + 5000.0 * rng.uniform01();
        const auto rl = estimate_rul(t, RtThreshold{lo});
        const auto rh = estimate_rul(t, RtThreshold{hi});
        CHECK(rh.rul_releases >= rl.rul_releases);

        std::size_t leading = 0;
        while (leading < t.size() && t[leading].rt_ms < lo) ++leading;
        CHECK(rl.rul_releases == leading);
        CHECK(rl.censored == (leading == t.size()));
    }
}

TEST_CASE("serialization") {
    const auto est = estimate_rul(rts({3000, 12000}), RtThreshold{10000});
    const json j = to_json(est);
    CHECK(j["rul_releases"] == 1);
    CHECK(j["censored"] == false);
    CHECK(j["trajectory"][0]["below_threshold"] == true);
    CHECK(j["trajectory"][1]["below_threshold"] == false);
    CHECK(trajectory_csv(est) == "version,rt_ms,below_threshold\nR1,3000,true\nR2,12000,false\n");

    PlannedRelease r{"2.0", 3.5, env(32, 2.4), 2};
    const auto back = planned_release_from_json(to_json(r));
    CHECK(back.version == "2.0");
    CHECK(back.pv == 3.5);
    CHECK(back.env == r.env);
    CHECK(back.cluster == 2);
    CHECK_THROWS_AS(planned_release_from_json(json{{"pv", 1}}), Error);
}
