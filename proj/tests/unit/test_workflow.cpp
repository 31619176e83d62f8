#include "swphm/error.hpp"
#include "swphm/testbed_sim.hpp"
#include "swphm/workflow.hpp"

#include <doctest.h>

#include <cmath>

using namespace swphm;

namespace {

SimOutput sim(std::uint64_t seed, double noise = 0.0) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.noise_std_ms = noise;
    return generate_dataset(cfg);
}

} // namespace

TEST_CASE("training on simulator data") {
    const auto out = sim(1);
    const auto trained = train_bundle(out.dataset, TrainOptions{});
    const auto& r = trained.report;
    CHECK(r["n_releases"] == 10);
    CHECK(r["n_fit"] == 10);
    CHECK(r["excluded_versions"].empty());
    CHECK(r["correlation"]["r"].get<double>() == doctest::Approx(1.0));
    CHECK(r["model"]["slope"].get<double>() == doctest::Approx(60.0).epsilon(1e-9));
    CHECK(r["model"]["intercept"].get<double>() == doctest::Approx(2000.0).epsilon(1e-9));
    CHECK(r["split"]["n_train"] == 8);
    CHECK(r["split"]["n_test"] == 2);
    CHECK(r["cross_validation"]["method"] == "loo");
    CHECK(r["os_factor_source"] == "default");
    CHECK(trained.bundle.current_cpv == out.truth.per_release_cpv.back());
    CHECK(trained.bundle.adjustment.os_factor_32_over_64 == 1.0);
}

TEST_CASE("OS factor source") {
    const auto out = sim(2);
    TrainOptions opt;
    opt.os_factor = 1.4;
    CHECK(train_bundle(out.dataset, opt).report["os_factor_source"] == "configured");
    CHECK(train_bundle(out.dataset, opt).bundle.adjustment.os_factor_32_over_64 == 1.4);
    opt.os_factor.reset();
    for (const auto& p : out.os_pairs) opt.os_pairs.emplace_back(p.rt32_ms, p.rt64_ms);
    const auto est = train_bundle(out.dataset, opt);
    CHECK(est.report["os_factor_source"] == "estimated");
    CHECK(est.bundle.adjustment.os_factor_32_over_64 == doctest::Approx(1.25).epsilon(1e-12));
    opt.os_pairs = {{9000, 10000}};
    const auto faster32 = train_bundle(out.dataset, opt);
    CHECK_FALSE(faster32.report["warnings"].empty());
}

TEST_CASE("baseline environment and excluded releases") {
    SimConfig cfg;
    EnvironmentSpec fast = cfg.env;
    fast.clock_ghz = 2.4;
    cfg.env_schedule[7] = fast;
    const auto out = generate_dataset(cfg);
    const auto trained = train_bundle(out.dataset, TrainOptions{});
    CHECK(trained.bundle.baseline_env == cfg.env);
    CHECK(trained.report["n_fit"] == 7);
    CHECK(trained.report["excluded_versions"].size() == 3);
    CHECK(trained.bundle.current_cpv == out.truth.per_release_cpv.back());
    CHECK(trained.bundle.models.global.slope == doctest::Approx(60.0).epsilon(1e-9));
}

TEST_CASE("training preconditions") {
    SimConfig cfg;
    cfg.n_releases = 3;
    auto out = generate_dataset(cfg);
    auto releases = out.dataset.releases();
    releases[2].rt_runs_ms.clear();
    const Dataset two(out.dataset.items(), releases);
    CHECK_THROWS_AS(train_bundle(two, TrainOptions{}), Error);
    for (auto& r : releases) r.rt_runs_ms.clear();
    CHECK_THROWS_AS(train_bundle(Dataset(out.dataset.items(), releases), TrainOptions{}), Error);
}

TEST_CASE("train options parsing") {
    const auto opt = train_options_from_json(json{{"os_factor", 1.3},
                                                  {"clock_coefficient", 1.1},
                                                  {"k", 2},
                                                  {"seed", 5},
                                                  {"train_fraction", 0.7},
                                                  {"impact_factors", {{"Major", 0.6}}}});
    CHECK(opt.os_factor == 1.3);
    CHECK(opt.clock_coefficient == 1.1);
    CHECK(opt.seed == 5);
    CHECK(opt.train_fraction == 0.7);
    CHECK(opt.impact.factor(Severity::Major) == 0.6);
    CHECK_THROWS_AS(train_options_from_json(json::array()), Error);
    CHECK_THROWS_AS(train_options_from_json(json{{"os_factor", "big"}}), Error);
}

TEST_CASE("bundle JSON round trip") {
    const auto trained = train_bundle(sim(3, 30.0).dataset, TrainOptions{});
    const json j = to_json(trained.bundle);
    const auto back = trained_bundle_from_json(json::parse(j.dump()));
    CHECK(to_json(back) == j);
    CHECK(back.models.global == trained.bundle.models.global);
    CHECK(back.baseline_env == trained.bundle.baseline_env);
    CHECK(back.current_cpv == trained.bundle.current_cpv);
    CHECK_THROWS_AS(trained_bundle_from_json(json{{"global", nullptr}}), Error);
}

TEST_CASE("dataset helpers") {
    const auto out = sim(4);
    const auto back = dataset_from_json(json::parse(dataset_to_json(out.dataset).dump()));
    CHECK(dataset_to_json(back) == dataset_to_json(out.dataset));
    const auto s = dataset_summary(out.dataset);
    CHECK(s["releases"] == 10);
    CHECK(s["measured_releases"] == 10);
    CHECK(s["open_items"] == 8);
    CHECK_THROWS_AS(dataset_from_json(json{{"releases", json::array()}}), Error);

    const auto w = weigh_json(out.dataset, ImpactTable{}, {});
    REQUIRE(w.size() == 10);
    CHECK(w.back()["cpv"].get<double>() == out.truth.per_release_cpv.back());
    const auto csv = weigh_csv(out.dataset, ImpactTable{}, {});
    CHECK(csv.rfind("version,pv,cpv\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}

TEST_CASE("predict and adjust") {
    const auto trained = train_bundle(sim(5).dataset, TrainOptions{});
    const auto p = predict_json(trained.bundle, 10.0, std::nullopt);
    CHECK(p["rt_ms"].get<double>() == doctest::Approx(2600.0).epsilon(1e-9));

    const auto a = adjust_json(json{{"rt_ms", 10000}, {"from", {{"clock_ghz", 1.0}}}, {"to", {{"clock_ghz", 1.1}}}},
                               EnvAdjustment{});
    CHECK(std::abs(a["rt_ms"].get<double>() - 8773.0) <= 1e-9);
    const auto b = adjust_json(json{{"rt_ms", 10000},
                                    {"from", {{"os_bits", 32}, {"clock_ghz", 1.8}}},
                                    {"to", {{"os_bits", 64}, {"clock_ghz", 2.0}}},
                                    {"os_factor", 1.25}},
                               EnvAdjustment{});
    CHECK(std::abs(b["rt_ms"].get<double>() - 6909.33) <= 0.01);
    const auto c = adjust_json(json{{"rt_ms", 8000}, {"from", json::object()}, {"to", {{"os_bits", 32}}}},
                               EnvAdjustment{kDefaultClockCoefficient, 1.25});
    CHECK(c["rt_ms"] == 10000.0);
    CHECK_THROWS_AS(adjust_json(json{{"rt_ms", 1}}, EnvAdjustment{}), Error);
    try {
        adjust_json(json{{"rt_ms", 10000}, {"from", {{"clock_ghz", 1.0}}}, {"to", {{"clock_ghz", 3.0}}}}, EnvAdjustment{});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::out_of_range);
    }
}

TEST_CASE("plan documents") {
    const auto out = sim(6);
    const auto trained = train_bundle(out.dataset, TrainOptions{});
    const auto threshold = RtThreshold::from_seconds(10);
    const auto ids = out.plan["items"].get<std::vector<std::string>>();

    json as_array = {{"items", ids}, {"allocation", json::array()}};
    json as_object = {{"allocation", json::object()}};
    for (std::size_t i = 0; i < ids.size(); ++i) {
        as_array["allocation"].push_back(i % 4);
        as_object["allocation"][ids[i]] = i % 4;
    }
    const auto ra = plan_rul(trained.bundle, as_array, &out.dataset, threshold);
    const auto ro = plan_rul(trained.bundle, as_object, &out.dataset, threshold);
    CHECK(to_json(ra) == to_json(ro));
    REQUIRE(ra.trajectory.size() == 4);

    // the same plan, stated as releases
    json as_releases = {{"releases", json::array()}};
    std::vector<double> pv(4, 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) pv[i % 4] += weigh_item(out.dataset.at(ids[i])).weight;
    for (int r = 0; r < 4; ++r) as_releases["releases"].push_back({{"version", "R" + std::to_string(r + 1)}, {"pv", pv[static_cast<std::size_t>(r)]}});
    const auto rr = plan_rul(trained.bundle, as_releases, nullptr, threshold);
    CHECK(rr.rul_releases == ra.rul_releases);
    for (std::size_t k = 0; k < 4; ++k) CHECK(rr.trajectory[k].rt_ms == doctest::Approx(ra.trajectory[k].rt_ms).epsilon(1e-12));

    CHECK_THROWS_AS(plan_rul(trained.bundle, as_array, nullptr, threshold), Error);
    CHECK_THROWS_AS(plan_rul(trained.bundle, json{{"horizon", 3}}, &out.dataset, threshold), Error);
    json unknown = {{"allocation", {{"NOPE", 0}}}};
    CHECK_THROWS_AS(plan_rul(trained.bundle, unknown, &out.dataset, threshold), Error);
    json outside = as_array;
    outside["horizon"] = 2;
    CHECK_THROWS_AS(plan_rul(trained.bundle, outside, &out.dataset, threshold), Error);
}

TEST_CASE("best plan from a plan document") {
    const auto out = sim(7);
    const auto trained = train_bundle(out.dataset, TrainOptions{});
    const auto threshold = RtThreshold::from_seconds(10);
    const auto best = plan_best_json(trained.bundle, out.plan, out.dataset, threshold);
    CHECK(best["horizon"] == 4);
    CHECK(best["allocation"].size() == 8);

    json replay = {{"allocation", best["allocation"]}, {"horizon", 4}};
    const auto again = plan_rul(trained.bundle, replay, &out.dataset, threshold);
    CHECK(to_json(again) == best["rul"]);

    json no_items = {{"horizon", 4}};
    CHECK(plan_best_json(trained.bundle, no_items, out.dataset, threshold) == best);

    CHECK_THROWS_AS(plan_best_json(trained.bundle, json{{"items", json::array()}}, out.dataset, threshold), Error);
    json big = out.plan;
    big["horizon"] = 6;
    CHECK_THROWS_AS(plan_best_json(trained.bundle, big, out.dataset, threshold), Error);
    CHECK_THROWS_AS(plan_best_json(trained.bundle, out.plan, out.dataset, threshold, 1000), Error);
}

TEST_CASE("environment overrides in plan documents merge onto the previous environment") {
    const auto out = sim(8);
    const auto trained = train_bundle(out.dataset, TrainOptions{});
    json doc = {{"horizon", 4}, {"env_overrides", {{"1", {{"clock_ghz", 2.4}}}, {"3", {{"os_bits", 32}}}}}};
    const auto spec = plan_spec_from_json(trained.bundle, doc, out.dataset);
    CHECK(spec.env_for(0) == trained.bundle.baseline_env);
    CHECK(spec.env_for(2).clock_ghz == 2.4);
    CHECK(spec.env_for(3).clock_ghz == 2.4);
    CHECK(spec.env_for(3).os_bits == 32);
    json bad = {{"horizon", 4}, {"env_overrides", {{"x", {{"os_bits", 32}}}}}};
    CHECK_THROWS_AS(plan_spec_from_json(trained.bundle, bad, out.dataset), Error);
}
