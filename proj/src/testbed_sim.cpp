#include "swphm/testbed_sim.hpp"

#include "swphm/error.hpp"
#include "swphm/prognosis.hpp"
#include "swphm/random.hpp"
#include "swphm/weighting.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string_view>

namespace swphm {

namespace {

constexpr std::array<std::string_view, 7> kFaultWords = {"crash", "error", "exception", "timeout",
                                                         "failure", "hang", "regression"};
constexpr std::array<std::string_view, 7> kEnhancementWords = {"add", "support", "feature", "option",
                                                               "improve", "allow", "new"};
constexpr std::array<std::array<std::string_view, 3>, 4> kSeverityWords = {{
    {"outage", "corruption", "security"},
    {"broken", "unusable", "blocking"},
    {"incorrect", "slow", "wrong"},
    {"typo", "cosmetic", "alignment"},
}};
constexpr std::array<std::array<std::string_view, 2>, 5> kSizeWords = {{
    {"trivial", "tweak"},
    {"small", "change"},
    {"moderate", "rework"},
    {"large", "refactor"},
    {"complex", "redesign"},
}};
constexpr std::array<std::string_view, 8> kComponents = {"search", "login", "report", "query",
                                                         "email", "attachment", "admin", "api"};

template <typename Array>
std::string_view pick(const Array& words, Rng& rng) {
    return words[static_cast<std::size_t>(rng.uniform_index(words.size()))];
}

Severity draw_severity(const std::array<double, 4>& mix, Rng& rng) {
    const double u = rng.uniform01();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
        cumulative += mix[i];
        if (u < cumulative) return kAllSeverities[i];
    }
    for (std::size_t i = mix.size(); i-- > 0;) {
        if (mix[i] > 0.0) return kAllSeverities[i];
    }
    return Severity::Minor;
}

BacklogItem draw_item(const SimConfig& cfg, int number, Rng& rng) {
    BacklogItem item;
    char id[16];
    std::snprintf(id, sizeof id, "B%04d", number);
    item.id = id;
    item.kind = rng.uniform01() < cfg.enhancement_fraction ? ItemKind::enhancement : ItemKind::fault;
    item.severity = draw_severity(cfg.severity_mix, rng);
    const auto size_class = static_cast<std::size_t>(rng.uniform_index(kStoryPointScale.size()));
    item.story_points = kStoryPointScale[size_class];
    item.sign = rng.uniform01() < cfg.improving_fraction ? Sign::minus : Sign::plus;

    const auto& kind_words = item.kind == ItemKind::fault ? kFaultWords : kEnhancementWords;
    const auto& sev_words = kSeverityWords[static_cast<std::size_t>(*item.severity)];
    const auto& size_words = kSizeWords[size_class];
    const std::string_view component = pick(kComponents, rng);
    item.title = std::string(pick(kind_words, rng)) + " in " + std::string(component) + " " +
                 std::string(pick(sev_words, rng));
    item.description = std::string(pick(size_words, rng)) + " " + std::string(pick(kind_words, rng)) + " " +
                       std::string(pick(sev_words, rng)) + " " + std::string(component);
    if (item.sign == Sign::minus) item.description += " optimization";
    return item;
}

double positive_draw(double mean, double sd, Rng& rng) {
    if (sd == 0.0) {
        if (!(mean > 0.0)) fail(ErrorCode::out_of_range, "simulator: non-positive noiseless response time");
        return mean;
    }
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double v = mean + sd * rng.normal();
        if (v > 0.0) return v;
    }
    fail(ErrorCode::out_of_range, "simulator: cannot draw a positive response time");
}

EnvironmentSpec env_at(const SimConfig& cfg, int release) {
    EnvironmentSpec env = cfg.env;
    for (const auto& [index, e] : cfg.env_schedule) {
        if (index > release) break;
        env = e;
    }
    return env;
}

} // namespace

void SimConfig::validate() const {
    if (n_releases < 3) fail(ErrorCode::validation, "simulator: n_releases must be at least 3");
    if (!(noise_std_ms >= 0.0)) fail(ErrorCode::validation, "simulator: noise_std_ms must be non-negative");
    if (target_correlation && !(*target_correlation > 0.0 && *target_correlation <= 1.0)) {
        fail(ErrorCode::validation, "simulator: target_correlation must lie in (0, 1]");
    }
    if (items_min < 0 || items_max < items_min) fail(ErrorCode::validation, "simulator: invalid items_per_release range");
    double sum = 0.0;
    for (double p : severity_mix) {
        if (!(p >= 0.0)) fail(ErrorCode::validation, "simulator: invalid distribution (negative severity weight)");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::validation, "simulator: invalid distribution (severity_mix sum)");
    if (!(enhancement_fraction >= 0.0 && enhancement_fraction <= 1.0) ||
        !(improving_fraction >= 0.0 && improving_fraction <= 1.0)) {
        fail(ErrorCode::validation, "simulator: invalid distribution (fractions must lie in [0, 1])");
    }
    if (runs_per_release < 1) fail(ErrorCode::validation, "simulator: runs_per_release must be at least 1");
    if (!(true_os_factor > 0.0) || !(clock_coefficient > 0.0)) {
        fail(ErrorCode::validation, "simulator: os factor and clock coefficient must be positive");
    }
    if (open_items < 0 || plan_horizon < 1) fail(ErrorCode::validation, "simulator: invalid open backlog settings");
    env.validate();
    for (const auto& [index, e] : env_schedule) {
        if (index < 0 || index >= n_releases) fail(ErrorCode::validation, "simulator: env_schedule index out of range");
        e.validate();
    }
}

SimOutput generate_dataset(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    int next_id = 1;

    std::vector<BacklogItem> items;
    std::vector<ReleaseRecord> releases;
    std::vector<double> pvs;
    const ImpactTable table;
    for (int r = 0; r < cfg.n_releases; ++r) {
        ReleaseRecord rel;
        rel.version = cfg.version_prefix + std::to_string(r);
        rel.env = env_at(cfg, r);
        const int count =
            cfg.items_min + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cfg.items_max - cfg.items_min + 1)));
        std::vector<WeightedItem> weighted;
        for (int i = 0; i < count; ++i) {
            BacklogItem item = draw_item(cfg, next_id++, rng);
            weighted.push_back(weigh_item(item, table));
            rel.items.push_back(item.id);
            items.push_back(std::move(item));
        }
        pvs.push_back(release_pv(weighted));
        releases.push_back(std::move(rel));
    }
    std::vector<std::string> open_ids;
    for (int i = 0; i < cfg.open_items; ++i) {
        BacklogItem item = draw_item(cfg, next_id++, rng);
        open_ids.push_back(item.id);
        items.push_back(std::move(item));
    }

    SimTruth truth;
    truth.slope = cfg.slope_ms_per_wf;
    truth.intercept = cfg.intercept_ms;
    truth.os_factor = cfg.true_os_factor;
    truth.clock_coefficient = cfg.clock_coefficient;
    truth.per_release_cpv = cumulate_cpv(pvs);

    double noise = cfg.noise_std_ms;
    if (cfg.target_correlation) {
        const auto& x = truth.per_release_cpv;
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        double var = 0.0;
        for (double v : x) var += (v - mean) * (v - mean);
        var /= static_cast<double>(x.size());
        const double rho = *cfg.target_correlation;
        const double mean_noise = std::abs(cfg.slope_ms_per_wf) * std::sqrt(var) * std::sqrt(1.0 / (rho * rho) - 1.0);
        noise = mean_noise * std::sqrt(static_cast<double>(cfg.runs_per_release));
    }
    truth.noise_std_ms = noise;

    EnvAdjustment adj;
    adj.clock_coefficient = cfg.clock_coefficient;
    adj.os_factor_32_over_64 = cfg.true_os_factor;

    SimOutput out;
    for (int r = 0; r < cfg.n_releases; ++r) {
        auto& rel = releases[static_cast<std::size_t>(r)];
        const double base = cfg.intercept_ms + cfg.slope_ms_per_wf * truth.per_release_cpv[static_cast<std::size_t>(r)];
        double rt = base;
        EnvironmentSpec previous = cfg.env;
        for (int i = 0; i <= r; ++i) {
            const EnvironmentSpec e = env_at(cfg, i);
            rt = apply_env(rt, previous, e, adj);
            previous = e;
        }
        truth.versions.push_back(rel.version);
        truth.per_release_rt_ms.push_back(rt);
        for (int k = 0; k < cfg.runs_per_release; ++k) rel.rt_runs_ms.push_back(positive_draw(rt, noise, rng));

        // paired 64-bit / 32-bit readings at the release's clock speed
        EnvironmentSpec e64 = rel.env, e32 = rel.env;
        e64.os_bits = 64;
        e32.os_bits = 32;
        const double rt64 = apply_env(rt, rel.env, e64, adj);
        const double rt32 = apply_env(rt, rel.env, e32, adj);
        out.os_pairs.push_back({rel.version, positive_draw(rt32, noise, rng), positive_draw(rt64, noise, rng)});
    }

    out.dataset = Dataset(std::move(items), std::move(releases));
    out.truth = std::move(truth);
    out.plan = {{"horizon", cfg.plan_horizon}, {"strategy", "exhaustive"}, {"items", open_ids}};
    return out;
}

SimConfig sim_config_from_json(const json& doc) {
    SimConfig cfg;
    try {
        cfg.n_releases = doc.value("n_releases", cfg.n_releases);
        cfg.slope_ms_per_wf = doc.value("slope_ms_per_wf", cfg.slope_ms_per_wf);
        cfg.intercept_ms = doc.value("intercept_ms", cfg.intercept_ms);
        cfg.noise_std_ms = doc.value("noise_std_ms", cfg.noise_std_ms);
        if (doc.contains("target_correlation") && !doc["target_correlation"].is_null()) {
            cfg.target_correlation = doc["target_correlation"].get<double>();
        }
        if (doc.contains("items_per_release")) {
            const auto& range = doc.at("items_per_release");
            cfg.items_min = range.at(0).get<int>();
            cfg.items_max = range.at(1).get<int>();
        }
        if (doc.contains("severity_mix")) {
            const auto mix = doc.at("severity_mix").get<std::vector<double>>();
            if (mix.size() != 4) fail(ErrorCode::validation, "simulator: severity_mix needs 4 entries");
            std::copy(mix.begin(), mix.end(), cfg.severity_mix.begin());
        }
        cfg.enhancement_fraction = doc.value("enhancement_fraction", cfg.enhancement_fraction);
        cfg.improving_fraction = doc.value("improving_fraction", cfg.improving_fraction);
        cfg.runs_per_release = doc.value("runs_per_release", cfg.runs_per_release);
        cfg.seed = doc.value("seed", cfg.seed);
        if (doc.contains("env")) cfg.env = env_from_json(doc.at("env"));
        if (doc.contains("env_schedule")) {
            for (const auto& [key, value] : doc.at("env_schedule").items()) {
                cfg.env_schedule[std::stoi(key)] = env_from_json(value);
            }
        }
        cfg.true_os_factor = doc.value("os_factor", cfg.true_os_factor);
        cfg.clock_coefficient = doc.value("clock_coefficient", cfg.clock_coefficient);
        cfg.open_items = doc.value("open_items", cfg.open_items);
        cfg.plan_horizon = doc.value("plan_horizon", cfg.plan_horizon);
        cfg.version_prefix = doc.value("version_prefix", cfg.version_prefix);
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, std::string("simulator config: ") + e.what());
    } catch (const std::logic_error& e) {
        fail(ErrorCode::validation, std::string("simulator config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json to_json(const SimConfig& cfg) {
    json schedule = json::object();
    for (const auto& [index, env] : cfg.env_schedule) schedule[std::to_string(index)] = to_json(env);
    json j = {{"n_releases", cfg.n_releases},
              {"slope_ms_per_wf", cfg.slope_ms_per_wf},
              {"intercept_ms", cfg.intercept_ms},
              {"noise_std_ms", cfg.noise_std_ms},
              {"items_per_release", {cfg.items_min, cfg.items_max}},
              {"severity_mix", cfg.severity_mix},
              {"enhancement_fraction", cfg.enhancement_fraction},
              {"improving_fraction", cfg.improving_fraction},
              {"runs_per_release", cfg.runs_per_release},
              {"seed", cfg.seed},
              {"env", to_json(cfg.env)},
              {"env_schedule", schedule},
              {"os_factor", cfg.true_os_factor},
              {"clock_coefficient", cfg.clock_coefficient},
              {"open_items", cfg.open_items},
              {"plan_horizon", cfg.plan_horizon},
              {"version_prefix", cfg.version_prefix}};
    if (cfg.target_correlation) j["target_correlation"] = *cfg.target_correlation;
    return j;
}

json to_json(const SimTruth& truth) {
    return {{"slope", truth.slope},
            {"intercept", truth.intercept},
            {"os_factor", truth.os_factor},
            {"clock_coefficient", truth.clock_coefficient},
            {"noise_std_ms", truth.noise_std_ms},
            {"versions", truth.versions},
            {"per_release_cpv", truth.per_release_cpv},
            {"per_release_rt_ms", truth.per_release_rt_ms}};
}

json os_pairs_to_json(const std::vector<OsPair>& pairs) {
    json out = json::array();
    for (const auto& p : pairs) out.push_back({{"version", p.version}, {"rt32_ms", p.rt32_ms}, {"rt64_ms", p.rt64_ms}});
    return out;
}

std::vector<std::pair<double, double>> os_pairs_from_json(const json& doc) {
    if (!doc.is_array()) fail(ErrorCode::validation, "OS pairs: expected an array");
    std::vector<std::pair<double, double>> out;
    try {
        for (const auto& p : doc) out.emplace_back(p.at("rt32_ms").get<double>(), p.at("rt64_ms").get<double>());
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, std::string("OS pairs: ") + e.what());
    }
    return out;
}

void write_sim_output(const SimOutput& out, const std::filesystem::path& dir) {
    write_text_file(dir / "backlog.json", dump_json(backlog_to_json(out.dataset.items())));
    write_text_file(dir / "releases.json", dump_json(releases_to_json(out.dataset.releases())));
    write_text_file(dir / "truth.json", dump_json(to_json(out.truth)));
    write_text_file(dir / "os_pairs.json", dump_json(os_pairs_to_json(out.os_pairs)));
    write_text_file(dir / "plan.json", dump_json(out.plan));
}

} // namespace swphm
