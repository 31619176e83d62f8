#include "swphm/regress.hpp"

#include "swphm/error.hpp"
#include "swphm/random.hpp"
#include "swphm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace swphm {

namespace {

struct Moments {
    double mean_x = 0.0, mean_y = 0.0;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
    Moments m;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        m.mean_x += x[i];
        m.mean_y += y[i];
    }
    m.mean_x /= n;
    m.mean_y /= n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mean_x;
        const double dy = y[i] - m.mean_y;
        m.sxx += dx * dx;
        m.syy += dy * dy;
        m.sxy += dx * dy;
    }
    return m;
}

void check_inputs(std::span<const double> x, std::span<const double> y, const char* what) {
    if (x.size() != y.size()) fail(ErrorCode::validation, std::string(what) + ": input lengths differ");
    if (x.size() < 3) fail(ErrorCode::validation, std::string(what) + ": at least 3 observations required");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            fail(ErrorCode::validation, std::string(what) + ": non-finite observation");
        }
    }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace

CorrelationReport pearson_corr(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y, "correlation");
    const Moments m = moments(x, y);
    if (m.sxx == 0.0 || m.syy == 0.0) fail(ErrorCode::degenerate, "correlation: zero variance");
    const double r = m.sxy / std::sqrt(m.sxx * m.syy);
    return {std::clamp(r, -1.0, 1.0), x.size()};
}

double adjusted_r_squared(double r_squared, std::size_t n) {
    if (n < 3) fail(ErrorCode::validation, "adjusted R-squared needs n >= 3");
    const double nn = static_cast<double>(n);
    return 1.0 - (1.0 - r_squared) * (nn - 1.0) / (nn - 2.0);
}

RegressionModel ols_fit(std::span<const double> cpv, std::span<const double> rt_ms) {
    check_inputs(cpv, rt_ms, "regression");
    const Moments m = moments(cpv, rt_ms);
    if (m.sxx == 0.0) fail(ErrorCode::degenerate, "regression: degenerate design (constant predictor)");

    RegressionModel model;
    model.n = cpv.size();
    model.slope = m.sxy / m.sxx;
    model.intercept = m.mean_y - model.slope * m.mean_x;

    double sse = 0.0;
    for (std::size_t i = 0; i < cpv.size(); ++i) {
        const double e = rt_ms[i] - (model.intercept + model.slope * cpv[i]);
        sse += e * e;
    }
    const double df = static_cast<double>(model.n) - 2.0;
    // constant response: nothing to explain
    model.r_squared = m.syy > 0.0 ? std::min(1.0, (m.sxy * m.sxy) / (m.sxx * m.syy)) : 0.0;
    model.adj_r_squared = adjusted_r_squared(model.r_squared, model.n);
    model.residual_std = std::sqrt(sse / df);
    if (sse == 0.0) {
        model.slope_p_value = model.slope != 0.0 ? 0.0 : 1.0;
    } else {
        const double se = model.residual_std / std::sqrt(m.sxx);
        model.slope_p_value = stats::student_t_two_sided_p(model.slope / se, df);
    }
    return model;
}

RegressionModel ols_fit(std::span<const XyPair> pairs) {
    std::vector<double> x, y;
    for (const auto& p : pairs) {
        x.push_back(p.x);
        y.push_back(p.y);
    }
    return ols_fit(x, y);
}

double predict_rt(const RegressionModel& model, double cpv) {
    if (!model.fitted()) fail(ErrorCode::not_trained, "regression model is not fitted");
    return model.intercept + model.slope * cpv;
}

TrainTestSplit split_train_test(std::span<const XyPair> pairs, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail(ErrorCode::validation, "train fraction must lie strictly between 0 and 1");
    }
    if (pairs.size() < 5) fail(ErrorCode::validation, "train/test split needs at least 5 observations");
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(pairs.size())));
    if (n_train < 3 || n_train >= pairs.size()) {
        fail(ErrorCode::validation, "train fraction leaves fewer than 3 training or no test observations");
    }
    const auto idx = shuffled_indices(pairs.size(), seed);
    TrainTestSplit out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        (i < n_train ? out.train : out.test).push_back(pairs[idx[i]]);
    }
    return out;
}

ErrorMetrics evaluate(const RegressionModel& model, std::span<const XyPair> test) {
    if (test.empty()) fail(ErrorCode::validation, "evaluation: empty test set");
    ErrorMetrics m;
    double sq = 0.0;
    for (const auto& p : test) {
        const double e = std::abs(p.y - predict_rt(model, p.x));
        m.mae_ms += e;
        sq += e * e;
        m.max_abs_err_ms = std::max(m.max_abs_err_ms, e);
    }
    const double n = static_cast<double>(test.size());
    m.mae_ms /= n;
    m.rmse_ms = std::sqrt(sq / n);
    return m;
}

CrossValidation cross_validate(std::span<const XyPair> pairs, std::uint64_t seed) {
    const std::size_t n = pairs.size();
    if (n < 4) fail(ErrorCode::validation, "cross validation needs at least 4 observations");
    CrossValidation cv;
    double total_abs = 0.0;
    std::size_t counted = 0;
    std::vector<std::size_t> fold_of(n);
    if (n <= 15) {
        cv.method = "loo";
        cv.folds = n;
        std::iota(fold_of.begin(), fold_of.end(), std::size_t{0});
    } else {
        cv.method = "5-fold";
        cv.folds = 5;
        const auto idx = shuffled_indices(n, seed);
        for (std::size_t i = 0; i < n; ++i) fold_of[idx[i]] = i % 5;
    }
    for (std::size_t f = 0; f < cv.folds; ++f) {
        std::vector<XyPair> train, test;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(pairs[i]);
        RegressionModel model;
        try {
            model = ols_fit(train);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::degenerate) throw;
            continue; // fold without spread in cpv
        }
        for (const auto& p : test) {
            total_abs += std::abs(p.y - predict_rt(model, p.x));
            ++counted;
        }
    }
    if (counted == 0) fail(ErrorCode::degenerate, "cross validation: no fold could be fitted");
    cv.mae_ms = total_abs / static_cast<double>(counted);
    return cv;
}

json to_json(const RegressionModel& model) {
    json j = {{"slope", model.slope},
              {"intercept", model.intercept},
              {"n", model.n},
              {"r_squared", model.r_squared},
              {"adj_r_squared", model.adj_r_squared},
              {"p_value", model.slope_p_value},
              {"residual_std", model.residual_std}};
    if (model.cluster_id) j["cluster_id"] = *model.cluster_id;
    return j;
}

RegressionModel regression_model_from_json(const json& doc) {
    try {
        RegressionModel m;
        m.slope = doc.at("slope").get<double>();
        m.intercept = doc.at("intercept").get<double>();
        m.n = doc.at("n").get<std::size_t>();
        m.r_squared = doc.value("r_squared", 0.0);
        m.adj_r_squared = doc.value("adj_r_squared", 0.0);
        m.slope_p_value = doc.value("p_value", 1.0);
        m.residual_std = doc.value("residual_std", 0.0);
        if (doc.contains("cluster_id") && !doc["cluster_id"].is_null()) m.cluster_id = doc["cluster_id"].get<int>();
        if (!std::isfinite(m.slope) || !std::isfinite(m.intercept)) {
            fail(ErrorCode::validation, "regression model: non-finite coefficients");
        }
        return m;
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, std::string("regression model: ") + e.what());
    }
}

json to_json(const ErrorMetrics& metrics) {
    return {{"mae_ms", metrics.mae_ms}, {"rmse_ms", metrics.rmse_ms}, {"max_abs_err_ms", metrics.max_abs_err_ms}};
}

json to_json(const CrossValidation& cv) {
    return {{"method", cv.method}, {"folds", cv.folds}, {"mae_ms", cv.mae_ms}};
}

} // namespace swphm
