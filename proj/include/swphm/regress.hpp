#pragma once

#include "swphm/data_model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace swphm {

struct CorrelationReport {
    double r = 0.0;
    std::size_t n = 0;
};

/// Univariate least-squares fit rt = intercept + slope * cpv.
struct RegressionModel {
    double slope = 0.0;     // ms per weight-factor unit
    double intercept = 0.0; // ms
    std::size_t n = 0;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    double slope_p_value = 1.0;
    double residual_std = 0.0;
    std::optional<int> cluster_id;

    bool fitted() const { return n > 0; }
    bool operator==(const RegressionModel&) const = default;
};

struct XyPair {
    double x = 0.0; // cumulative predictive variable
    double y = 0.0; // response time, ms
    bool operator==(const XyPair&) const = default;
};

/// Sample Pearson correlation. Requires n >= 3 and non-constant inputs.
CorrelationReport pearson_corr(std::span<const double> x, std::span<const double> y);

RegressionModel ols_fit(std::span<const double> cpv, std::span<const double> rt_ms);
RegressionModel ols_fit(std::span<const XyPair> pairs);

double adjusted_r_squared(double r_squared, std::size_t n);

double predict_rt(const RegressionModel& model, double cpv);

struct TrainTestSplit {
    std::vector<XyPair> train;
    std::vector<XyPair> test;
};

/// Seeded shuffle, then the first floor(train_fraction * n) pairs train.
TrainTestSplit split_train_test(std::span<const XyPair> pairs, double train_fraction = 0.8, std::uint64_t seed = 42);

struct ErrorMetrics {
    double mae_ms = 0.0;
    double rmse_ms = 0.0;
    double max_abs_err_ms = 0.0;
};

ErrorMetrics evaluate(const RegressionModel& model, std::span<const XyPair> test);

struct CrossValidation {
    std::string method; // "loo" or "5-fold"
    std::size_t folds = 0;
    double mae_ms = 0.0;
};

/// Leave-one-out for n <= 15, seeded 5-fold otherwise. Needs n >= 4.
CrossValidation cross_validate(std::span<const XyPair> pairs, std::uint64_t seed = 42);

json to_json(const RegressionModel& model);
RegressionModel regression_model_from_json(const json& doc);
json to_json(const ErrorMetrics& metrics);
json to_json(const CrossValidation& cv);

} // namespace swphm
