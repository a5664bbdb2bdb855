#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnnsr/datasets.hpp"
#include "dnnsr/numeric.hpp"

namespace dnnsr {

/// 10 log10(m n max(X)^2 / ||Xhat - X||_F^2). Exact recovery gives +infinity.
/// Throws ShapeError on mismatched shapes and UndefinedMetric when max(X) <= 0.
double psnr(const Matrix& x, const Matrix& xhat);

/// sum over unobserved (xhat - x)^2 / sum over unobserved x^2.
/// Throws UndefinedMetric when nothing is missing or the denominator is zero.
double mse_unobserved(const Matrix& x_true, const Matrix& xhat, const Matrix& mask);

struct SsimValue {
    double value = 0.0;  ///< clamped to [0, 1]
    double raw = 0.0;
};

inline constexpr double kSsimC1 = 0.01;
inline constexpr double kSsimC2 = 0.03;

/// Structural similarity from whole-matrix statistics (population moments):
/// (2 mu_x mu_y + C1)(2 s_xy + C2) / ((mu_x^2 + mu_y^2 + C1)(s_x^2 + s_y^2 + C2)).
SsimValue ssim_detail(const Matrix& x, const Matrix& xhat);
inline double ssim(const Matrix& x, const Matrix& xhat) { return ssim_detail(x, xhat).value; }

/// sum |xhat - x| / ((x_max - x_min) |holdout|), predictions read from `xhat`.
/// Throws UndefinedMetric on an empty holdout.
double nmae(std::span<const Rating> holdout, const Matrix& xhat, double x_max = 5.0, double x_min = 1.0);

struct TrialReport {
    int trial = 0;
    std::uint64_t seed = 0;
    std::string method;
    bool ok = true;
    std::string error;  ///< set when the trial failed
    std::optional<double> psnr;
    std::optional<double> mse;
    std::optional<double> ssim;
    std::optional<double> ssim_raw;
    std::optional<double> nmae;
    double final_q = 0.0;  ///< last objective value, 0 for soft_impute
    int epochs = 0;
    double wall_time = 0.0;  ///< seconds; never written to the metric CSV
};

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;  ///< population standard deviation
};

struct AggregateReport {
    std::string method;
    int trials = 0;      ///< successful trials
    int failures = 0;
    std::optional<MetricSummary> psnr;
    std::optional<MetricSummary> mse;
    std::optional<MetricSummary> ssim;
    std::optional<MetricSummary> nmae;
};

/// Mean and population SD over the successful reports; a metric is summarized
/// only when every successful report carries it. Throws ArgumentError when none succeeded.
AggregateReport aggregate(std::span<const TrialReport> reports);

MetricSummary summarize(std::span<const double> values);

}  // namespace dnnsr
