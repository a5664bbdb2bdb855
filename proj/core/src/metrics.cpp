#include "dnnsr/metrics.hpp"

#include <cmath>
#include <limits>

#include "dnnsr/errors.hpp"

namespace dnnsr {

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(std::string(what) + ": shape mismatch");
}

}  // namespace

double psnr(const Matrix& x, const Matrix& xhat) {
    same_shape(x, xhat, "psnr");
    if (x.size() == 0) throw UndefinedMetric("psnr: empty matrix");
    const double peak = x.maxCoeff();
    if (!(peak > 0.0)) throw UndefinedMetric("psnr: max(X) must be positive");
    const double err = (xhat - x).squaredNorm();
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(static_cast<double>(x.size()) * peak * peak / err);
}

double mse_unobserved(const Matrix& x_true, const Matrix& xhat, const Matrix& mask) {
    same_shape(x_true, xhat, "mse_unobserved");
    same_shape(x_true, mask, "mse_unobserved");
    double num = 0.0;
    double den = 0.0;
    Index missing = 0;
    for (Index k = 0; k < x_true.size(); ++k) {
        if (mask.data()[k] != 0.0) continue;
        const double d = xhat.data()[k] - x_true.data()[k];
        num += d * d;
        den += x_true.data()[k] * x_true.data()[k];
        ++missing;
    }
    if (missing == 0) throw UndefinedMetric("mse_unobserved: no missing entries");
    if (den == 0.0) throw UndefinedMetric("mse_unobserved: ground truth is zero on the missing entries");
    return num / den;
}

SsimValue ssim_detail(const Matrix& x, const Matrix& xhat) {
    same_shape(x, xhat, "ssim");
    if (x.size() == 0) throw UndefinedMetric("ssim: empty matrix");
    const double n = static_cast<double>(x.size());
    const double mx = x.mean();
    const double my = xhat.mean();
    const auto dx = x.array() - mx;
    const auto dy = xhat.array() - my;
    const double vx = dx.square().sum() / n;
    const double vy = dy.square().sum() / n;
    const double cxy = (dx * dy).sum() / n;
    const double raw = (2.0 * mx * my + kSsimC1) * (2.0 * cxy + kSsimC2) /
                       ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
    return {std::clamp(raw, 0.0, 1.0), raw};
}

double nmae(std::span<const Rating> holdout, const Matrix& xhat, double x_max, double x_min) {
    if (holdout.empty()) throw UndefinedMetric("nmae: empty holdout");
    if (!(x_max > x_min)) throw ArgumentError("nmae: x_max must exceed x_min");
    double total = 0.0;
    for (const Rating& r : holdout) {
        if (r.user < 0 || r.user >= xhat.rows() || r.item < 0 || r.item >= xhat.cols()) {
            throw ShapeError("nmae: holdout index outside the prediction matrix");
        }
        total += std::abs(xhat(r.user, r.item) - r.value);
    }
    return total / ((x_max - x_min) * static_cast<double>(holdout.size()));
}

MetricSummary summarize(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("summarize: no values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (!std::isfinite(mean)) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

AggregateReport aggregate(std::span<const TrialReport> reports) {
    AggregateReport out;
    std::vector<double> p, m, s, e;
    bool all_psnr = true, all_mse = true, all_ssim = true, all_nmae = true;
    auto take = [](const std::optional<double>& v, std::vector<double>& into, bool& all) {
        if (v) into.push_back(*v);
        else all = false;
    };
    for (const TrialReport& r : reports) {
        if (out.method.empty()) out.method = r.method;
        if (!r.ok) {
            ++out.failures;
            continue;
        }
        ++out.trials;
        take(r.psnr, p, all_psnr);
        take(r.mse, m, all_mse);
        take(r.ssim, s, all_ssim);
        take(r.nmae, e, all_nmae);
    }
    if (out.trials == 0) throw ArgumentError("aggregate: no successful trials");
    if (all_psnr) out.psnr = summarize(p);
    if (all_mse) out.mse = summarize(m);
    if (all_ssim) out.ssim = summarize(s);
    if (all_nmae) out.nmae = summarize(e);
    return out;
}

}  // namespace dnnsr
