#include "dnnsr/reports.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "dnnsr/errors.hpp"

namespace dnnsr {

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

nlohmann::json json_real(double v) {
    if (std::isfinite(v)) return v;
    return format_real(v);
}

nlohmann::json json_opt(const std::optional<double>& v) { return v ? json_real(*v) : nlohmann::json(nullptr); }

nlohmann::json json_summary(const std::optional<MetricSummary>& s) {
    if (!s) return nullptr;
    return {{"mean", json_real(s->mean)}, {"sd", json_real(s->sd)}};
}

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_trial_csv(std::ostream& out, std::span<const TrialReport> reports) {
    out << kTrialCsvHeader << '\n';
    for (const TrialReport& r : reports) {
        const std::optional<double> x100 = r.mse ? std::optional<double>(*r.mse * 100.0) : std::nullopt;
        out << r.trial << ',' << r.seed << ',' << r.method << ',' << (r.ok ? "ok" : "failed") << ','
            << opt(r.psnr) << ',' << opt(r.mse) << ',' << opt(x100) << ',' << opt(r.ssim) << ','
            << opt(r.ssim_raw) << ',' << opt(r.nmae) << ',' << format_real(r.final_q) << ',' << r.epochs << '\n';
    }
}

void write_aggregate_row(std::ostream& out, const std::string& label, const AggregateReport& a) {
    auto mean = [](const std::optional<MetricSummary>& s) { return s ? format_real(s->mean) : std::string(); };
    auto sd = [](const std::optional<MetricSummary>& s) { return s ? format_real(s->sd) : std::string(); };
    const std::string x100 = a.mse ? format_real(a.mse->mean * 100.0) : std::string();
    out << label << ',' << a.method << ',' << a.trials << ',' << a.failures << ',' << mean(a.psnr) << ','
        << sd(a.psnr) << ',' << mean(a.mse) << ',' << sd(a.mse) << ',' << x100 << ',' << mean(a.ssim) << ','
        << sd(a.ssim) << ',' << mean(a.nmae) << ',' << sd(a.nmae) << '\n';
}

void write_trace_csv(std::ostream& out, std::span<const EpochRecord> records) {
    out << kTraceCsvHeader << '\n';
    for (const EpochRecord& r : records) {
        out << r.epoch << ',' << format_real(r.q_value) << ',' << format_real(r.mu_theta) << ','
            << format_real(r.omega) << ',' << format_real(r.lipschitz_theta) << ',' << r.backtrack_count << ','
            << format_real(r.c1) << ',' << format_real(r.c2) << '\n';
    }
}

std::string reports_to_json(std::span<const TrialReport> reports, const AggregateReport* agg) {
    nlohmann::json trials = nlohmann::json::array();
    for (const TrialReport& r : reports) {
        nlohmann::json t{{"trial", r.trial},
                         {"seed", r.seed},
                         {"method", r.method},
                         {"ok", r.ok},
                         {"psnr", json_opt(r.psnr)},
                         {"mse", json_opt(r.mse)},
                         {"mse_x100", json_opt(r.mse ? std::optional<double>(*r.mse * 100.0) : std::nullopt)},
                         {"ssim", json_opt(r.ssim)},
                         {"ssim_raw", json_opt(r.ssim_raw)},
                         {"nmae", json_opt(r.nmae)},
                         {"final_q", json_real(r.final_q)},
                         {"epochs", r.epochs}};
        if (!r.ok) t["error"] = r.error;
        trials.push_back(std::move(t));
    }
    nlohmann::json root{{"trials", std::move(trials)}};
    if (agg) {
        root["aggregate"] = {{"method", agg->method},     {"trials", agg->trials},
                             {"failures", agg->failures}, {"psnr", json_summary(agg->psnr)},
                             {"mse", json_summary(agg->mse)}, {"ssim", json_summary(agg->ssim)},
                             {"nmae", json_summary(agg->nmae)}};
    }
    return root.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace dnnsr
