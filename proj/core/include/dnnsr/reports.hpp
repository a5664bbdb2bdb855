#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "dnnsr/metrics.hpp"
#include "dnnsr/trainer.hpp"

namespace dnnsr {

/// trial,seed,method,status,psnr,mse,mse_x100,ssim,ssim_raw,nmae,final_q,epochs
inline constexpr const char* kTrialCsvHeader =
    "trial,seed,method,status,psnr,mse,mse_x100,ssim,ssim_raw,nmae,final_q,epochs";
/// label,method,trials,failures,psnr_mean,psnr_sd,mse_mean,mse_sd,mse_x100_mean,ssim_mean,ssim_sd,nmae_mean,nmae_sd
inline constexpr const char* kAggregateCsvHeader =
    "label,method,trials,failures,psnr_mean,psnr_sd,mse_mean,mse_sd,mse_x100_mean,ssim_mean,ssim_sd,nmae_mean,nmae_sd";
inline constexpr const char* kTraceCsvHeader = "epoch,Q,mu_theta,omega,L_theta,backtracks,c1,c2";

/// Shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite values.
std::string format_real(double v);

void write_trial_csv(std::ostream& out, std::span<const TrialReport> reports);
void write_aggregate_row(std::ostream& out, const std::string& label, const AggregateReport& agg);
void write_trace_csv(std::ostream& out, std::span<const EpochRecord> records);
/// Metric fields only; wall time is excluded so reruns are byte-identical.
std::string reports_to_json(std::span<const TrialReport> reports, const AggregateReport* agg);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dnnsr
