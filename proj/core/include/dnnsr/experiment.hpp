#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnnsr/baselines.hpp"
#include "dnnsr/datasets.hpp"
#include "dnnsr/metrics.hpp"
#include "dnnsr/trainer.hpp"

namespace dnnsr {

enum class DatasetKind { synthetic, image, movielens };
enum class Method { dnn_nsr, aemc, soft_impute };
/// How observed values are rescaled before training. Completions are mapped
/// back before any metric is computed.
enum class Normalization { none, max_abs, rms };

std::string_view to_string(DatasetKind k);
std::string_view to_string(Method m);
std::string_view to_string(Normalization n);
std::optional<Method> parse_method(std::string_view name);

struct ExperimentConfig {
    DatasetKind dataset = DatasetKind::synthetic;
    Index m = 300;
    Index n = 200;
    Index rank = 10;
    std::filesystem::path image_path;
    std::filesystem::path ratings_path;
    MovieLensFormat ratings_format = MovieLensFormat::ml100k_tab;

    double rho = 0.5;             ///< missing fraction (synthetic, image)
    double train_fraction = 0.7;  ///< ratings used for training (movielens)
    int trials = 1;
    std::uint64_t seed = 0;
    Method method = Method::dnn_nsr;

    TrainConfig train;            ///< architecture and schedule, shared with aemc
    double aemc_step = 1e-3;
    SoftImputeConfig soft_impute;
    Normalization normalize = Normalization::none;
    double normalize_target = 1.0;  ///< max |x| or rms of observed entries after scaling

    std::filesystem::path out_dir;  ///< empty: nothing written
    bool write_trace = true;
    bool write_checkpoint = true;

    /// Throws ConfigError on invalid values or missing input files.
    void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Throws ParseError on
/// lines without '=' and ConfigError on duplicate keys.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> parse_key_values(const std::filesystem::path& path);

/// Applies one setting; throws ConfigError for unknown keys or malformed values.
/// Recognized keys are listed by config_keys().
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
void apply_settings(ExperimentConfig& config, const std::map<std::string, std::string>& settings);
const std::vector<std::string>& config_keys();

/// Parses "256,128,256" into layer widths. Throws ConfigError.
std::vector<Index> parse_arch(std::string_view text);

/// Everything produced by one trial besides the report.
struct TrialArtifacts {
    Matrix truth;       ///< ground truth on the original scale (ratings: zero-filled training matrix)
    ObservedMatrix observed;
    Matrix completed;   ///< original scale
    std::optional<NetworkParams> params;
    std::vector<EpochRecord> records;
    std::vector<Rating> holdout;
};

/// Seeds used by trial t: data and network from base + t, the mask from a mixed copy.
std::uint64_t trial_seed(std::uint64_t base, int trial);
std::uint64_t mask_seed(std::uint64_t trial_seed);

/// Runs one trial without touching the filesystem (beyond reading inputs).
TrialReport run_trial(const ExperimentConfig& config, int trial, TrialArtifacts* artifacts = nullptr,
                      const EpochCallback& on_epoch = {});

struct ExperimentResult {
    std::vector<TrialReport> reports;
    std::optional<AggregateReport> aggregate;  ///< empty when every trial failed
};

/// Runs all trials; a failing trial is recorded and the run continues. Writes to
/// config.out_dir when set: metrics.csv, aggregate.csv, metrics.json, metadata.json,
/// trace_<t>.csv, model_<t>.ckpt and (images) completed_<t>.png.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace dnnsr
