#include "dnnsr/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dnnsr/checkpoint.hpp"
#include "dnnsr/errors.hpp"
#include "dnnsr/reports.hpp"

namespace dnnsr {

std::string_view to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::synthetic: return "synthetic";
        case DatasetKind::image: return "image";
        case DatasetKind::movielens: return "movielens";
    }
    return "?";
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::dnn_nsr: return "dnn_nsr";
        case Method::aemc: return "aemc";
        case Method::soft_impute: return "soft_impute";
    }
    return "?";
}

std::string_view to_string(Normalization n) {
    switch (n) {
        case Normalization::none: return "none";
        case Normalization::max_abs: return "max_abs";
        case Normalization::rms: return "rms";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    if (name == "dnn_nsr" || name == "dnn-nsr") return Method::dnn_nsr;
    if (name == "aemc") return Method::aemc;
    if (name == "soft_impute" || name == "soft-impute") return Method::soft_impute;
    return std::nullopt;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double to_real(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError(key + ": expected a finite number, got '" + value + "'");
    }
    return out;
}

long long to_integer(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

Activation to_activation(const std::string& key, const std::string& value) {
    const auto a = parse_activation(trim(value));
    if (!a) throw ConfigError(key + ": unknown activation '" + value + "'");
    return *a;
}

using Setter = void (*)(ExperimentConfig&, const std::string&, const std::string&);

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table{
        {"dataset",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             const std::string s = trim(v);
             const auto colon = s.find(':');
             const std::string kind = s.substr(0, colon);
             const std::string path = colon == std::string::npos ? std::string() : s.substr(colon + 1);
             if (kind == "synthetic") {
                 c.dataset = DatasetKind::synthetic;
             } else if (kind == "image") {
                 c.dataset = DatasetKind::image;
                 if (!path.empty()) c.image_path = path;
             } else if (kind == "movielens") {
                 c.dataset = DatasetKind::movielens;
                 if (!path.empty()) c.ratings_path = path;
             } else {
                 throw ConfigError(k + ": expected synthetic, image[:path] or movielens[:path]");
             }
         }},
        {"m", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.m = to_integer(k, v); }},
        {"n", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n = to_integer(k, v); }},
        {"rank", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rank = to_integer(k, v); }},
        {"image", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.image_path = trim(v); }},
        {"ratings", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.ratings_path = trim(v); }},
        {"ratings_format",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             const auto f = parse_movielens_format(trim(v));
             if (!f) throw ConfigError(k + ": expected ml100k or ml1m");
             c.ratings_format = *f;
         }},
        {"rho", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rho = to_real(k, v); }},
        {"train_fraction",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train_fraction = to_real(k, v); }},
        {"trials",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.trials = static_cast<int>(to_integer(k, v));
         }},
        {"seed",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             const long long s = to_integer(k, v);
             if (s < 0) throw ConfigError(k + ": must be nonnegative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"method",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             const auto m = parse_method(trim(v));
             if (!m) throw ConfigError(k + ": expected dnn_nsr, aemc or soft_impute");
             c.method = *m;
         }},
        {"arch", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.train.hidden_dims = parse_arch(v); }},
        {"activation",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.train.hidden_activation = to_activation(k, v);
         }},
        {"output_activation",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.train.output_activation = to_activation(k, v);
         }},
        {"mu_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.mu_max = to_real(k, v); }},
        {"mu_min", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.mu_min = to_real(k, v); }},
        {"omega",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             const std::string s = trim(v);
             c.train.schedule.omega = s == "adaptive" ? OmegaPolicy::adaptive() : OmegaPolicy::constant(to_real(k, s));
         }},
        {"epochs",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.train.schedule.max_epochs = static_cast<int>(to_integer(k, v));
         }},
        {"warm_epochs",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.train.schedule.warm_epochs = static_cast<int>(to_integer(k, v));
         }},
        {"gamma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.gamma = to_real(k, v); }},
        {"box_m", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.box_m = to_real(k, v); }},
        {"alpha", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.alpha = to_real(k, v); }},
        {"beta", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.beta = to_real(k, v); }},
        {"lambda", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.lambda = to_real(k, v); }},
        {"delta_init", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.delta_init = to_real(k, v); }},
        {"delta_min", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.delta_min = to_real(k, v); }},
        {"delta_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.delta_max = to_real(k, v); }},
        {"s1", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.s1 = to_real(k, v); }},
        {"s2", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.s2 = to_real(k, v); }},
        {"s3", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.s3 = to_real(k, v); }},
        {"lipschitz_init",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.schedule.lipschitz_init = to_real(k, v); }},
        {"max_retries",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.train.schedule.max_retries = static_cast<int>(to_integer(k, v));
         }},
        {"aemc_step", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.aemc_step = to_real(k, v); }},
        {"tau", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.soft_impute.tau = to_real(k, v); }},
        {"soft_impute_iters",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.soft_impute.max_iters = static_cast<int>(to_integer(k, v));
         }},
        {"soft_impute_tol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.soft_impute.tol = to_real(k, v); }},
        {"normalize",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             const std::string s = trim(v);
             if (s == "none") c.normalize = Normalization::none;
             else if (s == "max_abs") c.normalize = Normalization::max_abs;
             else if (s == "rms") c.normalize = Normalization::rms;
             else throw ConfigError(k + ": expected none, max_abs or rms");
         }},
        {"normalize_target",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.normalize_target = to_real(k, v); }},
        {"out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = trim(v); }},
        {"write_trace", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.write_trace = to_bool(k, v); }},
        {"write_checkpoint",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.write_checkpoint = to_bool(k, v); }},
    };
    return table;
}

double normalization_scale(const ObservedMatrix& x, Normalization mode, double target) {
    if (mode == Normalization::none) return 1.0;
    double stat = 0.0;
    if (mode == Normalization::max_abs) {
        stat = x.data.cwiseAbs().maxCoeff();
    } else {
        stat = std::sqrt(x.data.squaredNorm() / static_cast<double>(std::max<Index>(x.omega_count(), 1)));
    }
    if (!(stat > 0.0)) return 1.0;
    return target / stat;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const NumericalFailure*>(&e)) return "numerical";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    return "data";
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ParseError("empty key", lineno);
        if (!out.emplace(key, trim(std::string_view(body).substr(eq + 1))).second) {
            throw ConfigError("duplicate key '" + key + "' on line " + std::to_string(lineno));
        }
    }
    return out;
}

std::map<std::string, std::string> parse_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_key_values(in);
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
    for (const auto& [name, set] : setters()) {
        if (name == key) {
            set(config, key, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void apply_settings(ExperimentConfig& config, const std::map<std::string, std::string>& settings) {
    for (const auto& [k, v] : settings) apply_setting(config, k, v);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& entry : setters()) out.push_back(entry.first);
        return out;
    }();
    return keys;
}

std::vector<Index> parse_arch(std::string_view text) {
    std::vector<Index> dims;
    std::string s = trim(text);
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        const long long d = to_integer("arch", s.substr(start, comma - start));
        if (d <= 0) throw ConfigError("arch: layer widths must be positive");
        dims.push_back(static_cast<Index>(d));
        start = comma + 1;
    }
    if (dims.empty()) throw ConfigError("arch: at least one hidden layer is required");
    return dims;
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    switch (dataset) {
        case DatasetKind::synthetic:
            if (m <= 0 || n <= 0 || rank <= 0 || rank >= std::min(m, n)) {
                throw ConfigError("synthetic data needs 0 < rank < min(m, n)");
            }
            break;
        case DatasetKind::image:
            if (image_path.empty() || !std::filesystem::exists(image_path)) {
                throw ConfigError("image file not found: " + image_path.string());
            }
            break;
        case DatasetKind::movielens:
            if (ratings_path.empty() || !std::filesystem::exists(ratings_path)) {
                throw ConfigError("ratings file not found: " + ratings_path.string());
            }
            if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("train_fraction must lie in (0, 1]");
            break;
    }
    if (dataset != DatasetKind::movielens && !(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
    if (!(normalize_target > 0.0)) throw ConfigError("normalize_target must be positive");
    if (train.hidden_dims.empty()) throw ConfigError("arch: at least one hidden layer is required");
    switch (method) {
        case Method::dnn_nsr: train.schedule.validate(train.hidden_dims.size()); break;
        case Method::aemc: {
            AemcConfig a = AemcConfig::matching(train);
            a.step = aemc_step;
            a.validate();
            break;
        }
        case Method::soft_impute: soft_impute.validate(); break;
    }
}

std::uint64_t trial_seed(std::uint64_t base, int trial) { return base + static_cast<std::uint64_t>(trial); }

std::uint64_t mask_seed(std::uint64_t seed) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

TrialReport run_trial(const ExperimentConfig& config, int trial, TrialArtifacts* artifacts,
                      const EpochCallback& on_epoch) {
    const auto start = std::chrono::steady_clock::now();
    TrialReport report;
    report.trial = trial;
    report.seed = trial_seed(config.seed, trial);
    report.method = std::string(to_string(config.method));

    TrialArtifacts local;
    TrialArtifacts& art = artifacts ? *artifacts : local;
    const std::uint64_t seed = report.seed;

    switch (config.dataset) {
        case DatasetKind::synthetic:
            art.truth = gen_synthetic(config.m, config.n, config.rank, seed);
            art.observed = apply_mask(art.truth, config.rho, mask_seed(seed));
            break;
        case DatasetKind::image:
            art.truth = image_to_matrix(read_png(config.image_path));
            art.observed = apply_mask(art.truth, config.rho, mask_seed(seed));
            break;
        case DatasetKind::movielens: {
            const RatingsTable table = parse_movielens(config.ratings_path, config.ratings_format);
            RatingsSplit split = split_ratings(table, config.train_fraction, mask_seed(seed));
            art.observed = std::move(split.train);
            art.holdout = std::move(split.holdout);
            art.truth = art.observed.data;
            break;
        }
    }

    const double scale = normalization_scale(art.observed, config.normalize, config.normalize_target);
    const ObservedMatrix scaled =
        scale == 1.0 ? art.observed : ObservedMatrix::from(art.observed.data * scale, art.observed.mask);

    Matrix completed;
    switch (config.method) {
        case Method::dnn_nsr: {
            TrainConfig tc = config.train;
            tc.seed = seed;
            TrainResult result = train(scaled, tc, on_epoch);
            completed = complete(result.params, scaled);
            report.final_q = result.records.empty() ? result.initial_q : result.records.back().q_value;
            report.epochs = static_cast<int>(result.records.size());
            art.params = std::move(result.params);
            art.records = std::move(result.records);
            break;
        }
        case Method::aemc: {
            AemcConfig ac = AemcConfig::matching(config.train);
            ac.step = config.aemc_step;
            ac.seed = seed;
            AemcResult result = train_aemc_run(scaled, ac);
            completed = complete(result.params, scaled);
            report.final_q = result.loss.empty() ? 0.0 : result.loss.back();
            report.epochs = static_cast<int>(result.loss.size());
            art.params = std::move(result.params);
            break;
        }
        case Method::soft_impute: {
            SoftImputeResult result = soft_impute_run(scaled, config.soft_impute);
            completed = std::move(result.completed);
            report.final_q = result.objective.back();
            report.epochs = result.iterations;
            break;
        }
    }
    art.completed = scale == 1.0 ? completed : Matrix(completed / scale);
    // Observed entries are restored exactly, undoing rounding from the rescale.
    for (Index k = 0; k < art.completed.size(); ++k)
        if (art.observed.mask.data()[k] != 0.0) art.completed.data()[k] = art.observed.data.data()[k];

    if (config.dataset == DatasetKind::movielens) {
        if (!art.holdout.empty()) report.nmae = nmae(art.holdout, art.completed);
    } else {
        report.psnr = psnr(art.truth, art.completed);
        if (art.observed.missing_count() > 0) report.mse = mse_unobserved(art.truth, art.completed, art.observed.mask);
        if (config.dataset == DatasetKind::image) {
            const SsimValue s = ssim_detail(art.truth, art.completed);
            report.ssim = s.value;
            report.ssim_raw = s.raw;
        }
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const bool write = !config.out_dir.empty();
    if (write) std::filesystem::create_directories(config.out_dir);

    ExperimentResult result;
    nlohmann::json meta_trials = nlohmann::json::array();
    const auto started = std::chrono::system_clock::now();
    for (int t = 0; t < config.trials; ++t) {
        TrialArtifacts art;
        TrialReport report;
        try {
            report = run_trial(config, t, &art);
        } catch (const std::exception& e) {
            report = TrialReport{};
            report.trial = t;
            report.seed = trial_seed(config.seed, t);
            report.method = std::string(to_string(config.method));
            report.ok = false;
            report.error = error_kind(e) + ": " + e.what();
            if (const auto* aborted = dynamic_cast<const TrainingAborted*>(&e)) art.records = aborted->records();
        }
        if (write) {
            const std::string tag = std::to_string(t);
            if (config.write_trace && config.method == Method::dnn_nsr && !art.records.empty()) {
                std::ostringstream s;
                write_trace_csv(s, art.records);
                write_text(config.out_dir / ("trace_" + tag + ".csv"), s.str());
            }
            if (report.ok && config.write_checkpoint && art.params) {
                save_checkpoint(*art.params, config.out_dir / ("model_" + tag + ".ckpt"));
            }
            if (report.ok && config.dataset == DatasetKind::image) {
                const Index w = art.truth.cols() / 3;
                write_png(matrix_to_image(art.completed, w, art.truth.rows()),
                          config.out_dir / ("completed_" + tag + ".png"));
            }
        }
        meta_trials.push_back({{"trial", t}, {"wall_time_s", report.wall_time}});
        result.reports.push_back(std::move(report));
    }

    bool any_ok = false;
    for (const auto& r : result.reports) any_ok = any_ok || r.ok;
    if (any_ok) result.aggregate = aggregate(result.reports);

    if (write) {
        std::ostringstream csv;
        write_trial_csv(csv, result.reports);
        write_text(config.out_dir / "metrics.csv", csv.str());
        std::ostringstream agg;
        agg << kAggregateCsvHeader << '\n';
        if (result.aggregate) write_aggregate_row(agg, std::string(to_string(config.method)), *result.aggregate);
        write_text(config.out_dir / "aggregate.csv", agg.str());
        write_text(config.out_dir / "metrics.json",
                   reports_to_json(result.reports, result.aggregate ? &*result.aggregate : nullptr));
        const std::time_t stamp = std::chrono::system_clock::to_time_t(started);
        char when[32];
        std::strftime(when, sizeof when, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&stamp));
        nlohmann::json meta{{"started_utc", when}, {"trials", std::move(meta_trials)}};
        write_text(config.out_dir / "metadata.json", meta.dump(2) + "\n");
    }
    return result;
}

}  // namespace dnnsr
