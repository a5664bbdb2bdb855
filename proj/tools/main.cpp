#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dnnsr/baselines.hpp"
#include "dnnsr/checkpoint.hpp"
#include "dnnsr/datasets.hpp"
#include "dnnsr/errors.hpp"
#include "dnnsr/experiment.hpp"
#include "dnnsr/metrics.hpp"
#include "dnnsr/reports.hpp"
#include "dnnsr/trainer.hpp"

namespace fs = std::filesystem;
using namespace dnnsr;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

/// Experiment options shared by train, experiment and sweep. Every flag maps to
/// a config-file key; flags override the file.
struct ConfigFlags {
    std::string config_file;
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;

    void attach(CLI::App& app, bool with_out) {
        app.add_option("--config", config_file, "key = value experiment file")->check(CLI::ExistingFile);
        add(app, "--dataset", "dataset", "synthetic | image:PATH | movielens:PATH");
        add(app, "--rho", "rho", "fraction of entries removed");
        add(app, "--trials", "trials", "number of trials (seeds base .. base + trials - 1)");
        add(app, "--seed", "seed", "base seed");
        add(app, "--method", "method", "dnn_nsr | aemc | soft_impute");
        add(app, "--arch", "arch", "hidden layer widths, e.g. 256,128,256");
        add(app, "--mu-max", "mu_max", "initial penalty parameter");
        add(app, "--mu-min", "mu_min", "final penalty parameter");
        add(app, "--omega", "omega", "extrapolation weight: adaptive or a number");
        add(app, "--epochs", "epochs", "maximum number of epochs K");
        if (with_out) add(app, "--out", "out", "output directory");
        app.add_option("--set", sets, "extra KEY=VALUE settings (repeatable)");
    }

    void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        app.add_option_function<std::string>(
            flag, [this, key](const std::string& v) { flags[key] = v; }, help);
    }

    ExperimentConfig build() const {
        ExperimentConfig cfg;
        if (!config_file.empty()) apply_settings(cfg, parse_key_values(fs::path(config_file)));
        for (const auto& [k, v] : flags) apply_setting(cfg, k, v);
        for (const std::string& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
            apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        return cfg;
    }
};

ObservedMatrix load_observed(const std::string& data, const std::string& mask) {
    return ObservedMatrix::from(read_matrix_csv(fs::path(data)), read_matrix_csv(fs::path(mask)));
}

void print_aggregate(const std::string& label, const ExperimentResult& r) {
    std::cout << kAggregateCsvHeader << '\n';
    if (r.aggregate) write_aggregate_row(std::cout, label, *r.aggregate);
}

int exit_code_for_failures(const ExperimentResult& r) {
    if (r.aggregate) return kOk;
    for (const auto& t : r.reports) {
        if (t.error.rfind("numerical", 0) == 0) return kNumerical;
        if (t.error.rfind("config", 0) == 0) return kConfig;
    }
    return kData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix completion with nonsmooth-regularized autoencoders"};
    app.require_subcommand(1);

    // synthesize
    auto* syn = app.add_subcommand("synthesize", "generate a synthetic nonlinear low-rank matrix as CSV");
    Index syn_m = 300, syn_n = 200, syn_r = 10;
    std::uint64_t syn_seed = 0;
    std::string syn_out;
    syn->add_option("--m", syn_m, "rows")->capture_default_str();
    syn->add_option("--n", syn_n, "columns")->capture_default_str();
    syn->add_option("--rank", syn_r, "latent rank")->capture_default_str();
    syn->add_option("--seed", syn_seed, "seed")->capture_default_str();
    syn->add_option("--out", syn_out, "output CSV")->required();

    // mask
    auto* msk = app.add_subcommand("mask", "remove a random fraction of entries");
    std::string msk_in, msk_out;
    double msk_rho = 0.5;
    std::uint64_t msk_seed = 0;
    msk->add_option("--input", msk_in, "matrix CSV")->required()->check(CLI::ExistingFile);
    msk->add_option("--rho", msk_rho, "fraction removed")->capture_default_str();
    msk->add_option("--seed", msk_seed, "seed")->capture_default_str();
    msk->add_option("--out", msk_out, "output directory (observed.csv, mask.csv)")->required();

    // train
    auto* trn = app.add_subcommand("train", "train on an observed matrix");
    ConfigFlags trn_flags;
    std::string trn_data, trn_mask, trn_out;
    trn_flags.attach(*trn, false);
    trn->add_option("--data", trn_data, "observed matrix CSV (zeros where missing)")->required()->check(CLI::ExistingFile);
    trn->add_option("--mask", trn_mask, "0/1 mask CSV")->required()->check(CLI::ExistingFile);
    trn->add_option("--out", trn_out, "output directory (model.ckpt, trace.csv or completed.csv)")->required();

    // complete
    auto* cmp = app.add_subcommand("complete", "fill missing entries with a trained model");
    std::string cmp_model, cmp_data, cmp_mask, cmp_out;
    cmp->add_option("--model", cmp_model, "checkpoint")->required()->check(CLI::ExistingFile);
    cmp->add_option("--data", cmp_data, "observed matrix CSV")->required()->check(CLI::ExistingFile);
    cmp->add_option("--mask", cmp_mask, "0/1 mask CSV")->required()->check(CLI::ExistingFile);
    cmp->add_option("--out", cmp_out, "completed matrix CSV")->required();

    // evaluate
    auto* evl = app.add_subcommand("evaluate", "score a completed matrix against ground truth");
    std::string evl_truth, evl_completed, evl_mask, evl_out;
    bool evl_ssim = false;
    evl->add_option("--truth", evl_truth, "ground truth CSV")->required()->check(CLI::ExistingFile);
    evl->add_option("--completed", evl_completed, "completed CSV")->required()->check(CLI::ExistingFile);
    evl->add_option("--mask", evl_mask, "0/1 mask CSV")->required()->check(CLI::ExistingFile);
    evl->add_flag("--ssim", evl_ssim, "also report SSIM");
    evl->add_option("--out", evl_out, "write the JSON report here as well");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run seeded trials and aggregate metrics");
    ConfigFlags exp_flags;
    exp_flags.attach(*exp, true);

    // sweep
    auto* swp = app.add_subcommand("sweep", "repeat an experiment over values of one setting");
    ConfigFlags swp_flags;
    std::string swp_param;
    std::vector<std::string> swp_values;
    swp_flags.attach(*swp, true);
    swp->add_option("--param", swp_param, "setting to vary, e.g. mu_max")->required();
    swp->add_option("--values", swp_values, "comma-separated values")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*syn) {
            write_matrix_csv(fs::path(syn_out), gen_synthetic(syn_m, syn_n, syn_r, syn_seed));
        } else if (*msk) {
            const ObservedMatrix x = apply_mask(read_matrix_csv(fs::path(msk_in)), msk_rho, msk_seed);
            fs::create_directories(msk_out);
            write_matrix_csv(fs::path(msk_out) / "observed.csv", x.data);
            write_matrix_csv(fs::path(msk_out) / "mask.csv", x.mask);
        } else if (*trn) {
            ExperimentConfig cfg = trn_flags.build();
            cfg.validate();
            const ObservedMatrix x = load_observed(trn_data, trn_mask);
            fs::create_directories(trn_out);
            const fs::path out(trn_out);
            switch (cfg.method) {
                case Method::dnn_nsr: {
                    TrainConfig tc = cfg.train;
                    tc.seed = cfg.seed;
                    const TrainResult r = train(x, tc);
                    save_checkpoint(r.params, out / "model.ckpt");
                    std::ostringstream s;
                    write_trace_csv(s, r.records);
                    write_text(out / "trace.csv", s.str());
                    break;
                }
                case Method::aemc: {
                    AemcConfig ac = AemcConfig::matching(cfg.train);
                    ac.step = cfg.aemc_step;
                    ac.seed = cfg.seed;
                    save_checkpoint(train_aemc(x, ac), out / "model.ckpt");
                    break;
                }
                case Method::soft_impute:
                    write_matrix_csv(out / "completed.csv", soft_impute(x, cfg.soft_impute));
                    break;
            }
        } else if (*cmp) {
            const NetworkParams params = load_checkpoint(fs::path(cmp_model));
            write_matrix_csv(fs::path(cmp_out), complete(params, load_observed(cmp_data, cmp_mask)));
        } else if (*evl) {
            const Matrix truth = read_matrix_csv(fs::path(evl_truth));
            const Matrix completed = read_matrix_csv(fs::path(evl_completed));
            const Matrix mask = read_matrix_csv(fs::path(evl_mask));
            TrialReport r;
            r.method = "evaluate";
            r.psnr = psnr(truth, completed);
            r.mse = mse_unobserved(truth, completed, mask);
            if (evl_ssim) {
                const SsimValue s = ssim_detail(truth, completed);
                r.ssim = s.value;
                r.ssim_raw = s.raw;
            }
            const std::vector<TrialReport> one{r};
            const std::string json = reports_to_json(one, nullptr);
            std::cout << json;
            if (!evl_out.empty()) write_text(fs::path(evl_out), json);
        } else if (*exp) {
            const ExperimentConfig cfg = exp_flags.build();
            const ExperimentResult r = run_experiment(cfg);
            print_aggregate(std::string(to_string(cfg.method)), r);
            return exit_code_for_failures(r);
        } else if (*swp) {
            const ExperimentConfig base = swp_flags.build();
            std::ostringstream table;
            table << "param,value," << kAggregateCsvHeader << '\n';
            int failed_values = 0;
            for (const std::string& value : swp_values) {
                ExperimentConfig cfg = base;
                apply_setting(cfg, swp_param, value);
                if (!base.out_dir.empty()) cfg.out_dir = base.out_dir / (swp_param + "=" + value);
                const ExperimentResult r = run_experiment(cfg);
                if (!r.aggregate) {
                    ++failed_values;
                    continue;
                }
                table << swp_param << ',' << value << ',';
                write_aggregate_row(table, std::string(to_string(cfg.method)), *r.aggregate);
            }
            std::cout << table.str();
            if (!base.out_dir.empty()) write_text(base.out_dir / "sweep.csv", table.str());
            if (failed_values == static_cast<int>(swp_values.size())) return kNumerical;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
