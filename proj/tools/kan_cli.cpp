// Command-line front end: data generation, (DP-)GD training, sweeps, NTK
// margin estimation and the verification suite.
//
// Exit codes: 0 success, 1 input/config error, 2 numerical failure,
// 3 verification failures present.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kan/data.hpp"
#include "kan/dpgd.hpp"
#include "kan/gd.hpp"
#include "kan/harness.hpp"
#include "kan/loss.hpp"
#include "kan/ntk.hpp"
#include "kan/rng.hpp"
#include "kan/verification.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitVerification = 3;

std::string mnist_dir_from_env(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    const char* env = std::getenv("MNIST_DIR");
    return env ? env : "";
}

struct TrainArgs {
    std::string task = "synth";
    int m = 32;
    int p = 8;
    double eta = 1.0;
    int T = 100;
    std::uint64_t seed = 0;
    std::string log_path;
    std::string params_out;
    std::string mnist_dir;
    // synthetic data defaults (desk scale)
    Eigen::Index n = 2000;
    Eigen::Index test_n = 800;
    int d = 10;
    double s = 4.0;
    double sigma_xi2 = 0.1;
    int k = 40;
    int record_every = 1;
};

void add_train_common(CLI::App* cmd, TrainArgs& args) {
    cmd->add_option("--task", args.task, "synth or mnist")->check(CLI::IsMember({"synth", "mnist"}));
    cmd->add_option("--m", args.m, "hidden width");
    cmd->add_option("--p", args.p, "basis count per edge");
    cmd->add_option("--eta", args.eta, "step size");
    cmd->add_option("--T", args.T, "iterations");
    cmd->add_option("--seed", args.seed, "initialization seed");
    cmd->add_option("--log", args.log_path, "trajectory CSV output path");
    cmd->add_option("--params-out", args.params_out, "final parameters JSON path");
    cmd->add_option("--mnist-dir", args.mnist_dir, "directory with MNIST IDX files");
    cmd->add_option("--n", args.n, "synthetic train size");
    cmd->add_option("--test-n", args.test_n, "synthetic test size");
    cmd->add_option("--d", args.d, "synthetic input dimension");
    cmd->add_option("--s", args.s, "synthetic signal strength");
    cmd->add_option("--sigma-xi2", args.sigma_xi2, "synthetic label-noise variance");
    cmd->add_option("--k", args.k, "synthetic latent knot count");
    cmd->add_option("--record-every", args.record_every, "log stride");
}

struct LoadedData {
    kan::SampleSet train;
    kan::SampleSet test;
};

LoadedData load_task_data(const TrainArgs& args) {
    LoadedData data;
    if (args.task == "synth") {
        kan::SyntheticConfig cfg;
        cfg.n = args.n + args.test_n;
        cfg.d = args.d;
        cfg.s = args.s;
        cfg.sigma_xi2 = args.sigma_xi2;
        cfg.k = args.k;
        cfg.seed = kan::derive_stream(args.seed, 0xD47Aull);
        const kan::SampleSet all = kan::gen_synthetic(cfg);
        data.train.x = all.x.topRows(args.n);
        data.train.y = all.y.head(args.n);
        data.train.provenance = all.provenance;
        data.test.x = all.x.bottomRows(args.test_n);
        data.test.y = all.y.tail(args.test_n);
        data.test.provenance = all.provenance;
    } else {
        const std::string dir = mnist_dir_from_env(args.mnist_dir);
        if (dir.empty())
            throw kan::input_error("mnist task requires --mnist-dir or MNIST_DIR");
        data.train = kan::load_mnist_binary(dir + "/train-images-idx3-ubyte",
                                            dir + "/train-labels-idx1-ubyte");
        data.test = kan::load_mnist_binary(dir + "/t10k-images-idx3-ubyte",
                                           dir + "/t10k-labels-idx1-ubyte");
    }
    return data;
}

void report_final(const kan::TrajectoryLog& log) {
    const kan::TrajectoryRow& last = log.rows.back();
    std::cout << "final: iter=" << last.iter << " train_loss=" << last.train_loss
              << " train_acc=" << last.train_acc << " test_loss=" << last.test_loss
              << " test_acc=" << last.test_acc << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-layer KAN training, DP-GD, and verification"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset as CSV");
    kan::SyntheticConfig gen_cfg;
    std::string gen_out = "synthetic.csv";
    gen->add_option("--n", gen_cfg.n, "sample count");
    gen->add_option("--d", gen_cfg.d, "input dimension");
    gen->add_option("--s", gen_cfg.s, "signal strength");
    gen->add_option("--sigma-xi2", gen_cfg.sigma_xi2, "label-noise variance");
    gen->add_option("--k", gen_cfg.k, "latent knot count");
    gen->add_option("--seed", gen_cfg.seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV path");

    // train
    auto* train_cmd = app.add_subcommand("train", "full-batch GD training");
    TrainArgs train_args;
    add_train_common(train_cmd, train_args);

    // dp-train
    auto* dp_cmd = app.add_subcommand("dp-train", "differentially private projected GD");
    TrainArgs dp_args;
    dp_args.eta = 1.0;
    add_train_common(dp_cmd, dp_args);
    double dp_epsilon = 2.0;
    double dp_delta = 0.0; // 0 -> 1/n
    double dp_r1 = 1.0, dp_r2 = 1.0;
    std::uint64_t dp_noise_seed = 1;
    std::string dp_calib_out;
    dp_cmd->add_option("--epsilon", dp_epsilon, "privacy epsilon");
    dp_cmd->add_option("--delta", dp_delta, "privacy delta (default 1/n)");
    dp_cmd->add_option("--r1", dp_r1, "projection radius for a");
    dp_cmd->add_option("--r2", dp_r2, "projection radius for c");
    dp_cmd->add_option("--noise-seed", dp_noise_seed, "noise stream seed");
    dp_cmd->add_option("--calibration-out", dp_calib_out,
                       "noise calibration JSON path (default <log>.calibration.json)");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "width/iteration sweep from a JSON config");
    std::string sweep_config_path;
    sweep_cmd->add_option("--config", sweep_config_path, "sweep JSON path")->required();

    // margin
    auto* margin_cmd = app.add_subcommand("margin", "NTK margin estimation");
    TrainArgs margin_args;
    add_train_common(margin_cmd, margin_args);
    int margin_iters = 2000;
    double margin_tol = 1e-6;
    std::string margin_out;
    margin_cmd->add_option("--iters", margin_iters, "subgradient iterations");
    margin_cmd->add_option("--tol", margin_tol, "separability tolerance");
    margin_cmd->add_option("--out", margin_out, "MarginResult JSON path (default stdout)");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant verification suite");
    std::string verify_level = "fast";
    verify_cmd->add_option("--level", verify_level, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const kan::SampleSet data = kan::gen_synthetic(gen_cfg);
            kan::save_samples_csv(gen_out, data);
            std::cout << "wrote " << data.size() << " samples to " << gen_out << "\n";
            return kExitOk;
        }

        if (*train_cmd) {
            const LoadedData data = load_task_data(train_args);
            const kan::ModelSpec spec =
                kan::ModelSpec::make(data.train.dim(), train_args.m, train_args.p);
            kan::GDConfig cfg;
            cfg.eta = train_args.eta;
            cfg.T = train_args.T;
            cfg.seed = train_args.seed;
            cfg.record_every = train_args.record_every;
            const kan::GDResult result = kan::train_gd(spec, data.train, &data.test, cfg);
            if (!train_args.log_path.empty()) result.log.save_csv(train_args.log_path);
            if (!train_args.params_out.empty())
                kan::save_params_json(train_args.params_out, spec, result.params);
            report_final(result.log);
            if (result.status != kan::TrainStatus::Ok) {
                std::cerr << "error: " << result.error << "\n";
                return kExitNumeric;
            }
            return kExitOk;
        }

        if (*dp_cmd) {
            const LoadedData data = load_task_data(dp_args);
            const kan::ModelSpec spec =
                kan::ModelSpec::make(data.train.dim(), dp_args.m, dp_args.p);
            kan::DPConfig cfg;
            cfg.epsilon = dp_epsilon;
            cfg.delta = dp_delta > 0 ? dp_delta : 1.0 / static_cast<double>(data.train.size());
            cfg.T = dp_args.T;
            cfg.eta = dp_args.eta;
            cfg.r1 = dp_r1;
            cfg.r2 = dp_r2;
            cfg.seed_init = dp_args.seed;
            cfg.seed_noise = dp_noise_seed;
            cfg.record_every = dp_args.record_every;
            const kan::DpResult result = kan::train_dpgd(spec, data.train, &data.test, cfg);
            if (!dp_args.log_path.empty()) result.log.save_csv(dp_args.log_path);
            std::string calib_path = dp_calib_out;
            if (calib_path.empty())
                calib_path = (dp_args.log_path.empty() ? std::string("dp_run") : dp_args.log_path) +
                             ".calibration.json";
            std::ofstream calib(calib_path);
            if (!calib) throw kan::input_error("cannot open for writing: " + calib_path);
            calib << result.calibration.to_json() << "\n";
            if (!dp_args.params_out.empty())
                kan::save_params_json(dp_args.params_out, spec, result.params);
            report_final(result.log);
            std::cout << "traj_avg_test_loss=" << result.traj_avg_test_loss
                      << " c0_event_held=" << (result.c0_event_held ? "true" : "false") << "\n";
            if (result.status != kan::TrainStatus::Ok) {
                std::cerr << "error: " << result.error << "\n";
                return kExitNumeric;
            }
            return kExitOk;
        }

        if (*sweep_cmd) {
            std::ifstream in(sweep_config_path);
            if (!in) throw kan::input_error("cannot open: " + sweep_config_path);
            const std::string text((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
            kan::SweepConfig cfg = kan::SweepConfig::from_json(text);
            if (cfg.task == kan::Task::Mnist) cfg.mnist_dir = mnist_dir_from_env(cfg.mnist_dir);
            const kan::SweepResult result = kan::run_sweep(cfg);
            const std::string base = cfg.output_path.empty() ? "sweep" : cfg.output_path;
            kan::emit_report(result, base);
            int failed = 0;
            for (const kan::RunRow& row : result.rows)
                if (!row.ok) ++failed;
            std::cout << "sweep complete: " << result.rows.size() << " runs, " << failed
                      << " failed; wrote " << base << ".raw.csv and " << base << ".agg.csv\n";
            return failed == static_cast<int>(result.rows.size()) && failed > 0 ? kExitNumeric
                                                                                : kExitOk;
        }

        if (*margin_cmd) {
            const LoadedData data = load_task_data(margin_args);
            const kan::ModelSpec spec =
                kan::ModelSpec::make(data.train.dim(), margin_args.m, margin_args.p);
            const kan::ParamVector params0 = kan::init_params(spec, margin_args.seed);
            const kan::NTKFeatures features = kan::ntk_features(spec, params0, data.train);
            const kan::MarginResult result =
                kan::estimate_margin(features.phi, data.train.y, margin_iters, margin_tol);
            const double tau = result.separable
                                   ? kan::suggest_tau(result.gamma_hat, data.train.size(),
                                                      margin_args.T,
                                                      1.0 / static_cast<double>(data.train.size()))
                                   : 0.0;
            const std::string doc = kan::margin_result_to_json(result, tau);
            if (margin_out.empty()) {
                std::cout << doc << "\n";
            } else {
                std::ofstream out(margin_out);
                if (!out) throw kan::input_error("cannot open for writing: " + margin_out);
                out << doc << "\n";
            }
            return kExitOk;
        }

        if (*verify_cmd) {
            const kan::VerifyLevel level =
                verify_level == "full" ? kan::VerifyLevel::Full : kan::VerifyLevel::Fast;
            const kan::VerificationReport report = kan::run_verification(level);
            report.print(std::cout);
            return report.all_passed() ? kExitOk : kExitVerification;
        }
    } catch (const kan::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitInput;
    } catch (const kan::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const kan::format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitInput;
    } catch (const kan::numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
