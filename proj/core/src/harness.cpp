#include "kan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "kan/rng.hpp"

namespace kan {

namespace {

constexpr std::uint64_t kSeedData = 0xD47Aull;
constexpr std::uint64_t kSeedInit = 0x1217ull;
constexpr std::uint64_t kSeedNoise = 0x401Eull;

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string task_name(Task t) { return t == Task::Synth ? "synth" : "mnist"; }
std::string mode_name(Mode m) { return m == Mode::Gd ? "gd" : "dpgd"; }
std::string axis_name(SweepAxis a) { return a == SweepAxis::Width ? "width" : "iters"; }

Task task_from(const std::string& s) {
    if (s == "synth") return Task::Synth;
    if (s == "mnist") return Task::Mnist;
    throw config_error("unknown task: " + s);
}
Mode mode_from(const std::string& s) {
    if (s == "gd") return Mode::Gd;
    if (s == "dpgd") return Mode::Dpgd;
    throw config_error("unknown mode: " + s);
}
SweepAxis axis_from(const std::string& s) {
    if (s == "width") return SweepAxis::Width;
    if (s == "iters") return SweepAxis::Iters;
    throw config_error("unknown sweep_axis: " + s);
}

struct RunTask {
    int axis_value;
    std::uint64_t seed;
};

} // namespace

void SweepConfig::validate() const {
    if (axis_values.empty()) throw config_error("sweep requires non-empty axis_values");
    for (std::size_t i = 1; i < axis_values.size(); ++i)
        if (axis_values[i] <= axis_values[i - 1])
            throw config_error("sweep axis_values must be strictly increasing");
    if (seeds.empty()) throw config_error("sweep requires non-empty seeds");
    if (m < 1 || p < 1) throw config_error("sweep requires positive m, p");
    if (task == Task::Mnist && mnist_dir.empty())
        throw config_error("mnist sweep requires mnist_dir");
    if (!(change_point_fraction > 0 && change_point_fraction < 1))
        throw config_error("change_point_fraction must be in (0,1)");
}

SweepConfig SweepConfig::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad sweep JSON: ") + e.what());
    }
    SweepConfig cfg;
    try {
        cfg.task = task_from(doc.at("task").get<std::string>());
        cfg.mode = mode_from(doc.at("mode").get<std::string>());
        cfg.axis = axis_from(doc.at("sweep_axis").get<std::string>());
        cfg.axis_values = doc.at("axis_values").get<std::vector<int>>();
        cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        if (doc.contains("m")) cfg.m = doc["m"].get<int>();
        if (doc.contains("p")) cfg.p = doc["p"].get<int>();
        if (doc.contains("basis"))
            cfg.basis_family = basis_family_from_string(doc["basis"].get<std::string>());
        if (doc.contains("activation"))
            cfg.activation = activation_family_from_string(doc["activation"].get<std::string>());
        if (doc.contains("fixed")) {
            const auto& f = doc["fixed"];
            if (f.contains("eta")) { cfg.gd.eta = f["eta"].get<double>(); cfg.dp.eta = cfg.gd.eta; }
            if (f.contains("T")) { cfg.gd.T = f["T"].get<int>(); cfg.dp.T = cfg.gd.T; }
            if (f.contains("epsilon")) cfg.dp.epsilon = f["epsilon"].get<double>();
            if (f.contains("delta")) cfg.dp.delta = f["delta"].get<double>();
            if (f.contains("r1")) cfg.dp.r1 = f["r1"].get<double>();
            if (f.contains("r2")) cfg.dp.r2 = f["r2"].get<double>();
        }
        if (doc.contains("synth")) {
            const auto& s = doc["synth"];
            if (s.contains("n")) cfg.synth.n = s["n"].get<Eigen::Index>();
            if (s.contains("d")) cfg.synth.d = s["d"].get<int>();
            if (s.contains("s")) cfg.synth.s = s["s"].get<double>();
            if (s.contains("sigma_xi2")) cfg.synth.sigma_xi2 = s["sigma_xi2"].get<double>();
            if (s.contains("k")) cfg.synth.k = s["k"].get<int>();
            if (s.contains("test_n")) cfg.synth_test_n = s["test_n"].get<Eigen::Index>();
        }
        if (doc.contains("mnist_dir")) cfg.mnist_dir = doc["mnist_dir"].get<std::string>();
        if (doc.contains("output_path")) cfg.output_path = doc["output_path"].get<std::string>();
        if (doc.contains("change_point_fraction"))
            cfg.change_point_fraction = doc["change_point_fraction"].get<double>();
        if (doc.contains("workers")) cfg.workers = doc["workers"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad sweep JSON field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string SweepConfig::to_json() const {
    nlohmann::json doc;
    doc["task"] = task_name(task);
    doc["mode"] = mode_name(mode);
    doc["sweep_axis"] = axis_name(axis);
    doc["axis_values"] = axis_values;
    doc["seeds"] = seeds;
    doc["m"] = m;
    doc["p"] = p;
    doc["basis"] = to_string(basis_family);
    doc["activation"] = to_string(activation);
    doc["fixed"] = {{"eta", mode == Mode::Gd ? gd.eta : dp.eta},
                    {"T", mode == Mode::Gd ? gd.T : dp.T},
                    {"epsilon", dp.epsilon},
                    {"delta", dp.delta},
                    {"r1", dp.r1},
                    {"r2", dp.r2}};
    doc["synth"] = {{"n", synth.n},       {"d", synth.d}, {"s", synth.s},
                    {"sigma_xi2", synth.sigma_xi2}, {"k", synth.k},
                    {"test_n", synth_test_n}};
    if (!mnist_dir.empty()) doc["mnist_dir"] = mnist_dir;
    if (!output_path.empty()) doc["output_path"] = output_path;
    doc["change_point_fraction"] = change_point_fraction;
    doc["workers"] = workers;
    return doc.dump(2);
}

namespace {

struct MnistData {
    SampleSet train;
    SampleSet test;
};

MnistData load_mnist_dir(const std::string& dir) {
    MnistData data;
    data.train = load_mnist_binary(dir + "/train-images-idx3-ubyte",
                                   dir + "/train-labels-idx1-ubyte");
    data.test = load_mnist_binary(dir + "/t10k-images-idx3-ubyte",
                                  dir + "/t10k-labels-idx1-ubyte");
    return data;
}

RunRow execute_run(const SweepConfig& cfg, const RunTask& task, const MnistData* mnist) {
    RunRow row;
    row.axis_value = task.axis_value;
    row.seed = task.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        const int width = cfg.axis == SweepAxis::Width ? task.axis_value : cfg.m;
        const int iters = cfg.axis == SweepAxis::Iters ? task.axis_value
                                                       : (cfg.mode == Mode::Gd ? cfg.gd.T : cfg.dp.T);

        SampleSet train, test;
        int d;
        if (cfg.task == Task::Synth) {
            SyntheticConfig gen = cfg.synth;
            gen.n = cfg.synth.n + cfg.synth_test_n;
            gen.seed = derive_stream(task.seed, kSeedData);
            const SampleSet all = gen_synthetic(gen);
            // iid rows: plain prefix split
            train.x = all.x.topRows(cfg.synth.n);
            train.y = all.y.head(cfg.synth.n);
            train.provenance = all.provenance;
            test.x = all.x.bottomRows(cfg.synth_test_n);
            test.y = all.y.tail(cfg.synth_test_n);
            test.provenance = all.provenance;
            d = cfg.synth.d;
        } else {
            train = mnist->train;
            test = mnist->test;
            d = train.dim();
        }

        const ModelSpec spec = ModelSpec::make(d, width, cfg.p, cfg.basis_family, cfg.activation);
        if (cfg.mode == Mode::Gd) {
            GDConfig run_cfg = cfg.gd;
            run_cfg.T = iters;
            run_cfg.record_every = std::max(1, iters); // endpoints only
            run_cfg.seed = derive_stream(task.seed, kSeedInit);
            const GDResult res = train_gd(spec, train, &test, run_cfg);
            if (res.status != TrainStatus::Ok) throw numeric_error(res.error);
            const TrajectoryRow& last = res.log.rows.back();
            row.final_train_loss = last.train_loss;
            row.final_test_loss = last.test_loss;
            row.final_train_acc = last.train_acc;
            row.final_test_acc = last.test_acc;
            row.traj_avg_test_loss = std::numeric_limits<double>::quiet_NaN();
        } else {
            DPConfig run_cfg = cfg.dp;
            run_cfg.T = iters;
            run_cfg.record_every = std::max(1, iters);
            if (run_cfg.delta <= 0) run_cfg.delta = 1.0 / static_cast<double>(train.size());
            run_cfg.seed_init = derive_stream(task.seed, kSeedInit);
            run_cfg.seed_noise = derive_stream(task.seed, kSeedNoise);
            const DpResult res = train_dpgd(spec, train, &test, run_cfg);
            if (res.status != TrainStatus::Ok) throw numeric_error(res.error);
            const TrajectoryRow& last = res.log.rows.back();
            row.final_train_loss = last.train_loss;
            row.final_test_loss = last.test_loss;
            row.final_train_acc = last.train_acc;
            row.final_test_acc = last.test_acc;
            row.traj_avg_test_loss = res.traj_avg_test_loss;
        }
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

struct Stats {
    double mean = 0;
    double se = 0;
};

Stats mean_se(const std::vector<double>& values) {
    Stats s;
    if (values.empty()) return s;
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        s.se = sd / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

} // namespace

int change_point_index(const std::vector<double>& means, double fraction) {
    const int k = static_cast<int>(means.size());
    if (k <= 1) return 0;
    const double lo = *std::min_element(means.begin(), means.end());
    const double hi = *std::max_element(means.begin(), means.end());
    const double threshold = fraction * (hi - lo);
    for (int i = 0; i < k; ++i) {
        bool flat_after = true;
        for (int j = i; j + 1 < k; ++j)
            if (means[static_cast<std::size_t>(j + 1)] - means[static_cast<std::size_t>(j)] >=
                threshold)
                flat_after = false;
        if (flat_after) return i;
    }
    return k - 1;
}

std::vector<AxisAggregate> aggregate_rows(const SweepConfig& cfg,
                                          const std::vector<RunRow>& rows) {
    std::vector<AxisAggregate> out;
    std::vector<double> acc_means;
    for (int axis_value : cfg.axis_values) {
        AxisAggregate agg;
        agg.axis_value = axis_value;
        std::vector<double> train_loss, test_loss, train_acc, test_acc, traj;
        for (const RunRow& row : rows) {
            if (row.axis_value != axis_value) continue;
            if (!row.ok) {
                ++agg.n_failed;
                continue;
            }
            ++agg.n_ok;
            train_loss.push_back(row.final_train_loss);
            test_loss.push_back(row.final_test_loss);
            train_acc.push_back(row.final_train_acc);
            test_acc.push_back(row.final_test_acc);
            if (!std::isnan(row.traj_avg_test_loss)) traj.push_back(row.traj_avg_test_loss);
        }
        const Stats s1 = mean_se(train_loss), s2 = mean_se(test_loss), s3 = mean_se(train_acc),
                    s4 = mean_se(test_acc), s5 = mean_se(traj);
        agg.mean_train_loss = s1.mean;
        agg.se_train_loss = s1.se;
        agg.mean_test_loss = s2.mean;
        agg.se_test_loss = s2.se;
        agg.mean_train_acc = s3.mean;
        agg.se_train_acc = s3.se;
        agg.mean_test_acc = s4.mean;
        agg.se_test_acc = s4.se;
        agg.mean_traj_avg_test_loss = s5.mean;
        agg.se_traj_avg_test_loss = s5.se;
        acc_means.push_back(agg.mean_test_acc);
        out.push_back(agg);
    }
    if (!out.empty()) {
        const int knee = change_point_index(acc_means, cfg.change_point_fraction);
        out[static_cast<std::size_t>(knee)].change_point = true;
    }
    return out;
}

SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    SweepResult result;
    result.config = cfg;

    MnistData mnist;
    const MnistData* mnist_ptr = nullptr;
    if (cfg.task == Task::Mnist) {
        mnist = load_mnist_dir(cfg.mnist_dir); // loaded once, shared read-only
        mnist_ptr = &mnist;
    }

    std::vector<RunTask> tasks;
    for (int axis_value : cfg.axis_values)
        for (std::uint64_t seed : cfg.seeds) tasks.push_back({axis_value, seed});
    result.rows.resize(tasks.size());

    unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));

    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i)
            result.rows[i] = execute_run(cfg, tasks[i], mnist_ptr);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) break;
                    result.rows[i] = execute_run(cfg, tasks[i], mnist_ptr);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    result.aggregates = aggregate_rows(cfg, result.rows);
    return result;
}

void emit_report(const SweepResult& result, const std::string& base_path) {
    {
        std::ofstream raw(base_path + ".raw.csv");
        if (!raw) throw input_error("cannot open for writing: " + base_path + ".raw.csv");
        raw << "axis_value,seed,status,final_train_loss,final_test_loss,final_train_acc,"
               "final_test_acc,traj_avg_test_loss\n";
        for (const RunRow& row : result.rows) {
            raw << row.axis_value << ',' << row.seed << ',' << (row.ok ? "ok" : "failed") << ',';
            if (row.ok) {
                raw << format_double(row.final_train_loss) << ','
                    << format_double(row.final_test_loss) << ','
                    << format_double(row.final_train_acc) << ','
                    << format_double(row.final_test_acc) << ','
                    << (std::isnan(row.traj_avg_test_loss)
                            ? ""
                            : format_double(row.traj_avg_test_loss));
            } else {
                raw << ",,,,";
            }
            raw << "\n";
        }
    }
    {
        std::ofstream agg(base_path + ".agg.csv");
        if (!agg) throw input_error("cannot open for writing: " + base_path + ".agg.csv");
        agg << "axis_value,n_ok,n_failed,mean_train_loss,se_train_loss,mean_test_loss,"
               "se_test_loss,mean_train_acc,se_train_acc,mean_test_acc,se_test_acc,"
               "mean_traj_avg_test_loss,se_traj_avg_test_loss,change_point\n";
        for (const AxisAggregate& a : result.aggregates) {
            agg << a.axis_value << ',' << a.n_ok << ',' << a.n_failed << ','
                << format_double(a.mean_train_loss) << ',' << format_double(a.se_train_loss)
                << ',' << format_double(a.mean_test_loss) << ',' << format_double(a.se_test_loss)
                << ',' << format_double(a.mean_train_acc) << ',' << format_double(a.se_train_acc)
                << ',' << format_double(a.mean_test_acc) << ',' << format_double(a.se_test_acc)
                << ',' << format_double(a.mean_traj_avg_test_loss) << ','
                << format_double(a.se_traj_avg_test_loss) << ',' << (a.change_point ? 1 : 0)
                << "\n";
        }
    }
}

} // namespace kan
