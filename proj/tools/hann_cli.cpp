// hann: hyperplane arrangement classifiers -- bounds, compression round
// trips, cell enumeration, training, and experiment runners.
//
// Exit codes: 0 success, 1 verification/acceptance failure, 2 usage or input
// error.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hann/compression.hpp"
#include "hann/datasets.hpp"
#include "hann/experiments.hpp"
#include "hann/geometry.hpp"
#include "hann/hac.hpp"
#include "hann/json_io.hpp"
#include "hann/minnorm.hpp"
#include "hann/qnet.hpp"
#include "hann/svg.hpp"

namespace fs = std::filesystem;
using hann::io::json;

namespace {

// ---------------------------------------------------------------------------
// logging (HANN_LOG=error|warn|info|debug)
// ---------------------------------------------------------------------------

int log_level() {
    static int level = [] {
        const char* env = std::getenv("HANN_LOG");
        std::string v = env ? env : "warn";
        if (v == "error") return 0;
        if (v == "warn") return 1;
        if (v == "info") return 2;
        if (v == "debug") return 3;
        return 1;
    }();
    return level;
}

template <typename... Args>
void log_at(int level, const char* tag, const char* fmt, Args... args) {
    if (log_level() < level) return;
    std::fprintf(stderr, "[%s] ", tag);
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
}
#define LOG_INFO(...) log_at(2, "info", __VA_ARGS__)
#define LOG_DEBUG(...) log_at(3, "debug", __VA_ARGS__)

// ---------------------------------------------------------------------------
// shared run context
// ---------------------------------------------------------------------------

struct RunContext {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "hann_out";
    std::vector<std::string> formats;  // default: all applicable
    int jobs = 1;
    bool deterministic = false;
    json config = json::object();  // parsed --config payload (defaults for subcommand flags)

    bool wants(const std::string& fmt) const {
        if (formats.empty()) return true;
        for (const auto& f : formats)
            if (f == fmt) return true;
        return false;
    }

    fs::path out(const std::string& name) const { return fs::path(out_dir) / name; }

    void prepare() const { fs::create_directories(out_dir); }

    void echo_config(const std::string& command, json resolved) const {
        resolved["schema_version"] = 1;
        resolved["command"] = command;
        resolved["seed"] = seed;
        resolved["out"] = out_dir;
        resolved["jobs"] = jobs;
        resolved["deterministic"] = deterministic;
        hann::io::write_json_file(out("config_resolved.json").string(), resolved);
    }
};

/// Config value helper: value from --config file unless absent.
template <typename T>
T cfg_or(const RunContext& ctx, const std::string& key, T fallback) {
    return ctx.config.value(key, fallback);
}

hann::data::LoadedCsv load_dataset(const std::string& path, const std::string& label_column,
                                   const RunContext& ctx, double train_frac = 0.6,
                                   double valid_frac = 0.2) {
    hann::data::CsvOptions opts;
    opts.seed = ctx.seed;
    opts.train_fraction = train_frac;
    opts.valid_fraction = valid_frac;
    return hann::data::load_csv(path, label_column, opts);
}

std::vector<std::uint8_t> read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw hann::Error("cannot open file: " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

json classifier_json_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hann::Error("cannot open classifier file: " + path);
    return json::parse(in);
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int cmd_vc_bound(const RunContext& ctx, int d, int r, int k, bool plain) {
    auto size = hann::compression::scheme_size(d, r, k);
    std::uint64_t vc = hann::compression::vc_upper_bound(d, r, k);

    // parameter counts of both Boolean-head realizations (binary output)
    auto mlp_params = [&]() -> std::uint64_t {
        std::uint64_t hidden = k <= 40 ? (std::uint64_t{1} << k) : 0;
        std::uint64_t head = hidden * static_cast<std::uint64_t>(k + 1) + hidden + 1;
        return head + static_cast<std::uint64_t>(k) * (d + 1);
    };
    std::uint64_t resnet_params = 1000ull * static_cast<std::uint64_t>(k + 1) + 1001ull +
                                  static_cast<std::uint64_t>(k + 1) +
                                  static_cast<std::uint64_t>(k) * (d + 1);
    json j;
    j["d"] = d;
    j["r"] = r;
    j["k"] = k;
    j["qp_samples"] = static_cast<std::uint64_t>(k) * (d + 1);
    j["table_samples"] = hann::geometry::binom_le(k, r);
    j["m_samples"] = size.m_samples;
    j["side_info_bits"] = size.s_bits;
    j["scheme_size_total"] = size.total;
    j["vc_upper_bound"] = vc;
    j["params_mlp2k_head"] = mlp_params();
    j["params_resnet1000_head"] = resnet_params;
    j["overparametrization_mlp2k"] = vc ? static_cast<double>(mlp_params()) / static_cast<double>(vc) : 0.0;
    j["overparametrization_resnet1000"] =
        vc ? static_cast<double>(resnet_params) / static_cast<double>(vc) : 0.0;

    if (plain) {
        std::printf("scheme size: m = %llu samples (%llu QP + %llu table), s = %llu bits, total %llu\n",
                    (unsigned long long)size.m_samples,
                    (unsigned long long)(static_cast<std::uint64_t>(k) * (d + 1)),
                    (unsigned long long)hann::geometry::binom_le(k, r),
                    (unsigned long long)size.s_bits, (unsigned long long)size.total);
        std::printf("VC upper bound: %llu\n", (unsigned long long)vc);
        std::printf("head parameters: 2^k MLP %llu, width-1000 residual %llu\n",
                    (unsigned long long)mlp_params(), (unsigned long long)resnet_params);
        std::printf("overparametrization ratio: %.3f (MLP), %.3f (residual)\n",
                    j["overparametrization_mlp2k"].get<double>(),
                    j["overparametrization_resnet1000"].get<double>());
    } else {
        std::printf("%s\n", j.dump(2).c_str());
    }
    ctx.prepare();
    ctx.echo_config("vc-bound", {{"d", d}, {"r", r}, {"k", k}});
    if (ctx.wants("json")) hann::io::write_json_file(ctx.out("vc_bound.json").string(), j);
    return 0;
}

int cmd_cells(const RunContext& ctx, const std::string& arrangement_path) {
    std::ifstream in(arrangement_path);
    if (!in) throw hann::Error("cannot open arrangement file: " + arrangement_path);
    hann::geometry::Arrangement arr = hann::io::arrangement_from_json(json::parse(in));

    auto cells = hann::geometry::enumerate_cells(arr);
    std::uint64_t bound = arr.k() >= 1 ? hann::geometry::max_cells(arr.k(), arr.d()) : 1;
    std::printf("%zu cells (bound %llu)\n", cells.size(), (unsigned long long)bound);
    json j;
    j["d"] = arr.d();
    j["k"] = arr.k();
    j["cell_count"] = cells.size();
    j["max_cells"] = bound;
    json patterns = json::array();
    for (const auto& c : cells) patterns.push_back(c.str());
    j["patterns"] = patterns;

    ctx.prepare();
    ctx.echo_config("cells", {{"arrangement", arrangement_path}});
    if (ctx.wants("json")) hann::io::write_json_file(ctx.out("cells.json").string(), j);
    return 0;
}

int cmd_compress(const RunContext& ctx, const std::string& data_path,
                 const std::string& label_column, const std::string& classifier_path,
                 const std::string& out_file) {
    auto loaded = load_dataset(data_path, label_column, ctx);
    auto clf = hann::io::classifier_from_json(classifier_json_from_file(classifier_path));
    auto samples = loaded.dataset.binary_samples();

    auto canon = hann::compression::canonicalize(clf, samples);
    auto comp = hann::compression::compress(samples, canon);
    auto bytes = hann::compression::to_bytes(comp);

    ctx.prepare();
    std::string target = out_file.empty() ? ctx.out("compressed.bin").string() : out_file;
    std::ofstream out(target, std::ios::binary);
    if (!out) throw hann::Error("cannot write " + target);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.close();

    auto report = hann::compression::verify_round_trip(samples, clf);
    ctx.echo_config("compress", {{"data", data_path},
                                 {"label_column", label_column},
                                 {"classifier", classifier_path},
                                 {"out_file", target}});
    if (ctx.wants("json")) {
        hann::io::write_json_file(ctx.out("compressed_debug.json").string(),
                                  hann::io::to_json_debug(comp));
        hann::io::write_json_file(ctx.out("round_trip_report.json").string(),
                                  hann::io::to_json(report));
    }
    std::printf("compressed %zu samples -> %zu QP entries + %zu table samples (%zu bytes)\n",
                samples.size(), comp.qp_samples.size(), comp.table_samples.size(), bytes.size());
    return report.consistent ? 0 : 1;
}

int cmd_reconstruct(const RunContext& ctx, const std::string& compressed_path,
                    const std::string& out_file) {
    auto comp = hann::compression::from_bytes(read_binary(compressed_path));
    auto clf = hann::compression::reconstruct(comp);
    ctx.prepare();
    std::string target = out_file.empty() ? ctx.out("reconstructed.json").string() : out_file;
    hann::io::write_json_file(target, hann::io::to_json(clf));
    ctx.echo_config("reconstruct", {{"compressed", compressed_path}, {"out_file", target}});
    std::printf("reconstructed classifier with k=%d hyperplanes, %zu table entries -> %s\n",
                clf.arrangement.k(), clf.table.entries.size(), target.c_str());
    return 0;
}

int cmd_verify(const RunContext& ctx, const std::string& data_path,
               const std::string& label_column, const std::string& classifier_path,
               const std::string& compressed_path) {
    auto loaded = load_dataset(data_path, label_column, ctx);
    auto samples = loaded.dataset.binary_samples();
    ctx.prepare();

    if (!compressed_path.empty()) {
        // verify a stored compression payload against the dataset
        auto comp = hann::compression::from_bytes(read_binary(compressed_path));
        json j;
        j["mode"] = "compressed-vs-data";
        bool consistent = true;
        std::vector<std::size_t> violations;
        try {
            auto clf = hann::compression::reconstruct(comp);
            for (std::size_t i = 0; i < samples.size(); ++i)
                if (hann::hac::predict(clf, samples[i].x) != samples[i].y) violations.push_back(i);
            consistent = violations.empty();
        } catch (const hann::Error& e) {
            consistent = false;
            j["failure"] = e.what();
        }
        j["consistent"] = consistent;
        j["violations"] = violations;
        ctx.echo_config("verify", {{"data", data_path},
                                   {"label_column", label_column},
                                   {"compressed", compressed_path}});
        if (ctx.wants("json")) hann::io::write_json_file(ctx.out("verify_report.json").string(), j);
        std::printf("%s\n", consistent ? "consistent" : "INCONSISTENT");
        return consistent ? 0 : 1;
    }

    auto clf = hann::io::classifier_from_json(classifier_json_from_file(classifier_path));
    auto report = hann::compression::verify_round_trip(samples, clf);
    ctx.echo_config("verify", {{"data", data_path},
                               {"label_column", label_column},
                               {"classifier", classifier_path}});
    if (ctx.wants("json"))
        hann::io::write_json_file(ctx.out("verify_report.json").string(), hann::io::to_json(report));
    std::printf("%s (qp %zu/%zu, bits %zu/%zu, table %zu/%llu)\n",
                report.consistent ? "consistent" : "INCONSISTENT", report.qp_count,
                report.qp_budget, report.side_bits, report.side_bits_budget, report.table_count,
                (unsigned long long)report.table_budget);
    return report.consistent ? 0 : 1;
}

int cmd_train(const RunContext& ctx, const std::string& data_path,
              const std::string& label_column, int k, int latent_r,
              const std::string& head_name, const std::string& quantizer_name,
              hann::qnet::TrainConfig tc, const std::string& loss_name) {
    auto loaded = load_dataset(data_path, label_column, ctx);
    const auto& ds = loaded.dataset;
    const auto& split = loaded.split;
    if (split.train.empty() || split.valid.empty())
        throw hann::Error("train: dataset split has empty parts");

    hann::Matrix x_train = hann::data::take_rows(ds.features, split.train);
    hann::Matrix x_valid = hann::data::take_rows(ds.features, split.valid);
    hann::Matrix x_test = hann::data::take_rows(ds.features, split.test);
    auto y_train = hann::data::take_labels(ds.labels, split.train);
    auto y_valid = hann::data::take_labels(ds.labels, split.valid);
    auto y_test = hann::data::take_labels(ds.labels, split.test);

    hann::Matrix pooled = hann::data::vstack(x_train, x_valid);
    auto scaler = hann::data::StandardScaler::fit(pooled);
    x_train = scaler.apply(x_train);
    x_valid = scaler.apply(x_valid);
    if (x_test.rows) x_test = scaler.apply(x_test);

    if (loss_name == "hinge")
        tc.loss = hann::qnet::LossKind::Hinge;
    else if (loss_name == "ww-hinge")
        tc.loss = hann::qnet::LossKind::WWHinge;
    else if (loss_name == "cross-entropy")
        tc.loss = hann::qnet::LossKind::CrossEntropy;
    else if (loss_name == "auto")
        tc.loss = ds.class_count == 2 ? hann::qnet::LossKind::Hinge
                                      : hann::qnet::LossKind::CrossEntropy;
    else
        throw CLI::ValidationError("--loss", "unknown loss " + loss_name);

    hann::qnet::HeadKind head = head_name == "mlp2k" ? hann::qnet::HeadKind::Mlp2k
                                                     : hann::qnet::HeadKind::Resnet1000;
    int d = ds.d();
    int r = latent_r > 0 ? latent_r : std::min(d, k);
    auto net = hann::qnet::build_hann(d, r, k, head, ds.class_count,
                                      hann::derive_seed(ctx.seed, 1));
    net.quantizer = quantizer_name == "ste" ? hann::qnet::QuantizerKind::ste_sign()
                                            : hann::qnet::QuantizerKind::swish_sign();
    tc.seed = hann::derive_seed(ctx.seed, 2);

    LOG_INFO("training k=%d on %zu rows (%d classes)", k, x_train.rows, ds.class_count);
    auto result = hann::qnet::train(net, x_train, y_train, x_valid, y_valid, tc);

    ctx.prepare();
    hann::io::save_checkpoint(result.best_net, ctx.out("model").string());
    if (ctx.wants("json"))
        hann::io::write_json_file(ctx.out("dataset_meta.json").string(),
                                  hann::io::dataset_metadata(ds, {"standard_scale"}));
    json hist = json::array();
    for (const auto& row : result.history)
        hist.push_back(json{{"epoch", row.epoch},
                            {"train_acc", row.train_acc},
                            {"val_acc_window", row.val_acc_window},
                            {"val_acc_smoothed", row.val_acc_smoothed}});
    json j;
    j["history"] = hist;
    j["best_epoch"] = result.best_epoch;
    j["best_smoothed"] = result.best_smoothed;
    j["final_train_acc"] = result.final_train_acc;
    double test_acc = x_test.rows ? hann::qnet::accuracy(result.best_net, x_test, y_test) : -1.0;
    j["test_acc"] = test_acc;
    if (ctx.wants("json")) hann::io::write_json_file(ctx.out("train_report.json").string(), j);
    if (ctx.wants("csv")) {
        std::string csv = "epoch,train_acc,val_acc_window,val_acc_smoothed\n";
        for (const auto& row : result.history)
            csv += std::to_string(row.epoch) + "," + std::to_string(row.train_acc) + "," +
                   std::to_string(row.val_acc_window) + "," +
                   std::to_string(row.val_acc_smoothed) + "\n";
        hann::io::write_text_file(ctx.out("history.csv").string(), csv);
    }
    ctx.echo_config("train", {{"data", data_path},
                              {"label_column", label_column},
                              {"k", k},
                              {"head", head_name},
                              {"quantizer", quantizer_name},
                              {"loss", loss_name},
                              {"learning_rate", tc.learning_rate},
                              {"batch_size", tc.batch_size},
                              {"epochs", tc.epochs},
                              {"dropout_rate", tc.dropout_rate},
                              {"sm_param", tc.sm_param},
                              {"eval_every", tc.eval_every}});
    std::printf("best smoothed val acc %.4f at epoch %d; test acc %.4f\n", result.best_smoothed,
                result.best_epoch, test_acc);
    return 0;
}

int cmd_moons(const RunContext& ctx, hann::experiments::MoonsConfig cfg) {
    cfg.seed = ctx.seed;
    cfg.jobs = ctx.jobs;
    auto report = hann::experiments::moons_experiment(cfg);

    ctx.prepare();
    ctx.echo_config("moons", {{"n_train", cfg.n_train},
                              {"n_val", cfg.n_val},
                              {"noise_sigma", cfg.noise_sigma},
                              {"k", cfg.k},
                              {"epochs", cfg.epochs},
                              {"learning_rate", cfg.learning_rate},
                              {"batch_size", cfg.batch_size},
                              {"dropout_rate", cfg.dropout_rate},
                              {"runs_per_heuristic", cfg.runs_per_heuristic},
                              {"grid_resolution", cfg.grid_resolution}});
    if (ctx.wants("json"))
        hann::io::write_json_file(ctx.out("moons_report.json").string(),
                                  hann::io::to_json(report, false));
    if (ctx.wants("csv")) {
        std::string csv = "quantizer,run_seed,val_acc,train_acc,best_epoch\n";
        for (const auto& r : report.runs)
            csv += r.quantizer + "," + std::to_string(r.run_seed) + "," +
                   std::to_string(r.val_acc) + "," + std::to_string(r.train_acc) + "," +
                   std::to_string(r.best_epoch) + "\n";
        hann::io::write_text_file(ctx.out("moons_accuracies.csv").string(), csv);

        std::string grid;
        for (int iy = 0; iy < report.cells.resolution; ++iy) {
            for (int ix = 0; ix < report.cells.resolution; ++ix) {
                if (ix) grid += ",";
                grid += std::to_string(
                    report.cells.grid_labels[static_cast<std::size_t>(iy) *
                                                 report.cells.resolution +
                                             static_cast<std::size_t>(ix)]);
            }
            grid += "\n";
        }
        hann::io::write_text_file(ctx.out("moons_grid.csv").string(), grid);
    }
    if (ctx.wants("svg")) {
        std::string body = hann::svg::decision_map(report.cells, report.best_arrangement,
                                                   report.best_train_x, report.best_train_y);
        if (!ctx.deterministic) {
            char stamp[96];
            std::time_t now = std::time(nullptr);
            std::strftime(stamp, sizeof(stamp), "<!-- generated %Y-%m-%dT%H:%M:%SZ -->\n",
                          std::gmtime(&now));
            body.insert(body.find("\n") + 1, stamp);
        }
        hann::io::write_text_file(ctx.out("moons_decision_map.svg").string(), body);
    }
    std::printf("median val acc: ste_sign %.4f, swish_sign %.4f (%d runs each)\n",
                report.median_ste, report.median_swish, cfg.runs_per_heuristic);
    return 0;
}

int cmd_rate(const RunContext& ctx, int d, double lipschitz_l, std::vector<long> n_grid,
             int trials, long mc_n) {
    if (n_grid.empty()) n_grid = {256, 512, 1024, 2048, 4096, 8192, 16384};
    hann::experiments::RateOptions opts;
    opts.mc_n = mc_n;
    opts.jobs = ctx.jobs;
    auto report = hann::experiments::minimax_rate_experiment(d, lipschitz_l, n_grid, trials,
                                                             ctx.seed, opts);
    ctx.prepare();
    ctx.echo_config("rate", {{"d", d},
                             {"lipschitz_l", lipschitz_l},
                             {"n_grid", n_grid},
                             {"trials", trials},
                             {"mc_n", mc_n}});
    if (ctx.wants("json"))
        hann::io::write_json_file(ctx.out("rate_report.json").string(), hann::io::to_json(report));
    if (ctx.wants("csv")) {
        std::string csv = "n,k_tilde,arrangement_k,mean_excess,std_error\n";
        for (const auto& p : report.points)
            csv += std::to_string(p.n) + "," + std::to_string(p.k_tilde) + "," +
                   std::to_string(p.arrangement_k) + "," + std::to_string(p.mean_excess) + "," +
                   std::to_string(p.std_error) + "\n";
        hann::io::write_text_file(ctx.out("rate_points.csv").string(), csv);
    }
    if (ctx.wants("svg"))
        hann::io::write_text_file(ctx.out("rate_plot.svg").string(), hann::svg::rate_plot(report));
    std::printf("fitted slope %.4f (target %.4f), monotone within 2se: %s\n", report.slope,
                report.target_slope, report.monotone_within_2se ? "yes" : "no");
    return 0;
}

int cmd_bench(const RunContext& ctx, const std::vector<std::string>& data_paths,
              const std::string& label_column, hann::experiments::BenchConfig cfg) {
    if (data_paths.empty()) throw CLI::ValidationError("--data", "at least one dataset required");
    cfg.seed = ctx.seed;
    cfg.jobs = ctx.jobs;

    std::vector<hann::experiments::BenchDatasetSpec> specs;
    for (const auto& path : data_paths) {
        auto loaded = load_dataset(path, label_column, ctx);
        hann::experiments::BenchDatasetSpec spec;
        spec.name = fs::path(path).stem().string();
        spec.dataset = std::move(loaded.dataset);
        spec.split = std::move(loaded.split);
        specs.push_back(std::move(spec));
    }
    auto report = hann::experiments::benchmark_run(specs, cfg);

    ctx.prepare();
    ctx.echo_config("bench", {{"data", data_paths},
                              {"label_column", label_column},
                              {"k", cfg.k},
                              {"epochs", cfg.epochs},
                              {"dropout_grid", cfg.dropout_grid}});
    if (ctx.wants("json"))
        hann::io::write_json_file(ctx.out("bench_report.json").string(), hann::io::to_json(report));
    if (ctx.wants("csv")) {
        std::string csv = "dataset,ok,test_accuracy_pct,selected_dropout,selected_smoothed\n";
        for (const auto& r : report.results) {
            double drop = r.ok ? r.grid[static_cast<std::size_t>(r.selected_index)].dropout : -1.0;
            char line[256];
            std::snprintf(line, sizeof(line), "%s,%d,%.2f,%.2f,%.4f\n", r.name.c_str(),
                          r.ok ? 1 : 0, 100.0 * r.test_accuracy, drop, r.selected_smoothed);
            csv += line;
        }
        hann::io::write_text_file(ctx.out("bench_table.csv").string(), csv);
    }
    int failures = 0;
    for (const auto& r : report.results) {
        if (r.ok)
            std::printf("%-24s test acc %.2f%%\n", r.name.c_str(), 100.0 * r.test_accuracy);
        else {
            std::printf("%-24s FAILED: %s\n", r.name.c_str(), r.error.c_str());
            ++failures;
        }
    }
    return failures == static_cast<int>(report.results.size()) && failures > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunContext ctx;

    // pre-scan for --config so its values become flag defaults
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            ctx.config_path = argv[i + 1];
            std::ifstream in(ctx.config_path);
            if (!in) {
                std::fprintf(stderr, "error: cannot open config file %s\n", ctx.config_path.c_str());
                return 2;
            }
            try {
                ctx.config = json::parse(in);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "error: bad config json: %s\n", e.what());
                return 2;
            }
            if (ctx.config.contains("schema_version") &&
                ctx.config["schema_version"].get<int>() != 1) {
                std::fprintf(stderr, "error: unsupported config schema_version\n");
                return 2;
            }
        }
    }

    CLI::App app{"hyperplane arrangement classifiers: bounds, compression, cells, training, experiments"};
    app.name("hann");
    app.require_subcommand(1);
    std::string config_dummy;
    app.add_option("--config", config_dummy, "JSON config file (flag values override it)");
    app.add_option("--seed", ctx.seed, "master seed")
        ->default_val(cfg_or<std::uint64_t>(ctx, "seed", 0));
    app.add_option("--out", ctx.out_dir, "output directory")
        ->default_val(cfg_or<std::string>(ctx, "out", "hann_out"));
    app.add_option("--format", ctx.formats, "output formats (json|csv|svg), repeatable");
    app.add_option("--jobs", ctx.jobs, "worker cap for experiment pools")
        ->default_val(cfg_or<int>(ctx, "jobs", 1));
    app.add_flag("--deterministic", ctx.deterministic,
                 "suppress timestamp metadata in SVG outputs");

    // vc-bound
    auto* vc = app.add_subcommand("vc-bound", "scheme size and VC upper bound for HAC(d,r,k)");
    int vd = cfg_or(ctx, "d", 2), vr = cfg_or(ctx, "r", 2), vk = cfg_or(ctx, "k", 3);
    bool vc_plain = false;
    vc->add_option("--d", vd, "input dimension")->default_val(vd);
    vc->add_option("--r", vr, "rank budget")->default_val(vr);
    vc->add_option("--k", vk, "hyperplane count")->default_val(vk);
    vc->add_flag("--plain", vc_plain, "human-readable output instead of JSON");

    // cells
    auto* cells = app.add_subcommand("cells", "enumerate full-dimensional cells of an arrangement");
    std::string arrangement_path = cfg_or<std::string>(ctx, "arrangement", "");
    cells->add_option("--arrangement", arrangement_path, "arrangement JSON file")->required();

    // compress / reconstruct / verify
    std::string data_path = cfg_or<std::string>(ctx, "data", "");
    std::string label_column = cfg_or<std::string>(ctx, "label_column", "label");
    std::string classifier_path = cfg_or<std::string>(ctx, "classifier", "");
    std::string compressed_path = cfg_or<std::string>(ctx, "compressed", "");
    std::string out_file;

    auto* compress = app.add_subcommand("compress", "compress a realizable labeled dataset");
    compress->add_option("--data", data_path, "CSV dataset")->required();
    compress->add_option("--label-column", label_column, "label column name");
    compress->add_option("--classifier", classifier_path, "consistent classifier JSON")->required();
    compress->add_option("--out-file", out_file, "compressed payload path");

    auto* reconstruct = app.add_subcommand("reconstruct", "rebuild a classifier from a payload");
    reconstruct->add_option("--compressed", compressed_path, "compressed payload")->required();
    reconstruct->add_option("--out-file", out_file, "classifier JSON path");

    auto* verify = app.add_subcommand("verify", "round-trip consistency check");
    verify->add_option("--data", data_path, "CSV dataset")->required();
    verify->add_option("--label-column", label_column, "label column name");
    verify->add_option("--classifier", classifier_path, "classifier JSON (full round trip)");
    verify->add_option("--compressed", compressed_path, "compressed payload (check against data)");

    // train
    auto* train = app.add_subcommand("train", "train a HANN on a CSV dataset");
    int tk = cfg_or(ctx, "k", 15);
    std::string head_name = cfg_or<std::string>(ctx, "head", "resnet1000");
    std::string quantizer_name = cfg_or<std::string>(ctx, "quantizer", "swish");
    std::string loss_name = cfg_or<std::string>(ctx, "loss", "auto");
    hann::qnet::TrainConfig tc;
    tc.learning_rate = cfg_or(ctx, "learning_rate", 0.01);
    tc.batch_size = cfg_or(ctx, "batch_size", 128);
    tc.epochs = cfg_or(ctx, "epochs", 500);
    tc.dropout_rate = cfg_or(ctx, "dropout_rate", 0.1);
    tc.sm_param = cfg_or(ctx, "sm_param", 0.1);
    tc.eval_every = cfg_or(ctx, "eval_every", 10);
    int tr = cfg_or(ctx, "r", 0);
    train->add_option("--data", data_path, "CSV dataset")->required();
    train->add_option("--label-column", label_column, "label column name");
    train->add_option("--k", tk, "hyperplane count")->default_val(tk);
    train->add_option("--r", tr, "latent width (0 = min(d, k), i.e. no latent layer)")
        ->default_val(tr);
    train->add_option("--head", head_name, "mlp2k|resnet1000")->default_val(head_name);
    train->add_option("--quantizer", quantizer_name, "ste|swish")->default_val(quantizer_name);
    train->add_option("--loss", loss_name, "hinge|ww-hinge|cross-entropy|auto")
        ->default_val(loss_name);
    train->add_option("--lr", tc.learning_rate, "learning rate")->default_val(tc.learning_rate);
    train->add_option("--batch", tc.batch_size, "minibatch size")->default_val(tc.batch_size);
    train->add_option("--epochs", tc.epochs, "epochs")->default_val(tc.epochs);
    train->add_option("--dropout", tc.dropout_rate, "dropout rate")->default_val(tc.dropout_rate);
    train->add_option("--sm-param", tc.sm_param, "smoothing parameter")->default_val(tc.sm_param);
    train->add_option("--eval-every", tc.eval_every, "epochs per validation window")
        ->default_val(tc.eval_every);

    // moons
    auto* moons = app.add_subcommand("moons", "two-quantizer study on the moons dataset");
    hann::experiments::MoonsConfig mc;
    mc.n_train = cfg_or(ctx, "n_train", mc.n_train);
    mc.n_val = cfg_or(ctx, "n_val", mc.n_val);
    mc.noise_sigma = cfg_or(ctx, "noise_sigma", mc.noise_sigma);
    mc.k = cfg_or(ctx, "k", mc.k);
    mc.epochs = cfg_or(ctx, "epochs", mc.epochs);
    mc.learning_rate = cfg_or(ctx, "learning_rate", mc.learning_rate);
    mc.dropout_rate = cfg_or(ctx, "dropout_rate", mc.dropout_rate);
    mc.runs_per_heuristic = cfg_or(ctx, "runs_per_heuristic", mc.runs_per_heuristic);
    mc.grid_resolution = cfg_or(ctx, "grid_resolution", mc.grid_resolution);
    moons->add_option("--n-train", mc.n_train, "training points")->default_val(mc.n_train);
    moons->add_option("--n-val", mc.n_val, "validation points")->default_val(mc.n_val);
    moons->add_option("--noise", mc.noise_sigma, "noise sigma")->default_val(mc.noise_sigma);
    moons->add_option("--k", mc.k, "hyperplane count")->default_val(mc.k);
    moons->add_option("--epochs", mc.epochs, "epochs")->default_val(mc.epochs);
    moons->add_option("--lr", mc.learning_rate, "learning rate")->default_val(mc.learning_rate);
    moons->add_option("--dropout", mc.dropout_rate, "dropout rate")->default_val(mc.dropout_rate);
    moons->add_option("--runs", mc.runs_per_heuristic, "runs per quantizer")
        ->default_val(mc.runs_per_heuristic);
    moons->add_option("--resolution", mc.grid_resolution, "decision grid resolution")
        ->default_val(mc.grid_resolution);

    // rate
    auto* rate = app.add_subcommand("rate", "histogram-classifier excess-risk rate study");
    int rd = cfg_or(ctx, "d", 1);
    double rl = cfg_or(ctx, "lipschitz_l", 5.0);
    int rtrials = cfg_or(ctx, "trials", 20);
    long rmc = cfg_or<long>(ctx, "mc_n", 1000000);
    std::vector<long> rn_grid = cfg_or<std::vector<long>>(ctx, "n_grid", {});
    rate->add_option("--d", rd, "dimension")->default_val(rd);
    rate->add_option("--l", rl, "Lipschitz constant")->default_val(rl);
    rate->add_option("--n", rn_grid, "sample-size grid (repeatable)");
    rate->add_option("--trials", rtrials, "trials per grid point")->default_val(rtrials);
    rate->add_option("--mc", rmc, "Monte Carlo draws per risk estimate")->default_val(rmc);

    // bench
    auto* bench = app.add_subcommand("bench", "benchmark harness over CSV datasets");
    std::vector<std::string> bench_data = cfg_or<std::vector<std::string>>(ctx, "data_files", {});
    hann::experiments::BenchConfig bc;
    bc.k = cfg_or(ctx, "k", bc.k);
    bc.epochs = cfg_or(ctx, "epochs", bc.epochs);
    bc.learning_rate = cfg_or(ctx, "learning_rate", bc.learning_rate);
    bc.batch_size = cfg_or(ctx, "batch_size", bc.batch_size);
    bc.dropout_grid = cfg_or<std::vector<double>>(ctx, "dropout_grid", bc.dropout_grid);
    bench->add_option("--data", bench_data, "CSV dataset (repeatable)");
    bench->add_option("--label-column", label_column, "label column name");
    bench->add_option("--k", bc.k, "hyperplane count")->default_val(bc.k);
    bench->add_option("--epochs", bc.epochs, "epochs")->default_val(bc.epochs);
    bench->add_option("--lr", bc.learning_rate, "learning rate")->default_val(bc.learning_rate);
    bench->add_option("--dropout-grid", bc.dropout_grid, "dropout grid (repeatable)");

    // global options (--out, --seed, ...) may appear after the subcommand
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (vc->parsed()) return cmd_vc_bound(ctx, vd, vr, vk, vc_plain);
        if (cells->parsed()) return cmd_cells(ctx, arrangement_path);
        if (compress->parsed())
            return cmd_compress(ctx, data_path, label_column, classifier_path, out_file);
        if (reconstruct->parsed()) return cmd_reconstruct(ctx, compressed_path, out_file);
        if (verify->parsed()) {
            if (classifier_path.empty() && compressed_path.empty())
                throw CLI::ValidationError("verify", "need --classifier or --compressed");
            return cmd_verify(ctx, data_path, label_column, classifier_path, compressed_path);
        }
        if (train->parsed())
            return cmd_train(ctx, data_path, label_column, tk, tr, head_name, quantizer_name, tc,
                             loss_name);
        if (moons->parsed()) return cmd_moons(ctx, mc);
        if (rate->parsed()) return cmd_rate(ctx, rd, rl, rn_grid, rtrials, rmc);
        if (bench->parsed()) return cmd_bench(ctx, bench_data, label_column, bc);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const hann::NotConvergedError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
