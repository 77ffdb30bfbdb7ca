#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "monas/checkpoint.hpp"
#include "monas/errors.hpp"
#include "monas/exec.hpp"
#include "monas/harness.hpp"
#include "monas/rng.hpp"

namespace fs = std::filesystem;
using namespace monas;

namespace {

struct CommonFlags {
    std::string config_path;
    int seed = -1;  // negative = take from config
    std::string out;
    bool force = false;
    int threads = 0;  // 0 = unset
};

// Precedence: flag, then environment, then config file.
std::string resolve_out(const CommonFlags& flags, const std::string& from_config) {
    if (!flags.out.empty()) return flags.out;
    if (const char* env = std::getenv("MONAS_OUT"); env && *env) return env;
    return from_config;
}

int resolve_threads(const CommonFlags& flags) {
    if (flags.threads > 0) return flags.threads;
    if (const char* env = std::getenv("MONAS_THREADS"); env && *env) {
        int n = std::atoi(env);
        require(n >= 1, "cli.threads", "MONAS_THREADS must be a positive integer");
        return n;
    }
    return 1;
}

void apply_threads(ExperimentConfig& cfg, const CommonFlags& flags) {
    int n = resolve_threads(flags);
    set_max_threads(n);
    cfg.train.policy = n > 1 ? ExecPolicy::Parallel : ExecPolicy::Serial;
}

ExperimentConfig load_config_checked(const CommonFlags& flags) {
    require(!flags.config_path.empty(), "cli.config", "--config is required");
    return load_experiment_config(flags.config_path);
}

void refuse_existing(const fs::path& p, bool force) {
    if (!fs::exists(p)) return;
    require(force, "harness.exists", "output exists (pass --force to overwrite): " + p.string());
    fs::remove_all(p);
}

int cmd_train_supernet(const CommonFlags& flags) {
    ExperimentConfig cfg = load_config_checked(flags);
    apply_threads(cfg, flags);
    int seed = flags.seed >= 0 ? flags.seed : cfg.seeds.front();
    std::string out = resolve_out(flags, cfg.out + "/supernet/seed" + std::to_string(seed));
    refuse_existing(out, flags.force);
    fs::create_directories(out);

    TaskData task = generate_task(cfg.task);
    SuperNetwork net = make_network(cfg.dims);
    Rng init_rng(static_cast<uint64_t>(seed) * 1000003ull + 17ull);
    random_init(net, init_rng);
    TrainOptions topt = cfg.train;
    topt.seed = static_cast<uint64_t>(seed);
    TrainReport report = train_supernet(net, task, topt);
    std::string ckpt = (fs::path(out) / "checkpoint.json").string();
    save_checkpoint(net, ckpt);
    report.checkpoint = ckpt;
    std::ofstream rep(fs::path(out) / "report.json");
    rep << to_json(report).dump(2) << "\n";

    nlohmann::ordered_json ok = {{"ok", true}, {"out", out}, {"steps", report.steps}, {"wallclock_s", report.wallclock_s}};
    std::cout << ok.dump() << "\n";
    return 0;
}

int cmd_search(const CommonFlags& flags) {
    ExperimentConfig cfg = load_config_checked(flags);
    apply_threads(cfg, flags);
    int seed = flags.seed >= 0 ? flags.seed : cfg.seeds.front();
    cfg.seeds = {seed};
    cfg.out = resolve_out(flags, cfg.out);
    ExperimentResult result = run_experiment(cfg, flags.force);
    nlohmann::ordered_json ok = {{"ok", true},
                                 {"out", result.out_dir},
                                 {"history_files", result.history_files.size()},
                                 {"failures", result.failures}};
    std::cout << ok.dump() << "\n";
    return result.failures.empty() ? 0 : 2;
}

int cmd_benchmark(const CommonFlags& flags) {
    ExperimentConfig cfg = load_config_checked(flags);
    apply_threads(cfg, flags);
    cfg.out = resolve_out(flags, cfg.out);
    ExperimentResult result = run_experiment(cfg, flags.force);
    nlohmann::ordered_json ok = {{"ok", true},
                                 {"out", result.out_dir},
                                 {"history_files", result.history_files.size()},
                                 {"failures", result.failures}};
    std::cout << ok.dump() << "\n";
    return result.failures.empty() ? 0 : 2;
}

int cmd_emit_plots(const CommonFlags& flags) {
    std::string results_dir;
    if (!flags.out.empty() || std::getenv("MONAS_OUT")) {
        results_dir = resolve_out(flags, "");
    } else {
        ExperimentConfig cfg = load_config_checked(flags);
        results_dir = cfg.out;
    }
    require(!results_dir.empty(), "cli.out", "give --out (results directory) or --config");
    emit_plot_data(results_dir, flags.force);
    nlohmann::ordered_json ok = {{"ok", true}, {"plots", results_dir + "/plots"}};
    std::cout << ok.dump() << "\n";
    return 0;
}

int cmd_enumerate_space(const CommonFlags& flags) {
    ExperimentConfig cfg = load_config_checked(flags);
    SearchSpace space(cfg.space, cfg.dims);
    long long limit = 65536;
    {
        nlohmann::json raw = nlohmann::json::parse(std::ifstream(flags.config_path), nullptr, false);
        if (raw.is_object() && raw.contains("enumerate_limit")) limit = raw["enumerate_limit"].get<long long>();
    }
    std::vector<SubNetConfig> configs = space.enumerate(limit);
    std::ostream* out = &std::cout;
    std::ofstream file;
    std::string out_path = resolve_out(flags, "");
    if (!out_path.empty()) {
        refuse_existing(out_path, flags.force);
        if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
        file.open(out_path, std::ios::binary);
        require(file.good(), "cli.out", "cannot open for write: " + out_path);
        out = &file;
    }
    for (const auto& c : configs) {
        nlohmann::ordered_json line = {{"config", to_json(c)}, {"params", space.param_count(c)}};
        (*out) << line.dump() << "\n";
    }
    nlohmann::ordered_json ok = {{"ok", true}, {"count", configs.size()}};
    std::cerr << ok.dump() << "\n";
    return 0;
}

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path, "experiment config JSON");
    sub->add_option("--seed", flags.seed, "seed override");
    sub->add_option("--out", flags.out, "output path override (env: MONAS_OUT)");
    sub->add_flag("--force", flags.force, "overwrite existing outputs");
    sub->add_option("--threads", flags.threads, "worker threads (env: MONAS_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-objective architecture search over maskable transformer encoders"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* train = app.add_subcommand("train-supernet", "train one super-network and save a checkpoint");
    auto* search = app.add_subcommand("search", "run the configured searchers for one seed");
    auto* bench = app.add_subcommand("benchmark", "run every (method, seed) cell and write metrics");
    auto* plots = app.add_subcommand("emit-plots", "emit plot CSVs from a results directory");
    auto* enumerate = app.add_subcommand("enumerate-space", "list every config of the space with parameter counts");
    for (auto* sub : {train, search, bench, plots, enumerate}) add_common(sub, flags);

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmd_train_supernet(flags);
        if (search->parsed()) return cmd_search(flags);
        if (bench->parsed()) return cmd_benchmark(flags);
        if (plots->parsed()) return cmd_emit_plots(flags);
        if (enumerate->parsed()) return cmd_enumerate_space(flags);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        nlohmann::ordered_json err = {{"error", {{"code", "cli.args"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const Error& e) {
        nlohmann::ordered_json err = {{"error", {{"code", e.code()}, {"message", e.message()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::ordered_json err = {{"error", {{"code", "cli.unexpected"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
