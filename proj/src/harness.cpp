#include "monas/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "monas/checkpoint.hpp"
#include "monas/errors.hpp"
#include "monas/evaluator.hpp"
#include "monas/rng.hpp"

namespace fs = std::filesystem;

namespace monas {

namespace {

const std::vector<std::string> kMethods = {"random-search", "local-search", "mo-rea", "ehvi", "mo-asha"};
constexpr int kGridPoints = 33;     // HV/rank grid: budget * i/32, i in 0..32
constexpr int kRankDraws = 1000;    // bootstrap draws for average ranks
constexpr uint64_t kRankSeed = 9973;
constexpr int kHistSamples = 500;   // parameter-count draws per space

// Shortest round-trip decimal form, so reruns produce identical bytes.
std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string cell_name(const std::string& method, int seed) {
    return method + "_seed" + std::to_string(seed);
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "harness.io", "cannot open for write: " + path);
    out << body;
    out.flush();
    require(out.good(), "harness.io", "write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "harness.io", "cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json parse_json_file(const std::string& path, const char* code) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    require(!j.is_discarded(), code, "invalid JSON: " + path);
    return j;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
    require(!name.empty(), "harness.config", "experiment name is empty");
    dims.validate();
    task.validate();
    require(task.vocab == dims.vocab && task.seq_len == dims.seq_len && task.classes == dims.classes,
            "harness.task_dims", "task vocab/seq_len/classes must match model dims");
    require(!methods.empty(), "harness.config", "methods list is empty");
    for (const auto& m : methods) {
        require(std::find(kMethods.begin(), kMethods.end(), m) != kMethods.end(), "harness.method",
                "unknown method: " + m);
    }
    require(mode == "ws" || mode == "snas", "harness.mode", "mode must be ws or snas, got: " + mode);
    bool has_asha = std::find(methods.begin(), methods.end(), "mo-asha") != methods.end();
    require(!(has_asha && mode == "ws"), "harness.method_mode", "mo-asha needs the fidelity axis of snas mode");
    train.validate();
    require(finetune_epochs >= 1, "harness.config", "finetune_epochs must be >= 1");
    if (has_asha) asha.validate();
    require(budget.wallclock_s > 0.0, "harness.config", "budget wallclock_s must be positive");
    require(ehvi.init_points >= 2 && ehvi.candidates >= 1 && ehvi.mc_samples >= 1, "harness.config",
            "ehvi options out of range");
    require(rea_population >= 2 && rea_sample >= 1 && rea_sample <= rea_population, "harness.config",
            "rea population/sample out of range");
    require(!seeds.empty(), "harness.config", "seeds list is empty");
    std::set<int> uniq(seeds.begin(), seeds.end());
    require(uniq.size() == seeds.size(), "harness.config", "seeds must be distinct");
    require(!out.empty(), "harness.config", "output directory is empty");
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    require(j.is_object(), "harness.config", "experiment config must be a JSON object");
    ExperimentConfig cfg;
    cfg.name = get_or<std::string>(j, "name", cfg.name);

    require(j.contains("dims") && j.at("dims").is_object(), "harness.config", "missing dims object");
    const auto& d = j.at("dims");
    cfg.dims.layers = get_or<int>(d, "layers", 4);
    cfg.dims.heads = get_or<int>(d, "heads", 4);
    cfg.dims.ffn_units = get_or<int>(d, "ffn_units", 64);
    cfg.dims.d_model = get_or<int>(d, "d_model", 32);
    cfg.dims.d_head = get_or<int>(d, "d_head", cfg.dims.d_model / std::max(1, cfg.dims.heads));
    cfg.dims.vocab = get_or<int>(d, "vocab", 32);
    cfg.dims.seq_len = get_or<int>(d, "seq_len", 16);
    cfg.dims.classes = get_or<int>(d, "classes", 2);

    require(j.contains("task") && j.at("task").is_object(), "harness.config", "missing task object");
    const auto& t = j.at("task");
    cfg.task = make_task_spec(get_or<std::string>(t, "name", "majority"), get_or<int>(t, "vocab", cfg.dims.vocab),
                              get_or<int>(t, "seq_len", cfg.dims.seq_len), get_or<int>(t, "classes", cfg.dims.classes),
                              get_or<int>(t, "examples", 512), get_or<int>(t, "test_n", 0),
                              get_or<uint64_t>(t, "seed", 1));

    cfg.space = space_kind_from_string(get_or<std::string>(j, "space", "large"));
    cfg.methods = get_or<std::vector<std::string>>(j, "methods", {});
    cfg.mode = get_or<std::string>(j, "mode", "ws");

    if (j.contains("train")) {
        const auto& tr = j.at("train");
        cfg.train.strategy = train_strategy_from_string(get_or<std::string>(tr, "strategy", "standard"));
        cfg.train.k = get_or<int>(tr, "k", cfg.train.k);
        cfg.train.temperature = get_or<double>(tr, "temperature", cfg.train.temperature);
        cfg.train.epochs = get_or<int>(tr, "epochs", cfg.train.epochs);
        cfg.train.lr = get_or<double>(tr, "lr", cfg.train.lr);
        cfg.train.batch_size = get_or<int>(tr, "batch_size", cfg.train.batch_size);
    }
    cfg.train.space = cfg.space;

    cfg.finetune_epochs = get_or<int>(j, "finetune_epochs", cfg.finetune_epochs);
    if (j.contains("asha")) {
        const auto& a = j.at("asha");
        cfg.asha.r_min = get_or<int>(a, "r_min", cfg.asha.r_min);
        cfg.asha.eta = get_or<int>(a, "eta", cfg.asha.eta);
        cfg.asha.r_max = get_or<int>(a, "r_max", cfg.asha.r_max);
    }
    if (j.contains("budget")) {
        const auto& b = j.at("budget");
        cfg.budget.wallclock_s = get_or<double>(b, "wallclock_s", cfg.mode == "snas" ? 300.0 : 60.0);
        cfg.budget.max_evals = get_or<long long>(b, "max_evals", -1);
    } else {
        cfg.budget.wallclock_s = cfg.mode == "snas" ? 300.0 : 60.0;
    }
    if (j.contains("ehvi")) {
        const auto& e = j.at("ehvi");
        cfg.ehvi.init_points = get_or<int>(e, "init_points", cfg.ehvi.init_points);
        cfg.ehvi.candidates = get_or<int>(e, "candidates", cfg.ehvi.candidates);
        cfg.ehvi.mc_samples = get_or<int>(e, "mc_samples", cfg.ehvi.mc_samples);
        cfg.ehvi.hyper_draws = get_or<int>(e, "hyper_draws", cfg.ehvi.hyper_draws);
    }
    if (j.contains("rea")) {
        const auto& r = j.at("rea");
        cfg.rea_population = get_or<int>(r, "population", cfg.rea_population);
        cfg.rea_sample = get_or<int>(r, "sample", cfg.rea_sample);
    }
    if (j.contains("seeds")) {
        cfg.seeds = j.at("seeds").get<std::vector<int>>();
    } else {
        for (int s = 0; s < 10; ++s) cfg.seeds.push_back(s);
    }
    cfg.out = get_or<std::string>(j, "out", "");
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["name"] = cfg.name;
    j["task"] = {{"name", cfg.task.name},  {"vocab", cfg.task.vocab},
                 {"seq_len", cfg.task.seq_len}, {"classes", cfg.task.classes},
                 {"examples", cfg.task.train_n + cfg.task.val_n}, {"test_n", cfg.task.test_n},
                 {"seed", cfg.task.seed}};
    j["dims"] = {{"layers", cfg.dims.layers},   {"heads", cfg.dims.heads}, {"ffn_units", cfg.dims.ffn_units},
                 {"d_model", cfg.dims.d_model}, {"d_head", cfg.dims.d_head}, {"vocab", cfg.dims.vocab},
                 {"seq_len", cfg.dims.seq_len}, {"classes", cfg.dims.classes}};
    j["space"] = to_string(cfg.space);
    j["methods"] = cfg.methods;
    j["mode"] = cfg.mode;
    j["train"] = {{"strategy", to_string(cfg.train.strategy)},
                  {"k", cfg.train.k},
                  {"temperature", cfg.train.temperature},
                  {"epochs", cfg.train.epochs},
                  {"lr", cfg.train.lr},
                  {"batch_size", cfg.train.batch_size}};
    j["finetune_epochs"] = cfg.finetune_epochs;
    j["asha"] = {{"r_min", cfg.asha.r_min}, {"eta", cfg.asha.eta}, {"r_max", cfg.asha.r_max}};
    j["budget"] = {{"wallclock_s", cfg.budget.wallclock_s}, {"max_evals", cfg.budget.max_evals}};
    j["ehvi"] = {{"init_points", cfg.ehvi.init_points},
                 {"candidates", cfg.ehvi.candidates},
                 {"mc_samples", cfg.ehvi.mc_samples},
                 {"hyper_draws", cfg.ehvi.hyper_draws}};
    j["rea"] = {{"population", cfg.rea_population}, {"sample", cfg.rea_sample}};
    j["seeds"] = cfg.seeds;
    j["out"] = cfg.out;
    return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_config_from_json(parse_json_file(path, "harness.config"));
}

nlohmann::ordered_json to_json(const HistoryRecord& rec) {
    nlohmann::ordered_json j;
    j["method"] = rec.method;
    j["task"] = rec.task;
    j["seed"] = rec.seed;
    j["space"] = to_string(rec.space);
    j["config"] = to_json(rec.config);
    j["f0"] = rec.f0;
    j["f1"] = rec.f1;
    j["fidelity_epochs"] = rec.fidelity_epochs;
    j["wallclock_s"] = rec.wallclock_s;
    return j;
}

HistoryRecord history_record_from_json(const nlohmann::json& j) {
    require(j.is_object(), "harness.history", "history record must be a JSON object");
    for (const char* key : {"method", "task", "seed", "space", "config", "f0", "f1", "fidelity_epochs", "wallclock_s"})
        require(j.contains(key), "harness.history", std::string("history record missing field: ") + key);
    HistoryRecord rec;
    rec.method = j.at("method").get<std::string>();
    rec.task = j.at("task").get<std::string>();
    rec.seed = j.at("seed").get<int>();
    rec.space = space_kind_from_string(j.at("space").get<std::string>());
    rec.config = config_from_json(j.at("config"));
    rec.f0 = j.at("f0").get<double>();
    rec.f1 = j.at("f1").get<double>();
    rec.fidelity_epochs = j.at("fidelity_epochs").get<int>();
    rec.wallclock_s = j.at("wallclock_s").get<double>();
    return rec;
}

ParetoArchive layer_drop_baseline(const SuperNetwork& pretrained, const TaskData& task, const TrainOptions& opt,
                                  VirtualClock* clock, SearchLog* log) {
    const ModelDims& dims = pretrained.dims;
    require(dims.layers >= 2, "harness.layer_drop", "layer-drop baseline needs at least 2 layers");
    SearchSpace space(SpaceKind::Layer, dims);
    ParetoArchive archive(space);
    VirtualClock local;
    VirtualClock* clk = clock ? clock : &local;
    for (int drop = 0; drop < dims.layers; ++drop) {
        SubNetConfig cfg{SpaceKind::Layer, std::vector<int>(static_cast<size_t>(dims.layers), 1)};
        for (int l = dims.layers - drop; l < dims.layers; ++l) cfg.values[static_cast<size_t>(l)] = 0;
        Objective obj = finetune_subnet_standalone(pretrained, space, cfg, task, opt, clk);
        int idx = archive.append(cfg, obj, clk->now(), static_cast<int>(opt.seed));
        (void)idx;
        if (log && log->on_eval) log->on_eval(EvalRecord{cfg, obj, opt.epochs, clk->now()});
    }
    return archive;
}

namespace {

ParetoArchive dispatch_method(const std::string& method, const SearchContext& ctx, Evaluator& ev,
                              const ExperimentConfig& cfg) {
    if (method == "random-search") return random_search(ctx, ev);
    if (method == "local-search") return local_search(ctx, ev);
    if (method == "mo-rea") return mo_rea(ctx, ev, cfg.rea_population, cfg.rea_sample);
    if (method == "ehvi") return ehvi_search(ctx, ev, cfg.ehvi);
    if (method == "mo-asha") return mo_asha(ctx, ev, cfg.asha);
    fail("harness.method", "unknown method: " + method);
}

struct CellRecords {
    std::string method;
    int seed = 0;
    std::vector<HistoryRecord> records;
};

std::string render_history(const std::vector<HistoryRecord>& records) {
    std::string body;
    for (const auto& rec : records) {
        body += to_json(rec).dump();
        body += '\n';
    }
    return body;
}

// Replays each cell's evaluations in order and reports the hypervolume of
// the quantile-normalized front after every evaluation, plus the regret
// against the union front over every cell of the task.
std::string render_task_csv(const std::vector<CellRecords>& cells, const QuantileNormalizer& qf0,
                            const QuantileNormalizer& qf1, double best_hv) {
    std::string body = "method,seed,wallclock_s,hv,regret\n";
    const RefPoint ref;
    for (const auto& cell : cells) {
        std::vector<Objective> seen;
        for (const auto& rec : cell.records) {
            seen.push_back(Objective{qf0.transform(rec.f0), qf1.transform(rec.f1)});
            std::vector<Objective> front;
            for (int idx : pareto_front_indices(seen)) front.push_back(seen[static_cast<size_t>(idx)]);
            double hv = hypervolume(front, ref);
            double regret = hypervolume_regret(front, best_hv, ref);
            body += cell.method + "," + std::to_string(cell.seed) + "," + fmt(rec.wallclock_s) + "," + fmt(hv) + "," +
                    fmt(regret) + "\n";
        }
    }
    return body;
}

std::string render_ranks_csv(const std::vector<CellRecords>& cells, const QuantileNormalizer& qf0,
                             const QuantileNormalizer& qf1, const ExperimentConfig& cfg) {
    std::string body = "method,time,mean_rank\n";
    std::set<std::string> methods_seen;
    for (const auto& cell : cells) methods_seen.insert(cell.method);
    if (methods_seen.size() < 2) return body;  // ranks need competition; header only

    const RefPoint ref;
    std::vector<RankInput> inputs;
    for (const auto& cell : cells) {
        RankInput in;
        in.method = cell.method;
        in.task = cfg.task.name;
        in.seed = cell.seed;
        std::vector<Objective> seen;
        for (const auto& rec : cell.records) {
            seen.push_back(Objective{qf0.transform(rec.f0), qf1.transform(rec.f1)});
            std::vector<Objective> front;
            for (int idx : pareto_front_indices(seen)) front.push_back(seen[static_cast<size_t>(idx)]);
            in.hv.add(rec.wallclock_s, hypervolume(front, ref));
        }
        inputs.push_back(std::move(in));
    }
    std::vector<double> grid;
    for (int i = 0; i < kGridPoints; ++i)
        grid.push_back(cfg.budget.wallclock_s * static_cast<double>(i) / (kGridPoints - 1));
    RankResult ranks = average_ranks(inputs, grid, kRankDraws, kRankSeed);
    for (const auto& [method, trace] : ranks.mean_rank) {
        for (size_t i = 0; i < ranks.grid.size(); ++i)
            body += method + "," + fmt(ranks.grid[i]) + "," + fmt(trace[i]) + "\n";
    }
    return body;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool force) {
    cfg.validate();
    fs::path out(cfg.out);
    if (fs::exists(out)) {
        require(force, "harness.exists", "output directory exists (pass force to overwrite): " + cfg.out);
        fs::remove_all(out);
    }
    fs::create_directories(out / "history");
    fs::create_directories(out / "metrics");
    fs::create_directories(out / "supernet");

    write_file((out / "config.json").string(), to_json(cfg).dump(2) + "\n");

    TaskData task = generate_task(cfg.task);

    ExperimentResult result;
    result.out_dir = cfg.out;
    std::vector<CellRecords> cells;

    for (int seed : cfg.seeds) {
        // One pretrained super-network per seed, shared by every method.
        SuperNetwork net = make_network(cfg.dims);
        Rng init_rng(static_cast<uint64_t>(seed) * 1000003ull + 17ull);
        random_init(net, init_rng);
        TrainOptions topt = cfg.train;
        topt.seed = static_cast<uint64_t>(seed);
        TrainReport treport = train_supernet(net, task, topt);
        fs::path seed_dir = out / "supernet" / ("seed" + std::to_string(seed));
        fs::create_directories(seed_dir);
        save_checkpoint(net, (seed_dir / "checkpoint.json").string());
        treport.checkpoint = (seed_dir / "checkpoint.json").string();
        write_file((seed_dir / "report.json").string(), to_json(treport).dump(2) + "\n");

        SearchSpace space(cfg.space, cfg.dims);
        for (const auto& method : cfg.methods) {
            CellRecords cell;
            cell.method = method;
            cell.seed = seed;
            SearchLog log;
            log.on_eval = [&](const EvalRecord& er) {
                HistoryRecord rec;
                rec.method = method;
                rec.task = cfg.task.name;
                rec.seed = seed;
                rec.space = cfg.space;
                rec.config = er.config;
                rec.f0 = er.obj.f0;
                rec.f1 = er.obj.f1;
                rec.fidelity_epochs = er.fidelity_epochs;
                rec.wallclock_s = er.wallclock_s;
                cell.records.push_back(std::move(rec));
            };
            try {
                SearchContext ctx(space, cfg.budget, static_cast<uint64_t>(seed));
                ctx.log = &log;
                if (cfg.mode == "ws") {
                    SharedWeightsEvaluator ev(net, space, task, cfg.train.policy);
                    dispatch_method(method, ctx, ev, cfg);
                } else {
                    TrainOptions ft = cfg.train;
                    ft.epochs = cfg.finetune_epochs;
                    ft.seed = static_cast<uint64_t>(seed);
                    FinetuneEvaluator ev(net, space, task, ft);
                    dispatch_method(method, ctx, ev, cfg);
                }
            } catch (const Error& e) {
                result.failures.push_back(cell_name(method, seed) + ": " + e.what());
                continue;
            }
            std::string hist_path = (out / "history" / (cell_name(method, seed) + ".jsonl")).string();
            write_file(hist_path, render_history(cell.records));
            result.history_files.push_back(hist_path);
            cells.push_back(std::move(cell));
        }
    }

    nlohmann::ordered_json fail_json = nlohmann::ordered_json::array();
    for (const auto& f : result.failures) fail_json.push_back(f);
    write_file((out / "failures.json").string(), fail_json.dump(2) + "\n");

    // Pooled normalization over every observation of the task, so HV and
    // regret are comparable across methods and seeds.
    std::vector<double> all_f0, all_f1;
    for (const auto& cell : cells)
        for (const auto& rec : cell.records) {
            all_f0.push_back(rec.f0);
            all_f1.push_back(rec.f1);
        }
    require(all_f0.size() >= 2, "harness.no_results", "fewer than 2 successful evaluations; nothing to report");
    QuantileNormalizer qf0, qf1;
    qf0.fit(all_f0);
    qf1.fit(all_f1);

    std::vector<Objective> union_points;
    for (size_t i = 0; i < all_f0.size(); ++i)
        union_points.push_back(Objective{qf0.transform(all_f0[i]), qf1.transform(all_f1[i])});
    std::vector<Objective> union_front;
    for (int idx : pareto_front_indices(union_points)) union_front.push_back(union_points[static_cast<size_t>(idx)]);
    double best_hv = hypervolume(union_front, RefPoint{});

    write_file((out / "metrics" / (cfg.task.name + ".csv")).string(), render_task_csv(cells, qf0, qf1, best_hv));
    write_file((out / "metrics" / "ranks.csv").string(), render_ranks_csv(cells, qf0, qf1, cfg));
    return result;
}

void emit_plot_data(const std::string& results_dir, bool force) {
    fs::path root(results_dir);
    require(fs::exists(root) && fs::is_directory(root), "plots.missing_input", "results directory not found: " + results_dir);
    fs::path config_path = root / "config.json";
    require(fs::exists(config_path), "plots.missing_input", "missing input: " + config_path.string());
    ExperimentConfig cfg = load_experiment_config(config_path.string());

    fs::path failures_path = root / "failures.json";
    require(fs::exists(failures_path), "plots.missing_input", "missing input: " + failures_path.string());
    nlohmann::json fail_json = parse_json_file(failures_path.string(), "plots.parse");
    std::set<std::string> failed;
    for (const auto& f : fail_json) {
        std::string s = f.get<std::string>();
        failed.insert(s.substr(0, s.find(':')));
    }

    fs::path metrics_csv = root / "metrics" / (cfg.task.name + ".csv");
    require(fs::exists(metrics_csv), "plots.missing_input", "missing input: " + metrics_csv.string());
    fs::path ranks_csv = root / "metrics" / "ranks.csv";
    require(fs::exists(ranks_csv), "plots.missing_input", "missing input: " + ranks_csv.string());

    // Load all surviving cells up front; any missing file aborts before a
    // single output is written.
    struct Cell {
        std::string method;
        int seed;
        std::vector<HistoryRecord> records;
    };
    std::vector<Cell> cells;
    for (const auto& method : cfg.methods) {
        for (int seed : cfg.seeds) {
            if (failed.count(cell_name(method, seed))) continue;
            fs::path hist = root / "history" / (cell_name(method, seed) + ".jsonl");
            require(fs::exists(hist), "plots.missing_input", "missing input: " + hist.string());
            Cell cell{method, seed, {}};
            std::istringstream in(read_file(hist.string()));
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
                require(!j.is_discarded(), "plots.parse", "invalid JSONL line in " + hist.string());
                cell.records.push_back(history_record_from_json(j));
            }
            cells.push_back(std::move(cell));
        }
    }
    require(!cells.empty(), "plots.missing_input", "no history records under: " + results_dir);

    // Regret traces come from the metrics CSV so plots agree with reports.
    std::map<std::string, std::map<int, Trace>> regret_by_method;
    {
        std::istringstream in(read_file(metrics_csv.string()));
        std::string line;
        std::getline(in, line);
        require(line == "method,seed,wallclock_s,hv,regret", "plots.parse", "unexpected metrics header in " + metrics_csv.string());
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string method, seed_s, wall_s, hv_s, regret_s;
            require(std::getline(row, method, ',') && std::getline(row, seed_s, ',') && std::getline(row, wall_s, ',') &&
                        std::getline(row, hv_s, ',') && std::getline(row, regret_s, ','),
                    "plots.parse", "bad metrics row: " + line);
            regret_by_method[method][std::stoi(seed_s)].add(std::stod(wall_s), std::stod(regret_s));
        }
    }

    std::vector<std::pair<std::string, std::string>> outputs;  // path -> body

    for (const auto& cell : cells) {
        std::vector<Objective> pts;
        for (const auto& rec : cell.records) pts.push_back(Objective{rec.f0, rec.f1});
        std::vector<int> front = pareto_front_indices(pts);
        std::set<int> on(front.begin(), front.end());
        std::string body = "f0,f1,on_front\n";
        for (size_t i = 0; i < pts.size(); ++i)
            body += fmt(pts[i].f0) + "," + fmt(pts[i].f1) + "," + (on.count(static_cast<int>(i)) ? "1" : "0") + "\n";
        outputs.emplace_back("pareto_" + cell_name(cell.method, cell.seed) + ".csv", body);
    }

    for (const auto& [method, traces] : regret_by_method) {
        std::string body = "time,mean_regret,min_regret,max_regret\n";
        for (int i = 0; i < kGridPoints; ++i) {
            double t = cfg.budget.wallclock_s * static_cast<double>(i) / (kGridPoints - 1);
            double sum = 0.0, lo = 0.0, hi = 0.0;
            bool first = true;
            int n = 0;
            for (const auto& [seed, trace] : traces) {
                // LVCF per seed; before the first observation the regret is
                // still at its initial (first observed) level.
                double before = trace.value.empty() ? 0.0 : trace.value.front();
                double r = trace_value_at(trace, t, before);
                sum += r;
                lo = first ? r : std::min(lo, r);
                hi = first ? r : std::max(hi, r);
                first = false;
                ++n;
            }
            body += fmt(t) + "," + fmt(n ? sum / n : 0.0) + "," + fmt(lo) + "," + fmt(hi) + "\n";
        }
        outputs.emplace_back("regret_" + method + ".csv", body);
    }

    outputs.emplace_back("ranks.csv", read_file(ranks_csv.string()));

    for (SpaceKind kind : {SpaceKind::Small, SpaceKind::Layer, SpaceKind::Medium, SpaceKind::Large}) {
        SearchSpace space(kind, cfg.dims);
        Rng rng(101 + static_cast<uint64_t>(kind));
        std::string body = "sample,params\n";
        for (int i = 0; i < kHistSamples; ++i) {
            SubNetConfig c = space.sample_uniform(rng);
            body += std::to_string(i) + "," + fmt(space.param_count(c)) + "\n";
        }
        outputs.emplace_back("param_hist_" + to_string(kind) + ".csv", body);
    }

    fs::path plot_dir = root / "plots";
    if (fs::exists(plot_dir)) {
        require(force, "harness.exists", "plots directory exists (pass force to overwrite): " + plot_dir.string());
        fs::remove_all(plot_dir);
    }
    fs::create_directories(plot_dir);
    for (const auto& [name, body] : outputs) write_file((plot_dir / name).string(), body);
}

}  // namespace monas
