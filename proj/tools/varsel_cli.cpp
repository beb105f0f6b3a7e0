// Experiment CLI: continual-learning runs on the FSM environment (--mode fsm)
// and class-incremental shape learning on MNIST (--mode mnist), with model
// export to DOT. Configuration comes from a JSON file plus flag overrides;
// every run writes a manifest sufficient to reproduce its metrics.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "varsel/experiment.hpp"
#include "varsel/export.hpp"
#include "varsel/metrics.hpp"
#include "varsel/mnist_experiment.hpp"

using nlohmann::json;
using namespace varsel;

namespace {

struct CliConfig {
    std::string mode = "fsm";
    uint64_t seed = 1;
    int trials = 5;
    std::string out_dir = "out";
    std::string data_dir = "data";
    int classes = 3;
    int samples = -1;  // -1: paper default for the class count
    int cycles = 10;
    int test_per_class = -1;
    double t_ref = 0.05;
    double t_sign = 0.05;
    double nce_cutoff = 0.25;
    double epsilon = 0.1;
    int population = 10;
    std::string variant = "vanilla";  // or "random"
    std::string schedule = "table1";  // or "readaptation"
    int phase_steps = -1;             // -1: schedule default
    std::string export_dot;           // write the final model here
    std::string pathway;              // DOT pathway filter (BSV name)
    bool reliable_only = false;
    int workers = 0;                  // 0: hardware concurrency
};

json to_json(const CliConfig& c) {
    return json{{"mode", c.mode},
                {"seed", c.seed},
                {"trials", c.trials},
                {"out", c.out_dir},
                {"data_dir", c.data_dir},
                {"classes", c.classes},
                {"samples", c.samples},
                {"cycles", c.cycles},
                {"test_per_class", c.test_per_class},
                {"t_ref", c.t_ref},
                {"t_sign", c.t_sign},
                {"nce_cutoff", c.nce_cutoff},
                {"epsilon", c.epsilon},
                {"population", c.population},
                {"variant", c.variant},
                {"schedule", c.schedule},
                {"phase_steps", c.phase_steps},
                {"export_dot", c.export_dot},
                {"pathway", c.pathway},
                {"reliable_only", c.reliable_only},
                {"workers", c.workers}};
}

void from_json_file(const std::string& path, CliConfig& c) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    json j = json::parse(in);
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("mode", c.mode);
    get("seed", c.seed);
    get("trials", c.trials);
    get("out", c.out_dir);
    get("data_dir", c.data_dir);
    get("classes", c.classes);
    get("samples", c.samples);
    get("cycles", c.cycles);
    get("test_per_class", c.test_per_class);
    get("t_ref", c.t_ref);
    get("t_sign", c.t_sign);
    get("nce_cutoff", c.nce_cutoff);
    get("epsilon", c.epsilon);
    get("population", c.population);
    get("variant", c.variant);
    get("schedule", c.schedule);
    get("phase_steps", c.phase_steps);
    get("export_dot", c.export_dot);
    get("pathway", c.pathway);
    get("reliable_only", c.reliable_only);
    get("workers", c.workers);
}

template <typename Fn>
void run_parallel(int n, int workers, Fn fn) {
    if (workers <= 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

int run_fsm(const CliConfig& c) {
    if (c.trials <= 0) throw std::invalid_argument("trial count must be positive");
    if (c.variant != "vanilla" && c.variant != "random")
        throw std::invalid_argument("variant must be vanilla or random");
    const bool random_variant = c.variant == "random";

    FsmRunConfig cfg;
    if (c.schedule == "table1")
        cfg = table1_schedule(random_variant, c.phase_steps > 0 ? c.phase_steps : 1000);
    else if (c.schedule == "readaptation")
        cfg = readaptation_schedule(random_variant, c.phase_steps > 0 ? c.phase_steps : 500);
    else
        throw std::invalid_argument("schedule must be table1 or readaptation");
    cfg.epsilon = c.epsilon;
    cfg.learner.nce_cutoff = c.nce_cutoff;

    std::filesystem::create_directories(c.out_dir);

    std::vector<FsmTrialResult> trained(c.trials), baseline(c.trials);
    run_parallel(c.trials, c.workers, [&](int t) {
        trained[t] = run_fsm_trial(cfg, c.seed + t, /*random_agent=*/false);
        baseline[t] = run_fsm_trial(cfg, c.seed + t, /*random_agent=*/true);
    });

    std::vector<MetricRecord> records;
    for (int t = 0; t < c.trials; ++t) {
        int ep = 0;
        for (const auto& e : trained[t].episodes)
            records.push_back({t, e.phase, ep++, "episode_duration", double(e.duration)});
        ep = 0;
        for (const auto& e : baseline[t].episodes)
            records.push_back({t, e.phase, ep++, "random_episode_duration", double(e.duration)});
        for (size_t s = 0; s < trained[t].csv_count_per_step.size(); s += 100)
            records.push_back({t, 0, static_cast<int>(s), "csv_count",
                               double(trained[t].csv_count_per_step[s])});
    }
    for (size_t ph = 0; ph < cfg.phases.size(); ++ph) {
        std::vector<double> means, rmeans;
        for (int t = 0; t < c.trials; ++t) {
            means.push_back(trained[t].phase_mean_duration(static_cast<int>(ph)));
            rmeans.push_back(baseline[t].phase_mean_duration(static_cast<int>(ph)));
        }
        records.push_back({-1, int(ph), 0, "phase_mean_duration", mean(means)});
        records.push_back({-1, int(ph), 0, "phase_stderr_duration", standard_error(means)});
        records.push_back({-1, int(ph), 0, "random_phase_mean_duration", mean(rmeans)});
        records.push_back({-1, int(ph), 0, "random_phase_stderr_duration",
                           standard_error(rmeans)});
    }
    write_metrics_file(c.out_dir + "/fsm_metrics.jsonl", records);
    write_manifest(c.out_dir + "/manifest.json", to_json(c).dump(), c.seed);

    {
        std::ofstream tf(c.out_dir + "/fsm_transitions.txt");
        FsmEnv::write_transition_table(tf, FsmEnv::default_transition_table());
    }
    if (!c.export_dot.empty()) {
        DotExportOptions opts;
        opts.reliable_only = c.reliable_only;
        opts.pathway_filter = c.pathway;
        std::ofstream dot(c.export_dot);
        dot << model_to_dot(trained[0].model, opts);
    }

    std::cout << "phase means (trained vs random):\n";
    for (size_t ph = 0; ph < cfg.phases.size(); ++ph) {
        std::vector<double> means, rmeans;
        for (int t = 0; t < c.trials; ++t) {
            means.push_back(trained[t].phase_mean_duration(static_cast<int>(ph)));
            rmeans.push_back(baseline[t].phase_mean_duration(static_cast<int>(ph)));
        }
        std::cout << "  " << to_string(cfg.phases[ph].subtype)
                  << (cfg.phases[ph].learning ? "-L " : "-NL") << "  " << mean(means) << " ("
                  << standard_error(means) << ")  vs  " << mean(rmeans) << "\n";
    }
    std::cout << "metrics: " << c.out_dir << "/fsm_metrics.jsonl\n";
    return 0;
}

int run_mnist(const CliConfig& c) {
    if (c.trials <= 0) throw std::invalid_argument("trial count must be positive");
    std::string data_dir = c.data_dir;
    if (const char* env = std::getenv("VARSEL_DATA_DIR")) data_dir = env;
    MnistDataset ds = load_mnist_from_dir(data_dir);

    MnistRunConfig cfg = MnistRunConfig::for_classes(c.classes);
    if (c.samples > 0) cfg.n_sample = c.samples;
    if (c.test_per_class > 0) cfg.test_per_class = c.test_per_class;
    cfg.cycles = c.cycles;
    cfg.mnr.t_ref = c.t_ref;
    cfg.mnr.t_sign = c.t_sign;
    cfg.mnr.population = c.population;

    std::filesystem::create_directories(c.out_dir);
    std::vector<MnistRunResult> results(c.trials);
    run_parallel(c.trials, c.workers, [&](int t) {
        results[t] = run_mnist_trial(ds, cfg, c.seed + t);
    });

    std::vector<MetricRecord> records;
    for (int t = 0; t < c.trials; ++t) {
        auto r = mnist_metrics(results[t], t);
        records.insert(records.end(), r.begin(), r.end());
    }
    std::vector<double> finals;
    for (const auto& r : results) finals.push_back(r.final_mean_accuracy());
    records.push_back({-1, cfg.cycles - 1, 0, "final_mean_accuracy", mean(finals)});
    write_metrics_file(c.out_dir + "/mnist_metrics.jsonl", records);
    write_manifest(c.out_dir + "/manifest.json", to_json(c).dump(), c.seed);

    std::cout << "final mean accuracy over " << c.trials << " run(s): " << mean(finals) << "\n";
    std::cout << "metrics: " << c.out_dir << "/mnist_metrics.jsonl\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"varsel: continual environment-model learning and shape identification"};
    CliConfig c;
    std::string config_path;
    app.add_option("--mode", c.mode, "fsm or mnist");
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    app.add_option("--seed", c.seed, "base seed; trial t uses seed + t");
    app.add_option("--out", c.out_dir, "output directory");
    app.add_option("--trials", c.trials, "number of trials / runs");
    app.add_option("--classes", c.classes, "mnist: class count");
    app.add_option("--samples", c.samples, "mnist: training samples per class per cycle");
    app.add_option("--cycles", c.cycles, "mnist: cycles");
    app.add_option("--test-per-class", c.test_per_class, "mnist: held-out samples per class");
    app.add_option("--t-ref", c.t_ref, "statistical refinement threshold");
    app.add_option("--t-sign", c.t_sign, "conditioner significance threshold");
    app.add_option("--nce-cutoff", c.nce_cutoff, "NCE blocking threshold (fsm)");
    app.add_option("--epsilon", c.epsilon, "random-action probability (fsm)");
    app.add_option("--population", c.population, "assignment search population (mnist)");
    app.add_option("--variant", c.variant, "fsm: vanilla or random");
    app.add_option("--schedule", c.schedule, "fsm: table1 or readaptation");
    app.add_option("--phase-steps", c.phase_steps, "fsm: steps per phase");
    app.add_option("--data-dir", c.data_dir, "dataset directory (or VARSEL_DATA_DIR)");
    app.add_option("--export-dot", c.export_dot, "write the trial-0 model as DOT");
    app.add_option("--pathway", c.pathway, "DOT: restrict to one BSV's predictive pathway");
    app.add_flag("--reliable-only", c.reliable_only, "DOT: unconditional pathways only");
    app.add_option("--workers", c.workers, "parallel trial workers (0 = hardware)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (!config_path.empty()) {
            // File values fill in everything not set explicitly on the line.
            CliConfig merged;
            from_json_file(config_path, merged);
            auto keep = [&](const char* flag, auto& from_cli, auto& into) {
                if (app.count(flag)) into = from_cli;
            };
            keep("--mode", c.mode, merged.mode);
            keep("--seed", c.seed, merged.seed);
            keep("--out", c.out_dir, merged.out_dir);
            keep("--trials", c.trials, merged.trials);
            keep("--classes", c.classes, merged.classes);
            keep("--samples", c.samples, merged.samples);
            keep("--cycles", c.cycles, merged.cycles);
            keep("--test-per-class", c.test_per_class, merged.test_per_class);
            keep("--t-ref", c.t_ref, merged.t_ref);
            keep("--t-sign", c.t_sign, merged.t_sign);
            keep("--nce-cutoff", c.nce_cutoff, merged.nce_cutoff);
            keep("--epsilon", c.epsilon, merged.epsilon);
            keep("--population", c.population, merged.population);
            keep("--variant", c.variant, merged.variant);
            keep("--schedule", c.schedule, merged.schedule);
            keep("--phase-steps", c.phase_steps, merged.phase_steps);
            keep("--data-dir", c.data_dir, merged.data_dir);
            keep("--export-dot", c.export_dot, merged.export_dot);
            keep("--pathway", c.pathway, merged.pathway);
            keep("--reliable-only", c.reliable_only, merged.reliable_only);
            keep("--workers", c.workers, merged.workers);
            c = merged;
        }
        if (c.mode == "fsm") return run_fsm(c);
        if (c.mode == "mnist") return run_mnist(c);
        std::cerr << "error: unknown mode " << c.mode << " (use fsm or mnist)\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
