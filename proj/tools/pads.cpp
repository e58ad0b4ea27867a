// pads: simulate traces, run detectors, evaluate outcome files.

#include "pads/pads.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pads;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

int exit_code(ErrorCode c) {
    switch (c) {
    case ErrorCode::config:
    case ErrorCode::invalid_input:
    case ErrorCode::unsupported: return kUsage;
    case ErrorCode::infeasible:
    case ErrorCode::degenerate:
    case ErrorCode::invalid_step:
    case ErrorCode::numerical: return kNumerical;
    default: return kData;
    }
}

// Config file: {"simulation": {...}, "detection": {...}}, both optional.
struct FileConfig {
    SimConfig sim;
    PipelineConfig det;
};

FileConfig load_config(const std::string& path) {
    FileConfig fc;
    if (path.empty()) return fc;
    const json j = config::parse_file(path);
    config::ObjectReader r(j, "");
    if (r.has("simulation")) fc.sim = sim_config_from_json(r.raw("simulation"));
    if (r.has("detection")) fc.det = pipeline_config_from_json(r.raw("detection"));
    r.finish();
    return fc;
}

json defaults_json() {
    return json{{"simulation", to_json(SimConfig{})}, {"detection", to_json(PipelineConfig{})}};
}

std::string fmt(double x) { return std::isfinite(x) ? format_double(x) : (x > 0 ? "inf" : "-inf"); }

std::string fixed(double x, int prec = 4) {
    if (!std::isfinite(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

// --- simulate ----------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int count = 1;
    bool suite = false;
};

int cmd_simulate(const SimulateArgs& a) {
    const FileConfig fc = load_config(a.config);
    std::vector<SimConfig> cfgs;
    if (a.suite) {
        cfgs = standard_suite_configs(a.seed.value_or(1000));
    } else {
        if (a.count < 1) fail(ErrorCode::config, "--count must be >= 1");
        const std::uint64_t base = a.seed.value_or(fc.sim.seed);
        for (int i = 0; i < a.count; ++i) {
            SimConfig c = fc.sim;
            c.seed = base + static_cast<std::uint64_t>(i);
            cfgs.push_back(c);
        }
    }
    for (const auto& c : cfgs) c.validate();

    std::vector<std::string> texts(cfgs.size());
    parallel_for(cfgs.size(), [&](std::size_t i) { texts[i] = trace_to_string(simulate(cfgs[i])); });

    json manifest;
    manifest["format"] = "pads-manifest";
    manifest["version"] = 1;
    manifest["config_hash"] = fnv1a_hex(to_json(cfgs.front()).dump());
    json traces = json::array();
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "trace_%03zu.jsonl", i);
        atomic_write(fs::path(a.out) / name, texts[i]);
        json cj = to_json(cfgs[i]);
        traces.push_back({{"file", name}, {"seed", cfgs[i].seed}, {"config_hash", fnv1a_hex(cj.dump())},
                          {"epochs", cfgs[i].epochs}});
    }
    manifest["seeds"] = json::array();
    for (const auto& c : cfgs) manifest["seeds"].push_back(c.seed);
    manifest["traces"] = traces;
    manifest["config"] = to_json(cfgs.front());
    atomic_write(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << cfgs.size() << " trace(s) to " << a.out << "\n";
    return kOk;
}

// --- detect ------------------------------------------------------------------------

struct DetectArgs {
    std::string trace;
    std::string method;
    std::string config;
    std::string out;
    std::string model_in;
    std::string model_out;
};

std::string summary_line(Method m, const MethodRun& run) {
    const auto ev = run.evaluated();
    const auto r = count_rates(ev);
    std::ostringstream os;
    os << "method=" << to_string(m) << " gamma=" << fixed(run.gamma) << " tpr=" << fixed(r.tpr)
       << " fpr=" << fixed(r.fpr) << " delay=";
    if (std::any_of(ev.begin(), ev.end(), [](const Outcome& o) { return o.truth; })) {
        const double d = detection_delay(ev);
        os << (std::isfinite(d) ? fixed(d, 1) : "never");
    } else {
        os << "na";
    }
    os << " epochs=" << run.outcomes.size() << " evaluated=" << ev.size();
    return os.str();
}

int cmd_detect(const DetectArgs& a) {
    const auto method = parse_method(a.method);
    if (!method) fail(ErrorCode::invalid_input, "unknown method '" + a.method + "'");
    const FileConfig fc = load_config(a.config);
    PipelineConfig cfg = fc.det;
    cfg.variant = variant_of(*method);

    const PreparedTrace pt = prepare(load_trace(a.trace));
    if (pt.epochs.empty()) fail(ErrorCode::data, "trace has no epochs");
    if (*method == Method::sop && !pt.trace.has_stations()) {
        fail(ErrorCode::unsupported, "method sop needs station and RSS records; this trace has none");
    }
    if (!a.model_in.empty() && !has_feedback(*method)) fail(ErrorCode::invalid_input, "--model applies to pads-* methods only");

    ScoredTrace st;
    if (!a.model_in.empty()) {
        st.eval_begin = training_end(pt.epochs, cfg.train_fraction);
        st.model = loda_from_json(json::parse(read_file(a.model_in)));
        st.outcomes = run_detector(pt.epochs, pt.trace.M, cfg, *st.model, std::numeric_limits<double>::infinity(),
                                   st.eval_begin);
    } else {
        st = score_trace(pt, *method, cfg);
    }
    const MethodRun run = cfg.gamma ? run_at_gamma(pt, *method, cfg, *cfg.gamma, &st)
                                    : run_at_fpr(pt, *method, cfg, cfg.target_fpr, &st);

    std::ostringstream csv;
    write_outcomes(csv, run.outcomes);
    atomic_write(a.out, csv.str());

    json meta{{"format", "pads-outcomes-meta"},
              {"version", 1},
              {"method", to_string(*method)},
              {"trace", fs::path(a.trace).filename().string()},
              {"gamma", run.gamma},
              {"calibrated", !cfg.gamma.has_value()},
              {"target_fpr", cfg.target_fpr},
              {"eval_begin", run.eval_begin},
              {"window", cfg.window},
              {"kappa", cfg.kappa}};
    if (!std::isfinite(run.gamma)) meta["gamma"] = fmt(run.gamma);
    atomic_write(a.out + ".meta.json", meta.dump(2) + "\n");
    if (!a.model_out.empty()) {
        if (!st.model) fail(ErrorCode::invalid_input, "--save-model applies to pads-* methods only");
        atomic_write(a.model_out, to_json(*st.model).dump() + "\n");
    }
    std::cout << summary_line(*method, run) << "\n";
    return kOk;
}

// --- eval --------------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> outcomes;
    std::string gamma_grid;
    std::string out;
    std::vector<double> targets{0.05, 0.10, 0.15};
};

struct OutcomeFile {
    std::string method;
    std::optional<int> window;
    std::optional<double> kappa;
    std::vector<Outcome> evaluated;
};

OutcomeFile load_outcome_file(const std::string& path) {
    OutcomeFile f;
    std::ifstream in(path);
    if (!in) fail(ErrorCode::data, "cannot open outcomes file " + path);
    auto all = read_outcomes(in, path);
    std::size_t begin = 0;
    f.method = fs::path(path).stem().string();
    const fs::path meta = path + ".meta.json";
    if (fs::exists(meta)) {
        try {
            const json j = json::parse(read_file(meta));
            f.method = j.at("method").get<std::string>();
            begin = j.at("eval_begin").get<std::size_t>();
            if (j.contains("window")) f.window = j.at("window").get<int>();
            if (j.contains("kappa")) f.kappa = j.at("kappa").get<double>();
        } catch (const json::exception& e) {
            fail(ErrorCode::data, meta.string() + ": " + e.what());
        }
    }
    if (begin > all.size()) fail(ErrorCode::data, path + ": eval_begin beyond the end of the outcomes");
    f.evaluated.assign(all.begin() + static_cast<std::ptrdiff_t>(begin), all.end());
    return f;
}

int cmd_eval(const EvalArgs& a) {
    const auto grid = parse_gamma_grid(a.gamma_grid);
    std::vector<OutcomeFile> files(a.outcomes.size());
    parallel_for(files.size(), [&](std::size_t i) { files[i] = load_outcome_file(a.outcomes[i]); });

    std::map<std::string, std::vector<std::size_t>> by_method;
    for (std::size_t i = 0; i < files.size(); ++i) by_method[files[i].method].push_back(i);

    std::ostringstream roc;
    roc << "method,gamma,tpr,fpr,delay_mean,misses\n";
    std::ostringstream stats;
    stats << "method,mean,median,best20,worst20,count,tpr,fpr,delay_mean,misses\n";
    for (const auto& [name, idx] : by_method) {
        std::vector<std::vector<Outcome>> traces;
        for (auto i : idx) traces.push_back(files[i].evaluated);
        for (const auto& p : roc_sweep(traces, grid)) {
            roc << name << ',' << fmt(p.gamma) << ',' << fmt(p.tpr) << ',' << fmt(p.fpr) << ','
                << fmt(p.delay_mean) << ',' << p.misses << '\n';
        }

        std::vector<Outcome> pooled;
        std::vector<double> delays;
        for (const auto& t : traces) {
            pooled.insert(pooled.end(), t.begin(), t.end());
            if (std::any_of(t.begin(), t.end(), [](const Outcome& o) { return o.truth; })) delays.push_back(detection_delay(t));
        }
        const auto r = count_rates(pooled);
        const auto d = summarize_delays(delays);
        stats << name << ',';
        try {
            const auto e = recovered_error_stats(pooled);
            stats << fmt(e.mean) << ',' << fmt(e.median) << ',' << fmt(e.best20) << ',' << fmt(e.worst20) << ',' << e.count;
        } catch (const Error&) {
            stats << ",,,,0";
        }
        stats << ',' << fmt(r.tpr) << ',' << fmt(r.fpr) << ',' << fmt(d.mean) << ',' << d.misses << '\n';
    }

    // Operating points per (method, w, kappa) group, re-thresholding the
    // recorded scores at each target false-positive rate.
    std::map<std::tuple<std::string, int, double>, std::vector<std::size_t>> by_grid;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (files[i].window && files[i].kappa) by_grid[{files[i].method, *files[i].window, *files[i].kappa}].push_back(i);
    }
    std::ostringstream sweep;
    sweep << "method,window,kappa,target_fpr,gamma,tpr,fpr\n";
    for (const auto& [key, idx] : by_grid) {
        std::vector<Outcome> pooled;
        for (auto i : idx) pooled.insert(pooled.end(), files[i].evaluated.begin(), files[i].evaluated.end());
        std::vector<double> benign;
        for (const auto& o : pooled) {
            if (!o.truth) benign.push_back(o.score);
        }
        for (double target : a.targets) {
            if (benign.empty()) break;
            const double g = threshold_for_fpr(benign, target);
            auto tmp = pooled;
            for (auto& o : tmp) o.decision = o.score >= g;
            const auto r = count_rates(tmp);
            sweep << std::get<0>(key) << ',' << std::get<1>(key) << ',' << fmt(std::get<2>(key)) << ',' << fmt(target)
                  << ',' << fmt(g) << ',' << fmt(r.tpr) << ',' << fmt(r.fpr) << '\n';
        }
    }

    atomic_write(fs::path(a.out) / "roc.csv", roc.str());
    atomic_write(fs::path(a.out) / "stats.csv", stats.str());
    atomic_write(fs::path(a.out) / "sweep.csv", sweep.str());
    std::cout << "evaluated " << files.size() << " outcome file(s), " << by_method.size() << " method(s) -> " << a.out
              << "\n";
    return kOk;
}

// --- sweep -------------------------------------------------------------------------

struct SweepArgs {
    std::vector<std::string> traces;
    std::string config;
    std::string out;
    std::string method = "pads-a";
    std::vector<int> windows{5, 10, 15, 20, 25, 30, 35};
    std::vector<double> kappas{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    std::vector<double> targets{0.10};
    std::uint64_t seed = 1000;
};

int cmd_sweep(const SweepArgs& a) {
    const auto method = parse_method(a.method);
    if (!method) fail(ErrorCode::invalid_input, "unknown method '" + a.method + "'");
    const FileConfig fc = load_config(a.config);
    std::vector<PreparedTrace> suite;
    if (a.traces.empty()) {
        suite = build_suite(standard_suite_configs(a.seed));
    } else {
        suite.resize(a.traces.size());
        parallel_for(a.traces.size(), [&](std::size_t i) { suite[i] = prepare(load_trace(a.traces[i])); });
    }
    struct Cell {
        int w;
        double kappa;
        double target;
    };
    std::vector<Cell> cells;
    for (int w : a.windows) {
        for (double k : a.kappas) {
            for (double t : a.targets) cells.push_back({w, k, t});
        }
    }
    std::vector<MethodSummary> results(cells.size());
    // Cells run one after another; traces inside a cell run in parallel.
    for (std::size_t i = 0; i < cells.size(); ++i) {
        PipelineConfig cfg = fc.det;
        cfg.window = cells[i].w;
        cfg.kappa = cells[i].kappa;
        cfg.validate();
        results[i] = summarize(*method, run_suite(suite, *method, cfg, cells[i].target));
        log::info("w=" + std::to_string(cells[i].w) + " kappa=" + fixed(cells[i].kappa, 1) + " tpr=" + fixed(results[i].tpr));
    }
    std::ostringstream csv;
    csv << "method,window,kappa,target_fpr,tpr,fpr,delay_mean,misses\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& s = results[i];
        csv << to_string(*method) << ',' << cells[i].w << ',' << fmt(cells[i].kappa) << ',' << fmt(cells[i].target) << ','
            << fmt(s.tpr) << ',' << fmt(s.fpr) << ',' << fmt(s.delay.mean) << ',' << s.delay.misses << '\n';
    }
    atomic_write(fs::path(a.out) / "sweep.csv", csv.str());
    std::cout << "swept " << cells.size() << " cell(s) over " << suite.size() << " trace(s) -> " << a.out << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GNSS spoofing detection from network positions and motion data"};
    app.require_subcommand(0, 1);
    bool print_defaults = false;
    bool verbose = false;
    app.add_flag("--print-defaults", print_defaults, "Print the full default config file and exit");
    app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Generate simulated JSONL traces and a manifest");
    sim->add_option("--config", sa.config, "Config file (JSON)")->check(CLI::ExistingFile);
    sim->add_option("--out", sa.out, "Output directory")->required();
    sim->add_option("--seed", sa.seed, "Base seed (overrides the config)");
    sim->add_option("--count", sa.count, "Number of traces; seeds are base..base+count-1");
    sim->add_flag("--suite", sa.suite, "Write the standard six-trace evaluation suite instead");

    DetectArgs da;
    auto* det = app.add_subcommand("detect", "Run one detector over a trace and write an outcomes CSV");
    det->add_option("--trace", da.trace, "Trace file (JSONL)")->required()->check(CLI::ExistingFile);
    det->add_option("--method", da.method, "pads-a|pads-n|pads-o|sop|kf|pf|glrt")->required();
    det->add_option("--config", da.config, "Config file (JSON)")->check(CLI::ExistingFile);
    det->add_option("--out", da.out, "Outcomes CSV path")->required();
    det->add_option("--model", da.model_in, "Use this Loda model instead of training")->check(CLI::ExistingFile);
    det->add_option("--save-model", da.model_out, "Write the trained Loda model (JSON)");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "ROC, error statistics and operating points from outcomes CSVs");
    ev->add_option("--outcomes", ea.outcomes, "Outcomes CSV files")->required()->check(CLI::ExistingFile);
    ev->add_option("--gamma-grid", ea.gamma_grid, "Threshold grid lo:hi:steps")->required();
    ev->add_option("--out", ea.out, "Output directory")->required();
    ev->add_option("--targets", ea.targets, "False-positive targets for sweep.csv");

    SweepArgs wa;
    auto* sw = app.add_subcommand("sweep", "TPR over a window x kappa grid at matched false-positive rate");
    sw->add_option("--trace", wa.traces, "Trace files (default: the standard suite)")->check(CLI::ExistingFile);
    sw->add_option("--config", wa.config, "Config file (JSON)")->check(CLI::ExistingFile);
    sw->add_option("--out", wa.out, "Output directory")->required();
    sw->add_option("--method", wa.method, "pads-a|pads-n|pads-o");
    sw->add_option("--windows", wa.windows, "Window lengths");
    sw->add_option("--kappas", wa.kappas, "Locality weights");
    sw->add_option("--targets", wa.targets, "False-positive targets");
    sw->add_option("--seed", wa.seed, "Base seed of the standard suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    if (verbose) log::set_level(log::Level::info);

    try {
        if (print_defaults) {
            std::cout << defaults_json().dump(2) << "\n";
            return kOk;
        }
        if (sim->parsed()) return cmd_simulate(sa);
        if (det->parsed()) return cmd_detect(da);
        if (ev->parsed()) return cmd_eval(ea);
        if (sw->parsed()) return cmd_sweep(wa);
        std::cerr << app.help();
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "pads: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "pads: internal error: " << e.what() << "\n";
        return kNumerical;
    }
}
