// natcsnn: calibrate, train, search initial weights, test and inspect.
//
// Exit codes: 0 success, 1 usage, 2 data/format error, 3 numeric failure.

#include "natcsnn/checkpoint.hpp"
#include "natcsnn/config.hpp"
#include "natcsnn/dataset.hpp"
#include "natcsnn/encoding.hpp"
#include "natcsnn/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json   = nlohmann::json;
using namespace natcsnn;

namespace {

constexpr const char* tool_version = "1.0.0";

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json stats_json(const WeightStats& s) {
    return {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.stddev}};
}

json config_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& k : RunConfig::keys())
        j[k] = cfg.get(k);
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    for (const auto& [k, v] : j.items())
        cfg.set(k, v.get<std::string>());
    cfg.encoding.window = cfg.sim.window;
    return cfg;
}

void require_calibrated(const RunConfig& cfg) {
    if (!cfg.encoding.calibrated())
        throw UsageError("encoding.I_K is not set; run `natcsnn calibrate` first");
}

class RunLog {
  public:
    explicit RunLog(const fs::path& path) : out_(path, std::ios::app) {
        if (!out_)
            throw FormatError("cannot open run log " + path.string());
    }
    void write(const json& record) {
        out_ << record.dump() << '\n';
        out_.flush();
        std::cout << record.dump() << '\n';
    }

  private:
    std::ofstream out_;
};

struct TrainArgs {
    int phase = 1;
    std::string config_path;
    std::string dataset;
    std::string out_dir;
    std::string from_checkpoint;
    std::string resume;
    std::string manifest;
    std::uint64_t stop_after = 0;
    int workers = 1;
};

int cmd_config(bool toy, const std::string& out) {
    const RunConfig cfg = toy ? toy_config() : RunConfig{};
    if (out.empty())
        std::cout << cfg.serialize();
    else
        cfg.save(out);
    return 0;
}

int cmd_calibrate(const std::string& config_path, int target_override) {
    RunConfig cfg = RunConfig::load(config_path);
    if (target_override >= 0)
        cfg.encoding.target_max_spikes = target_override;
    if (cfg.encoding.target_max_spikes < 1)
        throw UsageError("calibration target must be >= 1 spike per window");
    cfg.validate();
    const auto cal = calibrate_IK(cfg.neuron, cfg.sim.window, cfg.encoding.target_max_spikes, cfg.sim.dt);
    cfg.encoding.I_K = cal.I_K;
    cfg.save(config_path);
    std::cout << std::fixed << std::setprecision(1) << "I_K = " << cal.I_K << " pA  (exactly "
              << cfg.encoding.target_max_spikes << " spikes in " << cfg.sim.window
              << " ms for currents in [" << cal.band_low << ", " << cal.band_high << ") pA)\n";
    return 0;
}

void write_manifest(const fs::path& path,
                    const TrainArgs& args,
                    const RunConfig& cfg,
                    const Dataset& data) {
    json m;
    m["tool"]            = "natcsnn";
    m["version"]         = tool_version;
    m["phase"]           = args.phase;
    m["config"]          = config_json(cfg);
    m["dataset"]         = {{"spec", args.dataset},
                            {"fingerprint", hex(data.fingerprint())},
                            {"samples", data.size()}};
    m["I_K"]             = cfg.encoding.I_K;
    m["seeds"]           = {{"network", cfg.network.seed},
                            {"shuffle", cfg.sim.shuffle_seed ? json(*cfg.sim.shuffle_seed) : json(nullptr)}};
    m["teacher_train_ms"] = teacher_train(cfg.sim.window, cfg.sim.dt, cfg.encoding.target_max_spikes);
    m["topology_fingerprint"] = hex(cfg.network.fingerprint());
    m["from_checkpoint"] = args.from_checkpoint;
    m["started_at"]      = utc_now();
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw FormatError("cannot write manifest " + path.string());
    out << m.dump(2) << '\n';
}

int cmd_train(TrainArgs args) {
    RunConfig cfg;
    std::string expected_data;
    if (!args.manifest.empty()) {
        std::ifstream in(args.manifest);
        if (!in)
            throw FormatError("cannot read manifest " + args.manifest);
        json m;
        try {
            m = json::parse(in);
        } catch (const json::exception& e) {
            throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
        }
        cfg        = config_from_json(m.at("config"));
        args.phase = m.at("phase").get<int>();
        if (args.dataset.empty()) {
            args.dataset  = m.at("dataset").at("spec").get<std::string>();
            expected_data = m.at("dataset").at("fingerprint").get<std::string>();
        }
        if (args.from_checkpoint.empty())
            args.from_checkpoint = m.value("from_checkpoint", "");
    } else {
        if (args.config_path.empty())
            throw UsageError("train needs --config or --manifest");
        cfg = RunConfig::load(args.config_path);
    }
    if (args.dataset.empty())
        throw UsageError("train needs --dataset");
    if (args.phase != 1 && args.phase != 2)
        throw UsageError("--phase must be 1 or 2");
    if (args.phase == 2 && args.from_checkpoint.empty() && args.resume.empty())
        throw UsageError("phase 2 requires --from-checkpoint <phase-1 checkpoint>");
    cfg.validate();
    require_calibrated(cfg);

    const Dataset data = open_dataset(args.dataset, Split::train);
    data.validate();
    if (!expected_data.empty() && expected_data != hex(data.fingerprint()))
        throw FormatError("dataset " + args.dataset + " no longer matches the manifest fingerprint");

    const fs::path out = args.out_dir;
    fs::create_directories(out / "checkpoints");
    const std::string tag = args.phase == 1 ? "phase1" : "phase2";

    NetworkTopology net = build_network(cfg.network);
    TrainingState state;
    state.rng.seed(cfg.network.seed);
    const Phase phase = args.phase == 1 ? Phase::phase1 : Phase::phase2;

    if (args.phase == 2 && !args.from_checkpoint.empty()) {
        const Checkpoint base = load_checkpoint(args.from_checkpoint);
        if (base.phase != Phase::phase1)
            throw FormatError("--from-checkpoint must be a phase-1 checkpoint, got " +
                              std::string(phase_name(base.phase)));
        const NetworkTopology fresh = build_network(cfg.network);
        apply(base, net);
        // The readout starts from the configured (searched) initial weights.
        for (const auto id : {ProjectionId::P4, ProjectionId::P5})
            net.projection(id).synapses.set_weights(fresh.projection(id).synapses.weight());
        state.rng = restore_rng(base);
    }

    if (args.phase == 1)
        prepare_phase1(net, cfg);
    else
        prepare_phase2(net, cfg);

    if (!args.resume.empty()) {
        const Checkpoint ck = load_checkpoint(args.resume);
        if (ck.phase != phase)
            throw FormatError("--resume checkpoint is tagged " + std::string(phase_name(ck.phase)) +
                              ", expected " + tag);
        apply(ck, net);
        state.presentations = ck.presentations;
        state.rng           = restore_rng(ck);
    }

    write_manifest(out / (tag + "_manifest.json"), args, cfg, data);
    cfg.save(out / "run.cfg");
    RunLog log(out / "log.jsonl");
    log.write({{"event", "start"}, {"phase", args.phase}, {"samples", data.size()},
               {"presentations_done", state.presentations}});

    TrainingHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& ck, bool final) {
        std::ostringstream name;
        if (final)
            name << tag << "_final.bin";
        else
            name << "checkpoints/" << tag << '_' << std::setw(8) << std::setfill('0')
                 << ck.presentations << ".bin";
        save_checkpoint(ck, out / name.str());
        log.write({{"event", "checkpoint"}, {"phase", args.phase}, {"file", name.str()},
                   {"presentations", ck.presentations}});
    };
    hooks.on_epoch = [&](const EpochLog& e) {
        json rec = {{"event", "epoch"}, {"phase", args.phase}, {"epoch", e.epoch},
                    {"presentations", e.presentations}};
        if (e.train_accuracy)
            rec["train_accuracy"] = *e.train_accuracy;
        json w = json::object();
        for (std::size_t p = 0; p < projection_count; ++p)
            w[projection_name(static_cast<ProjectionId>(p))] = stats_json(e.weights[p]);
        rec["weights"] = w;
        log.write(rec);
    };
    if (args.stop_after > 0)
        hooks.stop_after = args.stop_after;

    const bool finished = args.phase == 1 ? run_phase1(net, data, cfg, state, hooks)
                                          : run_phase2(net, data, cfg, state, hooks);
    log.write({{"event", finished ? "done" : "stopped"}, {"phase", args.phase},
               {"presentations", state.presentations}});
    return 0;
}

int cmd_search(const std::string& config_path,
               const std::string& ckpt_path,
               const std::string& dataset,
               const std::string& range,
               int trials,
               const std::string& out_path,
               bool write_config,
               int workers) {
    RunConfig cfg = RunConfig::load(config_path);
    cfg.validate();
    require_calibrated(cfg);
    double lo = cfg.monte_carlo.range_lo, hi = cfg.monte_carlo.range_hi;
    if (!range.empty()) {
        const auto colon = range.find(':');
        if (colon == std::string::npos)
            throw UsageError("--range must look like lo:hi");
        try {
            lo = std::stod(range.substr(0, colon));
            hi = std::stod(range.substr(colon + 1));
        } catch (const std::exception&) {
            throw UsageError("--range must look like lo:hi");
        }
    }
    if (!(lo <= hi))
        throw UsageError("--range is empty (lo > hi)");
    if (trials <= 0)
        trials = cfg.monte_carlo.trials;

    const Checkpoint base = load_checkpoint(ckpt_path);
    if (base.phase != Phase::phase1)
        throw FormatError("weight search needs a phase-1 checkpoint");
    NetworkTopology net = build_network(cfg.network);
    apply(base, net);
    const Dataset subset = open_dataset(dataset, Split::train).head(cfg.monte_carlo.subset);
    subset.validate();

    auto rng          = restore_rng(base);
    const auto result = monte_carlo_weight_search(net, subset, cfg, lo, hi, trials, rng, workers);

    auto ranked = result.trials;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.accuracy != b.accuracy ? a.accuracy > b.accuracy : a.weight < b.weight;
    });
    std::cout << std::left << std::setw(6) << "rank" << std::setw(7) << "trial" << std::setw(14)
              << "weight [pA]" << "accuracy [%]\n";
    std::cout << std::fixed;
    for (std::size_t r = 0; r < ranked.size(); ++r)
        std::cout << std::left << std::setw(6) << r + 1 << std::setw(7) << ranked[r].index
                  << std::setw(14) << std::setprecision(4) << ranked[r].weight
                  << std::setprecision(3) << 100.0 * ranked[r].accuracy << '\n';
    std::cout << "best weight: " << std::setprecision(4) << result.best_weight << " pA\n";

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out)
            throw FormatError("cannot write trial log " + out_path);
        for (const auto& t : result.trials)
            out << json{{"trial", t.index}, {"weight", t.weight}, {"accuracy", t.accuracy}}.dump()
                << '\n';
        out << json{{"best_weight", result.best_weight}, {"best_accuracy", result.best_accuracy}}.dump()
            << '\n';
    }
    if (write_config) {
        cfg.network.p4 = {result.best_weight, 0.0};
        cfg.save(config_path);
    }
    return 0;
}

int cmd_test(const std::string& config_path,
             const std::string& ckpt_path,
             const std::string& dataset,
             int workers) {
    RunConfig cfg = RunConfig::load(config_path);
    cfg.validate();
    require_calibrated(cfg);
    const Checkpoint ck = load_checkpoint(ckpt_path);
    if (ck.phase != Phase::phase2)
        throw FormatError("testing needs a phase-2 checkpoint, got " + std::string(phase_name(ck.phase)));
    NetworkTopology net = build_network(cfg.network);
    apply(ck, net);
    prepare_testing(net);

    const Dataset data = open_dataset(dataset, Split::test);
    if (data.empty())
        throw UsageError("test dataset is empty");
    data.validate();
    const auto report = evaluate(net, data, cfg, workers);
    std::cout << format_report(report, data.class_names);
    return 0;
}

int cmd_init(const std::string& config_path, const std::string& out) {
    RunConfig cfg = RunConfig::load(config_path);
    cfg.validate();
    const NetworkTopology net = build_network(cfg.network);
    std::mt19937_64 rng(cfg.network.seed);
    save_checkpoint(capture(net, Phase::initial, 0, rng), out);
    std::cout << "wrote " << out << " (fingerprint " << hex(net.config.fingerprint()) << ")\n";
    return 0;
}

int cmd_inspect(const std::string& ckpt_path, const std::string& config_path, int bins) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    if (!config_path.empty()) {
        const RunConfig cfg = RunConfig::load(config_path);
        if (cfg.network.fingerprint() != ck.fingerprint)
            throw FormatError("checkpoint fingerprint does not match the config's topology");
    }
    std::cout << "fingerprint: " << hex(ck.fingerprint) << '\n'
              << "phase: " << phase_name(ck.phase) << '\n'
              << "presentations: " << ck.presentations << '\n';
    std::cout << std::setprecision(6);
    for (std::size_t p = 0; p < projection_count; ++p) {
        const auto& w = ck.weights[p];
        const auto s  = weight_stats(w);
        std::cout << projection_name(static_cast<ProjectionId>(p)) << ": connections=" << w.size()
                  << " min=" << s.min << " max=" << s.max << " mean=" << s.mean << '\n';
        std::cout << "  histogram:";
        for (const auto c : weight_histogram(w, bins))
            std::cout << ' ' << c;
        std::cout << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking network with MAT neurons, STDP and ReSuMe learning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    bool toy = false;
    std::string config_out;
    auto* config = app.add_subcommand("config", "Print or write a default run config");
    config->add_flag("--toy", toy, "8x8, 3-class desk-scale settings");
    config->add_option("--out", config_out, "Write to this file instead of stdout");

    std::string cal_config;
    int cal_target = -1;
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate I_K and write it into the config");
    calibrate->add_option("--config", cal_config)->required();
    calibrate->add_option("--target", cal_target, "Spikes per window at full intensity");

    TrainArgs targs;
    auto* train = app.add_subcommand("train", "Run training phase 1 or 2");
    train->add_option("--phase", targs.phase)->check(CLI::IsMember({1, 2}));
    train->add_option("--config", targs.config_path);
    train->add_option("--manifest", targs.manifest, "Re-run from a previous manifest");
    train->add_option("--dataset", targs.dataset, "cifar10:<dir>[,classes=a+b,limit=n] or synthetic:<opts>");
    train->add_option("--out", targs.out_dir)->required();
    train->add_option("--from-checkpoint", targs.from_checkpoint, "Phase-1 checkpoint (phase 2)");
    train->add_option("--resume", targs.resume, "Continue from a checkpoint of the same phase");
    train->add_option("--stop-after", targs.stop_after, "Stop after this many presentations");
    train->add_option("--workers", targs.workers);

    std::string s_config, s_ckpt, s_dataset, s_range, s_out;
    int s_trials = 0, s_workers = 1;
    bool s_write = false;
    auto* search = app.add_subcommand("search-weights", "Monte Carlo search of the initial L2a->L3 weight");
    search->add_option("--config", s_config)->required();
    search->add_option("--from-checkpoint", s_ckpt)->required();
    search->add_option("--dataset", s_dataset)->required();
    search->add_option("--range", s_range, "lo:hi in pA");
    search->add_option("--trials", s_trials);
    search->add_option("--out", s_out, "Trial log (JSON lines)");
    search->add_flag("--write-config", s_write, "Store the best weight as weights.p4.mean");
    search->add_option("--workers", s_workers);

    std::string t_config, t_ckpt, t_dataset;
    int t_workers = 1;
    auto* test = app.add_subcommand("test", "Evaluate a phase-2 checkpoint with frozen synapses");
    test->add_option("--config", t_config)->required();
    test->add_option("--checkpoint", t_ckpt)->required();
    test->add_option("--dataset", t_dataset)->required();
    test->add_option("--workers", t_workers);

    std::string n_config, n_out;
    auto* init = app.add_subcommand("init", "Write the seeded, untrained network as a checkpoint");
    init->add_option("--config", n_config)->required();
    init->add_option("--out", n_out)->required();

    std::string i_ckpt, i_config;
    int i_bins = 10;
    auto* inspect = app.add_subcommand("inspect", "Summarise a checkpoint");
    inspect->add_option("--checkpoint", i_ckpt)->required();
    inspect->add_option("--config", i_config, "Check the fingerprint against this config");
    inspect->add_option("--bins", i_bins)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*config)
            return cmd_config(toy, config_out);
        if (*calibrate)
            return cmd_calibrate(cal_config, cal_target);
        if (*train)
            return cmd_train(targs);
        if (*search)
            return cmd_search(s_config, s_ckpt, s_dataset, s_range, s_trials, s_out, s_write, s_workers);
        if (*test)
            return cmd_test(t_config, t_ckpt, t_dataset, t_workers);
        if (*init)
            return cmd_init(n_config, n_out);
        if (*inspect)
            return cmd_inspect(i_ckpt, i_config, i_bins);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
