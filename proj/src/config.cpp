#include "natcsnn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <utility>

namespace natcsnn {

long SimulationConfig::steps() const { return std::lround(window / dt); }

void SimulationConfig::validate() const {
    if (!(dt > 0) || !std::isfinite(dt))
        throw UsageError("sim.dt must be finite and > 0");
    if (!(window > 0) || !std::isfinite(window))
        throw UsageError("sim.window must be finite and > 0");
    if (std::abs(steps() * dt - window) > 1e-9 * window)
        throw UsageError("sim.window must be an integer multiple of sim.dt");
    if (epochs_phase1 < 1 || epochs_phase2 < 1)
        throw UsageError("epoch counts must be >= 1");
    if (checkpoint_interval < 1)
        throw UsageError("sim.checkpoint_interval must be >= 1");
}

void RunConfig::validate() const {
    network.validate();
    neuron.validate();
    sim.validate();
    encoding.validate();
    stdp_ex.validate();
    stdp_ih.validate();
    resume.validate();
    if (monte_carlo.trials < 1)
        throw UsageError("mc.trials must be >= 1");
    if (!(monte_carlo.range_lo <= monte_carlo.range_hi) || monte_carlo.range_lo < 0)
        throw UsageError("mc range must satisfy 0 <= lo <= hi");
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& s) {
    double v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
        throw FormatError("config: '" + key + "' expects a number, got '" + s + "'");
    return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& s) {
    Int v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
        throw FormatError("config: '" + key + "' expects an integer, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1")
        return true;
    if (s == "false" || s == "0")
        return false;
    throw FormatError("config: '" + key + "' expects true/false, got '" + s + "'");
}

struct Field {
    std::string name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Access>
Field real(std::string name, Access acc) {
    return {name,
            [acc](const RunConfig& c) { return format_double(acc(const_cast<RunConfig&>(c))); },
            [acc, name](RunConfig& c, const std::string& v) { acc(c) = parse_double(name, v); }};
}

template <typename Access>
Field integer(std::string name, Access acc) {
    using Int = std::remove_reference_t<decltype(acc(std::declval<RunConfig&>()))>;
    return {name,
            [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
            [acc, name](RunConfig& c, const std::string& v) { acc(c) = parse_int<Int>(name, v); }};
}

template <typename Access>
Field boolean(std::string name, Access acc) {
    return {name,
            [acc](const RunConfig& c) {
                return std::string(acc(const_cast<RunConfig&>(c)) ? "true" : "false");
            },
            [acc, name](RunConfig& c, const std::string& v) { acc(c) = parse_bool(name, v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(integer("network.rows", [](RunConfig& c) -> int& { return c.network.rows; }));
        f.push_back(integer("network.cols", [](RunConfig& c) -> int& { return c.network.cols; }));
        f.push_back(integer("network.n_classes",
                            [](RunConfig& c) -> int& { return c.network.n_classes; }));
        f.push_back(integer("network.neurons_per_class",
                            [](RunConfig& c) -> int& { return c.network.neurons_per_class; }));
        f.push_back(real("network.l2_fraction",
                         [](RunConfig& c) -> double& { return c.network.l2_fraction; }));
        f.push_back({"network.l2a_to_l3",
                     [](const RunConfig& c) {
                         return std::string(c.network.l2a_to_l3 == ReadoutWiring::all_to_all
                                                ? "all_to_all"
                                                : "partitioned_10pct");
                     },
                     [](RunConfig& c, const std::string& v) {
                         if (v == "all_to_all")
                             c.network.l2a_to_l3 = ReadoutWiring::all_to_all;
                         else if (v == "partitioned_10pct")
                             c.network.l2a_to_l3 = ReadoutWiring::partitioned;
                         else
                             throw FormatError("config: network.l2a_to_l3 must be all_to_all or "
                                               "partitioned_10pct");
                     }});
        f.push_back(integer("network.seed",
                            [](RunConfig& c) -> std::uint64_t& { return c.network.seed; }));

        auto weight = [&f](const char* name, WeightSpec NatCsnnConfig::*spec) {
            f.push_back(real(std::string("weights.") + name + ".mean",
                             [spec](RunConfig& c) -> double& { return (c.network.*spec).mean; }));
            f.push_back(real(std::string("weights.") + name + ".jitter",
                             [spec](RunConfig& c) -> double& { return (c.network.*spec).jitter; }));
        };
        weight("p1", &NatCsnnConfig::p1);
        weight("p2", &NatCsnnConfig::p2);
        weight("p3", &NatCsnnConfig::p3);
        weight("p4", &NatCsnnConfig::p4);
        weight("p5", &NatCsnnConfig::p5);

        auto neuron = [&f](const char* name, double NeuronParams<>::*m) {
            f.push_back(real(std::string("neuron.") + name,
                             [m](RunConfig& c) -> double& { return c.neuron.*m; }));
        };
        neuron("C_m", &NeuronParams<>::C_m);
        neuron("tau_m", &NeuronParams<>::tau_m);
        neuron("E_L", &NeuronParams<>::E_L);
        neuron("tau_syn_ex", &NeuronParams<>::tau_syn_ex);
        neuron("tau_syn_in", &NeuronParams<>::tau_syn_in);
        neuron("t_ref", &NeuronParams<>::t_ref);
        neuron("tau1", &NeuronParams<>::tau1);
        neuron("tau2", &NeuronParams<>::tau2);
        neuron("alpha1", &NeuronParams<>::alpha1);
        neuron("alpha2", &NeuronParams<>::alpha2);
        neuron("omega", &NeuronParams<>::omega);

        f.push_back(real("sim.dt", [](RunConfig& c) -> double& { return c.sim.dt; }));
        f.push_back(real("sim.window", [](RunConfig& c) -> double& { return c.sim.window; }));
        f.push_back(integer("sim.epochs_phase1",
                            [](RunConfig& c) -> int& { return c.sim.epochs_phase1; }));
        f.push_back(integer("sim.epochs_phase2",
                            [](RunConfig& c) -> int& { return c.sim.epochs_phase2; }));
        f.push_back(integer("sim.checkpoint_interval",
                            [](RunConfig& c) -> long& { return c.sim.checkpoint_interval; }));
        f.push_back({"sim.shuffle_seed",
                     [](const RunConfig& c) {
                         return c.sim.shuffle_seed ? std::to_string(*c.sim.shuffle_seed)
                                                   : std::string("none");
                     },
                     [](RunConfig& c, const std::string& v) {
                         if (v == "none")
                             c.sim.shuffle_seed.reset();
                         else
                             c.sim.shuffle_seed = parse_int<std::uint64_t>("sim.shuffle_seed", v);
                     }});
        f.push_back(boolean("sim.train_readout_inhibition",
                            [](RunConfig& c) -> bool& { return c.sim.train_readout_inhibition; }));

        f.push_back(real("encoding.I_K", [](RunConfig& c) -> double& { return c.encoding.I_K; }));
        f.push_back(integer("encoding.target_max_spikes",
                            [](RunConfig& c) -> int& { return c.encoding.target_max_spikes; }));

        auto stdp = [&f](const char* suffix, StdpParams<> RunConfig::*which) {
            const std::string s = suffix;
            f.push_back(real("stdp.A_plus_" + s,
                             [which](RunConfig& c) -> double& { return (c.*which).A_plus; }));
            f.push_back(real("stdp.A_minus_" + s,
                             [which](RunConfig& c) -> double& { return (c.*which).A_minus; }));
            f.push_back(real("stdp.tau_trace_" + s,
                             [which](RunConfig& c) -> double& { return (c.*which).tau_trace; }));
            f.push_back(real("stdp.W_max_" + s,
                             [which](RunConfig& c) -> double& { return (c.*which).W_max; }));
            f.push_back(real("stdp.W_min_" + s,
                             [which](RunConfig& c) -> double& { return (c.*which).W_min; }));
        };
        stdp("ex", &RunConfig::stdp_ex);
        stdp("ih", &RunConfig::stdp_ih);

        f.push_back(real("resume.A_ex", [](RunConfig& c) -> double& { return c.resume.A_ex; }));
        f.push_back(real("resume.A_ih", [](RunConfig& c) -> double& { return c.resume.A_ih; }));
        f.push_back(real("resume.tau_ex", [](RunConfig& c) -> double& { return c.resume.tau_ex; }));
        f.push_back(real("resume.tau_ih", [](RunConfig& c) -> double& { return c.resume.tau_ih; }));
        f.push_back(real("resume.W_max", [](RunConfig& c) -> double& { return c.resume.W_max; }));

        f.push_back(integer("mc.trials", [](RunConfig& c) -> int& { return c.monte_carlo.trials; }));
        f.push_back(real("mc.range_lo",
                         [](RunConfig& c) -> double& { return c.monte_carlo.range_lo; }));
        f.push_back(real("mc.range_hi",
                         [](RunConfig& c) -> double& { return c.monte_carlo.range_hi; }));
        f.push_back(integer("mc.subset",
                            [](RunConfig& c) -> std::size_t& { return c.monte_carlo.subset; }));
        return f;
    }();
    return table;
}

const Field& field(const std::string& key) {
    for (const auto& f : fields())
        if (f.name == key)
            return f;
    throw FormatError("config: unknown key '" + key + "'");
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> k;
    for (const auto& f : fields())
        k.push_back(f.name);
    return k;
}

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, value); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

std::string RunConfig::serialize() const {
    std::ostringstream os;
    for (const auto& f : fields())
        os << f.name << " = " << f.get(*this) << '\n';
    return os.str();
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl          = text.find('\n');
        const std::string line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
        cfg.set(trim(std::string_view(line).substr(0, eq)),
                trim(std::string_view(line).substr(eq + 1)));
    }
    cfg.encoding.window = cfg.sim.window;
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw FormatError("cannot write config file " + path.string());
    out << serialize();
    if (!out)
        throw FormatError("failed writing config file " + path.string());
}

RunConfig toy_config() {
    RunConfig cfg;
    static constexpr std::pair<const char*, const char*> overrides[] = {
        {"network.rows", "8"},
        {"network.cols", "8"},
        {"network.n_classes", "3"},
        {"network.neurons_per_class", "5"},
        {"network.seed", "1"},
        {"weights.p1.mean", "40"},
        {"weights.p1.jitter", "1"},
        {"weights.p2.mean", "1150"},
        {"weights.p2.jitter", "0.04"},
        {"weights.p3.mean", "-300"},
        {"weights.p5.mean", "-1200"},
        {"sim.train_readout_inhibition", "false"},
        {"stdp.A_plus_ex", "2e-05"},
        {"stdp.A_minus_ex", "1e-05"},
        {"resume.A_ex", "0.004"},
        {"resume.A_ih", "-0.004"},
        {"resume.tau_ex", "20"},
        {"mc.trials", "5"},
        {"mc.subset", "150"},
        {"mc.range_hi", "1200"},
    };
    for (const auto& [key, value] : overrides)
        cfg.set(key, value);
    cfg.validate();
    return cfg;
}

} // namespace natcsnn
