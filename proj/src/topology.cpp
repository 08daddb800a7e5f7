#include "natcsnn/topology.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace natcsnn {

const char* layer_name(Layer l) {
    switch (l) {
    case Layer::L1: return "L1";
    case Layer::L2a: return "L2a";
    case Layer::L2b: return "L2b";
    case Layer::L3: return "L3";
    }
    return "?";
}

const char* projection_name(ProjectionId p) {
    static constexpr const char* names[] = {"P1", "P2", "P3", "P4", "P5"};
    return names[static_cast<std::size_t>(p)];
}

Eigen::Index NatCsnnConfig::l2_size() const {
    const double exact = static_cast<double>(l1_size()) * l2_fraction;
    return static_cast<Eigen::Index>(std::llround(exact));
}

void NatCsnnConfig::validate() const {
    if (rows < 1 || cols < 1)
        throw UsageError("image dimensions must be positive");
    if (n_classes < 2)
        throw UsageError("n_classes must be >= 2");
    if (neurons_per_class < 1)
        throw UsageError("neurons_per_class must be >= 1");
    if (!(l2_fraction > 0.0 && l2_fraction <= 1.0))
        throw UsageError("l2_fraction must lie in (0, 1]");
    const double exact = static_cast<double>(l1_size()) * l2_fraction;
    if (std::abs(exact - std::round(exact)) > 1e-9 || l2_size() < 1)
        throw UsageError("rows*cols*l2_fraction must be a positive integer");
    if (l2a_to_l3 == ReadoutWiring::partitioned && l2_size() % n_classes != 0)
        throw UsageError("partitioned readout wiring needs |L2a| divisible by n_classes");
    auto check = [](const WeightSpec& w, Sign s, const char* name) {
        if (!std::isfinite(w.mean) || !(w.jitter >= 0.0 && w.jitter <= 1.0))
            throw UsageError(std::string("weight spec ") + name + " is invalid");
        if ((s == Sign::excitatory && w.mean < 0) || (s == Sign::inhibitory && w.mean > 0))
            throw UsageError(std::string("weight spec ") + name + " has the wrong sign");
    };
    check(p1, Sign::excitatory, "p1");
    check(p2, Sign::excitatory, "p2");
    check(p3, Sign::inhibitory, "p3");
    check(p4, Sign::excitatory, "p4");
    check(p5, Sign::inhibitory, "p5");
}

std::uint64_t NatCsnnConfig::fingerprint() const {
    std::ostringstream os;
    os << "natcsnn-topology;rows=" << rows << ";cols=" << cols << ";classes=" << n_classes
       << ";per_class=" << neurons_per_class << ";l2=" << l2_size()
       << ";readout=" << (l2a_to_l3 == ReadoutWiring::all_to_all ? "all" : "partitioned");
    // FNV-1a
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : os.str()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

bool NetworkTopology::all_static() const {
    for (const auto& p : projections)
        if (!p.synapses.is_static())
            return false;
    return true;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::VectorXd draw_weights(Eigen::Index count, const WeightSpec& spec, std::mt19937_64& rng) {
    Eigen::VectorXd w(count);
    for (Eigen::Index i = 0; i < count; ++i)
        w(i) = spec.mean * (1.0 + spec.jitter * (2.0 * uniform01(rng) - 1.0));
    return w;
}

namespace {

SynapsePopulation<> from_pairs(Eigen::Index n_pre,
                               Eigen::Index n_post,
                               const std::vector<std::pair<int, int>>& pairs,
                               const WeightSpec& spec,
                               Sign sign,
                               std::mt19937_64& rng) {
    const auto n = static_cast<Eigen::Index>(pairs.size());
    Eigen::VectorXi pre(n), post(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        pre(c)  = pairs[c].first;
        post(c) = pairs[c].second;
    }
    return {n_pre, n_post, std::move(pre), std::move(post), draw_weights(n, spec, rng), sign};
}

} // namespace

SynapsePopulation<> connect(Eigen::Index n_pre,
                            Eigen::Index n_post,
                            Connectivity rule,
                            const WeightSpec& spec,
                            Sign sign,
                            std::mt19937_64& rng) {
    if (rule != Connectivity::all_to_all && n_pre != n_post)
        throw UsageError("connect: paired connectivity rules need equal layer sizes");
    std::vector<std::pair<int, int>> pairs;
    switch (rule) {
    case Connectivity::all_to_all:
        pairs.reserve(n_pre * n_post);
        for (int i = 0; i < n_pre; ++i)
            for (int j = 0; j < n_post; ++j)
                pairs.emplace_back(i, j);
        break;
    case Connectivity::one_to_one:
        for (int i = 0; i < n_pre; ++i)
            pairs.emplace_back(i, i);
        break;
    case Connectivity::one_to_all_except_partner:
        pairs.reserve(n_pre * (n_post - 1));
        for (int i = 0; i < n_pre; ++i)
            for (int j = 0; j < n_post; ++j)
                if (i != j)
                    pairs.emplace_back(i, j);
        break;
    }
    return from_pairs(n_pre, n_post, pairs, spec, sign, rng);
}

NetworkTopology build_network(const NatCsnnConfig& cfg) {
    cfg.validate();
    NetworkTopology net;
    net.config = cfg;
    const Eigen::Index l1 = cfg.l1_size(), l2 = cfg.l2_size(), l3 = cfg.l3_size();
    net.layer_size = {l1, l2, l2, l3};

    net.class_of.resize(l3);
    net.class_group.assign(cfg.n_classes, {});
    for (Eigen::Index j = 0; j < l3; ++j) {
        net.class_of[j] = static_cast<int>(j / cfg.neurons_per_class);
        net.class_group[net.class_of[j]].push_back(j);
    }

    std::mt19937_64 rng(cfg.seed);
    net.projections[0] = {ProjectionId::P1, Layer::L1, Layer::L2a,
                          connect(l1, l2, Connectivity::all_to_all, cfg.p1, Sign::excitatory, rng)};
    net.projections[1] = {ProjectionId::P2, Layer::L2a, Layer::L2b,
                          connect(l2, l2, Connectivity::one_to_one, cfg.p2, Sign::excitatory, rng)};
    net.projections[2] = {ProjectionId::P3, Layer::L2b, Layer::L2a,
                          connect(l2, l2, Connectivity::one_to_all_except_partner, cfg.p3,
                                  Sign::inhibitory, rng)};

    if (cfg.l2a_to_l3 == ReadoutWiring::all_to_all) {
        net.projections[3] = {ProjectionId::P4, Layer::L2a, Layer::L3,
                              connect(l2, l3, Connectivity::all_to_all, cfg.p4, Sign::excitatory,
                                      rng)};
    } else {
        // Class k's readout neurons listen to the k-th block of L2a.
        const Eigen::Index block = l2 / cfg.n_classes;
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < l2; ++i)
            for (int j = 0; j < l3; ++j)
                if (i / block == net.class_of[j])
                    pairs.emplace_back(i, j);
        net.projections[3] = {ProjectionId::P4, Layer::L2a, Layer::L3,
                              from_pairs(l2, l3, pairs, cfg.p4, Sign::excitatory, rng)};
    }

    std::vector<std::pair<int, int>> cross;
    for (int i = 0; i < l3; ++i)
        for (int j = 0; j < l3; ++j)
            if (net.class_of[i] != net.class_of[j])
                cross.emplace_back(i, j);
    net.projections[4] = {ProjectionId::P5, Layer::L3, Layer::L3,
                          from_pairs(l3, l3, cross, cfg.p5, Sign::inhibitory, rng)};
    return net;
}

void attach_teachers(NetworkTopology& net) {
    if (net.teachers_attached())
        throw UsageError("attach_teachers: teachers are already attached");
    net.teacher_targets = net.class_group;
}

WeightStats weight_stats(const Eigen::VectorXd& w) {
    if (w.size() == 0)
        return {};
    WeightStats s;
    s.min    = w.minCoeff();
    s.max    = w.maxCoeff();
    s.mean   = w.mean();
    s.stddev = std::sqrt((w.array() - s.mean).square().mean());
    return s;
}

std::vector<std::size_t> weight_histogram(const Eigen::VectorXd& w, int bins) {
    if (bins < 1)
        throw UsageError("histogram needs at least one bin");
    std::vector<std::size_t> counts(bins, 0);
    if (w.size() == 0)
        return counts;
    const double lo = w.minCoeff(), hi = w.maxCoeff();
    const double width = (hi - lo) / bins;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        int b = width > 0 ? static_cast<int>((w(i) - lo) / width) : 0;
        counts[std::clamp(b, 0, bins - 1)]++;
    }
    return counts;
}

std::string topology_manifest(const NetworkTopology& net) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "layers:";
    for (std::size_t l = 0; l < layer_count; ++l)
        os << ' ' << layer_name(static_cast<Layer>(l)) << '=' << net.layer_size[l];
    os << "\nclasses: " << net.config.n_classes << " x " << net.config.neurons_per_class
       << " readout neurons\n";
    os << "teachers: " << net.teacher_targets.size() << '\n';
    for (const auto& p : net.projections) {
        const auto s = weight_stats(p.synapses.weight());
        os << projection_name(p.id) << ' ' << layer_name(p.source) << "->" << layer_name(p.target)
           << " connections=" << p.synapses.size()
           << " sign=" << (p.synapses.sign() == Sign::excitatory ? "+" : "-") << " min=" << s.min
           << " max=" << s.max << " mean=" << s.mean << '\n';
    }
    os << "fingerprint: " << std::hex << net.config.fingerprint() << '\n';
    return os.str();
}

} // namespace natcsnn
