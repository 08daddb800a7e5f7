#pragma once

// The three-layer network: L1 (one neuron per pixel), the feature group L2a
// with its lateral-inhibition partner L2b, and the class readout L3.
//
//   P1  L1  -> L2a  all-to-all, excitatory
//   P2  L2a -> L2b  one-to-one, excitatory
//   P3  L2b -> L2a  one-to-all-except-partner, inhibitory
//   P4  L2a -> L3   all-to-all (or partitioned), excitatory
//   P5  L3  -> L3   cross-class only, inhibitory
//
// Teachers (one per class) are spike sources that supervise P4/P5 learning;
// they are not simulated neurons and inject no current.

#include "natcsnn/plasticity.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace natcsnn {

enum class Layer { L1 = 0, L2a = 1, L2b = 2, L3 = 3 };
inline constexpr std::size_t layer_count = 4;

enum class ProjectionId { P1 = 0, P2 = 1, P3 = 2, P4 = 3, P5 = 4 };
inline constexpr std::size_t projection_count = 5;

enum class Connectivity { all_to_all, one_to_one, one_to_all_except_partner };
enum class ReadoutWiring { all_to_all, partitioned };

const char* layer_name(Layer l);
const char* projection_name(ProjectionId p);

// Initial weights are drawn uniformly from mean * (1 +- jitter).
struct WeightSpec {
    double mean   = 0.0;
    double jitter = 0.0;
    bool operator==(const WeightSpec&) const = default;
};

struct NatCsnnConfig {
    int rows              = 32;
    int cols              = 32;
    int n_classes         = 10;
    int neurons_per_class = 10;
    double l2_fraction    = 0.25;
    ReadoutWiring l2a_to_l3 = ReadoutWiring::all_to_all;
    std::uint64_t seed    = 1;

    WeightSpec p1{600.0, 0.1};
    WeightSpec p2{490.84, 0.1};
    WeightSpec p3{-100.0, 0.1};
    WeightSpec p4{241.0, 0.0};
    WeightSpec p5{-120.0, 0.0};

    void validate() const;
    Eigen::Index l1_size() const { return Eigen::Index(rows) * cols; }
    Eigen::Index l2_size() const;
    Eigen::Index l3_size() const { return Eigen::Index(n_classes) * neurons_per_class; }

    // Hash of the structural fields only (not seeds or weight specs).
    std::uint64_t fingerprint() const;

    bool operator==(const NatCsnnConfig&) const = default;
};

struct Projection {
    ProjectionId id;
    Layer source;
    Layer target;
    SynapsePopulation<> synapses;
};

class NetworkTopology {
  public:
    NatCsnnConfig config;
    std::array<Eigen::Index, layer_count> layer_size{};
    std::array<Projection, projection_count> projections;
    std::vector<int> class_of;                          // L3 neuron -> class
    std::vector<std::vector<Eigen::Index>> class_group; // class -> L3 neurons
    // teacher k -> L3 neurons it supervises; empty until attach_teachers().
    std::vector<std::vector<Eigen::Index>> teacher_targets;

    Eigen::Index size(Layer l) const { return layer_size[static_cast<std::size_t>(l)]; }
    Projection& projection(ProjectionId p) { return projections[static_cast<std::size_t>(p)]; }
    const Projection& projection(ProjectionId p) const {
        return projections[static_cast<std::size_t>(p)];
    }
    bool teachers_attached() const { return !teacher_targets.empty(); }
    bool all_static() const;
};

// Portable uniform draw in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

Eigen::VectorXd draw_weights(Eigen::Index count, const WeightSpec& spec, std::mt19937_64& rng);

SynapsePopulation<> connect(Eigen::Index n_pre,
                            Eigen::Index n_post,
                            Connectivity rule,
                            const WeightSpec& spec,
                            Sign sign,
                            std::mt19937_64& rng);

NetworkTopology build_network(const NatCsnnConfig& cfg);

void attach_teachers(NetworkTopology& net);

struct WeightStats {
    double min  = 0;
    double max  = 0;
    double mean = 0;
    double stddev = 0;
};

WeightStats weight_stats(const Eigen::VectorXd& w);
// Equal-width histogram over [min, max]; counts sum to w.size().
std::vector<std::size_t> weight_histogram(const Eigen::VectorXd& w, int bins);

// Human-readable summary: layer sizes, connection counts, weight statistics.
std::string topology_manifest(const NetworkTopology& net);

} // namespace natcsnn
