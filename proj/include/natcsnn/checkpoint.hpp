#pragma once

// Binary weight checkpoints. Layout (little-endian):
//   8-byte magic "NATCSNN\x01"
//   u32 format version
//   u64 topology fingerprint
//   u32 phase tag
//   u64 presentation counter
//   u64 length + bytes of the RNG engine state
//   u32 projection count, then per projection (P1..P5):
//       u64 length + length f64 weights

#include "natcsnn/topology.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace natcsnn {

enum class Phase : std::uint32_t { initial = 0, phase1 = 1, phase2 = 2 };

const char* phase_name(Phase p);

inline constexpr std::uint32_t checkpoint_version = 1;

struct Checkpoint {
    std::uint32_t version     = checkpoint_version;
    std::uint64_t fingerprint = 0;
    Phase phase               = Phase::initial;
    std::uint64_t presentations = 0;
    std::string rng_state;
    std::array<Eigen::VectorXd, projection_count> weights;

    bool operator==(const Checkpoint& o) const;
};

Checkpoint capture(const NetworkTopology& net,
                   Phase phase,
                   std::uint64_t presentations,
                   const std::mt19937_64& rng);

// Copies the weights into `net` after checking fingerprint and lengths.
void apply(const Checkpoint& ckpt, NetworkTopology& net);

std::mt19937_64 restore_rng(const Checkpoint& ckpt);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace natcsnn
