#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace natcsnn {

struct ImageSample {
    std::vector<double> pixels; // row-major, each in [0, 1]
    int label = 0;
    std::string source;
};

struct Dataset {
    int rows      = 0;
    int cols      = 0;
    int n_classes = 0;
    std::vector<std::string> class_names;
    std::vector<ImageSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    void validate() const;
    // Hash of dimensions, labels and pixel bits.
    std::uint64_t fingerprint() const;
    Dataset head(std::size_t n) const;
    // Keeps only the listed classes and relabels them 0..k-1 in list order.
    Dataset select_classes(const std::vector<int>& classes) const;
};

enum class Split { train, test };

inline constexpr std::size_t cifar_record_bytes = 3073;
inline constexpr std::size_t cifar_pixels       = 1024;

// BT.601 luminance of one CIFAR-10 record body (1024 R, 1024 G, 1024 B),
// scaled to [0, 1].
std::vector<double> cifar_to_gray(std::span<const std::uint8_t> rgb);

// One binary batch file of 3073-byte records.
Dataset load_cifar10_batch(const std::filesystem::path& file);

// data_batch_1..5.bin for the training split, test_batch.bin for the test
// split. Class names come from batches.meta.txt when present.
Dataset load_cifar10(const std::filesystem::path& dir,
                     Split split,
                     std::optional<std::size_t> limit = std::nullopt);

struct SyntheticSpec {
    int n_classes              = 3;
    int rows                   = 8;
    int cols                   = 8;
    int samples_per_class      = 50;
    double noise               = 0.0;
    std::uint64_t seed         = 1;
};

// Binary geometric class templates (bars, diagonals, blocks).
std::vector<std::vector<double>> synthetic_templates(int n_classes, int rows, int cols);

// Templates plus uniform per-pixel noise in [-noise, noise], clamped to
// [0, 1]. Labels cycle 0, 1, ..., n_classes-1 so any prefix is balanced.
Dataset make_synthetic(const SyntheticSpec& spec);

// "cifar10:<dir>" or "synthetic:classes=3,rows=8,cols=8,per_class=50,noise=0.1,seed=7".
// Optional suffix for CIFAR: ",classes=0+1,limit=500".
Dataset open_dataset(const std::string& spec, Split split);

} // namespace natcsnn
