#include "natcsnn/dataset.hpp"

#include "natcsnn/errors.hpp"
#include "natcsnn/topology.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace natcsnn {

namespace {

const std::vector<std::string> cifar_names = {"airplane", "automobile", "bird",  "cat",  "deer",
                                              "dog",      "frog",       "horse", "ship", "truck"};

std::vector<std::string> default_names(int n) {
    std::vector<std::string> names;
    for (int k = 0; k < n; ++k)
        names.push_back("class_" + std::to_string(k));
    return names;
}

} // namespace

void Dataset::validate() const {
    if (rows < 1 || cols < 1)
        throw FormatError("dataset has invalid dimensions");
    const std::size_t pixels = std::size_t(rows) * cols;
    for (const auto& s : samples) {
        if (s.pixels.size() != pixels)
            throw FormatError("dataset sample '" + s.source + "' has the wrong pixel count");
        if (s.label < 0 || s.label >= n_classes)
            throw FormatError("dataset sample '" + s.source + "' has label out of range");
        for (const double p : s.pixels)
            if (!(p >= 0.0 && p <= 1.0))
                throw FormatError("dataset sample '" + s.source + "' has intensity outside [0,1]");
    }
}

std::uint64_t Dataset::fingerprint() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix        = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(rows);
    mix(cols);
    mix(n_classes);
    mix(samples.size());
    for (const auto& s : samples) {
        mix(static_cast<std::uint64_t>(s.label));
        for (const double p : s.pixels)
            mix(std::bit_cast<std::uint64_t>(p));
    }
    return h;
}

Dataset Dataset::head(std::size_t n) const {
    Dataset d = *this;
    if (n < d.samples.size())
        d.samples.resize(n);
    return d;
}

Dataset Dataset::select_classes(const std::vector<int>& classes) const {
    Dataset d;
    d.rows      = rows;
    d.cols      = cols;
    d.n_classes = static_cast<int>(classes.size());
    std::map<int, int> relabel;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] < 0 || classes[k] >= n_classes)
            throw UsageError("select_classes: class " + std::to_string(classes[k]) + " out of range");
        relabel[classes[k]] = static_cast<int>(k);
        d.class_names.push_back(classes[k] < static_cast<int>(class_names.size())
                                    ? class_names[classes[k]]
                                    : "class_" + std::to_string(classes[k]));
    }
    for (const auto& s : samples) {
        const auto it = relabel.find(s.label);
        if (it == relabel.end())
            continue;
        ImageSample copy = s;
        copy.label       = it->second;
        d.samples.push_back(std::move(copy));
    }
    return d;
}

std::vector<double> cifar_to_gray(std::span<const std::uint8_t> rgb) {
    if (rgb.size() != 3 * cifar_pixels)
        throw FormatError("CIFAR-10 record body must be 3072 bytes");
    std::vector<double> gray(cifar_pixels);
    for (std::size_t i = 0; i < cifar_pixels; ++i) {
        // Integer weighted sum keeps white at exactly 1.0.
        const long sum = 299L * rgb[i] + 587L * rgb[cifar_pixels + i] + 114L * rgb[2 * cifar_pixels + i];
        gray[i]        = static_cast<double>(sum) / 255000.0;
    }
    return gray;
}

Dataset load_cifar10_batch(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw FormatError("missing CIFAR-10 batch file " + file.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() % cifar_record_bytes != 0)
        throw FormatError("truncated CIFAR-10 record in " + file.string());

    Dataset d;
    d.rows        = 32;
    d.cols        = 32;
    d.n_classes   = 10;
    d.class_names = cifar_names;
    const std::size_t records = bytes.size() / cifar_record_bytes;
    d.samples.reserve(records);
    for (std::size_t r = 0; r < records; ++r) {
        const std::uint8_t* rec = bytes.data() + r * cifar_record_bytes;
        if (rec[0] > 9)
            throw FormatError("CIFAR-10 label byte " + std::to_string(rec[0]) + " > 9 in " +
                              file.string());
        ImageSample s;
        s.label  = rec[0];
        s.pixels = cifar_to_gray({rec + 1, 3 * cifar_pixels});
        s.source = file.filename().string() + "#" + std::to_string(r);
        d.samples.push_back(std::move(s));
    }
    return d;
}

Dataset load_cifar10(const std::filesystem::path& dir, Split split, std::optional<std::size_t> limit) {
    std::vector<std::filesystem::path> files;
    if (split == Split::train)
        for (int b = 1; b <= 5; ++b)
            files.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
    else
        files.push_back(dir / "test_batch.bin");

    Dataset all;
    for (const auto& f : files) {
        if (limit && all.size() >= *limit)
            break;
        Dataset part = load_cifar10_batch(f);
        if (all.samples.empty()) {
            all = std::move(part);
        } else {
            all.samples.insert(all.samples.end(), std::make_move_iterator(part.samples.begin()),
                               std::make_move_iterator(part.samples.end()));
        }
    }
    if (limit && all.samples.size() > *limit)
        all.samples.resize(*limit);

    std::ifstream meta(dir / "batches.meta.txt");
    if (meta) {
        std::vector<std::string> names;
        for (std::string line; std::getline(meta, line);) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
                line.pop_back();
            if (!line.empty())
                names.push_back(line);
        }
        if (names.size() == 10)
            all.class_names = names;
    }
    return all;
}

std::vector<std::vector<double>> synthetic_templates(int n_classes, int rows, int cols) {
    if (rows < 4 || cols < 4)
        throw UsageError("synthetic templates need at least a 4x4 grid");
    if (n_classes < 1 || n_classes > 10)
        throw UsageError("synthetic templates support 1..10 classes");

    const int hr = rows / 4, hc = cols / 4; // band half-widths
    auto make    = [&](auto lit) {
        std::vector<double> t(std::size_t(rows) * cols, 0.0);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (lit(r, c))
                    t[std::size_t(r) * cols + c] = 1.0;
        return t;
    };
    const double slope = double(cols) / rows;
    std::vector<std::vector<double>> all = {
        make([&](int r, int) { return r >= rows / 2 - hr && r < rows / 2 + hr; }),  // horizontal bar
        make([&](int, int c) { return c >= cols / 2 - hc && c < cols / 2 + hc; }),  // vertical bar
        make([&](int r, int c) { return std::abs(c - r * slope) < hc; }),           // diagonal
        make([&](int r, int c) { return std::abs((cols - 1 - c) - r * slope) < hc; }), // anti-diagonal
        make([&](int r, int c) { return r < rows / 2 && c < cols / 2; }),           // top-left block
        make([&](int r, int c) { return r >= rows / 2 && c >= cols / 2; }),         // bottom-right block
        make([&](int r, int c) { return r < hr || r >= rows - hr || c < hc || c >= cols - hc; }), // frame
        make([&](int r, int c) {
            return r >= rows / 4 && r < rows - rows / 4 && c >= cols / 4 && c < cols - cols / 4;
        }),                                                                         // centre block
        make([&](int r, int c) { return r < rows / 2 && c >= cols / 2; }),          // top-right block
        make([&](int r, int c) { return r >= rows / 2 && c < cols / 2; }),          // bottom-left block
    };
    all.resize(n_classes);
    for (std::size_t a = 0; a < all.size(); ++a)
        for (std::size_t b = a + 1; b < all.size(); ++b)
            if (all[a] == all[b])
                throw UsageError("synthetic templates are not distinct at this grid size");
    return all;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.samples_per_class < 0)
        throw UsageError("samples_per_class must be >= 0");
    if (!(spec.noise >= 0.0 && spec.noise <= 1.0))
        throw UsageError("synthetic noise must lie in [0, 1]");
    const auto templates = synthetic_templates(spec.n_classes, spec.rows, spec.cols);

    Dataset d;
    d.rows        = spec.rows;
    d.cols        = spec.cols;
    d.n_classes   = spec.n_classes;
    d.class_names = default_names(spec.n_classes);
    std::mt19937_64 rng(spec.seed);
    for (int i = 0; i < spec.samples_per_class; ++i) {
        for (int k = 0; k < spec.n_classes; ++k) {
            ImageSample s;
            s.label  = k;
            s.pixels = templates[k];
            if (spec.noise > 0)
                for (double& p : s.pixels)
                    p = std::clamp(p + spec.noise * (2.0 * uniform01(rng) - 1.0), 0.0, 1.0);
            s.source = "synthetic#" + std::to_string(d.samples.size());
            d.samples.push_back(std::move(s));
        }
    }
    return d;
}

namespace {

std::map<std::string, std::string> parse_options(const std::string& text) {
    std::map<std::string, std::string> opts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty())
            continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw UsageError("dataset option '" + item + "' must be key=value");
        opts[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return opts;
}

template <typename T>
T take(std::map<std::string, std::string>& opts, const std::string& key, T fallback) {
    const auto it = opts.find(key);
    if (it == opts.end())
        return fallback;
    std::istringstream is(it->second);
    T v{};
    if (!(is >> v) || !is.eof())
        throw UsageError("dataset option " + key + " has invalid value '" + it->second + "'");
    opts.erase(it);
    return v;
}

} // namespace

Dataset open_dataset(const std::string& spec, Split split) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw UsageError("dataset spec must be cifar10:<dir>[,opts] or synthetic:<opts>");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);

    if (kind == "synthetic") {
        auto opts = parse_options(rest);
        SyntheticSpec s;
        s.n_classes         = take(opts, "classes", s.n_classes);
        s.rows              = take(opts, "rows", s.rows);
        s.cols              = take(opts, "cols", s.cols);
        s.samples_per_class = take(opts, "per_class", s.samples_per_class);
        s.noise             = take(opts, "noise", s.noise);
        s.seed              = take(opts, "seed", s.seed);
        if (!opts.empty())
            throw UsageError("unknown synthetic dataset option '" + opts.begin()->first + "'");
        return make_synthetic(s);
    }
    if (kind == "cifar10") {
        const auto comma = rest.find(',');
        const std::filesystem::path dir = rest.substr(0, comma);
        auto opts = parse_options(comma == std::string::npos ? "" : rest.substr(comma + 1));
        std::vector<int> classes;
        if (auto it = opts.find("classes"); it != opts.end()) {
            std::stringstream ss(it->second);
            for (std::string c; std::getline(ss, c, '+');)
                classes.push_back(std::stoi(c));
            opts.erase(it);
        }
        const auto limit = take<std::size_t>(opts, "limit", 0);
        if (!opts.empty())
            throw UsageError("unknown cifar10 dataset option '" + opts.begin()->first + "'");
        Dataset d = load_cifar10(dir, split, classes.empty() && limit > 0
                                                 ? std::optional<std::size_t>(limit)
                                                 : std::nullopt);
        if (!classes.empty())
            d = d.select_classes(classes);
        if (limit > 0)
            d = d.head(limit);
        return d;
    }
    throw UsageError("unknown dataset kind '" + kind + "'");
}

} // namespace natcsnn
