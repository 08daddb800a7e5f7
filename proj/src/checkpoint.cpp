#include "natcsnn/checkpoint.hpp"

#include "natcsnn/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace natcsnn {

namespace {

constexpr char magic[8] = {'N', 'A', 'T', 'C', 'S', 'N', 'N', '\x01'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::string& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto raw = std::bit_cast<std::array<char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(raw.begin(), raw.end());
    out.append(raw.data(), raw.size());
}

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        std::array<char, sizeof(T)> raw;
        take(raw.data(), raw.size());
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    }

    void take(char* dst, std::size_t n) {
        if (bytes_.size() - pos_ < n)
            throw FormatError("checkpoint is truncated");
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

const char* phase_name(Phase p) {
    switch (p) {
    case Phase::initial: return "initial";
    case Phase::phase1: return "phase1";
    case Phase::phase2: return "phase2";
    }
    return "unknown";
}

bool Checkpoint::operator==(const Checkpoint& o) const {
    if (version != o.version || fingerprint != o.fingerprint || phase != o.phase ||
        presentations != o.presentations || rng_state != o.rng_state)
        return false;
    for (std::size_t p = 0; p < projection_count; ++p) {
        if (weights[p].size() != o.weights[p].size())
            return false;
        // Bitwise, so -0.0 and NaN payloads count as differences.
        if (std::memcmp(weights[p].data(), o.weights[p].data(), sizeof(double) * weights[p].size()) != 0)
            return false;
    }
    return true;
}

Checkpoint capture(const NetworkTopology& net,
                   Phase phase,
                   std::uint64_t presentations,
                   const std::mt19937_64& rng) {
    Checkpoint c;
    c.fingerprint   = net.config.fingerprint();
    c.phase         = phase;
    c.presentations = presentations;
    std::ostringstream os;
    os << rng;
    c.rng_state = os.str();
    for (std::size_t p = 0; p < projection_count; ++p)
        c.weights[p] = net.projections[p].synapses.weight();
    return c;
}

void apply(const Checkpoint& ckpt, NetworkTopology& net) {
    if (ckpt.fingerprint != net.config.fingerprint())
        throw FormatError("checkpoint topology fingerprint does not match the configured network");
    for (std::size_t p = 0; p < projection_count; ++p)
        if (ckpt.weights[p].size() != net.projections[p].synapses.size())
            throw FormatError(std::string("checkpoint weight array for ") +
                              projection_name(static_cast<ProjectionId>(p)) +
                              " has the wrong length");
    for (std::size_t p = 0; p < projection_count; ++p)
        net.projections[p].synapses.set_weights(ckpt.weights[p]);
}

std::mt19937_64 restore_rng(const Checkpoint& ckpt) {
    std::mt19937_64 rng;
    std::istringstream is(ckpt.rng_state);
    is >> rng;
    if (!is)
        throw FormatError("checkpoint RNG state is corrupt");
    return rng;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    std::string out(magic, sizeof magic);
    put<std::uint32_t>(out, ckpt.version);
    put<std::uint64_t>(out, ckpt.fingerprint);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.phase));
    put<std::uint64_t>(out, ckpt.presentations);
    put<std::uint64_t>(out, ckpt.rng_state.size());
    out += ckpt.rng_state;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(projection_count));
    for (const auto& w : ckpt.weights) {
        put<std::uint64_t>(out, static_cast<std::uint64_t>(w.size()));
        for (Eigen::Index i = 0; i < w.size(); ++i)
            put<double>(out, w(i));
    }
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    Reader in(bytes);
    char head[sizeof magic];
    in.take(head, sizeof head);
    if (std::memcmp(head, magic, sizeof magic) != 0)
        throw FormatError("not a checkpoint file (bad magic bytes)");

    Checkpoint c;
    c.version = in.get<std::uint32_t>();
    if (c.version != checkpoint_version)
        throw FormatError("unsupported checkpoint version " + std::to_string(c.version));
    c.fingerprint = in.get<std::uint64_t>();
    const auto phase = in.get<std::uint32_t>();
    if (phase > 2)
        throw FormatError("checkpoint has unknown phase tag " + std::to_string(phase));
    c.phase         = static_cast<Phase>(phase);
    c.presentations = in.get<std::uint64_t>();
    const auto rng_len = in.get<std::uint64_t>();
    if (rng_len > in.remaining())
        throw FormatError("checkpoint RNG state length is corrupt");
    c.rng_state.resize(rng_len);
    in.take(c.rng_state.data(), rng_len);
    if (in.get<std::uint32_t>() != projection_count)
        throw FormatError("checkpoint has the wrong projection count");
    for (auto& w : c.weights) {
        const auto n = in.get<std::uint64_t>();
        if (n > in.remaining() / sizeof(double))
            throw FormatError("checkpoint weight array length is corrupt");
        w.resize(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w(i) = in.get<double>();
    }
    if (in.remaining() != 0)
        throw FormatError("checkpoint has trailing bytes");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(ckpt);
    const auto tmp          = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw FormatError("cannot open checkpoint path " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw FormatError("failed writing checkpoint " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw FormatError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot read checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace natcsnn
