#include "fedgan/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "fedgan/error.hpp"

namespace fedgan {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'B', 'F'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    std::span<const std::uint8_t> raw(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw ParseError("snapshot truncated at byte " + std::to_string(pos_));
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const DenseNet& net) {
    std::vector<std::uint8_t> out;
    out.reserve(12 + net.depth() * 12 + net.parameter_count() * 8);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kSnapshotVersion);
    put_u32(out, static_cast<std::uint32_t>(net.depth()));
    for (const auto& layer : net.layers()) {
        put_u32(out, static_cast<std::uint32_t>(layer.activation));
        put_u32(out, static_cast<std::uint32_t>(layer.in()));
        put_u32(out, static_cast<std::uint32_t>(layer.out()));
        for (double w : layer.weight.values()) put_f64(out, w);
        for (double b : layer.bias) put_f64(out, b);
    }
    return out;
}

DenseNet decode_snapshot(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    const auto magic = in.raw(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ParseError("not a model snapshot (bad magic)");
    const auto version = in.u32();
    if (version != kSnapshotVersion) {
        throw ParseError("unsupported snapshot version " + std::to_string(version));
    }
    const auto count = in.u32();
    std::vector<Layer> layers;
    layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto tag = in.u32();
        if (tag > static_cast<std::uint32_t>(Activation::Sigmoid)) {
            throw ParseError("layer " + std::to_string(i) + ": unknown activation tag " +
                             std::to_string(tag));
        }
        const std::size_t fan_in = in.u32();
        const std::size_t fan_out = in.u32();
        Layer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out), static_cast<Activation>(tag)};
        for (double& w : layer.weight.values()) w = in.f64();
        for (double& b : layer.bias) b = in.f64();
        layers.push_back(std::move(layer));
    }
    if (!in.done()) throw ParseError("trailing bytes after snapshot");
    try {
        return DenseNet(std::move(layers));
    } catch (const DimensionError& e) {
        throw ParseError(std::string("inconsistent snapshot: ") + e.what());
    }
}

void save_snapshot(const DenseNet& net, const std::filesystem::path& path) {
    const auto bytes = encode_snapshot(net);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DenseNet load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                          std::istreambuf_iterator<char>()};
    return decode_snapshot(bytes);
}

std::uint64_t snapshot_id(const DenseNet& net) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : encode_snapshot(net)) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace fedgan
