#include "enslab/testbed/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "enslab/numkit/errors.hpp"

namespace enslab::testbed {

namespace {

constexpr std::array<char, 8> kMagic{'E', 'N', 'S', 'M', 'L', 'P', '0', '1'};
constexpr std::uint64_t kMaxWidth = 1u << 20;

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 8);
    if (!in) throw IoError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void save_mlp(std::ostream& out, const MlpParams& net) {
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, net.layers.size());
    put_u64(out, static_cast<std::uint64_t>(net.input_dim()));
    for (const auto& l : net.layers) put_u64(out, static_cast<std::uint64_t>(l.weight.rows()));
    for (const auto& l : net.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put_f64(out, l.weight(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_f64(out, l.bias(r));
    }
    if (!out) throw IoError("checkpoint write failed");
}

MlpParams load_mlp(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw IoError("not an MLP checkpoint");
    const std::uint64_t count = get_u64(in);
    if (count == 0 || count > 64) throw IoError("checkpoint layer count out of range");
    std::vector<Eigen::Index> widths;
    for (std::uint64_t i = 0; i <= count; ++i) {
        const std::uint64_t w = get_u64(in);
        if (w == 0 || w > kMaxWidth) throw IoError("checkpoint width out of range");
        widths.push_back(static_cast<Eigen::Index>(w));
    }
    MlpParams net;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        DenseLayer layer{Matrix(widths[i + 1], widths[i]), Vector(widths[i + 1])};
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = get_f64(in);
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = get_f64(in);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

void save_mlp(const std::filesystem::path& path, const MlpParams& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    save_mlp(out, net);
}

MlpParams load_mlp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return load_mlp(in);
}

}  // namespace enslab::testbed
