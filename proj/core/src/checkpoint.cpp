#include "dnnsr/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dnnsr/errors.hpp"

namespace dnnsr {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'N', 'N', 'S', 'R', 'C', 'K', 'P'};
constexpr std::uint64_t kMaxWidth = std::uint64_t{1} << 24;
constexpr Index kMaxParams = Index{1} << 31;

template <class T>
void put(std::ostream& out, T value) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
        bits = std::bit_cast<std::uint64_t>(value);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("checkpoint is truncated");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    if constexpr (std::is_same_v<T, double>) {
        return std::bit_cast<double>(bits);
    } else {
        return static_cast<T>(bits);
    }
}

std::uint8_t tag_of(Activation a) { return static_cast<std::uint8_t>(a); }

Activation activation_of_tag(std::uint8_t tag) {
    if (tag > static_cast<std::uint8_t>(Activation::identity)) throw FormatError("checkpoint has an unknown activation tag");
    return static_cast<Activation>(tag);
}

}  // namespace

void save_checkpoint(const NetworkParams& params, std::ostream& out) {
    params.validate();
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.shape.layer_dims.size()));
    for (Index d : params.shape.layer_dims) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    put<std::uint8_t>(out, tag_of(params.shape.hidden_activation));
    put<std::uint8_t>(out, tag_of(params.shape.output_activation));
    const Vector theta = flatten(params);
    for (Index i = 0; i < theta.size(); ++i) put<double>(out, theta[i]);
    if (!out) throw FormatError("checkpoint write failed");
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    save_checkpoint(params, out);
}

NetworkParams load_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size())) throw FormatError("checkpoint is truncated");
    if (magic != kMagic) throw FormatError("not a checkpoint: bad magic string");
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = get<std::uint32_t>(in);
    if (count < 2 || count > 1024) throw FormatError("checkpoint has an implausible layer count");
    NetworkShape shape;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto d = get<std::uint64_t>(in);
        if (d == 0 || d > kMaxWidth) throw FormatError("checkpoint has an invalid layer width");
        shape.layer_dims.push_back(static_cast<Index>(d));
    }
    shape.hidden_activation = activation_of_tag(get<std::uint8_t>(in));
    shape.output_activation = activation_of_tag(get<std::uint8_t>(in));
    try {
        shape.validate();
    } catch (const ShapeError& e) {
        throw FormatError(std::string("checkpoint shape: ") + e.what());
    }
    Index n = 0;
    for (std::size_t j = 1; j < shape.layer_dims.size(); ++j) {
        n += shape.layer_dims[j] * (shape.layer_dims[j - 1] + 1);
        if (n > kMaxParams) throw FormatError("checkpoint declares too many parameters");
    }
    std::vector<double> theta(static_cast<std::size_t>(n));
    for (auto& v : theta) v = get<double>(in);
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint has trailing bytes");
    return unflatten(theta, shape);
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return load_checkpoint(in);
}

}  // namespace dnnsr
