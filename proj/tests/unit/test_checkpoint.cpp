#include <sstream>

#include <gtest/gtest.h>

#include "dnnsr/checkpoint.hpp"
#include "dnnsr/errors.hpp"
#include "dnnsr/fcnn.hpp"
#include "test_support.hpp"

using namespace dnnsr;

namespace {

NetworkParams sample() {
    Rng rng(21);
    NetworkShape shape{{6, 4, 2, 4, 6}, Activation::tanh, Activation::identity};
    NetworkParams p = init_network(shape, rng);
    for (auto& b : p.biases) b = rng.normal_matrix(b.size(), 1).col(0);
    return p;
}

std::string saved(const NetworkParams& p) {
    std::ostringstream out;
    save_checkpoint(p, out);
    return out.str();
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
    const NetworkParams p = sample();
    std::istringstream in(saved(p));
    const NetworkParams q = load_checkpoint(in);
    EXPECT_TRUE(p == q);
    Rng rng(1);
    const Matrix x = rng.normal_matrix(6, 9);
    EXPECT_EQ(predict(p, x), predict(q, x));
}

TEST(Checkpoint, FileRoundTripKeepsActivations) {
    testutil::TempDir dir;
    NetworkParams p = sample();
    p.shape.hidden_activation = Activation::sigmoid;
    p.shape.output_activation = Activation::tanh;
    save_checkpoint(p, dir / "m.ckpt");
    const NetworkParams q = load_checkpoint(dir / "m.ckpt");
    EXPECT_EQ(q.shape.hidden_activation, Activation::sigmoid);
    EXPECT_EQ(q.shape.output_activation, Activation::tanh);
    EXPECT_TRUE(p == q);
}

TEST(Checkpoint, LayoutHeader) {
    const std::string bytes = saved(sample());
    EXPECT_EQ(bytes.substr(0, 8), "DNNSRCKP");
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), kCheckpointVersion);
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 5);
    const std::size_t params = 4 * 6 + 4 + 2 * 4 + 2 + 4 * 2 + 4 + 6 * 4 + 6;
    EXPECT_EQ(bytes.size(), 8 + 4 + 4 + 5 * 8 + 2 + params * 8);
}

TEST(Checkpoint, CorruptionIsRejected) {
    const std::string good = saved(sample());
    auto load = [](std::string bytes) {
        std::istringstream in(bytes);
        return load_checkpoint(in);
    };
    std::string magic = good;
    magic[0] = 'X';
    EXPECT_THROW(load(magic), FormatError);
    std::string version = good;
    version[8] = 9;
    EXPECT_THROW(load(version), FormatError);
    EXPECT_THROW(load(good.substr(0, good.size() - 3)), FormatError);
    EXPECT_THROW(load(good.substr(0, 10)), FormatError);
    EXPECT_THROW(load(good + "x"), FormatError);
    std::string tag = good;
    tag[8 + 4 + 4 + 5 * 8] = 77;
    EXPECT_THROW(load(tag), FormatError);
    EXPECT_THROW(load(""), FormatError);
}
