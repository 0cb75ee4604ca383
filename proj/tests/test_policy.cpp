#include "ddlab/ddlab.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

using namespace ddlab;

namespace {

AgentGenome zero_genome(int M, PolicyMode mode, int h1 = 8, int h2 = 8) {
    AgentGenome g;
    g.shape = make_shape(M, mode, h1, h2);
    g.mode = mode;
    g.params.assign(g.shape.param_count(), 0.0);
    return g;
}

// offset of the output-layer biases in the flat layout
std::size_t b3_offset(const GenomeShape& s) { return s.param_count() - s.output; }

}  // namespace

TEST(Encoding, Layout) {
    SequenceState st;
    auto e = encode_state(st, 6, PolicyMode::full5);
    ASSERT_EQ(e.size(), 31u);
    EXPECT_TRUE(std::all_of(e.begin(), e.end(), [](double v) { return v == 0.0; }));

    st.choices = {static_cast<int>(Action::Px)};
    e = encode_state(st, 6, PolicyMode::full5);
    EXPECT_EQ(e[static_cast<int>(Action::Px)], 1.0);
    EXPECT_DOUBLE_EQ(std::accumulate(e.begin(), e.end() - 1, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(e.back(), 1.0 / 6);

    st.choices = {0, 1, 2, 3, 4, 0};
    e = encode_state(st, 6, PolicyMode::full5);
    EXPECT_DOUBLE_EQ(e.back(), 1.0);
    EXPECT_EQ(e[5 * 2 + 2], 1.0);

    EXPECT_EQ(encode_state({}, 48, PolicyMode::yxx2).size(), 97u);
    st.choices.push_back(1);
    EXPECT_THROW(encode_state(st, 6, PolicyMode::full5), InputError);
    EXPECT_THROW(encode_state({{2}}, 6, PolicyMode::yxx2), InputError);
}

TEST(Forward, ZeroGenomeIsUniform) {
    for (auto mode : {PolicyMode::full5, PolicyMode::yxx2}) {
        auto g = zero_genome(6, mode);
        auto p = forward(g, encode_state({}, 6, mode));
        for (double v : p) EXPECT_DOUBLE_EQ(v, 1.0 / n_choices(mode));
    }
}

TEST(Forward, NormalizedPositiveAndShiftInvariant) {
    Rng r = make_stream(3, 0, 0, 0, StreamTag::init);
    auto g = init_genome(make_shape(12, PolicyMode::full5, 32, 16), PolicyMode::full5, r);
    SequenceState st{{1, 3, 0}};
    auto enc = encode_state(st, 12, PolicyMode::full5);
    auto p = forward(g, enc);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double v : p) EXPECT_GT(v, 0.0);
    auto h = g;
    for (int k = 0; k < 5; ++k) h.params[b3_offset(h.shape) + k] += 123.4;
    auto q = forward(h, enc);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(p[k], q[k], 1e-12);
    // extreme logits stay finite
    for (int k = 0; k < 5; ++k) h.params[b3_offset(h.shape) + k] = k * 1e4;
    for (double v : forward(h, enc)) EXPECT_TRUE(std::isfinite(v));
    EXPECT_THROW(forward(g, std::vector<double>(5, 0.0)), InputError);
}

TEST(Forward, MatchesDenseReference) {
    Rng r = make_stream(4, 0, 0, 0, StreamTag::init);
    auto shape = make_shape(4, PolicyMode::full5, 6, 5);
    auto g = init_genome(shape, PolicyMode::full5, r);
    auto enc = encode_state({{2, 4}}, 4, PolicyMode::full5);
    // plain dense evaluation of the same layout
    const double* p = g.params.data();
    auto layer = [&](const std::vector<double>& x, int rows, bool relu) {
        int cols = static_cast<int>(x.size());
        std::vector<double> y(rows);
        for (int i = 0; i < rows; ++i) {
            double s = p[std::size_t(rows) * cols + i];
            for (int j = 0; j < cols; ++j) s += p[std::size_t(i) * cols + j] * x[j];
            y[i] = relu ? std::max(0.0, s) : s;
        }
        p += std::size_t(rows) * cols + rows;
        return y;
    };
    auto z = layer(layer(layer(enc, 6, true), 5, true), 5, false);
    double mx = *std::max_element(z.begin(), z.end()), s = 0;
    for (double& v : z) s += (v = std::exp(v - mx));
    auto got = forward(g, enc);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(got[k], z[k] / s, 1e-14);
}

TEST(Rollout, DeterministicAndSaturated) {
    Rng r = make_stream(5, 0, 0, 0, StreamTag::init);
    auto g = init_genome(make_shape(12, PolicyMode::full5, 16, 16), PolicyMode::full5, r);
    Rng a = make_stream(9, 1, 2, 0, StreamTag::eval), b = make_stream(9, 1, 2, 0, StreamTag::eval);
    EXPECT_EQ(rollout(g, 12, a).actions, rollout(g, 12, b).actions);

    auto z = zero_genome(12, PolicyMode::full5);
    z.params[b3_offset(z.shape) + static_cast<int>(Action::Px)] = 40.0;
    Rng c = make_stream(1, 0, 0, 0, StreamTag::eval);
    auto s = rollout(z, 12, c);
    EXPECT_EQ(s.size(), 12u);
    for (Action act : s.actions) EXPECT_EQ(act, Action::Px);
    EXPECT_THROW(rollout(z, 13, c), InputError);
}

TEST(Rollout, YxxModeProducesPulsesOnly) {
    Rng r = make_stream(6, 0, 0, 0, StreamTag::init);
    auto g = init_genome(make_shape(48, PolicyMode::yxx2, 16, 16), PolicyMode::yxx2, r);
    Rng e = make_stream(6, 1, 0, 0, StreamTag::eval);
    auto s = rollout(g, 48, e);
    EXPECT_EQ(s.size(), 48u);
    EXPECT_EQ(s.delays(), 0u);
    EXPECT_TRUE(is_yxx_pattern(s));
    EXPECT_TRUE(zeroth_order(s).interaction_vanishes());
}

TEST(Init, ShapeAndStatistics) {
    auto shape = make_shape(6, PolicyMode::full5, 128, 64);
    EXPECT_EQ(shape.input, 31);
    EXPECT_EQ(shape.param_count(), 31u * 128 + 128 + 128 * 64 + 64 + 64 * 5 + 5);
    Rng a = make_stream(1, 0, 0, 0, StreamTag::init), b = make_stream(1, 0, 0, 0, StreamTag::init);
    auto g1 = init_genome(shape, PolicyMode::full5, a), g2 = init_genome(shape, PolicyMode::full5, b);
    EXPECT_EQ(g1.params, g2.params);

    // one wide layer: i.i.d. N(0, 1/fan_in)
    auto wide = make_shape(1000, PolicyMode::full5, 20, 1);
    Rng c = make_stream(2, 0, 0, 0, StreamTag::init);
    auto g = init_genome(wide, PolicyMode::full5, c);
    std::size_t n = std::size_t(wide.h1) * wide.input;
    double sc = std::sqrt(static_cast<double>(wide.input)), m = 0, v = 0;
    for (std::size_t i = 0; i < n; ++i) m += g.params[i] * sc;
    m /= n;
    for (std::size_t i = 0; i < n; ++i) v += std::pow(g.params[i] * sc - m, 2);
    v /= n;
    EXPECT_LT(std::abs(m), 3.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(v, 1.0, 0.02);
}

TEST(Checkpoint, RoundTripAndErrors) {
    Rng r = make_stream(8, 0, 0, 0, StreamTag::init);
    auto g = init_genome(make_shape(9, PolicyMode::yxx2, 7, 3), PolicyMode::yxx2, r);
    auto path = (std::filesystem::temp_directory_path() / "ddlab_test_genome.ddgn").string();
    save_genome(path, g);
    auto h = load_genome(path);
    EXPECT_EQ(h.params, g.params);
    EXPECT_EQ(h.shape, g.shape);
    EXPECT_EQ(h.mode, g.mode);
    std::string bytes = read_binary_file(path);
    EXPECT_EQ(bytes.substr(0, 4), "DDGN");
    EXPECT_EQ(bytes.size(), 4 + 4 * 6 + 8 + 8 * g.params.size());
    write_binary_file(path, bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(load_genome(path), InputError);
    bytes[0] = 'X';
    write_binary_file(path, bytes);
    EXPECT_THROW(load_genome(path), InputError);
    std::filesystem::remove(path);
}

TEST(Mutation, CommutesWithLayout) {
    Rng r = make_stream(10, 0, 0, 0, StreamTag::init);
    auto g = init_genome(make_shape(6, PolicyMode::full5, 8, 8), PolicyMode::full5, r);
    Rng m1 = make_stream(10, 1, 1, 0, StreamTag::mutate), m2 = make_stream(10, 1, 1, 0, StreamTag::mutate);
    auto c = mutate(g, 0.05, m1);
    AgentGenome manual = g;
    for (auto& p : manual.params) p += 0.05 * gaussian(m2);
    auto enc = encode_state({{1}}, 6, PolicyMode::full5);
    EXPECT_EQ(forward(c, enc), forward(manual, enc));
}
