#include <gtest/gtest.h>

#include <cmath>

#include "flowsentinel/gradcheck.hpp"
#include "flowsentinel/lstm.hpp"
#include "test_util.hpp"

using namespace flowsentinel;
using flowsentinel::testing::oracle_lstm_step;
using flowsentinel::testing::random_tensor;
using flowsentinel::testing::weighted_sum;

namespace {

using TD = Tensor<double>;

Lstm<double> random_lstm(std::size_t d, std::size_t h, Rng& rng, double scale = 0.8) {
    Lstm<double> lstm(d, h);
    lstm.w_input.value = random_tensor(lstm.w_input.shape(), rng, -scale, scale);
    lstm.w_recurrent.value = random_tensor(lstm.w_recurrent.shape(), rng, -scale, scale);
    lstm.bias.value = random_tensor(lstm.bias.shape(), rng, -scale, scale);
    return lstm;
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

GradCheckReport check_bptt(std::size_t steps, std::size_t d, std::size_t h, bool sequences, Rng& rng) {
    Lstm<double> lstm = random_lstm(d, h, rng);
    TD seq = random_tensor({steps, d}, rng);
    const TD r = sequences ? random_tensor({steps, h}, rng) : random_tensor({h}, rng);
    lstm.forward(seq, sequences);
    TD grad_seq = lstm.backward(r);
    std::vector<GradTarget> targets{{"w_input", &lstm.w_input.value, lstm.w_input.grad},
                                    {"w_recurrent", &lstm.w_recurrent.value, lstm.w_recurrent.grad},
                                    {"bias", &lstm.bias.value, lstm.bias.grad},
                                    {"sequence", &seq, grad_seq}};
    return gradient_check(targets, [&] {
        Lstm<double> probe = lstm;
        return weighted_sum(probe.forward(seq, sequences), r);
    });
}

}  // namespace

TEST(LstmStep, ZeroWeightsClosedForm) {
    const std::size_t h = 4;
    const TD wx({4 * h, 2}), wh({4 * h, h}), b({4 * h});
    const LstmWeights<double> w{wx, wh, b};
    auto [h0, c0] = lstm_step(TD({2}, {0.3, -1.0}), TD({h}), TD({h}), w);
    EXPECT_EQ(h0, TD({h}));
    EXPECT_EQ(c0, TD({h}));

    const TD c_prev({h}, {1.0, -2.0, 0.5, 3.0});
    auto [h1, c1] = lstm_step(TD({2}, {0.3, -1.0}), TD({h}), c_prev, w);
    for (std::size_t j = 0; j < h; ++j) {
        EXPECT_DOUBLE_EQ(c1[j], 0.5 * c_prev[j]);
        EXPECT_DOUBLE_EQ(h1[j], 0.5 * std::tanh(0.5 * c_prev[j]));
    }
}

TEST(LstmStep, MatchesIndependentOracle) {
    Rng rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 1 + rng.below(4), h = 1 + rng.below(6);
        const Lstm<double> lstm = random_lstm(d, h, rng);
        const TD x = random_tensor({d}, rng), hp = random_tensor({h}, rng), cp = random_tensor({h}, rng);
        const auto [h1, c1] = lstm_step(x, hp, cp, lstm.weights());
        const auto [oh, oc] = oracle_lstm_step(to_vec(x.data()), to_vec(hp.data()), to_vec(cp.data()),
                                               lstm.w_input.value, lstm.w_recurrent.value, lstm.bias.value);
        for (std::size_t j = 0; j < h; ++j) {
            EXPECT_NEAR(h1[j], oh[j], 1e-6);
            EXPECT_NEAR(c1[j], oc[j], 1e-6);
            EXPECT_LE(std::abs(h1[j]), 1.0);
        }
    }
}

TEST(LstmStep, ShapeErrors) {
    const TD wx({8, 1}), wh({8, 2}), b({8});
    const LstmWeights<double> w{wx, wh, b};
    EXPECT_THROW(lstm_step(TD({3}), TD({2}), TD({2}), w), Error);
    EXPECT_THROW(lstm_step(TD({1}), TD({3}), TD({2}), w), Error);
}

TEST(LstmForward, SingleStepReducesToLstmStep) {
    Rng rng(7);
    Lstm<double> lstm = random_lstm(3, 5, rng);
    const TD seq = random_tensor({1, 3}, rng);
    const auto [h1, c1] = lstm_step(TD({3}, to_vec(seq.data())), TD({5}), TD({5}), lstm.weights());
    EXPECT_EQ(lstm.forward(seq, false), h1);
    EXPECT_EQ(lstm.forward(seq, true), TD({1, 5}, to_vec(h1.data())));
}

TEST(LstmForward, ZeroWeightsGiveZeroOutputs) {
    Rng rng(8);
    Lstm<double> lstm(2, 3);
    EXPECT_EQ(lstm.forward(random_tensor({6, 2}, rng), true), TD({6, 3}));
}

TEST(LstmForward, MatchesUnrolledOracle) {
    Rng rng(9);
    Lstm<double> lstm = random_lstm(2, 4, rng);
    const TD seq = random_tensor({3, 2}, rng);
    const TD out = lstm.forward(seq, true);
    std::vector<double> h(4, 0.0), c(4, 0.0);
    for (std::size_t t = 0; t < 3; ++t) {
        std::tie(h, c) = oracle_lstm_step(to_vec(seq.row(t)), h, c, lstm.w_input.value, lstm.w_recurrent.value,
                                          lstm.bias.value);
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out(t, j), h[j], 1e-12);
    }
    const TD last = lstm.forward(seq, false);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(last[j], h[j], 1e-12);
}

TEST(LstmForward, Errors) {
    Lstm<double> lstm(2, 3);
    EXPECT_THROW(lstm.forward(TD({4, 3}), true), Error);
    EXPECT_THROW(lstm.backward(TD({3})), Error);
    // A zero-length sequence cannot even be represented as a tensor.
    EXPECT_THROW(TD({0, 2}), Error);
}

TEST(LstmBackward, ZeroUpstreamGivesZeroGradients) {
    Rng rng(10);
    Lstm<double> lstm = random_lstm(2, 3, rng);
    lstm.forward(random_tensor({4, 2}, rng), true);
    EXPECT_EQ(lstm.backward(TD({4, 3})), TD({4, 2}));
    EXPECT_EQ(lstm.w_input.grad, TD(lstm.w_input.shape()));
    EXPECT_EQ(lstm.w_recurrent.grad, TD(lstm.w_recurrent.shape()));
    EXPECT_EQ(lstm.bias.grad, TD(lstm.bias.shape()));
    EXPECT_FALSE(lstm.has_cache());
}

TEST(LstmBackward, SingleStepFiniteDifferences) {
    Rng rng(11);
    EXPECT_LT(check_bptt(1, 2, 3, false, rng).max_rel_error(), 1e-4);
    EXPECT_LT(check_bptt(1, 2, 3, true, rng).max_rel_error(), 1e-4);
}

TEST(LstmBackward, FourStepFiniteDifferencesEveryParameter) {
    Rng rng(12);
    const auto report = check_bptt(4, 2, 3, false, rng);
    ASSERT_EQ(report.entries.size(), 4u);
    for (const auto& e : report.entries) EXPECT_LT(e.max_rel_error, 1e-4) << e.name;
    EXPECT_LT(check_bptt(4, 2, 3, true, rng).max_rel_error(), 1e-4);
}

TEST(LstmBackward, RandomShapes) {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t steps = 1 + rng.below(4), d = 1 + rng.below(3), h = 1 + rng.below(4);
        EXPECT_LT(check_bptt(steps, d, h, rng.below(2) == 1, rng).max_rel_error(), 1e-4) << "trial " << trial;
    }
}

TEST(LstmInit, ForgetBiasIsOne) {
    Rng rng(14);
    Lstm<float> lstm(1, 64);
    lstm.init(rng);
    for (std::size_t j = 0; j < 64; ++j) {
        EXPECT_EQ(lstm.bias.value[j], 0.0f);
        EXPECT_EQ(lstm.bias.value[64 + j], 1.0f);
        EXPECT_EQ(lstm.bias.value[128 + j], 0.0f);
        EXPECT_EQ(lstm.bias.value[192 + j], 0.0f);
    }
    EXPECT_EQ(lstm.parameter_count(), 4u * 64 * (1 + 64 + 1));
}
