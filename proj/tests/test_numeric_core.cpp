#include "drfn/adam.hpp"
#include "drfn/autodiff.hpp"
#include "drfn/errors.hpp"
#include "drfn/gradcheck.hpp"
#include "drfn/tensor.hpp"
#include "op_cases.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

using namespace drfn;
using drfn::testing::random_tensor;
using drfn::testing::weighted_sum;

namespace {

double exact_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

}  // namespace

TEST(Tensor, DataLengthMatchesShape) {
    Tensor t({3, 4});
    EXPECT_EQ(t.size(), 12u);
    Tensor r({2, 3, 4});
    EXPECT_EQ(r.size(), 24u);
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), DimensionError);
    EXPECT_THROW(r.rows(), DimensionError);
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
    Rng rng(1);
    Tensor x = random_tensor({2, 3}, rng);
    EXPECT_EQ(matmul(Tensor::identity(2), x), x);
}

TEST(Matmul, HandCheckedProduct) {
    Tensor out = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{1}, {1}}));
    EXPECT_EQ(out, Tensor::matrix({{3}, {7}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    try {
        matmul(Tensor({2, 3}), Tensor({2, 3}));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
    Rng rng(3);
    auto r = check_gradients([](ad::Tape& t, const std::vector<ad::Var>& v) { return weighted_sum(t, ad::matmul(v[0], v[1])); },
                             {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
    EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

TEST(Softmax, UniformRow) {
    Tensor s = softmax_rows(Tensor::matrix({{2.5, 2.5, 2.5}}));
    for (double v : s.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LnTwoRow) {
    Tensor s = softmax_rows(Tensor::matrix({{0.0, std::log(2.0)}}));
    EXPECT_NEAR(s(0, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(s(0, 1), 2.0 / 3.0, 1e-15);
}

TEST(Softmax, RowShiftInvariance) {
    Rng rng(5);
    Tensor x = random_tensor({4, 5}, rng, -3, 3);
    Tensor shifted = x;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) shifted(i, j) += 10.0 * static_cast<double>(i) - 7.0;
    EXPECT_LT(max_abs_diff(softmax_rows(x), softmax_rows(shifted)), 1e-14);
}

TEST(Softmax, RowsSumToOneAndStayInUnitInterval) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Tensor s = softmax_rows(random_tensor({6, 7}, rng, -50, 50));
        for (std::size_t i = 0; i < 6; ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < 7; ++j) {
                EXPECT_GE(s(i, j), 0.0);
                EXPECT_LE(s(i, j), 1.0);
                total += s(i, j);
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(Softmax, NaNInputIsRejected) {
    EXPECT_THROW(softmax_rows(Tensor::matrix({{0.0, std::numeric_limits<double>::quiet_NaN()}})), NumericError);
}

TEST(Gelu, Values) {
    EXPECT_EQ(gelu(0.0), 0.0);
    EXPECT_NEAR(gelu(1.0), 0.84119, 1e-5);
    EXPECT_NEAR(gelu(1.0), exact_gelu(1.0), 2e-3);
    EXPECT_NEAR(gelu(30.0), 30.0, 1e-12);
    EXPECT_NEAR(gelu(-30.0), 0.0, 1e-12);
}

TEST(Gelu, UnimodalOnGrid) {
    // GELU has a single minimum near x = −0.7518: it falls before it and rises after.
    double xmin = -0.7518;
    for (int k = 0; k < 60; ++k) xmin -= gelu_derivative(xmin) / 2.0;  // gradient descent onto the minimum
    EXPECT_NEAR(gelu_derivative(xmin), 0.0, 1e-9);
    double prev = gelu(-5.0);
    for (double x = -5.0 + 1e-3; x <= 5.0; x += 1e-3) {
        const double g = gelu(x);
        if (x <= xmin) EXPECT_LE(g, prev + 1e-15) << x;
        else if (x - 1e-3 >= xmin) EXPECT_GE(g, prev - 1e-15) << x;
        prev = g;
    }
}

TEST(Gelu, DerivativeMatchesFiniteDifference) {
    for (double x = -4.0; x <= 4.0; x += 0.25) {
        const double h = 1e-6;
        EXPECT_NEAR(gelu_derivative(x), (gelu(x + h) - gelu(x - h)) / (2 * h), 1e-8) << x;
    }
}

TEST(PairwiseL1, SelfDistanceHasZeroDiagonal) {
    Rng rng(2);
    Tensor u = random_tensor({4, 3}, rng);
    Tensor d = pairwise_l1(u, u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d(i, i), 0.0);
}

TEST(PairwiseL1, HandSum) {
    Tensor u = Tensor::matrix({{0, 0}, {5, 5}});
    Tensor w = Tensor::matrix({{9, 9}, {1, -1}});
    EXPECT_EQ(pairwise_l1(u, w)(0, 1), 2.0);
}

TEST(PairwiseL1, MatchesTripleLoopOracle) {
    Rng rng(8);
    Tensor u = random_tensor({3, 2}, rng), w = random_tensor({3, 2}, rng);
    Tensor d = pairwise_l1(u, w);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (std::size_t f = 0; f < 2; ++f) s += std::abs(u(i, f) - w(j, f));
            EXPECT_EQ(d(i, j), s);
        }
}

TEST(PairwiseL1, FeatureMismatchThrows) { EXPECT_THROW(pairwise_l1(Tensor({3, 2}), Tensor({3, 4})), DimensionError); }

TEST(Backward, SumGivesOnes) {
    ad::Tape tape;
    ad::Var x = tape.leaf(Tensor::matrix({{1, 2}, {3, 4}}));
    tape.backward(ad::sum(x));
    EXPECT_EQ(tape.grad(x), Tensor::filled(2, 2, 1.0));
}

TEST(Backward, ProductRule) {
    ad::Tape tape;
    ad::Var x = tape.leaf(Tensor::scalar(3.0));
    ad::Var y = tape.leaf(Tensor::scalar(-2.0));
    tape.backward(ad::mul(x, y));
    EXPECT_EQ(tape.grad(x).item(), -2.0);
    EXPECT_EQ(tape.grad(y).item(), 3.0);
}

TEST(Backward, NonScalarLossIsAContractError) {
    ad::Tape tape;
    ad::Var x = tape.leaf(Tensor({2, 2}));
    EXPECT_THROW(tape.backward(x), ContractError);
}

TEST(Backward, UnreachedLeafGetsZeroGradient) {
    ad::Tape tape;
    ad::Var x = tape.leaf(Tensor::scalar(1.0));
    ad::Var unused = tape.leaf(Tensor::matrix({{1, 2}}));
    tape.backward(ad::square(x));
    EXPECT_EQ(tape.grad(unused), Tensor::zeros(1, 2));
}

TEST(Backward, SharedParameterAccumulatesOverPaths) {
    // loss = w·x1 + w²·x2 with scalars: d/dw = x1 + 2·w·x2.
    ParamStore ps;
    Parameter& w = ps.add("w", Tensor::scalar(1.5));
    ad::Tape tape;
    ad::Var wv = tape.param(w);
    ad::Var x1 = tape.constant(Tensor::scalar(2.0));
    ad::Var x2 = tape.constant(Tensor::scalar(-3.0));
    ad::Var loss = ad::add(ad::mul(wv, x1), ad::mul(ad::mul(tape.param(w), wv), x2));
    tape.backward(loss);
    EXPECT_DOUBLE_EQ(w.grad.item(), 2.0 + 2.0 * 1.5 * -3.0);
}

namespace drfn::testing {
void PrintTo(const OpCase& c, std::ostream* os) { *os << c.name; }
}  // namespace drfn::testing

using drfn::testing::OpCase;
using drfn::testing::op_cases;

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferencesOverTwentySeeds) {
    const OpCase& c = GetParam();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(1000 + seed);
        std::vector<Tensor> inputs;
        for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng));
        auto r = check_gradients(
            [&](ad::Tape& t, const std::vector<ad::Var>& v) { return weighted_sum(t, c.build(t, v), seed); }, inputs);
        ASSERT_LT(r.max_rel_error, 1e-4) << c.name << " seed " << seed << " at " << r.worst;
    }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(op_cases()),
                         [](const ::testing::TestParamInfo<OpCase>& info) { return info.param.name; });

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    ParamStore ps;
    ps.add("w", Tensor::matrix({{1, -2, 3}}));
    AdamState st(ps, {});
    adam_step(st, ps);
    EXPECT_EQ(ps.get("w").value, Tensor::matrix({{1, -2, 3}}));
    EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepWithUnitGradientMovesByLearningRate) {
    ParamStore ps;
    ps.add("w", Tensor::matrix({{0.5, -0.5}}));
    ps.get("w").grad.fill(1.0);
    AdamConfig cfg;
    AdamState st(ps, cfg);
    adam_step(st, ps);
    // m̂ = 1, v̂ = 1, so Δ = −lr/(1 + ε).
    const double delta = -cfg.lr / (1.0 + cfg.eps);
    EXPECT_NEAR(ps.get("w").value(0, 0), 0.5 + delta, 1e-15);
    EXPECT_NEAR(ps.get("w").value(0, 1), -0.5 + delta, 1e-15);
}

TEST(Adam, MomentsMatchShapesAndStepCountIncrements) {
    ParamStore ps;
    ps.add("a", Tensor({2, 3}));
    ps.add("b", Tensor({3, 2, 2}));
    AdamState st(ps, {});
    ASSERT_EQ(st.m.size(), 2u);
    EXPECT_EQ(st.m[1].shape(), ps.get("b").value.shape());
    EXPECT_EQ(st.v[0].shape(), ps.get("a").value.shape());
    for (std::uint64_t k = 1; k <= 3; ++k) {
        adam_step(st, ps);
        EXPECT_EQ(st.step, k);
    }
}

TEST(Adam, NaNGradientAbortsNamingTheParameter) {
    ParamStore ps;
    ps.add("good", Tensor::matrix({{1.0}}));
    ps.add("bad", Tensor::matrix({{1.0}}));
    ps.get("good").grad.fill(1.0);
    ps.get("bad").grad.fill(std::numeric_limits<double>::quiet_NaN());
    AdamState st(ps, {});
    try {
        adam_step(st, ps);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
    }
    EXPECT_EQ(ps.get("good").value.item(), 1.0);
    EXPECT_EQ(st.step, 0u);
}

TEST(Adam, IdenticalRunsAreBitIdentical) {
    auto run = [] {
        ParamStore ps;
        Rng rng(4);
        ps.add("w", random_tensor({3, 3}, rng));
        AdamState st(ps, {});
        for (int k = 0; k < 25; ++k) {
            ps.zero_grad();
            ad::Tape tape;
            tape.backward(ad::sum(ad::square(ad::matmul(tape.param(ps.get("w")), tape.param(ps.get("w"))))));
            adam_step(st, ps);
        }
        return ps.get("w").value;
    };
    EXPECT_EQ(run(), run());
}
