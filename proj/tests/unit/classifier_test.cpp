#include "mea/classifier.hpp"
#include "mea/errors.hpp"
#include "mea/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

using namespace mea;

namespace {

dataset separable(int classes, int per_class, int dim, std::uint64_t seed)
{
    // Class k lives on its own block of coordinates.
    rng gen(seed);
    dataset d;
    const int block = dim / classes;
    for (int k = 0; k < classes; ++k)
        for (int i = 0; i < per_class; ++i) {
            labeled_sample s{k, i, std::vector<double>(static_cast<std::size_t>(dim), 0.0)};
            for (int j = 0; j < block; ++j) s.x[static_cast<std::size_t>(k * block + j)] = gen.uniform(0.5, 1.5);
            d.push_back(s);
        }
    return d;
}

// Plain-loop SGD following explicit per-epoch visit orders.
perceptron reference_sgd(const dataset& d, const std::vector<std::vector<std::size_t>>& orders, int classes, double lr)
{
    const auto dim = d.front().x.size();
    std::vector<std::vector<double>> w(static_cast<std::size_t>(classes), std::vector<double>(dim, 0.0));
    std::vector<double> b(static_cast<std::size_t>(classes), 0.0);
    for (const auto& order : orders)
        for (auto idx : order) {
            const auto& s = d[idx];
            std::vector<double> z(static_cast<std::size_t>(classes));
            for (std::size_t k = 0; k < z.size(); ++k) {
                z[k] = b[k];
                for (std::size_t j = 0; j < dim; ++j) z[k] += w[k][j] * s.x[j];
            }
            const double m = *std::max_element(z.begin(), z.end());
            double sum = 0;
            for (double v : z) sum += std::exp(v - m);
            for (std::size_t k = 0; k < z.size(); ++k) {
                const double g = std::exp(z[k] - m) / sum - (static_cast<int>(k) == s.label ? 1.0 : 0.0);
                for (std::size_t j = 0; j < dim; ++j) w[k][j] -= lr * g * s.x[j];
                b[k] -= lr * g;
            }
        }
    perceptron out(classes, static_cast<int>(dim));
    for (int k = 0; k < classes; ++k) {
        for (std::size_t j = 0; j < dim; ++j) out.weights(k, static_cast<Eigen::Index>(j)) = w[static_cast<std::size_t>(k)][j];
        out.bias(k) = b[static_cast<std::size_t>(k)];
    }
    return out;
}

}  // namespace

TEST(Split, SizesAndDisjointness)
{
    std::vector<dataset> per_class;
    for (int k = 0; k < 4; ++k) {
        dataset d;
        for (int i = 0; i < 25; ++i) d.push_back({k, i, {static_cast<double>(k * 100 + i)}});
        per_class.push_back(d);
    }
    const split_spec spec{20, 5, 42};
    const auto s = split(per_class, spec);
    EXPECT_EQ(s.train.size(), 80u);
    EXPECT_EQ(s.test.size(), 20u);
    std::set<double> tr, te;
    for (const auto& x : s.train) tr.insert(x.x[0]);
    for (const auto& x : s.test) te.insert(x.x[0]);
    for (double v : te) EXPECT_FALSE(tr.count(v));
    EXPECT_EQ(tr.size() + te.size(), 100u);
    for (int k = 0; k < 4; ++k)
        EXPECT_EQ(std::count_if(s.test.begin(), s.test.end(), [&](const auto& x) { return x.label == k; }), 5);
    const auto again = split(per_class, spec);
    EXPECT_EQ(again.train, s.train);
    EXPECT_EQ(again.test, s.test);
    const auto other = split(per_class, {20, 5, 43});
    EXPECT_NE(other.test, s.test);
}

TEST(Split, CardinalityMismatch)
{
    std::vector<dataset> per_class(2, dataset(24, labeled_sample{0, 0, {1.0}}));
    EXPECT_THROW(split(per_class, {20, 5, 0}), validation_error);
}

TEST(Split, EmptyTestSideThenEvaluateFails)
{
    std::vector<dataset> per_class{dataset(3, labeled_sample{0, 0, {1.0}}), dataset(3, labeled_sample{1, 0, {-1.0}})};
    const auto s = split(per_class, {3, 0, 0});
    EXPECT_TRUE(s.test.empty());
    EXPECT_THROW(evaluate(perceptron(2, 1), s.test), validation_error);
}

TEST(Forward, UniformForZeroModel)
{
    const perceptron m(4, 3);
    const std::vector<double> x{1, 2, 3};
    const auto p = forward(m, x);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(p(k), 0.25);
}

TEST(Forward, TwoClassHandComputed)
{
    perceptron m(2, 1);
    m.bias(0) = 1.0;
    const std::vector<double> x{0.0};
    const auto p = forward(m, x);
    EXPECT_NEAR(p(0), std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
    EXPECT_NEAR(p(1), 1.0 / (std::exp(1.0) + 1.0), 1e-15);
}

TEST(Forward, ShiftInvarianceAndNormalization)
{
    rng gen(2);
    perceptron m(5, 6);
    for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = gen.uniform(-3, 3);
    for (int k = 0; k < 5; ++k) m.bias(k) = gen.uniform(-3, 3);
    std::vector<double> x(6);
    for (auto& v : x) v = gen.uniform(-2, 2);
    const auto p = forward(m, x);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GT(p.minCoeff(), 0.0);
    auto shifted = m;
    shifted.bias.array() += 123.0;
    EXPECT_LT((forward(shifted, x) - p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(predict(shifted, x), predict(m, x));
}

TEST(Forward, Rejections)
{
    const perceptron m(2, 2);
    EXPECT_THROW(forward(m, std::vector<double>{1.0}), validation_error);
    EXPECT_THROW(forward(m, std::vector<double>{1.0, NAN}), validation_error);
}

TEST(Gradient, MatchesCentralDifferences)
{
    rng gen(99);
    for (int c = 0; c < 100; ++c) {
        const int k = 2 + static_cast<int>(gen.below(4)), dim = 1 + static_cast<int>(gen.below(8));
        perceptron m(k, dim);
        for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = gen.uniform(-1, 1);
        for (int j = 0; j < k; ++j) m.bias(j) = gen.uniform(-1, 1);
        std::vector<double> x(static_cast<std::size_t>(dim));
        for (auto& v : x) v = gen.uniform(-2, 2);
        const int label = static_cast<int>(gen.below(static_cast<std::uint64_t>(k)));
        const auto g = cross_entropy_gradient(m, x, label);
        const auto num = oracle::numeric_gradient(m, x, label, 1e-5);
        double diff = 0, norm = 0;
        std::size_t i = 0;
        for (int r = 0; r < k; ++r)
            for (int j = 0; j < dim; ++j, ++i) {
                diff += std::pow(g.d_weights(r, j) - num[i], 2);
                norm += std::pow(num[i], 2);
            }
        for (int r = 0; r < k; ++r, ++i) {
            diff += std::pow(g.d_bias(r) - num[i], 2);
            norm += std::pow(num[i], 2);
        }
        EXPECT_LE(std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12), 1e-4);
    }
}

TEST(Train, SeparableTwoClassReachesFullAccuracy)
{
    const auto d = separable(2, 20, 40, 1);
    std::vector<double> losses;
    const auto m = train(d, {20, 0.01, 1, 3}, 2, &losses);
    EXPECT_EQ(evaluate(m, d).accuracy, 1.0);
    ASSERT_EQ(losses.size(), 21u);
    for (double l : losses) EXPECT_TRUE(std::isfinite(l));
    EXPECT_LT(losses.back(), losses.front());
}

TEST(Train, ZeroLearningRateKeepsInitialization)
{
    const auto d = separable(3, 5, 9, 2);
    const auto m = train(d, {5, 0.0, 1, 3}, 3);
    EXPECT_EQ(m.weights.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(m.bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Train, DeterministicModelBytes)
{
    const auto d = separable(3, 10, 12, 4);
    EXPECT_EQ(model_to_text(train(d, {20, 0.05, 4, 8}, 3)), model_to_text(train(d, {20, 0.05, 4, 8}, 3)));
}

TEST(Train, ConsumesDataOnlyThroughSeededOrder)
{
    const auto d = separable(3, 6, 6, 5);
    const train_spec spec{7, 0.1, 1, 11};
    // Pre-permute the set, then compensate by composing the permutation into the visit order.
    std::vector<std::size_t> pi(d.size());
    std::iota(pi.begin(), pi.end(), std::size_t{0});
    rng gen(6);
    gen.shuffle(pi);
    dataset permuted;
    for (auto i : pi) permuted.push_back(d[i]);
    auto orders = epoch_orders(d.size(), spec);
    for (auto& o : orders)
        for (auto& i : o) i = pi[i];
    const auto got = train(permuted, spec, 3);
    const auto want = reference_sgd(d, orders, 3, spec.learning_rate);
    EXPECT_LT((got.weights - want.weights).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((got.bias - want.bias).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Train, Rejections)
{
    const auto d = separable(2, 3, 4, 1);
    EXPECT_THROW(train({}, {}, 2), validation_error);
    EXPECT_THROW(train(d, {0, 0.01, 1, 0}, 2), validation_error);
    EXPECT_THROW(train(d, {}, 1), validation_error);
    EXPECT_THROW(train(d, {20, 1e308, 1, 0}, 2), numeric_error);
}

TEST(Predict, TieBreakAndArgmax)
{
    EXPECT_EQ(predict(perceptron(3, 2), std::vector<double>{1, 1}), 0);
    perceptron m(3, 1);
    m.bias << std::log(0.1), std::log(0.7), std::log(0.2);
    EXPECT_EQ(predict(m, std::vector<double>{0.0}), 1);
}

TEST(Evaluate, AlwaysClassZero)
{
    perceptron m(4, 1);
    m.bias(0) = 1.0;
    dataset test;
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 5; ++i) test.push_back({k, i, {0.0}});
    const auto ev = evaluate(m, test);
    EXPECT_EQ(ev.accuracy, 0.25);
    EXPECT_EQ(ev.per_class_recall, (std::vector<double>{1, 0, 0, 0}));
}

TEST(Evaluate, HandBuiltConfusion)
{
    // x encodes the predicted class directly through one-hot weights.
    perceptron m(3, 3);
    m.weights.setIdentity();
    dataset test;
    const int predicted[3][5] = {{0, 0, 0, 1, 2}, {1, 1, 1, 1, 1}, {2, 0, 0, 1, 2}};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 5; ++i) {
            labeled_sample s{k, i, {0, 0, 0}};
            s.x[static_cast<std::size_t>(predicted[k][i])] = 1.0;
            test.push_back(s);
        }
    const auto ev = evaluate(m, test);
    EXPECT_DOUBLE_EQ(ev.per_class_recall[0], 0.6);
    EXPECT_DOUBLE_EQ(ev.per_class_recall[1], 1.0);
    EXPECT_DOUBLE_EQ(ev.per_class_recall[2], 0.4);
    EXPECT_DOUBLE_EQ(ev.accuracy, 10.0 / 15.0);
    EXPECT_EQ(evaluation_to_csv(ev), "class,n,accuracy\n0,5,0.6\n1,5,1\n2,5,0.4\noverall,15,0.6666666666666666\n");
    const auto perfect = evaluate(m, dataset{{0, 0, {1, 0, 0}}, {2, 0, {0, 0, 1}}});
    EXPECT_EQ(perfect.accuracy, 1.0);
}

TEST(ModelFile, RoundTrip)
{
    const auto m = train(separable(3, 4, 6, 7), {3, 0.1, 2, 1}, 3);
    const auto back = parse_model(model_to_text(m));
    EXPECT_EQ(back.weights, m.weights);
    EXPECT_EQ(back.bias, m.bias);
    const auto path = std::filesystem::temp_directory_path() / "mea_model_test.txt";
    write_model(path, m);
    EXPECT_EQ(read_model(path).weights, m.weights);
    std::filesystem::remove(path);
    EXPECT_THROW(parse_model("PERCEPTRON 2 2\n1 2 3\n"), validation_error);
    EXPECT_THROW(parse_model("PERCEPTRON 2 2\n1 2 3\n1 2\n"), validation_error);
}
