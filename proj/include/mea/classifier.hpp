#pragma once

// Single-layer softmax perceptron trained with SGD on cross-entropy.

#include "mea/features.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mea {

using dataset = std::vector<labeled_sample>;

struct split_spec {
    int n_train = 20;
    int n_test = 5;
    std::uint64_t seed = 0;

    bool operator==(const split_spec&) const = default;
};

struct train_spec {
    int epochs = 20;
    double learning_rate = 0.01;
    int batch_size = 1;
    std::uint64_t seed = 0;

    bool operator==(const train_spec&) const = default;
};

struct perceptron {
    Eigen::MatrixXd weights;  // K x dim
    Eigen::VectorXd bias;     // K

    perceptron() = default;
    perceptron(int classes, int dim) : weights(Eigen::MatrixXd::Zero(classes, dim)), bias(Eigen::VectorXd::Zero(classes)) {}

    int classes() const noexcept { return static_cast<int>(weights.rows()); }
    int dim() const noexcept { return static_cast<int>(weights.cols()); }
};

struct split_result {
    dataset train;
    dataset test;
};

/// Per class, a Fisher-Yates permutation of 0..size-1 drawn in class order
/// from one generator seeded by spec.seed. Every class must hold exactly
/// n_train + n_test samples.
std::vector<std::vector<std::size_t>> split_permutations(std::span<const std::size_t> class_sizes, const split_spec& spec);

/// The first n_train entries of each class permutation go to training, the
/// rest to testing.
split_result split(std::span<const dataset> per_class, const split_spec& spec);

/// softmax(W x + b).
Eigen::VectorXd forward(const perceptron& model, std::span<const double> x);

struct loss_gradient {
    double loss;
    Eigen::MatrixXd d_weights;
    Eigen::VectorXd d_bias;
};

/// Cross-entropy of one sample and its gradient w.r.t. weights and bias.
loss_gradient cross_entropy_gradient(const perceptron& model, std::span<const double> x, int label);

double mean_loss(const perceptron& model, std::span<const labeled_sample> data);

/// Visiting order of every epoch: a fresh Fisher-Yates shuffle of 0..n-1 per
/// epoch, all drawn from one generator seeded by spec.seed.
std::vector<std::vector<std::size_t>> epoch_orders(std::size_t n, const train_spec& spec);

/// Zero-initialised mini-batch SGD (mean gradient per batch); returns the
/// final-epoch model. `loss_history`, when given, receives the mean training
/// loss before training and after each epoch.
perceptron train(std::span<const labeled_sample> data, const train_spec& spec, int classes,
                 std::vector<double>* loss_history = nullptr);

/// Argmax of forward, lowest index on ties.
int predict(const perceptron& model, std::span<const double> x);

struct evaluation {
    double accuracy = 0.0;
    std::vector<double> per_class_recall;
    std::vector<int> per_class_count;
};

evaluation evaluate(const perceptron& model, std::span<const labeled_sample> test);

// Model file: "PERCEPTRON <K> <dim>" then K lines of dim weights followed by
// the bias, all shortest round-trip decimals.
std::string model_to_text(const perceptron& model);
perceptron parse_model(std::string_view text);
void write_model(const std::filesystem::path& path, const perceptron& model);
perceptron read_model(const std::filesystem::path& path);

/// CSV "class,n,accuracy" per class plus an "overall" row.
std::string evaluation_to_csv(const evaluation& ev);

}  // namespace mea
