#pragma once

// Compressed sparse row matrices and a dominant-eigenvalue solver.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mea {

class sparse_matrix {
public:
    sparse_matrix() = default;
    /// Takes ownership of CSR arrays; row_ptr has n + 1 entries.
    sparse_matrix(int n, std::vector<std::size_t> row_ptr, std::vector<int> cols, std::vector<double> values);

    int size() const noexcept { return n_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }
    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const int> cols() const noexcept { return cols_; }
    std::span<const double> values() const noexcept { return values_; }

    /// y = A x.
    void multiply(std::span<const double> x, std::span<double> y) const;
    void multiply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;

    void scale(double factor);
    Eigen::MatrixXd dense() const;

    bool operator==(const sparse_matrix&) const = default;

private:
    int n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<int> cols_;
    std::vector<double> values_;
};

struct krylov_options {
    int subspace = 40;
    int keep = 20;
    double tolerance = 1e-10;
    int max_restarts = 2000;
};

struct eigen_estimate {
    std::complex<double> value;
    /// ||A y - value y|| for the unit Ritz vector y.
    double residual = 0.0;
    int matvecs = 0;
    int restarts = 0;
};

/// Eigenvalue of largest magnitude by Krylov-Schur iteration in complex
/// arithmetic. The start vector is drawn from `seed`. Throws numeric_error
/// when the restart budget runs out.
eigen_estimate dominant_eigenvalue(const sparse_matrix& a, std::uint64_t seed, const krylov_options& options = {});

}  // namespace mea
