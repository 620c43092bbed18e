#include "mea/spectral.hpp"

#include "mea/errors.hpp"
#include "mea/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace mea {

sparse_matrix::sparse_matrix(int n, std::vector<std::size_t> row_ptr, std::vector<int> cols, std::vector<double> values)
    : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), values_(std::move(values))
{
    if (n < 0 || row_ptr_.size() != static_cast<std::size_t>(n) + 1 || row_ptr_.front() != 0 ||
        row_ptr_.back() != values_.size() || cols_.size() != values_.size())
        throw validation_error("sparse_matrix: inconsistent CSR arrays");
    for (int c : cols_)
        if (c < 0 || c >= n) throw validation_error("sparse_matrix: column index out of range");
}

void sparse_matrix::multiply(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != static_cast<std::size_t>(n_) || y.size() != static_cast<std::size_t>(n_))
        throw validation_error("sparse_matrix: vector size mismatch");
    for (int r = 0; r < n_; ++r) {
        double s = 0.0;
        for (auto k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
            s += values_[k] * x[static_cast<std::size_t>(cols_[k])];
        y[static_cast<std::size_t>(r)] = s;
    }
}

void sparse_matrix::multiply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const
{
    y.resize(n_);
    for (int r = 0; r < n_; ++r) {
        std::complex<double> s = 0.0;
        for (auto k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
            s += values_[k] * x(cols_[k]);
        y(r) = s;
    }
}

void sparse_matrix::scale(double factor)
{
    for (auto& v : values_) v *= factor;
}

Eigen::MatrixXd sparse_matrix::dense() const
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
    for (int r = 0; r < n_; ++r)
        for (auto k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
            d(r, cols_[k]) += values_[k];
    return d;
}

namespace {

using cplx = std::complex<double>;

// Plane rotation with real cosine zeroing g in (f, g).
void make_rotation(cplx f, cplx g, double& c, cplx& s)
{
    if (g == 0.0) {
        c = 1.0;
        s = 0.0;
        return;
    }
    if (f == 0.0) {
        c = 0.0;
        s = std::conj(g) / std::abs(g);
        return;
    }
    const double af = std::abs(f);
    const double d = std::hypot(af, std::abs(g));
    c = af / d;
    s = (f / af) * std::conj(g) / d;
}

// x' = c x + s y, y' = c y - conj(s) x.
template <class X, class Y>
void rotate(X&& x, Y&& y, double c, cplx s)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const cplx t = c * x(i) + s * y(i);
        y(i) = c * y(i) - std::conj(s) * x(i);
        x(i) = t;
    }
}

// Swaps diagonal entries k and k+1 of the upper triangular t, updating q.
void swap_schur(Eigen::MatrixXcd& t, Eigen::MatrixXcd& q, Eigen::Index k)
{
    const auto m = t.rows();
    const cplx t11 = t(k, k), t22 = t(k + 1, k + 1);
    double c;
    cplx s;
    make_rotation(t(k, k + 1), t22 - t11, c, s);
    if (k + 2 < m) rotate(t.row(k).tail(m - k - 2), t.row(k + 1).tail(m - k - 2), c, s);
    rotate(t.col(k).head(k), t.col(k + 1).head(k), c, std::conj(s));
    t(k, k) = t22;
    t(k + 1, k + 1) = t11;
    rotate(q.col(k), q.col(k + 1), c, std::conj(s));
}

// Moves the `count` largest-magnitude eigenvalues to the leading positions.
void sort_schur(Eigen::MatrixXcd& t, Eigen::MatrixXcd& q, Eigen::Index count)
{
    const auto m = t.rows();
    for (Eigen::Index i = 0; i < std::min(count, m); ++i) {
        Eigen::Index best = i;
        for (Eigen::Index j = i + 1; j < m; ++j)
            if (std::abs(t(j, j)) > std::abs(t(best, best))) best = j;
        for (Eigen::Index j = best; j > i; --j) swap_schur(t, q, j - 1);
    }
}

}  // namespace

eigen_estimate dominant_eigenvalue(const sparse_matrix& a, std::uint64_t seed, const krylov_options& opt)
{
    const int n = a.size();
    if (n < 1) throw validation_error("dominant_eigenvalue: empty matrix");
    if (opt.keep < 1 || opt.subspace <= opt.keep) throw validation_error("dominant_eigenvalue: need 1 <= keep < subspace");

    const Eigen::Index m = std::min<Eigen::Index>(opt.subspace, n);
    const Eigen::Index keep = std::min<Eigen::Index>(opt.keep, m - 1);

    Eigen::MatrixXcd v(n, m + 1);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m);
    {
        rng gen(seed);
        Eigen::VectorXcd v0(n);
        for (int i = 0; i < n; ++i) v0(i) = gen.normal();
        v.col(0) = v0 / v0.norm();
    }

    eigen_estimate out;
    Eigen::VectorXcd w(n);
    Eigen::Index k = 0;
    double anorm = 0.0;
    for (double x : a.values()) anorm = std::max(anorm, std::abs(x));
    anorm = std::max(anorm, 1e-300);

    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
        // Extend the Krylov-Schur factorisation to m columns.
        Eigen::Index built = m;
        for (Eigen::Index j = k; j < m; ++j) {
            a.multiply(v.col(j), w);
            ++out.matvecs;
            Eigen::VectorXcd coef = v.leftCols(j + 1).adjoint() * w;
            w -= v.leftCols(j + 1) * coef;
            const Eigen::VectorXcd again = v.leftCols(j + 1).adjoint() * w;
            w -= v.leftCols(j + 1) * again;
            coef += again;
            h.col(j).head(j + 1) = coef;
            const double beta = w.norm();
            h(j + 1, j) = beta;
            if (beta <= 1e-13 * anorm * std::sqrt(static_cast<double>(n))) {
                // Invariant subspace: the Ritz values are exact.
                built = j + 1;
                break;
            }
            v.col(j + 1) = w / beta;
        }

        Eigen::ComplexSchur<Eigen::MatrixXcd> schur(h.topLeftCorner(built, built));
        if (schur.info() != Eigen::Success) throw numeric_error("dominant_eigenvalue: Schur decomposition failed");
        Eigen::MatrixXcd t = schur.matrixT();
        Eigen::MatrixXcd q = schur.matrixU();
        sort_schur(t, q, built == m ? keep : 1);

        out.value = t(0, 0);
        out.restarts = restart;
        if (built < m) {
            out.residual = 0.0;
            return out;
        }
        const cplx beta = h(m, m - 1);
        out.residual = std::abs(beta * q(m - 1, 0));
        if (out.residual <= opt.tolerance * std::max(std::abs(out.value), 1e-300)) return out;

        // Thick restart on the leading `keep` Schur vectors.
        Eigen::MatrixXcd kept = v.leftCols(m) * q.leftCols(keep);
        const Eigen::VectorXcd next = v.col(m);
        v.leftCols(keep) = kept;
        v.col(keep) = next;
        h.setZero();
        h.topLeftCorner(keep, keep) = t.topLeftCorner(keep, keep);
        h.row(keep).head(keep) = beta * q.row(m - 1).head(keep);
        k = keep;
    }
    throw numeric_error("dominant_eigenvalue: no convergence within " + std::to_string(opt.max_restarts) +
                        " restarts (residual " + std::to_string(out.residual) + ")");
}

}  // namespace mea
