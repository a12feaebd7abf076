/// @file banded.hpp
/// @brief Band-storage matrix and an LU direct solver with partial pivoting.
///
/// Storage follows the usual band layout: entry (i, j) lives at
/// store(kl + ku + i - j, j). The top kl rows are fill space so row swaps
/// during elimination stay inside the band.

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace fiml {

class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(Eigen::Index n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku),
          store_(Eigen::MatrixXd::Zero(2 * kl + ku + 1, n)) {}

    Eigen::Index rows() const { return n_; }
    int lower_bandwidth() const { return kl_; }
    int upper_bandwidth() const { return ku_; }

    bool in_band(Eigen::Index i, Eigen::Index j) const {
        return i >= 0 && j >= 0 && i < n_ && j < n_ && i - j <= kl_ && j - i <= ku_;
    }

    /// In-band access; callers must respect the band.
    double& at(Eigen::Index i, Eigen::Index j) { return store_(kl_ + ku_ + i - j, j); }
    double at(Eigen::Index i, Eigen::Index j) const { return store_(kl_ + ku_ + i - j, j); }

    /// Accumulate into (i, j), ignoring out-of-range columns (boundary stencils).
    void add(Eigen::Index i, Eigen::Index j, double v) {
        if (in_band(i, j)) at(i, j) += v;
    }

    void set_zero() { store_.setZero(); }

    /// y = A x (used by tests and the adjoint residual check).
    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

    /// Infinity norm: max absolute row sum over the band.
    double inf_norm() const;

    /// Transposed copy (bandwidths swap).
    BandedMatrix transposed() const;

    Eigen::MatrixXd dense() const;

private:
    friend class BandedLU;
    Eigen::Index n_ = 0;
    int kl_ = 0, ku_ = 0;
    Eigen::MatrixXd store_;
};

/// LU factorization of a banded matrix with row partial pivoting.
/// Throws NumericalError on a (near-)singular pivot, reporting the pivot-ratio
/// condition estimate.
class BandedLU {
public:
    explicit BandedLU(BandedMatrix a);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    /// max |pivot| / min |pivot|: crude conditioning indicator.
    double pivot_ratio() const { return pivot_ratio_; }

private:
    BandedMatrix a_;
    std::vector<Eigen::Index> perm_;
    double pivot_ratio_ = 0.0;
};

} // namespace fiml
