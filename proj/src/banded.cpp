#include "fiml/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fiml/errors.hpp"

namespace fiml {

Eigen::VectorXd BandedMatrix::multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
        const Eigen::Index i0 = std::max<Eigen::Index>(0, j - ku_);
        const Eigen::Index i1 = std::min<Eigen::Index>(n_ - 1, j + kl_);
        for (Eigen::Index i = i0; i <= i1; ++i) y[i] += at(i, j) * x[j];
    }
    return y;
}

BandedMatrix BandedMatrix::transposed() const {
    BandedMatrix t(n_, ku_, kl_);
    for (Eigen::Index j = 0; j < n_; ++j) {
        const Eigen::Index i0 = std::max<Eigen::Index>(0, j - ku_);
        const Eigen::Index i1 = std::min<Eigen::Index>(n_ - 1, j + kl_);
        for (Eigen::Index i = i0; i <= i1; ++i) t.at(j, i) = at(i, j);
    }
    return t;
}

double BandedMatrix::inf_norm() const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
        const Eigen::Index j0 = std::max<Eigen::Index>(0, i - kl_);
        const Eigen::Index j1 = std::min<Eigen::Index>(n_ - 1, i + ku_);
        double s = 0.0;
        for (Eigen::Index j = j0; j <= j1; ++j) s += std::abs(at(i, j));
        best = std::max(best, s);
    }
    return best;
}

Eigen::MatrixXd BandedMatrix::dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
        const Eigen::Index i0 = std::max<Eigen::Index>(0, j - ku_);
        const Eigen::Index i1 = std::min<Eigen::Index>(n_ - 1, j + kl_);
        for (Eigen::Index i = i0; i <= i1; ++i) m(i, j) = at(i, j);
    }
    return m;
}

BandedLU::BandedLU(BandedMatrix a) : a_(std::move(a)), perm_(a_.n_) {
    const Eigen::Index n = a_.n_;
    const int kl = a_.kl_, ku = a_.ku_;
    // effective upper bandwidth after pivoting
    const int kw = kl + ku;
    double max_piv = 0.0, min_piv = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index last_row = std::min<Eigen::Index>(n - 1, k + kl);
        Eigen::Index p = k;
        for (Eigen::Index i = k + 1; i <= last_row; ++i)
            if (std::abs(a_.at(i, k)) > std::abs(a_.at(p, k))) p = i;
        perm_[k] = p;
        const Eigen::Index last_col = std::min<Eigen::Index>(n - 1, k + kw);
        if (p != k)
            for (Eigen::Index j = k; j <= last_col; ++j)
                std::swap(a_.at(k, j), a_.at(p, j));
        const double piv = a_.at(k, k);
        if (!std::isfinite(piv) || std::abs(piv) < 1e-300) {
            std::ostringstream msg;
            msg << "banded LU: singular pivot at row " << k
                << " (pivot " << piv << ", pivot ratio so far "
                << (min_piv > 0 ? max_piv / min_piv : 0.0) << ")";
            throw NumericalError(msg.str());
        }
        max_piv = std::max(max_piv, std::abs(piv));
        min_piv = std::min(min_piv, std::abs(piv));
        for (Eigen::Index i = k + 1; i <= last_row; ++i) {
            const double m = a_.at(i, k) / piv;
            a_.at(i, k) = m; // store the multiplier in place
            if (m != 0.0)
                for (Eigen::Index j = k + 1; j <= last_col; ++j)
                    a_.at(i, j) -= m * a_.at(k, j);
        }
    }
    pivot_ratio_ = max_piv / min_piv;
}

Eigen::VectorXd BandedLU::solve(const Eigen::VectorXd& rhs) const {
    const Eigen::Index n = a_.n_;
    if (rhs.size() != n) throw NumericalError("banded LU: rhs size mismatch");
    const int kl = a_.kl_;
    const int kw = a_.kl_ + a_.ku_;
    Eigen::VectorXd x = rhs;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (perm_[k] != k) std::swap(x[k], x[perm_[k]]);
        const Eigen::Index last_row = std::min<Eigen::Index>(n - 1, k + kl);
        for (Eigen::Index i = k + 1; i <= last_row; ++i) x[i] -= a_.at(i, k) * x[k];
    }
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        const Eigen::Index last_col = std::min<Eigen::Index>(n - 1, k + kw);
        double s = x[k];
        for (Eigen::Index j = k + 1; j <= last_col; ++j) s -= a_.at(k, j) * x[j];
        x[k] = s / a_.at(k, k);
    }
    return x;
}

} // namespace fiml
