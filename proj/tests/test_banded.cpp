/// Band-storage LU against Eigen's dense factorization.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "fiml/banded.hpp"
#include "fiml/errors.hpp"

using namespace fiml;

namespace {

BandedMatrix random_banded(int n, int kl, int ku, unsigned seed, double diag_boost) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    BandedMatrix a(n, kl, ku);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j)
            a.at(i, j) = dist(rng) + (i == j ? diag_boost : 0.0);
    return a;
}

} // namespace

TEST_CASE("multiply and dense agree") {
    const BandedMatrix a = random_banded(17, 3, 2, 11u, 0.0);
    Eigen::VectorXd x(17);
    for (int i = 0; i < 17; ++i) x[i] = std::sin(1.0 + i);
    const Eigen::VectorXd y1 = a.multiply(x);
    const Eigen::VectorXd y2 = a.dense() * x;
    CHECK((y1 - y2).norm() < 1e-13 * (1.0 + y2.norm()));
}

TEST_CASE("infinity norm matches the dense row-sum norm") {
    const BandedMatrix a = random_banded(17, 3, 2, 11u, 0.0);
    CHECK(a.inf_norm() == a.dense().cwiseAbs().rowwise().sum().maxCoeff());
}

TEST_CASE("transpose swaps bandwidths and matches the dense transpose") {
    const BandedMatrix a = random_banded(12, 3, 1, 5u, 0.0);
    const BandedMatrix t = a.transposed();
    CHECK(t.lower_bandwidth() == 1);
    CHECK(t.upper_bandwidth() == 3);
    CHECK((t.dense() - a.dense().transpose()).norm() == 0.0);
}

TEST_CASE("LU solve matches Eigen on a well-conditioned system") {
    const int n = 40;
    const BandedMatrix a = random_banded(n, 3, 3, 101u, 6.0);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = std::cos(0.3 * i);
    const Eigen::VectorXd x = BandedLU(a).solve(b);
    const Eigen::VectorXd x_ref = a.dense().fullPivLu().solve(b);
    CHECK((x - x_ref).norm() < 1e-11 * (1.0 + x_ref.norm()));
    CHECK((a.multiply(x) - b).norm() < 1e-11 * b.norm());
    CHECK(BandedLU(a).pivot_ratio() >= 1.0);
}

TEST_CASE("LU handles a system that needs row pivoting") {
    // zero diagonal but nonsingular: forces the pivot search to look below
    const int n = 30;
    BandedMatrix a(n, 2, 2);
    for (int i = 0; i < n; ++i) {
        if (i + 1 < n) a.at(i, i + 1) = 2.0 + 0.1 * i;
        if (i - 1 >= 0) a.at(i, i - 1) = 1.0;
        a.at(i, i) = (i % 3 == 0) ? 0.0 : 0.05;
    }
    Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    const Eigen::VectorXd x = BandedLU(a).solve(b);
    CHECK((a.multiply(x) - b).norm() < 1e-10 * (1.0 + b.norm()));
}

TEST_CASE("singular matrix is reported") {
    BandedMatrix a(8, 1, 1);
    for (int i = 0; i < 8; ++i) a.at(i, i) = 1.0;
    a.at(4, 4) = 0.0;
    a.at(4, 3) = 0.0;
    a.at(4, 5) = 0.0;
    a.at(3, 4) = 0.0;
    a.at(5, 4) = 0.0; // row/column 4 fully decoupled and zero
    CHECK_THROWS_AS(BandedLU{a}, NumericalError);
}

TEST_CASE("adjoint-style transpose solve round-trips") {
    const int n = 26;
    const BandedMatrix a = random_banded(n, 3, 3, 77u, 5.0);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = std::sin(2.0 + 0.7 * i);
    const Eigen::VectorXd psi = BandedLU(a.transposed()).solve(rhs);
    CHECK((a.dense().transpose() * psi - rhs).norm() < 1e-11 * rhs.norm());
}
