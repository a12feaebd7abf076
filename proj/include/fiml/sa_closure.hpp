/// @file sa_closure.hpp
/// @brief One-equation eddy-viscosity closure: algebraic functions, source
///        terms, and their analytic derivatives.
///
/// Trip terms are dropped throughout (f_t2 == 0). Every nonlinear function has
/// its chi- or r-derivative next to it so the solver Jacobian and the adjoint
/// share one tested implementation.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace fiml {

/// Closure constants. cw1 is always derived from the others so an override of
/// cb1/cb2/sigma/kappa can never leave a stale value behind.
struct SAConstants {
    double cb1 = 0.1355;
    double sigma = 2.0 / 3.0;
    double cb2 = 0.622;
    double kappa = 0.41;
    double cw2 = 0.3;  // widely used value; some sources print 0.622 here
    double cw3 = 2.0;
    double cv1 = 7.1;
    double r_clip = 10.0;        // cap on the wall-destruction radius r
    double omega_floor = 0.3;    // modified vorticity floored at omega_floor * Omega

    double cw1() const { return cb1 / (kappa * kappa) + (1.0 + cb2) / sigma; }
};

// ============================================================================
// Algebraic wall functions
// ============================================================================

/// fv1 = chi^3 / (chi^3 + cv1^3)
template <class T>
T fv1(T chi, const SAConstants& c) {
    const T chi3 = chi * chi * chi;
    const T cv13 = T(c.cv1) * T(c.cv1) * T(c.cv1);
    return chi3 / (chi3 + cv13);
}

template <class T>
T d_fv1_dchi(T chi, const SAConstants& c) {
    const T chi3 = chi * chi * chi;
    const T cv13 = T(c.cv1) * T(c.cv1) * T(c.cv1);
    const T denom = chi3 + cv13;
    return T(3) * chi * chi * cv13 / (denom * denom);
}

/// fv2 = 1 - chi / (1 + chi * fv1)
template <class T>
T fv2(T chi, const SAConstants& c) {
    return T(1) - chi / (T(1) + chi * fv1(chi, c));
}

template <class T>
T d_fv2_dchi(T chi, const SAConstants& c) {
    const T q = T(1) + chi * fv1(chi, c);
    return -(T(1) - chi * chi * d_fv1_dchi(chi, c)) / (q * q);
}

/// nu_t = nu_tilde * fv1(nu_tilde / nu)
template <class T>
T eddy_viscosity(T nu_tilde, T nu, const SAConstants& c) {
    return nu_tilde * fv1(nu_tilde / nu, c);
}

/// d(nu_t)/d(nu_tilde) = fv1 + chi * fv1'
template <class T>
T d_eddy_viscosity_d_nu_tilde(T nu_tilde, T nu, const SAConstants& c) {
    const T chi = nu_tilde / nu;
    return fv1(chi, c) + chi * d_fv1_dchi(chi, c);
}

// ============================================================================
// Modified vorticity, wall radius, destruction shaping
// ============================================================================

/// Omega_tilde = Omega + nu_tilde * fv2 / (kappa^2 d^2), floored at
/// omega_floor * Omega to keep the production argument from changing sign in
/// the buffer region. Partials follow the active branch.
template <class T>
struct OmegaTildeTerm {
    T value;
    T d_omega;
    T d_nu_tilde;
    bool floored;
};

template <class T>
OmegaTildeTerm<T> omega_tilde(T omega, T nu_tilde, T nu, T d, const SAConstants& c) {
    const T kd2 = T(c.kappa) * T(c.kappa) * d * d;
    const T chi = nu_tilde / nu;
    const T raw = omega + nu_tilde * fv2(chi, c) / kd2;
    const T floor = T(c.omega_floor) * omega;
    if (raw >= floor) {
        const T d_nu = (fv2(chi, c) + chi * d_fv2_dchi(chi, c)) / kd2;
        return {raw, T(1), d_nu, false};
    }
    return {floor, T(c.omega_floor), T(0), true};
}

/// r = nu_tilde / (Omega_tilde kappa^2 d^2), clipped to [0, r_clip]. When the
/// denominator is below the machine floor the radius is pinned at r_clip.
/// Derivatives are zero on any clipped branch.
template <class T>
struct WallRadius {
    T value;
    T d_nu_tilde;       // partial at fixed Omega_tilde
    T d_omega_tilde;
    bool clipped;
};

template <class T>
WallRadius<T> wall_radius(T nu_tilde, T omega_tilde_value, T d, const SAConstants& c) {
    const T kd2 = T(c.kappa) * T(c.kappa) * d * d;
    const T denom = omega_tilde_value * kd2;
    if (!(denom > std::numeric_limits<double>::min()))
        return {T(c.r_clip), T(0), T(0), true};
    const T raw = nu_tilde / denom;
    if (raw >= T(c.r_clip)) return {T(c.r_clip), T(0), T(0), true};
    if (raw <= T(0)) return {T(0), T(0), T(0), true};
    return {raw, T(1) / denom, -raw / omega_tilde_value, false};
}

/// fw = g * ((1 + cw3^6) / (g^6 + cw3^6))^(1/6) with g = r + cw2 (r^6 - r).
template <class T>
T fw(T r, const SAConstants& c) {
    using std::pow;
    const T g = r + T(c.cw2) * (pow(r, T(6)) - r);
    const T cw36 = pow(T(c.cw3), T(6));
    return g * pow((T(1) + cw36) / (pow(g, T(6)) + cw36), T(1) / T(6));
}

/// dfw/dr = (dfw/dg) * dg/dr; dfw/dg = ((1+cw3^6)/(g^6+cw3^6))^(1/6) * cw3^6/(g^6+cw3^6)
template <class T>
T d_fw_dr(T r, const SAConstants& c) {
    using std::pow;
    const T g = r + T(c.cw2) * (pow(r, T(6)) - r);
    const T cw36 = pow(T(c.cw3), T(6));
    const T g6 = pow(g, T(6));
    const T dfw_dg = pow((T(1) + cw36) / (g6 + cw36), T(1) / T(6)) * cw36 / (g6 + cw36);
    const T dg_dr = T(1) + T(c.cw2) * (T(6) * pow(r, T(5)) - T(1));
    return dfw_dg * dg_dr;
}

// ============================================================================
// Source terms
// ============================================================================

/// P = cb1 * Omega_tilde * nu_tilde. The spatial correction multiplies this at
/// the residual level, not here.
template <class T>
T production(T nu_tilde, T omega_tilde_value, const SAConstants& c) {
    return T(c.cb1) * omega_tilde_value * nu_tilde;
}

/// D = cw1 * fw * (nu_tilde / d)^2, d > 0.
template <class T>
T destruction(T nu_tilde, T d, T fw_value, const SAConstants& c) {
    const T q = nu_tilde / d;
    return T(c.cw1()) * fw_value * q * q;
}

/// Full source bundle at one node: P, D, and their partials with respect to
/// the local nu_tilde and Omega. Requires d > 0 (never call on a wall node).
template <class T>
struct SourceTerms {
    T production;
    T destruction;
    T dP_d_nu_tilde;
    T dP_d_omega;
    T dD_d_nu_tilde;
    T dD_d_omega;
    T omega_tilde;
    T r;
    T fw;
    T chi;
};

template <class T>
SourceTerms<T> sa_source_terms(T omega, T nu_tilde, T nu, T d, const SAConstants& c) {
    SourceTerms<T> s;
    s.chi = nu_tilde / nu;

    const auto ot = omega_tilde(omega, nu_tilde, nu, d, c);
    s.omega_tilde = ot.value;

    s.production = production(nu_tilde, ot.value, c);
    // dP = cb1 * (Omega_tilde + nu_tilde * dOmega_tilde/dnu_tilde)
    s.dP_d_nu_tilde = T(c.cb1) * (ot.value + nu_tilde * ot.d_nu_tilde);
    s.dP_d_omega = T(c.cb1) * nu_tilde * ot.d_omega;

    const auto wr = wall_radius(nu_tilde, ot.value, d, c);
    s.r = wr.value;
    s.fw = fw(wr.value, c);
    const T dfw = wr.clipped ? T(0) : d_fw_dr(wr.value, c);

    const T q = nu_tilde / d;
    const T cw1v = T(c.cw1());
    s.destruction = cw1v * s.fw * q * q;
    const T dr_d_nu_tilde = wr.d_nu_tilde + wr.d_omega_tilde * ot.d_nu_tilde;
    const T dr_d_omega = wr.d_omega_tilde * ot.d_omega;
    s.dD_d_nu_tilde =
        cw1v * (dfw * dr_d_nu_tilde * q * q + s.fw * T(2) * q / d);
    s.dD_d_omega = cw1v * dfw * dr_d_omega * q * q;
    return s;
}

} // namespace fiml
