#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hmcurv/errors.hpp"

namespace hmcurv {

/// Warped-product ambient space d rho^2 + f(rho) e with sectional curvature K = -1 or +1.
///
/// The profile functions follow the usual conventions: s = sqrt(f), c = ds/drho, t = s/c.
/// For K = -1 they are sinh, cosh, tanh on [0, inf); for K = +1 sin, cos, tan on [0, pi/2).
class SpaceForm {
public:
    explicit SpaceForm(int K) : K_(K)
    {
        if (K != -1 && K != 1)
            throw Error(ErrorCode::DomainError, "space form curvature must be -1 or +1, got " + std::to_string(K));
    }

    static SpaceForm hyperbolic() { return SpaceForm(-1); }
    static SpaceForm elliptic() { return SpaceForm(1); }

    int K() const noexcept { return K_; }
    bool is_hyperbolic() const noexcept { return K_ < 0; }

    /// Upper bound a of admissible radii.
    double upper_radius() const noexcept
    {
        return is_hyperbolic() ? std::numeric_limits<double>::infinity() : std::numbers::pi / 2;
    }

    double s(double rho) const { return is_hyperbolic() ? std::sinh(rho) : std::sin(rho); }
    double c(double rho) const { return is_hyperbolic() ? std::cosh(rho) : std::cos(rho); }
    double t(double rho) const { return is_hyperbolic() ? std::tanh(rho) : std::tan(rho); }

    /// Inverse of t on (0, 1).
    double t_inverse(double x) const { return is_hyperbolic() ? std::atanh(x) : std::atan(x); }

    double f(double rho) const
    {
        const double sr = s(rho);
        return sr * sr;
    }

    /// df/drho = 2 s c.
    double df(double rho) const { return 2.0 * s(rho) * c(rho); }

    /// Principal curvature of the geodesic sphere of radius R, f'(R) / (2 f(R)) = c/s.
    double sphere_curvature(double R) const { return c(R) / s(R); }

    /// Conformal-ball coordinate v = t(z/2).
    double to_conformal(double z) const { return t(0.5 * z); }
    double from_conformal(double v) const { return 2.0 * t_inverse(v); }

    /// q = 2 / (1 + K v^2) = dz/dv.
    double q(double v) const { return 2.0 / (1.0 + K_ * v * v); }

    /// Weight w(rho) whose product with psi must be non-increasing:
    /// sinh^m rho for K = -1, cot^{-m} rho = tan^m rho for K = +1.
    double monotone_weight(double rho, int m) const
    {
        return std::pow(is_hyperbolic() ? std::sinh(rho) : std::tan(rho), m);
    }

    double monotone_weight_derivative(double rho, int m) const
    {
        if (is_hyperbolic())
            return m * std::pow(std::sinh(rho), m - 1) * std::cosh(rho);
        const double sec = 1.0 / std::cos(rho);
        return m * std::pow(std::tan(rho), m - 1) * sec * sec;
    }

    bool operator==(const SpaceForm&) const = default;

private:
    int K_;
};

} // namespace hmcurv
