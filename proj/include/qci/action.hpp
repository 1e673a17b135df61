#pragma once

/* Action function S on the microlocally forbidden region, computed from
   separated turning-point integrals S(x) = int_root^x sqrt(g(s)) ds, where g is
   the momentum deficit (minus the squared momentum) on the forbidden side. */

#include "qci/classical.hpp"
#include "qci/error.hpp"
#include "qci/models.hpp"
#include "qci/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace qci::action {

using models::Base;

struct TurningPoint {
    double location = 0.0;
    int multiplicity = 1;   ///< odd
};

struct TurningPointData {
    std::vector<TurningPoint> roots;            ///< sorted by location
    std::function<double(double)> deficit;      ///< >= 0 on the forbidden side
};

struct ActionValue {
    double value = 0.0;
    double error = 0.0;        ///< quadrature error estimate
    bool nearPole = false;     ///< SOR: f(r) < 1e-3 at the end point
    bool truncated = false;    ///< SOR: |r| > 1 - 1e-3, value set to +inf
};

inline constexpr double kNegativeIntegrandTol = 1e-12;

namespace detail {

/// int_root^x sqrt(g) with s = root + sign t^2, which turns the t^{2k+1}
/// endpoint behaviour of a multiplicity 2k+1 root into a smooth integrand.
inline ActionValue integrate_from(const std::function<double(double)>& g, double root, double x, double relTol) {
    ActionValue out;
    if (x == root) return out;
    const double sign = x > root ? 1.0 : -1.0;
    const double T = std::sqrt(std::abs(x - root));
    auto integrand = [&](double t) {
        double v = g(root + sign * t * t);
        if (v < -kNegativeIntegrandTol) fail(ErrorCode::NegativeIntegrand, "deficit negative on the integration path");
        return 2.0 * t * std::sqrt(std::max(v, 0.0));
    };
    // coarse sign scan first so a wrong-side request fails before any adaptive work
    for (int i = 1; i <= 64; ++i) integrand(T * i / 64.0);
    auto r = quadrature::integrate(integrand, 0.0, T, relTol, 1e-300);
    out.value = r.value;
    out.error = r.error;
    return out;
}

} // namespace detail

/// S(x) from the turning point nearest to x.
inline ActionValue action_1d_detail(const TurningPointData& tp, double x, double relTol = 1e-10) {
    require(!tp.roots.empty(), "turning-point data needs at least one root");
    require(bool(tp.deficit), "turning-point data needs an integrand");
    for (std::size_t i = 0; i < tp.roots.size(); ++i) {
        require(tp.roots[i].multiplicity > 0 && tp.roots[i].multiplicity % 2 == 1, "root multiplicities must be odd");
        if (i > 0) require(tp.roots[i - 1].location <= tp.roots[i].location, "roots must be sorted");
    }
    const auto nearest = std::min_element(tp.roots.begin(), tp.roots.end(), [x](const auto& a, const auto& b) {
        return std::abs(a.location - x) < std::abs(b.location - x);
    });
    return detail::integrate_from(tp.deficit, nearest->location, x, relTol);
}

inline double action_1d(const TurningPointData& tp, double x) { return action_1d_detail(tp, x).value; }

/// Turning points x = +-sqrt(E) of p = xi^2 + x^2, deficit x^2 - E.
inline TurningPointData ho_turning_points(double E) {
    require(E > 0.0, "oscillator energy must be positive");
    const double r = std::sqrt(E);
    return {{{-r, 1}, {r, 1}}, [E](double s) { return s * s - E; }};
}

/// Closed form of int_1^x sqrt(s^2 - 1) ds for x >= 1 (scaled for general E).
inline double ho_action_exact(double E, double x) {
    const double r = std::sqrt(E);
    const double u = std::abs(x) / r;
    require(u >= 1.0, "point must lie in the forbidden region");
    return E * 0.5 * (u * std::sqrt(u * u - 1.0) - std::log(u + std::sqrt(u * u - 1.0)));
}

/// S(r) = int_{r_c}^r sqrt(e2^2 / f(s)^2 - e1) ds, r_c the caustic f(r_c) = |e2| / sqrt(e1)
/// on the side of r. Computed as sqrt(e1) times the e1 = 1 action at level |e2| / sqrt(e1).
inline ActionValue sor_action(const models::RevolutionProfile& profile, double e2, double r, double e1 = 1.0) {
    require(e1 > 0.0, "e1 must be positive");
    const double level = std::abs(e2) / std::sqrt(e1);
    require(level > 0.0 && level < profile.max_value(), "need 0 < |e2| < max f");
    require(r > -1.0 && r < 1.0, "r must lie in the open chart");
    const double gap = profile.f(r) - level;
    ActionValue out;
    if (std::abs(gap) <= 1e-12 * level) return out;   // on the caustic
    if (gap > 0.0) fail(ErrorCode::AllowedRegion, "f(r) > |e2|: the fiber over r is real");
    if (std::abs(r) > 1.0 - 1e-3) {
        out.value = std::numeric_limits<double>::infinity();
        out.truncated = true;
        out.nearPole = true;
        return out;
    }
    const double rc = profile.level_crossing(level, r > profile.critical_point() ? +1 : -1);
    auto g = [&profile, level](double s) {
        double f = profile.f(s);
        return level * level / (f * f) - 1.0;
    };
    out = detail::integrate_from(g, rc, r, 1e-10);
    out.value *= std::sqrt(e1);
    out.error *= std::sqrt(e1);
    out.nearPole = profile.f(r) < 1e-3;
    return out;
}

// ---------------------------------------------------------------- Liouville models

/// One separated axis: S_axis(x) = min over the two caustics bounding the
/// forbidden interval containing x of the one-sided integral of sqrt(-D).
/// Zero when the axis is allowed at x.
inline ActionValue axis_action(const classical::Discriminant& d, double x) {
    ActionValue out;
    if (d.value(x) >= -kNegativeIntegrandTol) return out;
    auto scan = classical::detail::scan_axis(d);
    if (scan.zeros.empty()) fail(ErrorCode::PreconditionViolation, "axis is forbidden everywhere: no caustic to start from");
    std::vector<double> roots;
    for (const auto& z : scan.zeros) roots.push_back(z.location);
    std::sort(roots.begin(), roots.end());
    const double period = d.hi - d.lo;
    double left, right;
    auto up = std::upper_bound(roots.begin(), roots.end(), x);
    if (d.periodic) {
        left = up == roots.begin() ? roots.back() - period : *(up - 1);
        right = up == roots.end() ? roots.front() + period : *up;
    } else {
        require(up != roots.begin() && up != roots.end(), "forbidden point must lie between two turning points");
        left = *(up - 1);
        right = *up;
    }
    auto g = [&d](double s) { return -d.value(s); };
    auto a = detail::integrate_from(g, left, x, 1e-10);
    auto b = detail::integrate_from(g, right, x, 1e-10);
    return a.value <= b.value ? a : b;
}

/// S(x) = S_a(x1) + S_b(x2) over the separated variables in their forbidden ranges
/// (zero on a caustic curve).
inline ActionValue liouville_action(const models::QciModel& model, const classical::EnergyPair& E, const Base& x) {
    require(models::is_liouville(model), "Liouville action needs a Liouville model");
    auto ds = classical::discriminants(model, E);
    const bool f0 = ds[0].value(x[0]) <= kNegativeIntegrandTol, f1 = ds[1].value(x[1]) <= kNegativeIntegrandTol;
    if (!f0 && !f1) fail(ErrorCode::AllowedRegion, "both separated fibers are real at x");
    ActionValue out;
    for (int k = 0; k < 2; ++k) {
        auto s = axis_action(ds[k], x[k]);
        out.value += s.value;
        out.error += s.error;
    }
    return out;
}

inline ActionValue liouville_action(const models::LiouvilleData& data, const classical::EnergyPair& E, const Base& x) {
    return liouville_action(models::QciModel{models::LiouvilleTorus{data}}, E, x);
}

// ---------------------------------------------------------------- sampled fields and the fold exponent

struct ActionSample {
    Base x{};
    double S = 0.0;
    double distance = 0.0;   ///< to the caustic along the sampled axis
    double error = 0.0;
};

struct ActionField {
    std::vector<ActionSample> samples;
    int axis = 0;
    double causticRef = 0.0;
};

/// Samples at caustic + side * d for geometric distances d in [dMin, dMax].
template <class F>
ActionField sample_field(F&& S, double caustic, int side, double dMin, double dMax, int perDecade, int axis = 0,
                         Base other = {0.0, 0.0}) {
    require(dMin > 0.0 && dMax > dMin, "need 0 < dMin < dMax");
    require(perDecade >= 1, "need at least one sample per decade");
    ActionField field;
    field.axis = axis;
    field.causticRef = caustic;
    const int n = int(std::ceil(std::log10(dMax / dMin) * perDecade)) + 1;
    for (int i = 0; i < n; ++i) {
        double d = dMin * std::pow(dMax / dMin, double(i) / (n - 1));
        ActionSample s;
        s.x = other;
        s.x[axis] = caustic + side * d;
        ActionValue v = S(s.x[axis]);
        s.S = v.value;
        s.error = v.error;
        s.distance = d;
        field.samples.push_back(s);
    }
    return field;
}

struct FoldFit {
    std::vector<std::array<double, 2>> windows;   ///< sorted by upper end
    std::vector<double> slopes;                   ///< per window
    double exponent = 0.0;                        ///< slope on the smallest window
    double extrapolated = 0.0;                    ///< linear-in-distance extrapolation to d -> 0
};

/// Least-squares slope of log S against log distance on each window.
inline FoldFit fold_exponent_fit(const ActionField& field, double causticLocus, std::vector<std::array<double, 2>> windows) {
    require(!windows.empty(), "need at least one window");
    std::sort(windows.begin(), windows.end(), [](const auto& a, const auto& b) { return a[1] < b[1]; });
    FoldFit fit;
    fit.windows = windows;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const double lo = windows[w][0], hi = windows[w][1];
        require(lo > 0.0 && hi > lo, "windows need 0 < lo < hi");
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (const auto& s : field.samples) {
            double d = std::abs(s.x[field.axis] - causticLocus);
            if (d < lo * (1 - 1e-12) || d > hi * (1 + 1e-12) || !(s.S > 0.0)) continue;
            double lx = std::log(d), ly = std::log(s.S);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++n;
        }
        const double decades = std::log10(hi / lo);
        if (w == 0 && n < 8.0 * decades) fail(ErrorCode::InsufficientSamples, "fewer than 8 samples per decade");
        if (n < 2) fail(ErrorCode::InsufficientSamples, "window holds fewer than two samples");
        fit.slopes.push_back((n * sxy - sx * sy) / (n * sxx - sx * sx));
    }
    fit.exponent = fit.slopes[0];
    fit.extrapolated = fit.exponent;
    if (fit.slopes.size() > 1) {
        const double w0 = windows[0][1], w1 = windows[1][1];
        fit.extrapolated = fit.slopes[0] - (fit.slopes[1] - fit.slopes[0]) * w0 / (w1 - w0);
    }
    return fit;
}

} // namespace qci::action
