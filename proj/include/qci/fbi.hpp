#pragma once

/* Discrete FBI transform on the circle of length 2 pi:
     Tu(x, xi) = a int exp(i [(x - y) xi + i (mu/2) d(x,y)^2 <xi/mu>] / h) chi(d / R) u(y) dy
   with x - y the signed circle distance, d = |x - y| and <t> = sqrt(1 + t^2). */

#include "qci/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace qci::fbi {

inline constexpr double kCircumference = 2.0 * std::numbers::pi;

using cplx = std::complex<double>;

struct FbiGrid {
    std::vector<double> xPoints;    ///< base points in [0, 2 pi)
    std::vector<double> xiPoints;   ///< uniform covector grid on [-xiMax, xiMax]
    double mu = 1.0;
    double h = 0.0;

    /// nx base points on the circle and nxi covector points on [-xiMax, xiMax].
    static FbiGrid uniform(int nx, double xiMax, int nxi, double mu, double h) {
        require(nx >= 1 && nxi >= 2, "FBI grid needs nx >= 1 and nxi >= 2");
        require(xiMax > 0.0, "xiMax must be positive");
        FbiGrid g;
        g.mu = mu;
        g.h = h;
        for (int i = 0; i < nx; ++i) g.xPoints.push_back(kCircumference * i / nx);
        for (int j = 0; j < nxi; ++j) g.xiPoints.push_back(-xiMax + 2.0 * xiMax * j / (nxi - 1));
        return g;
    }

    double xi_max() const {
        double m = 0.0;
        for (double v : xiPoints) m = std::max(m, std::abs(v));
        return m;
    }
    double dx() const { return kCircumference / double(xPoints.size()); }
    double dxi() const { return xiPoints.size() > 1 ? (xiPoints.back() - xiPoints.front()) / double(xiPoints.size() - 1) : 0.0; }

    void validate() const {
        require(mu > 0.0, "mu must be positive");
        require(h > 0.0, "h must be positive");
        require(!xPoints.empty() && xiPoints.size() >= 2, "FBI grid is empty");
        for (std::size_t j = 1; j < xiPoints.size(); ++j) require(xiPoints[j] > xiPoints[j - 1], "xi grid must increase");
    }
};

struct PhaseMass {
    FbiGrid grid;
    std::vector<double> values;   ///< |Tu|^2, index ix * nxi + jxi
    double totalMass = 0.0;       ///< sum of values times dx dxi

    std::size_t nxi() const { return grid.xiPoints.size(); }
    double at(std::size_t ix, std::size_t jxi) const { return values[ix * nxi() + jxi]; }
};

/// Normalization making |Tu|^2 of a unit plane wave integrate to one over the circle.
inline double fbi_amplitude(double mu, double h) {
    return std::pow(2.0, 0.25) * std::pow(mu, 0.25) * std::pow(2.0 * std::numbers::pi * h, -0.75);
}

/// Smooth cutoff: 1 on [0, 1/2], 0 from 1 on, C-infinity in between.
inline double bump(double t) {
    t = std::abs(t);
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    auto psi = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    const double s = 2.0 * (1.0 - t);   // 1 at t = 1/2, 0 at t = 1
    return psi(s) / (psi(s) + psi(1.0 - s));
}

/// Signed circle distance x - y in (-pi, pi].
inline double circle_offset(double x, double y) {
    return std::remainder(x - y, kCircumference);
}

inline double japanese(double t) { return std::sqrt(1.0 + t * t); }

/// u holds samples at y_k = 2 pi k / N. Returns |Tu|^2 on the grid.
inline PhaseMass fbi_transform(const std::vector<cplx>& u, const FbiGrid& grid,
                               double cutoffRadius = 0.25 * kCircumference) {
    grid.validate();
    const std::size_t N = u.size();
    require(N >= 8, "need at least 8 samples");
    require(cutoffRadius > 0.0 && cutoffRadius < 0.5 * kCircumference,
            "cutoff radius must be below half the circumference");
    const double h = grid.h, mu = grid.mu, dy = kCircumference / double(N);
    // points per wavelength 2 pi h / xiMax
    if (double(N) * h / grid.xi_max() < 8.0)
        fail(ErrorCode::UnderResolved, "fewer than 8 samples per wavelength at |xi| = xiMax");

    const double a = fbi_amplitude(mu, h);
    PhaseMass pm;
    pm.grid = grid;
    pm.values.assign(grid.xPoints.size() * grid.xiPoints.size(), 0.0);

    std::vector<double> off;
    std::vector<cplx> wu;
    for (std::size_t ix = 0; ix < grid.xPoints.size(); ++ix) {
        const double x = grid.xPoints[ix];
        off.clear();
        wu.clear();
        for (std::size_t k = 0; k < N; ++k) {
            double d = circle_offset(x, dy * double(k));
            double c = bump(d / cutoffRadius);
            if (c == 0.0) continue;
            off.push_back(d);
            wu.push_back(c * u[k] * dy);
        }
        for (std::size_t j = 0; j < grid.xiPoints.size(); ++j) {
            const double xi = grid.xiPoints[j];
            const double g = 0.5 * mu * japanese(xi / mu) / h;
            cplx s = 0.0;
            for (std::size_t k = 0; k < off.size(); ++k) {
                const double d = off[k];
                s += wu[k] * std::polar(std::exp(-g * d * d), d * xi / h);
            }
            pm.values[ix * grid.xiPoints.size() + j] = std::norm(a * s);
        }
    }
    double sum = 0.0;
    for (double v : pm.values) sum += v;
    pm.totalMass = sum * grid.dx() * grid.dxi();
    require(pm.totalMass > 0.0, "transform vanishes on the grid");
    return pm;
}

/// Fiber of the energy shell over x: the covectors xi with p(x, xi) = E.
using Shell = std::function<std::vector<double>(double x)>;

inline Shell flat_shell(double xi0) {
    return [xi0](double) { return std::vector<double>{xi0}; };
}

/// The shell sampled over the base points of a grid.
struct ShellPoints {
    std::vector<std::array<double, 2>> points;

    /// Dense sampling so fold tips (where the fiber shrinks to a point) are not
    /// skipped between coarse base points.
    ShellPoints(const Shell& shell, const FbiGrid& grid) {
        const std::size_t k = std::max<std::size_t>(4096, grid.xPoints.size());
        for (std::size_t i = 0; i < k; ++i) {
            const double x = kCircumference * double(i) / double(k);
            for (double xi : shell(x)) points.push_back({x, xi});
        }
    }
    bool empty() const { return points.empty(); }

    /// Phase-space distance, circle distance in x; +inf for an empty shell.
    double distance(double x, double xi) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : points) {
            const double dx = circle_offset(x, p[0]);
            best = std::min(best, dx * dx + (xi - p[1]) * (xi - p[1]));
        }
        return std::sqrt(best);
    }
};

/// Fraction of the total mass within phase-space distance `radius` of the shell.
inline double tube_mass(const PhaseMass& pm, const Shell& shell, double radius) {
    require(radius > pm.grid.dxi(), "tube radius must exceed one xi cell");
    const ShellPoints sp(shell, pm.grid);
    require(!sp.empty(), "shell is empty");
    double in = 0.0, all = 0.0;
    for (std::size_t ix = 0; ix < pm.grid.xPoints.size(); ++ix)
        for (std::size_t j = 0; j < pm.nxi(); ++j) {
            double v = pm.at(ix, j);
            all += v;
            if (sp.distance(pm.grid.xPoints[ix], pm.grid.xiPoints[j]) <= radius) in += v;
        }
    return in / all;
}

/// Covector argmax of |Tu|^2 at base point index ix.
inline double xi_argmax(const PhaseMass& pm, std::size_t ix) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < pm.nxi(); ++j)
        if (pm.at(ix, j) > pm.at(ix, best)) best = j;
    return pm.grid.xiPoints[best];
}

/// x-marginal: sum over xi of |Tu|^2 times dxi.
inline std::vector<double> x_marginal(const PhaseMass& pm) {
    std::vector<double> m(pm.grid.xPoints.size(), 0.0);
    for (std::size_t ix = 0; ix < m.size(); ++ix) {
        for (std::size_t j = 0; j < pm.nxi(); ++j) m[ix] += pm.at(ix, j);
        m[ix] *= pm.grid.dxi();
    }
    return m;
}

/// Largest |Tu| at phase-space distance >= minDistance from the shell.
inline double offshell_sup(const PhaseMass& pm, const Shell& shell, double minDistance) {
    const ShellPoints sp(shell, pm.grid);
    require(!sp.empty(), "shell is empty");
    double best = 0.0;
    for (std::size_t ix = 0; ix < pm.grid.xPoints.size(); ++ix)
        for (std::size_t j = 0; j < pm.nxi(); ++j)
            if (sp.distance(pm.grid.xPoints[ix], pm.grid.xiPoints[j]) >= minDistance)
                best = std::max(best, std::sqrt(pm.at(ix, j)));
    return best;
}

struct OffshellMember {
    PhaseMass mass;
    Shell shell;
};

struct OffshellSample {
    double h = 0.0;
    double sup = 0.0;
};

struct OffshellFit {
    double rate = 0.0;        ///< c in sup ~ exp(-c / h)
    double intercept = 0.0;
    double rmsResidual = 0.0;
    std::vector<OffshellSample> samples;   ///< usable members only
};

/// Least squares of log sup |Tu| over the off-shell region against 1/h.
inline OffshellFit offshell_decay_fit(const std::vector<OffshellMember>& family, double minDistance) {
    require(minDistance >= 0.3, "off-shell region must stay at distance >= 0.3 from the shell");
    OffshellFit fit;
    for (const auto& m : family) {
        double s = offshell_sup(m.mass, m.shell, minDistance);
        if (s > 1e-300) fit.samples.push_back({m.mass.grid.h, s});
    }
    if (fit.samples.size() < 3) fail(ErrorCode::Floor, "fewer than 3 members above the underflow floor");
    const double n = double(fit.samples.size());
    double sx = 0, sy = 0;
    for (const auto& s : fit.samples) {
        sx += 1.0 / s.h;
        sy += std::log(s.sup);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& s : fit.samples) {
        sxx += (1.0 / s.h - mx) * (1.0 / s.h - mx);
        sxy += (1.0 / s.h - mx) * (std::log(s.sup) - my);
    }
    if (sxx <= 0.0) fail(ErrorCode::DegenerateFit, "all h values are equal");
    const double slope = sxy / sxx;
    fit.rate = -slope;
    fit.intercept = my - slope * mx;
    double rss = 0.0;
    for (const auto& s : fit.samples) {
        double r = std::log(s.sup) - (fit.intercept + slope / s.h);
        rss += r * r;
    }
    fit.rmsResidual = std::sqrt(rss / n);
    return fit;
}

/// Samples of e^{i m y} / sqrt(2 pi) at y_k = 2 pi k / n.
inline std::vector<cplx> plane_wave(int m, int n) {
    std::vector<cplx> u(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) u[std::size_t(k)] = std::polar(1.0 / std::sqrt(kCircumference), m * kCircumference * k / n);
    return u;
}

/// Even extension of cell-centred samples on an interval to a circle of 2n
/// points: the interval covers half the circle, the mirror image the other half.
/// Covectors scale by (interval length) / pi.
inline std::vector<cplx> even_extension(const std::vector<double>& cells) {
    const std::size_t n = cells.size();
    std::vector<cplx> u(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        u[k] = cells[k];
        u[2 * n - 1 - k] = cells[k];
    }
    return u;
}

} // namespace qci::fbi
