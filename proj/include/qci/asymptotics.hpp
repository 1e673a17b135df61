#pragma once

/* Experiment harness: h-sweeps of sup norms with power-law fits, decay
   profiles in the forbidden region against the action function, and the
   distance from sup-norm achievers to the caustics. */

#include "qci/action.hpp"
#include "qci/classical.hpp"
#include "qci/error.hpp"
#include "qci/models.hpp"
#include "qci/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qci::asymptotics {

using spectral::Interval;
using spectral::JointEigenfunction;
using spectral::Region;
using spectral::SpectralWindow;

/// h_k = 1 / round(32 2^{k/2}), k = 0 .. kMax.
inline std::vector<double> default_h_sequence(int kMax = 8) {
    std::vector<double> hs;
    for (int k = 0; k <= kMax; ++k) hs.push_back(1.0 / std::round(32.0 * std::pow(2.0, 0.5 * k)));
    return hs;
}

struct HSweep {
    std::vector<double> hValues;   ///< strictly decreasing
    models::QciModel model;
    SpectralWindow window;

    void validate() const {
        if (hValues.size() < 6) fail(ErrorCode::ConfigError, "an h sweep needs at least 6 values");
        for (std::size_t i = 0; i < hValues.size(); ++i) {
            if (!(hValues[i] > 0.0)) fail(ErrorCode::ConfigError, "h values must be positive");
            if (i > 0 && !(hValues[i] < hValues[i - 1])) fail(ErrorCode::ConfigError, "h values must be strictly decreasing");
        }
        if (hValues.front() / hValues.back() < 8.0 * (1.0 - 1e-12))
            fail(ErrorCode::ConfigError, "h values must span at least a factor of 8");
    }
};

/// Named base regions. SOR: "awayFromPoles" |r| <= 0.9, "poleBall" |r| >= 0.97.
inline Region named_region(const std::string& name) {
    if (name == "global") return Region::all();
    if (name == "awayFromPoles") return {{{-0.9, 0.9}}, {}};
    if (name == "poleBall") return {{{-1.0, -0.97}, {0.97, 1.0}}, {}};
    fail(ErrorCode::ConfigError, "unknown region '" + name + "'");
}

/// Restricts which joint eigenfunctions take part in a sweep.
struct Family {
    std::optional<std::array<int, 2>> mRange;   ///< SOR angular momenta; default all
    Interval e2Band;                            ///< keep E2 in this range
    spectral::SorOptions sor;                   ///< radial scheme for surfaces of revolution
};

/// Calls emit for every joint eigenfunction of the model with E1 in the window.
/// For surfaces of revolution only m >= 0 is solved when the family is symmetric:
/// u_{-m} is the complex conjugate of u_m, so the moduli coincide.
inline void enumerate(const models::QciModel& model, double h, const SpectralWindow& window, const Family& family,
                      const spectral::JointCallback& emit) {
    std::visit(models::overloaded{
                   [&](const models::SurfaceOfRevolution& s) {
                       const int mMax = spectral::sor_m_max(s.profile, h, window);
                       std::array<int, 2> range = family.mRange.value_or(std::array<int, 2>{0, mMax});
                       if (range[0] == -range[1]) range[0] = 0;
                       spectral::sor_joint_eigs(s.profile, h, range, window, [&](const JointEigenfunction& u) {
                           if (family.e2Band.contains(u.e2)) emit(u);
                       }, family.sor);
                   },
                   [&](const models::LiouvilleTorus& t) {
                       spectral::LiouvilleOptions opt;
                       opt.lambdaScan = family.e2Band;
                       spectral::liouville_joint_eigs(t.data, h, window, emit, opt);
                   },
                   [&](const models::LiouvilleOscillator& o) {
                       spectral::LiouvilleOptions opt;
                       opt.lambdaScan = family.e2Band;
                       opt.oscillator = true;
                       spectral::liouville_joint_eigs(o.data, h, window, emit, opt);
                   },
                   [&](const models::HarmonicOscillatorModel& ho) {
                       auto sols = spectral::ho_eigs(ho, h, window);
                       for (std::size_t i = 0; i < sols.size(); ++i) {
                           JointEigenfunction u;
                           u.model = "ho";
                           u.h = h;
                           u.qn = {int(std::lround((sols[i].lambda / h - 1.0) / 2.0)), 0};
                           u.e1 = sols[i].lambda;
                           u.residual = sols[i].residual;
                           u.factors.push_back(std::move(sols[i]));
                           emit(u);
                       }
                   }},
               model);
}

struct ScanRow {
    double h = 0.0;
    bool empty = false;          ///< EmptySpectrum: no eigenvalue in the window
    double maxSup = 0.0;
    std::array<int, 2> qn{};     ///< achiever
    double e1 = 0.0, e2 = 0.0;   ///< achiever energies
    models::Base location{};
    int count = 0;               ///< eigenfunctions examined
};

inline ScanRow scan_row(const models::QciModel& model, double h, const SpectralWindow& window, const Region& region,
                        const Family& family) {
    ScanRow row;
    row.h = h;
    enumerate(model, h, window, family, [&](const JointEigenfunction& u) {
        auto s = spectral::sup_norm(u, region);
        ++row.count;
        if (s.value > row.maxSup) {
            row.maxSup = s.value;
            row.qn = u.qn;
            row.e1 = u.e1;
            row.e2 = u.e2;
            row.location = s.location;
        }
    });
    row.empty = row.count == 0;
    return row;
}

/// One row per h: the largest sup norm over the region among all joint
/// eigenfunctions in the window, and who attains it. Rows are independent and
/// may run on `jobs` workers; the result order is always that of hValues.
inline std::vector<ScanRow> supnorm_scan(const HSweep& sweep, const Region& region, const Family& family = {},
                                         int jobs = 1) {
    sweep.validate();
    std::vector<ScanRow> rows(sweep.hValues.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = scan_row(sweep.model, sweep.hValues[i], sweep.window, region, family);
        return rows;
    }
    std::size_t next = 0;
    while (next < rows.size()) {
        std::vector<std::future<ScanRow>> batch;
        std::vector<std::size_t> idx;
        for (int j = 0; j < jobs && next < rows.size(); ++j, ++next) {
            idx.push_back(next);
            batch.push_back(std::async(std::launch::async, scan_row, std::cref(sweep.model), sweep.hValues[next],
                                       std::cref(sweep.window), std::cref(region), std::cref(family)));
        }
        for (std::size_t j = 0; j < batch.size(); ++j) rows[idx[j]] = batch[j].get();
    }
    return rows;
}

struct ScalingFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double rmsResidual = 0.0;
    int pointCount = 0;
};

/// Ordinary least squares of log value against log h.
inline ScalingFit fit_power(const std::vector<double>& hs, const std::vector<double>& values) {
    require(hs.size() == values.size(), "fit needs matching columns");
    if (hs.size() < 4) fail(ErrorCode::InsufficientSamples, "a scaling fit needs at least 4 rows");
    const double n = double(hs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        require(hs[i] > 0.0 && values[i] > 0.0, "fit needs positive data");
        sx += std::log(hs[i]);
        sy += std::log(values[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        double dx = std::log(hs[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(values[i]) - my);
    }
    if (sxx <= 1e-24 * n) fail(ErrorCode::DegenerateFit, "all h values are equal");
    ScalingFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        double r = std::log(values[i]) - (fit.intercept + fit.exponent * std::log(hs[i]));
        rss += r * r;
    }
    fit.rmsResidual = std::sqrt(rss / n);
    fit.pointCount = int(hs.size());
    return fit;
}

/// Fit over the non-empty rows of a scan.
inline ScalingFit fit_exponent(const std::vector<ScanRow>& rows) {
    std::vector<double> hs, vs;
    for (const auto& r : rows)
        if (!r.empty) {
            hs.push_back(r.h);
            vs.push_back(r.maxSup);
        }
    return fit_power(hs, vs);
}

/// Smallest C with maxSup <= C h^{-1/2} on every row.
inline double hormander_constant(const std::vector<ScanRow>& rows) {
    double c = 0.0;
    for (const auto& r : rows)
        if (!r.empty) c = std::max(c, r.maxSup * std::sqrt(r.h));
    return c;
}

// ---------------------------------------------------------------- decay in the forbidden region

struct DecayPoint {
    double x = 0.0;
    double S = 0.0;
    double logAbsU = 0.0;
    double ratio = 0.0;    ///< -h log|u| / S
    double defect = 0.0;   ///< (1 - eps) S + h log|u|
};

struct DecayReport {
    double epsilon = 0.0;
    double h = 0.0;
    double maxDefect = -std::numeric_limits<double>::infinity();
    double minRatio = std::numeric_limits<double>::infinity();
    double maxRatio = -std::numeric_limits<double>::infinity();
    std::vector<DecayPoint> points;

    double band() const { return std::max(std::abs(maxRatio - 1.0), std::abs(minRatio - 1.0)); }
};

inline constexpr double kUnderflowFloor = 1e-300;

/// Samples (1 - eps) S(x) + h log|u(x)| on the grid points of the first factor
/// inside [region.lo, region.hi]. S must be positive there.
inline DecayReport decay_profile(const JointEigenfunction& u, const std::function<double(double)>& S, double epsilon,
                                 const Interval& region) {
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    const auto& f = u.factors.at(0);
    DecayReport rep;
    rep.epsilon = epsilon;
    rep.h = u.h;
    int inside = 0, floored = 0;
    for (int i = 0; i < f.grid.n; ++i) {
        double x = f.grid.point(i);
        if (!region.contains(x)) continue;
        ++inside;
        double m = u.scale * f.modulus(i);
        if (!(m > kUnderflowFloor)) {
            ++floored;
            continue;
        }
        double s = S(x);
        require(s > 0.0, "decay region must lie where S > 0");
        DecayPoint p;
        p.x = x;
        p.S = s;
        p.logAbsU = std::log(m);
        p.ratio = -u.h * p.logAbsU / s;
        p.defect = (1.0 - epsilon) * s + u.h * p.logAbsU;
        rep.maxDefect = std::max(rep.maxDefect, p.defect);
        rep.minRatio = std::min(rep.minRatio, p.ratio);
        rep.maxRatio = std::max(rep.maxRatio, p.ratio);
        rep.points.push_back(p);
    }
    if (inside == 0) fail(ErrorCode::EmptyRegion, "decay region contains no grid point");
    if (2 * floored > inside) fail(ErrorCode::UnderflowRegion, "|u| underflows on more than half of the region");
    return rep;
}

// ---------------------------------------------------------------- caustic peaks

struct PeakReport {
    double location = 0.0;
    double distance = std::numeric_limits<double>::infinity();   ///< +inf when there is no caustic
};

/// Argmax of |first factor| and its distance to the nearest caustic on that axis.
inline PeakReport caustic_peak_locator(const JointEigenfunction& u, const classical::TorusData& tdata, int axis = 0) {
    const auto& f = u.factors.at(std::size_t(axis));
    PeakReport rep;
    double best = -1.0;
    for (int i = 0; i < f.grid.n; ++i) {
        double m = f.modulus(i);
        if (m > best) {
            best = m;
            rep.location = f.grid.point(i);
        }
    }
    for (const auto& c : tdata.caustics) {
        if (c.axis != axis) continue;
        double d = std::abs(rep.location - c.location);
        if (f.bc == spectral::Boundary::Periodic) d = std::min(d, 1.0 - d);
        rep.distance = std::min(rep.distance, d);
    }
    return rep;
}

} // namespace qci::asymptotics
