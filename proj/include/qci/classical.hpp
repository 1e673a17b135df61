#pragma once

/* Classical integrable-system layer: joint level sets (Lagrangian tori),
   caustics of their projection to the base, and the Morse property of the
   second integral restricted to the energy shell over a base point. */

#include "qci/error.hpp"
#include "qci/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace qci::classical {

using models::Base;
using models::QciModel;

struct EnergyPair {
    double e1 = 1.0;
    double e2 = 0.0;
};

enum class Classification { Empty, RegularGraph, Fold, Degenerate };

inline std::string to_string(Classification c) {
    switch (c) {
    case Classification::Empty: return "Empty";
    case Classification::RegularGraph: return "RegularGraph";
    case Classification::Fold: return "Fold";
    case Classification::Degenerate: return "Degenerate";
    }
    return "?";
}

/// One separated discriminant: the fiber over x is real iff every axis
/// discriminant is >= 0 at the corresponding coordinate.
struct Discriminant {
    int axis = 0;
    std::function<double(double)> value;
    std::function<double(double)> slope;
    double lo = 0.0, hi = 1.0;
    bool periodic = false;
};

/// Discriminants of the joint level set. SOR: e1 f^2 - e2^2 (sign of xi_r^2);
/// Liouville: e1 a + e2 and e1 b - e2; Liouville oscillator: the squared
/// momenta of the oscillator level set; HO: e1 - x^2.
inline std::vector<Discriminant> discriminants(const QciModel& model, const EnergyPair& E) {
    using namespace models;
    return std::visit(overloaded{
        [&](const SurfaceOfRevolution& s) {
            const auto& p = s.profile;
            Discriminant d;
            d.axis = 0;
            d.value = [p, E](double r) { double f = p.f(r); return E.e1 * f * f - E.e2 * E.e2; };
            d.slope = [p, E](double r) { return 2.0 * E.e1 * p.f(r) * p.fprime(r); };
            d.lo = -1.0;
            d.hi = 1.0;
            return std::vector<Discriminant>{d};
        },
        [&](const LiouvilleTorus& t) {
            const auto& a = t.data.a;
            const auto& b = t.data.b;
            Discriminant da{0, [a, E](double x) { return E.e1 * a.value(x) + E.e2; },
                            [a, E](double x) { return E.e1 * a.d1(x); }, 0.0, 1.0, true};
            Discriminant db{1, [b, E](double x) { return E.e1 * b.value(x) - E.e2; },
                            [b, E](double x) { return E.e1 * b.d1(x); }, 0.0, 1.0, true};
            return std::vector<Discriminant>{da, db};
        },
        [&](const LiouvilleOscillator& o) {
            const auto& a = o.data.a;
            const auto& b = o.data.b;
            Discriminant da{0,
                            [a, E](double x) { double v = a.value(x) + 0.5 * E.e1; return v * v + E.e2 - 0.25 * E.e1 * E.e1; },
                            [a, E](double x) { return (2.0 * a.value(x) + E.e1) * a.d1(x); }, 0.0, 1.0, true};
            Discriminant db{1,
                            [b, E](double x) { double v = b.value(x) - 0.5 * E.e1; return -v * v + 0.25 * E.e1 * E.e1 - E.e2; },
                            [b, E](double x) { return (E.e1 - 2.0 * b.value(x)) * b.d1(x); }, 0.0, 1.0, true};
            return std::vector<Discriminant>{da, db};
        },
        [&](const HarmonicOscillatorModel& ho) {
            Discriminant d;
            d.axis = 0;
            d.value = [E](double x) { return E.e1 - x * x; };
            d.slope = [](double x) { return -2.0 * x; };
            d.lo = -ho.L;
            d.hi = ho.L;
            return std::vector<Discriminant>{d};
        },
    }, model);
}

struct FiberResult {
    std::vector<Base> covectors;
    bool degenerate = false;   ///< some discriminant within tolerance of zero at x
};

/// All real covectors over x with P(x, xi) = E (0, 2 or 4 points).
inline FiberResult torus_fiber(const QciModel& model, const EnergyPair& E, const Base& x) {
    using namespace models;
    constexpr double tol = 1e-12;
    FiberResult res;
    if (auto* s = std::get_if<SurfaceOfRevolution>(&model)) {
        double f = detail::sor_f(s->profile, x[0]);
        double d = E.e1 - E.e2 * E.e2 / (f * f);
        if (d < -tol) return res;
        res.degenerate = std::abs(d) <= tol;
        double xr = std::sqrt(std::max(d, 0.0));
        res.covectors.push_back({xr, E.e2});
        if (!res.degenerate) res.covectors.push_back({-xr, E.e2});
        return res;
    }
    auto ds = discriminants(model, E);
    if (std::holds_alternative<HarmonicOscillatorModel>(model)) {
        double d = ds[0].value(x[0]);
        if (d < -tol) return res;
        res.degenerate = std::abs(d) <= tol;
        double xi = std::sqrt(std::max(d, 0.0));
        res.covectors.push_back({xi, 0.0});
        if (!res.degenerate) res.covectors.push_back({-xi, 0.0});
        return res;
    }
    double d1 = ds[0].value(x[0]), d2 = ds[1].value(x[1]);
    if (d1 < -tol || d2 < -tol) return res;
    res.degenerate = std::abs(d1) <= tol || std::abs(d2) <= tol;
    double xi = std::sqrt(std::max(d1, 0.0)), eta = std::sqrt(std::max(d2, 0.0));
    std::vector<double> xs = xi > 0.0 ? std::vector<double>{xi, -xi} : std::vector<double>{0.0};
    std::vector<double> es = eta > 0.0 ? std::vector<double>{eta, -eta} : std::vector<double>{0.0};
    for (double a : xs)
        for (double b : es) res.covectors.push_back({a, b});
    return res;
}

struct Caustic {
    int axis = 0;            ///< base coordinate that is constant along the caustic
    double location = 0.0;
    double slope = 0.0;      ///< discriminant derivative at the root
    bool simple = true;
};

struct TorusData {
    std::string model;
    EnergyPair energy;
    std::vector<Caustic> caustics;
    Classification classification = Classification::Empty;
};

/// |discriminant'| at a root below this is a non-simple zero.
inline constexpr double kSimpleRootSlope = 1e-8;

namespace detail {

inline double polish_root(const Discriminant& d, double lo, double hi) {
    double flo = d.value(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = d.value(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        double s = d.slope(x);
        if (std::abs(s) < kSimpleRootSlope) break;
        double step = d.value(x) / s;
        if (std::abs(step) > hi - lo + 1e-12) break;
        x -= step;
    }
    return x;
}

struct AxisScan {
    std::vector<Caustic> zeros;
    double maxValue = -std::numeric_limits<double>::infinity();
    double minValue = std::numeric_limits<double>::infinity();
};

/// Roots (with multiplicity flag) of one discriminant on its axis.
inline AxisScan scan_axis(const Discriminant& d) {
    constexpr int n = 4096;
    AxisScan out;
    std::vector<double> xs(n + 1), vs(n + 1), ss(n + 1);
    for (int i = 0; i <= n; ++i) {
        xs[i] = d.periodic ? d.lo + (d.hi - d.lo) * i / n
                           : d.lo + (d.hi - d.lo) * (i + 0.5) / (n + 1);
        vs[i] = d.value(xs[i]);
        ss[i] = d.slope(xs[i]);
    }
    int last = d.periodic ? n : n;   // periodic: sample n equals sample 0
    double scale = 0.0;
    for (int i = 0; i <= n; ++i) scale = std::max(scale, std::abs(vs[i]));
    scale = std::max(scale, 1e-300);
    for (int i = 0; i < last; ++i) {
        out.maxValue = std::max(out.maxValue, vs[i]);
        out.minValue = std::min(out.minValue, vs[i]);
        // transversal crossing
        if ((vs[i] > 0.0) != (vs[i + 1] > 0.0)) {
            double r = polish_root(d, xs[i], xs[i + 1]);
            double s = d.slope(r);
            out.zeros.push_back({d.axis, r, s, std::abs(s) > kSimpleRootSlope});
            continue;
        }
        // tangential touch: an extremum of the discriminant at (numerically) zero height
        if ((ss[i] > 0.0) != (ss[i + 1] > 0.0)) {
            double lo = xs[i], hi = xs[i + 1];
            double slo = ss[i];
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                double mid = 0.5 * (lo + hi);
                double sm = d.slope(mid);
                if ((sm > 0.0) == (slo > 0.0)) {
                    lo = mid;
                    slo = sm;
                } else {
                    hi = mid;
                }
            }
            double xe = 0.5 * (lo + hi);
            double ve = d.value(xe);
            out.maxValue = std::max(out.maxValue, ve);
            out.minValue = std::min(out.minValue, ve);
            if (std::abs(ve) <= 1e-10 * scale) out.zeros.push_back({d.axis, xe, d.slope(xe), false});
        }
    }
    return out;
}

inline void check_regular_level(const QciModel& model, double e1) {
    using namespace models;
    if (std::holds_alternative<LiouvilleOscillator>(model)) {
        const auto& data = std::get<LiouvilleOscillator>(model).data;
        // critical values of p1 are b(y*) - a(x*) over critical points of a and b
        auto crit = [](const CosineSeries& c) {
            std::vector<double> vals;
            constexpr int n = 4096;
            for (int i = 0; i < n; ++i) {
                double x0 = double(i) / n, x1 = double(i + 1) / n;
                if ((c.d1(x0) > 0.0) != (c.d1(x1) > 0.0)) {
                    double lo = x0, hi = x1;
                    for (int it = 0; it < 100; ++it) {
                        double m = 0.5 * (lo + hi);
                        if ((c.d1(m) > 0.0) == (c.d1(lo) > 0.0)) lo = m; else hi = m;
                    }
                    vals.push_back(c.value(0.5 * (lo + hi)));
                }
            }
            if (vals.empty()) vals.push_back(c.value(0.0));
            return vals;
        };
        for (double bv : crit(data.b))
            for (double av : crit(data.a))
                if (std::abs(e1 - (bv - av)) < 1e-10)
                    fail(ErrorCode::NotRegularLevel, "E1 is a critical value of p1");
        return;
    }
    if (!(e1 > 0.0)) fail(ErrorCode::NotRegularLevel, "dp1 vanishes on the level set (E1 <= 0)");
}

} // namespace detail

/// Fold / graph classification of the projection of the joint level set.
inline TorusData classify_projection(const QciModel& model, const EnergyPair& E) {
    detail::check_regular_level(model, E.e1);
    TorusData td;
    td.model = models::model_name(model);
    td.energy = E;
    auto ds = discriminants(model, E);
    bool empty = false, anyZero = false, allSimple = true;
    for (const auto& d : ds) {
        auto scan = detail::scan_axis(d);
        double scale = std::max({std::abs(scan.maxValue), std::abs(scan.minValue), 1e-300});
        if (scan.maxValue < -1e-10 * scale) empty = true;
        for (const auto& z : scan.zeros) {
            anyZero = true;
            allSimple = allSimple && z.simple;
            td.caustics.push_back(z);
        }
    }
    if (empty) {
        td.caustics.clear();
        td.classification = Classification::Empty;
    } else if (!anyZero) {
        td.classification = Classification::RegularGraph;
    } else {
        td.classification = allSimple ? Classification::Fold : Classification::Degenerate;
    }
    std::sort(td.caustics.begin(), td.caustics.end(), [](const Caustic& a, const Caustic& b) {
        return a.axis != b.axis ? a.axis < b.axis : a.location < b.location;
    });
    return td;
}

/// The restriction of p2 to the energy shell over a base point, as the exact
/// trigonometric polynomial c0 + c1 cos + s1 sin + c2 cos 2t + s2 sin 2t.
struct ShellFunction {
    double c0 = 0, c1 = 0, s1 = 0, c2 = 0, s2 = 0;

    double value(double t) const {
        return c0 + c1 * std::cos(t) + s1 * std::sin(t) + c2 * std::cos(2 * t) + s2 * std::sin(2 * t);
    }
    double d1(double t) const {
        return -c1 * std::sin(t) + s1 * std::cos(t) - 2 * c2 * std::sin(2 * t) + 2 * s2 * std::cos(2 * t);
    }
    double d2(double t) const {
        return -c1 * std::cos(t) - s1 * std::sin(t) - 4 * c2 * std::cos(2 * t) - 4 * s2 * std::sin(2 * t);
    }
    double d3(double t) const {
        return c1 * std::sin(t) - s1 * std::cos(t) + 8 * c2 * std::sin(2 * t) - 8 * s2 * std::cos(2 * t);
    }
};

/// Covector on the shell p1 = e1 over x at angle t.
///   SOR:       (xi_r, xi_theta) = sqrt(e1) (cos t, f sin t)
///   Liouville: (xi, eta) = R (cos t, sin t),  R^2 = e1 (a + b)   [oscillator: (a + b)(e1 - b + a)]
inline Base shell_point(const QciModel& model, const Base& x, double e1, double t) {
    using namespace models;
    if (auto* s = std::get_if<SurfaceOfRevolution>(&model)) {
        if (!(std::abs(x[0]) < 1.0)) fail(ErrorCode::OutOfChart, "r must lie in (-1,1)");
        if (std::abs(x[0]) >= 1.0 - 1e-6) fail(ErrorCode::PoleSingularity, "shell parametrization degenerates at the pole");
        if (!(e1 > 0.0)) fail(ErrorCode::EmptyShell, "E1 <= 0");
        double f = s->profile.f(x[0]);
        return {std::sqrt(e1) * std::cos(t), std::sqrt(e1) * f * std::sin(t)};
    }
    if (std::holds_alternative<HarmonicOscillatorModel>(model))
        fail(ErrorCode::Unsupported, "harmonic oscillator has no second integral");
    const auto& d = liouville_data(model);
    double a = d.a.value(x[0]), b = d.b.value(x[1]);
    double r2 = std::holds_alternative<LiouvilleOscillator>(model) ? (a + b) * (e1 - b + a) : e1 * (a + b);
    if (!(r2 > 0.0)) fail(ErrorCode::EmptyShell, "energy shell over the base point is empty");
    double R = std::sqrt(r2);
    return {R * std::cos(t), R * std::sin(t)};
}

inline ShellFunction shell_function(const QciModel& model, const Base& x, double e1) {
    constexpr int n = 8;
    std::array<double, n> q{};
    for (int k = 0; k < n; ++k) {
        double t = 2.0 * std::numbers::pi * k / n;
        q[k] = models::eval_p2(model, {x, shell_point(model, x, e1, t)});
    }
    ShellFunction sf;
    for (int k = 0; k < n; ++k) {
        double t = 2.0 * std::numbers::pi * k / n;
        sf.c0 += q[k] / n;
        sf.c1 += 2.0 * q[k] * std::cos(t) / n;
        sf.s1 += 2.0 * q[k] * std::sin(t) / n;
        sf.c2 += 2.0 * q[k] * std::cos(2 * t) / n;
        sf.s2 += 2.0 * q[k] * std::sin(2 * t) / n;
    }
    return sf;
}

struct CriticalPoint {
    double theta = 0.0;
    double value = 0.0;
    double secondDeriv = 0.0;
};

struct MorseReport {
    std::vector<CriticalPoint> criticalPoints;
    bool isMorse = false;
    double minGap = 0.0;
};

namespace detail {

inline std::vector<CriticalPoint> critical_points(const ShellFunction& q, int samples = 1024) {
    std::vector<CriticalPoint> out;
    const double twoPi = 2.0 * std::numbers::pi;
    double scale = std::abs(q.c1) + std::abs(q.s1) + std::abs(q.c2) + std::abs(q.s2);
    if (scale == 0.0) return out;
    auto bisect = [](auto&& fn, double lo, double hi) {
        double flo = fn(lo);
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            double m = 0.5 * (lo + hi);
            double fm = fn(m);
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = m;
                flo = fm;
            } else {
                hi = m;
            }
        }
        return 0.5 * (lo + hi);
    };
    // q' sampled once with the end value shared with the start, so a critical point at
    // t = 0 cannot fall between the rounding of q'(0) and q'(2 pi)
    std::vector<double> slope(samples + 1);
    for (int i = 0; i < samples; ++i) slope[i] = q.d1(twoPi * i / samples);
    slope[samples] = slope[0];
    for (int i = 0; i < samples; ++i) {
        double t0 = twoPi * i / samples, t1 = twoPi * (i + 1) / samples;
        double a0 = slope[i], a1 = slope[i + 1];
        double t = -1.0;
        if (a0 == 0.0) {
            t = t0;
        } else if ((a0 > 0.0) != (a1 > 0.0) && a1 != 0.0) {
            t = bisect([&](double s) { return q.d1(s); }, t0, t1);
            for (int it = 0; it < 3; ++it) {
                double dd = q.d2(t);
                if (dd == 0.0) break;
                double step = q.d1(t) / dd;
                if (std::abs(step) > t1 - t0) break;
                t -= step;
            }
        } else if ((q.d2(t0) > 0.0) != (q.d2(t1) > 0.0)) {
            // q' has an extremum in this cell; a zero there is a degenerate critical point
            double te = bisect([&](double s) { return q.d2(s); }, t0, t1);
            if (std::abs(q.d1(te)) <= 1e-9 * scale) t = te;
        }
        if (t < 0.0) continue;
        t = std::fmod(t + twoPi, twoPi);
        if (!out.empty() && std::abs(t - out.back().theta) < 1e-9) continue;
        out.push_back({t, q.value(t), q.d2(t)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.theta < b.theta; });
    if (out.size() > 1 && std::abs(out.front().theta + twoPi - out.back().theta) < 1e-9) out.pop_back();
    return out;
}

} // namespace detail

/// Morse check of p2 restricted to the shell {p1 = e1} over x.
inline MorseReport morse_check(const QciModel& model, const Base& x, double e1) {
    ShellFunction q = shell_function(model, x, e1);
    MorseReport rep;
    rep.criticalPoints = detail::critical_points(q);
    double maxAbs = 0.0;
    for (int i = 0; i < 1024; ++i) maxAbs = std::max(maxAbs, std::abs(q.value(2.0 * std::numbers::pi * i / 1024)));
    if (rep.criticalPoints.empty()) {
        rep.minGap = 0.0;
        rep.isMorse = false;
        return rep;
    }
    rep.minGap = std::numeric_limits<double>::infinity();
    for (const auto& c : rep.criticalPoints) rep.minGap = std::min(rep.minGap, std::abs(c.secondDeriv));
    rep.isMorse = rep.minGap > 1e-6 * maxAbs;
    return rep;
}

/// [min, max] of p2 over the shell over x.
inline std::array<double, 2> shell_range(const QciModel& model, const Base& x, double e1) {
    ShellFunction q = shell_function(model, x, e1);
    double lo = q.value(0.0), hi = lo;
    for (const auto& c : detail::critical_points(q, 256)) {
        lo = std::min(lo, c.value);
        hi = std::max(hi, c.value);
    }
    return {lo, hi};
}

/// Sampled range of E2 over the shell p1 = e1 (the slice of the moment map image).
inline std::array<double, 2> moment_image_sample(const QciModel& model, double e1, int nSamples) {
    using namespace models;
    require(nSamples >= 100, "moment_image_sample needs at least 100 samples");
    if (std::holds_alternative<HarmonicOscillatorModel>(model))
        fail(ErrorCode::Unsupported, "harmonic oscillator has no second integral");
    const bool sor = std::holds_alternative<SurfaceOfRevolution>(model);

    auto lowAt = [&](const Base& x) {
        try { return shell_range(model, x, e1)[0]; } catch (const Error&) { return std::numeric_limits<double>::infinity(); }
    };
    auto highAt = [&](const Base& x) {
        try { return shell_range(model, x, e1)[1]; } catch (const Error&) { return -std::numeric_limits<double>::infinity(); }
    };

    // grid search, then golden-section polish along each axis
    auto optimize = [&](auto&& objective) {  // maximize
        const int per = sor ? nSamples : std::max(16, int(std::ceil(std::sqrt(double(nSamples)))));
        Base best{0.0, 0.0};
        double bestVal = -std::numeric_limits<double>::infinity();
        double step0 = sor ? 2.0 / (per + 1) : 1.0 / per;
        for (int i = 0; i < per; ++i) {
            for (int j = 0; j < (sor ? 1 : per); ++j) {
                Base x = sor ? Base{-1.0 + (i + 1) * step0, 0.0} : Base{double(i) / per, double(j) / per};
                double v = objective(x);
                if (v > bestVal) {
                    bestVal = v;
                    best = x;
                }
            }
        }
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int sweep = 0; sweep < 3; ++sweep) {
            for (int axis = 0; axis < (sor ? 1 : 2); ++axis) {
                double lo = best[axis] - step0, hi = best[axis] + step0;
                if (sor) {
                    lo = std::max(lo, -1.0 + 1e-9);
                    hi = std::min(hi, 1.0 - 1e-9);
                }
                auto at = [&](double c) { Base y = best; y[axis] = c; return objective(y); };
                double a = lo, b = hi;
                double c = b - g * (b - a), d = a + g * (b - a);
                double fc = at(c), fd = at(d);
                for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
                    if (fc > fd) {
                        b = d; d = c; fd = fc;
                        c = b - g * (b - a); fc = at(c);
                    } else {
                        a = c; c = d; fc = fd;
                        d = a + g * (b - a); fd = at(d);
                    }
                }
                double xm = 0.5 * (a + b);
                double vm = at(xm);
                if (vm > bestVal) {
                    bestVal = vm;
                    best[axis] = xm;
                }
            }
        }
        return bestVal;
    };
    double hi = optimize(highAt);
    double lo = -optimize([&](const Base& x) { return -lowAt(x); });
    return {lo, hi};
}

} // namespace qci::classical
