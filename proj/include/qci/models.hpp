#pragma once

/* Catalogue of two-degree-of-freedom integrable systems (plus the 1D
   harmonic oscillator) as evaluable principal symbols.

   Charts:
     surface of revolution   (r, theta) in (-1,1) x [0, 2pi), metric dr^2 + f(r)^2 dtheta^2
     Liouville torus         (x1, x2) in [0,1)^2 periodic,   metric (a(x1) + b(x2)) (dx1^2 + dx2^2)
     harmonic oscillator     x in R,                          symbol xi^2 + x^2
*/

#include "qci/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace qci::models {

using Base = std::array<double, 2>;

struct PhasePoint {
    Base x{};
    Base xi{};
};

/// Closed-form generating curve r -> f(r) of a surface of revolution.
/// Registry: "cosine"  f = A cos(pi r / 2)
///           "parabola" f = A (1 - r^2)   (violates the pole smoothness condition)
class RevolutionProfile {
public:
    enum class Kind { Cosine, Parabola };

    RevolutionProfile() = default;
    RevolutionProfile(Kind kind, double amplitude, int evenOrder = 2)
        : kind_(kind), amplitude_(amplitude), evenOrder_(evenOrder) {
        require(amplitude > 0.0, "profile amplitude must be positive");
    }

    static RevolutionProfile named(const std::string& name, double amplitude = 1.0) {
        if (name == "cosine") return {Kind::Cosine, amplitude};
        if (name == "parabola") return {Kind::Parabola, amplitude};
        fail(ErrorCode::ConfigError, "unknown profile '" + name + "'");
    }

    Kind kind() const { return kind_; }
    double amplitude() const { return amplitude_; }
    int even_order() const { return evenOrder_; }

    std::string name() const { return kind_ == Kind::Cosine ? "cosine" : "parabola"; }

    /// k-th derivative, exact.
    double derivative(int k, double r) const {
        switch (kind_) {
        case Kind::Cosine: {
            constexpr double w = std::numbers::pi / 2.0;
            return amplitude_ * std::pow(w, k) * std::cos(w * r + k * w);
        }
        case Kind::Parabola:
            if (k == 0) return amplitude_ * (1.0 - r * r);
            if (k == 1) return -2.0 * amplitude_ * r;
            if (k == 2) return -2.0 * amplitude_;
            return 0.0;
        }
        return 0.0;
    }

    double f(double r) const { return derivative(0, r); }
    double fprime(double r) const { return derivative(1, r); }
    double fsecond(double r) const { return derivative(2, r); }

    /// The unique interior zero of f'.
    double critical_point() const {
        double lo = -1.0, hi = 1.0;
        for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
            double mid = 0.5 * (lo + hi);
            if (fprime(mid) > 0.0) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    double max_value() const { return f(critical_point()); }

    /// Solve f(r) = level on the side of the critical point containing `side` (sign of r - r*).
    double level_crossing(double level, int side) const {
        double rs = critical_point();
        double lo = side > 0 ? rs : -1.0;
        double hi = side > 0 ? 1.0 : rs;
        // f is monotone on each side
        for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
            double mid = 0.5 * (lo + hi);
            bool above = f(mid) > level;
            if ((side > 0) == above) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    Kind kind_ = Kind::Cosine;
    double amplitude_ = 1.0;
    int evenOrder_ = 2;
};

/// 1-periodic finite cosine series c0 + c1 cos(2 pi x) + c2 cos(4 pi x) + ...
class CosineSeries {
public:
    CosineSeries() = default;
    explicit CosineSeries(std::vector<double> coeffs) : c_(std::move(coeffs)) {
        require(!c_.empty(), "cosine series needs at least a constant term");
    }

    const std::vector<double>& coeffs() const { return c_; }

    double value(double x) const { return eval(x, 0); }
    double d1(double x) const { return eval(x, 1); }
    double d2(double x) const { return eval(x, 2); }

    /// Derivative of order k (k = 0, 1, 2, ...).
    double eval(double x, int k) const {
        double s = 0.0;
        for (std::size_t j = 0; j < c_.size(); ++j) {
            if (j == 0) {
                if (k == 0) s += c_[0];
                continue;
            }
            double w = 2.0 * std::numbers::pi * double(j);
            s += c_[j] * std::pow(w, k) * std::cos(w * x + k * std::numbers::pi / 2.0);
        }
        return s;
    }

    /// Global minimum and maximum over one period (sampled, then Newton-polished).
    std::array<double, 2> range() const {
        constexpr int n = 4096;
        double lo = value(0.0), hi = lo;
        for (int i = 0; i < n; ++i) {
            double x0 = double(i) / n;
            double dl = d1(x0 - 0.5 / n), dr = d1(x0 + 0.5 / n);
            if ((dl <= 0.0) == (dr <= 0.0)) {
                double v = value(x0);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                continue;
            }
            double x = x0;
            for (int it = 0; it < 50; ++it) {
                double dd = d2(x);
                if (dd == 0.0) break;
                double step = d1(x) / dd;
                x -= step;
                if (std::abs(step) < 1e-15) break;
            }
            if (std::abs(x - x0) > 1.0 / n) x = x0;
            double v = value(x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return {lo, hi};
    }

private:
    std::vector<double> c_{1.0};
};

struct LiouvilleData {
    CosineSeries a, b;
    double aMin = 0, aMax = 0, bMin = 0, bMax = 0;

    LiouvilleData() = default;
    LiouvilleData(CosineSeries a_, CosineSeries b_) : a(std::move(a_)), b(std::move(b_)) {
        auto ra = a.range();
        auto rb = b.range();
        aMin = ra[0]; aMax = ra[1];
        bMin = rb[0]; bMax = rb[1];
    }
    LiouvilleData(std::vector<double> ac, std::vector<double> bc)
        : LiouvilleData(CosineSeries(std::move(ac)), CosineSeries(std::move(bc))) {}
};

struct SurfaceOfRevolution {
    RevolutionProfile profile;
};

/// Liouville Laplacian -(a+b)^{-1} h^2 Delta with commutant.
struct LiouvilleTorus {
    LiouvilleData data;
};

/// Liouville metric plus potential b(x2) - a(x1).
struct LiouvilleOscillator {
    LiouvilleData data;
};

struct HarmonicOscillatorModel {
    double E = 1.0;
    double L = 3.0;
};

using QciModel = std::variant<SurfaceOfRevolution, LiouvilleTorus, LiouvilleOscillator, HarmonicOscillatorModel>;

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

inline std::string model_name(const QciModel& m) {
    return std::visit(overloaded{
        [](const SurfaceOfRevolution&) { return std::string("sor"); },
        [](const LiouvilleTorus&) { return std::string("liouville"); },
        [](const LiouvilleOscillator&) { return std::string("liouville-oscillator"); },
        [](const HarmonicOscillatorModel&) { return std::string("ho"); },
    }, m);
}

inline bool is_liouville(const QciModel& m) {
    return std::holds_alternative<LiouvilleTorus>(m) || std::holds_alternative<LiouvilleOscillator>(m);
}

inline const LiouvilleData& liouville_data(const QciModel& m) {
    if (auto* t = std::get_if<LiouvilleTorus>(&m)) return t->data;
    if (auto* o = std::get_if<LiouvilleOscillator>(&m)) return o->data;
    fail(ErrorCode::Unsupported, "model is not of Liouville type");
}

namespace detail {

inline double sor_f(const RevolutionProfile& p, double r) {
    if (!(r > -1.0 && r < 1.0)) fail(ErrorCode::OutOfChart, "r must lie in (-1,1)");
    double f = p.f(r);
    if (!(f > 0.0)) fail(ErrorCode::OutOfChart, "profile vanishes at r");
    return f;
}

} // namespace detail

/// Principal symbol p1 (|xi|_g^2, plus the potential for the Liouville oscillator).
inline double eval_p1(const QciModel& model, const PhasePoint& pt) {
    return std::visit(overloaded{
        [&](const SurfaceOfRevolution& s) {
            double f = detail::sor_f(s.profile, pt.x[0]);
            return pt.xi[0] * pt.xi[0] + pt.xi[1] * pt.xi[1] / (f * f);
        },
        [&](const LiouvilleTorus& t) {
            double a = t.data.a.value(pt.x[0]), b = t.data.b.value(pt.x[1]);
            return (pt.xi[0] * pt.xi[0] + pt.xi[1] * pt.xi[1]) / (a + b);
        },
        [&](const LiouvilleOscillator& o) {
            double a = o.data.a.value(pt.x[0]), b = o.data.b.value(pt.x[1]);
            return (pt.xi[0] * pt.xi[0] + pt.xi[1] * pt.xi[1]) / (a + b) + b - a;
        },
        [&](const HarmonicOscillatorModel&) {
            return pt.xi[0] * pt.xi[0] + pt.x[0] * pt.x[0];
        },
    }, model);
}

/// Second commuting symbol.
inline double eval_p2(const QciModel& model, const PhasePoint& pt) {
    return std::visit(overloaded{
        [&](const SurfaceOfRevolution& s) {
            detail::sor_f(s.profile, pt.x[0]);
            return pt.xi[1];
        },
        [&](const LiouvilleTorus& t) {
            double a = t.data.a.value(pt.x[0]), b = t.data.b.value(pt.x[1]);
            return (b * pt.xi[0] * pt.xi[0] - a * pt.xi[1] * pt.xi[1]) / (a + b);
        },
        [&](const LiouvilleOscillator& o) {
            double a = o.data.a.value(pt.x[0]), b = o.data.b.value(pt.x[1]);
            return (b * pt.xi[0] * pt.xi[0] - a * pt.xi[1] * pt.xi[1]) / (a + b) - a * b;
        },
        [&](const HarmonicOscillatorModel&) -> double {
            fail(ErrorCode::Unsupported, "harmonic oscillator has no second integral");
        },
    }, model);
}

/// Riemannian volume density in the chart. Zero at the poles of a surface of revolution.
inline double volume_density(const QciModel& model, const Base& x) {
    return std::visit(overloaded{
        [&](const SurfaceOfRevolution& s) {
            if (std::abs(x[0]) >= 1.0) return 0.0;
            return std::max(0.0, s.profile.f(x[0]));
        },
        [&](const LiouvilleTorus& t) { return t.data.a.value(x[0]) + t.data.b.value(x[1]); },
        [&](const LiouvilleOscillator& o) { return o.data.a.value(x[0]) + o.data.b.value(x[1]); },
        [&](const HarmonicOscillatorModel&) { return 1.0; },
    }, model);
}

struct HypothesisCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<HypothesisCheck> checks;

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    const HypothesisCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline ValidationReport validate_profile(const RevolutionProfile& p) {
    constexpr int n = 10001;
    ValidationReport rep;
    const double scale = p.amplitude();

    double e0 = std::max(std::abs(p.f(-1.0)), std::abs(p.f(1.0)));
    rep.checks.push_back({"poles", e0 <= 1e-12 * scale, "max |f(+-1)| = " + std::to_string(e0)});

    bool positive = true, concave = true;
    int signChanges = 0;
    double prev = p.fprime(-1.0 + 1.0 / n);
    for (int i = 1; i < n; ++i) {
        double r = -1.0 + 2.0 * i / n;
        positive = positive && p.f(r) > 0.0;
        concave = concave && p.fsecond(r) < 0.0;
        double d = p.fprime(r);
        if ((d > 0.0) != (prev > 0.0)) ++signChanges;
        prev = d;
    }
    rep.checks.push_back({"positive", positive, "f > 0 on the open interval"});
    rep.checks.push_back({"concave", concave, "f'' < 0 on the open interval"});
    rep.checks.push_back({"single-critical-point", signChanges == 1,
                          std::to_string(signChanges) + " sign changes of f'"});

    double worst = 0.0;
    int worstOrder = 0;
    for (int k = 0; k <= p.even_order(); ++k) {
        double e = std::max(std::abs(p.derivative(2 * k, -1.0)), std::abs(p.derivative(2 * k, 1.0)));
        double tol = 1e-10 * scale * std::pow(std::numbers::pi, 2 * k);
        if (e > tol && e > worst) {
            worst = e;
            worstOrder = 2 * k;
        }
    }
    rep.checks.push_back({"even-derivatives", worst == 0.0,
                          worst == 0.0 ? "even derivatives vanish at the poles"
                                       : "f^(" + std::to_string(worstOrder) + ")(+-1) = " + std::to_string(worst)});
    return rep;
}

inline ValidationReport validate_liouville(const LiouvilleData& d) {
    ValidationReport rep;
    rep.checks.push_back({"a-positive", d.aMin > 0.0, "min a = " + std::to_string(d.aMin)});
    rep.checks.push_back({"b-positive", d.bMin > 0.0, "min b = " + std::to_string(d.bMin)});
    rep.checks.push_back({"min-a-exceeds-max-b", d.aMin > d.bMax,
                          "min a = " + std::to_string(d.aMin) + ", max b = " + std::to_string(d.bMax)});
    bool periodic = std::abs(d.a.value(0.0) - d.a.value(1.0)) < 1e-12 && std::abs(d.b.value(0.0) - d.b.value(1.0)) < 1e-12;
    rep.checks.push_back({"periodic", periodic, "cosine series are 1-periodic"});
    return rep;
}

} // namespace detail

/// Checks the structural hypotheses of the model on dense grids. Never throws.
inline ValidationReport validate_model(const QciModel& model) {
    return std::visit(overloaded{
        [](const SurfaceOfRevolution& s) { return detail::validate_profile(s.profile); },
        [](const LiouvilleTorus& t) { return detail::validate_liouville(t.data); },
        [](const LiouvilleOscillator& o) { return detail::validate_liouville(o.data); },
        [](const HarmonicOscillatorModel& ho) {
            ValidationReport rep;
            rep.checks.push_back({"energy-positive", ho.E > 0.0, "E = " + std::to_string(ho.E)});
            rep.checks.push_back({"truncation", ho.L > 2.0 * std::sqrt(std::max(ho.E, 0.0)),
                                  "L = " + std::to_string(ho.L)});
            return rep;
        },
    }, model);
}

} // namespace qci::models
