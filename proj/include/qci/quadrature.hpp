#pragma once

#include "qci/error.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

namespace qci::quadrature {

/// Nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> x, w;
};

/// Gauss-Legendre rule of order n (Newton iteration on P_n from Chebyshev guesses).
inline Rule gauss_legendre(int n) {
    require(n >= 1, "quadrature order must be positive");
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

inline const Rule& gl20() {
    static const Rule rule = gauss_legendre(20);
    return rule;
}

template <class F>
double apply_rule(const Rule& rule, F&& f, double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * f(c + h * rule.x[i]);
    return s * h;
}

struct Result {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

/// Globally adaptive Gauss-Legendre: each panel is estimated by a 20-point rule
/// on the panel and on its two halves; the panel with the largest discrepancy is
/// split until the summed discrepancy meets the tolerance.
template <class F>
Result integrate(F&& f, double a, double b, double relTol = 1e-10, double absTol = 1e-300, int maxPanels = 20000) {
    Result res;
    if (a == b) return res;
    const Rule& rule = gl20();
    struct Panel {
        double a, b, fine, err;
        bool operator<(const Panel& o) const { return err < o.err; }
    };
    auto make = [&](double lo, double hi) {
        double m = 0.5 * (lo + hi);
        double coarse = apply_rule(rule, f, lo, hi);
        double fine = apply_rule(rule, f, lo, m) + apply_rule(rule, f, m, hi);
        return Panel{lo, hi, fine, std::abs(fine - coarse)};
    };
    std::priority_queue<Panel> heap;
    heap.push(make(a, b));
    double total = heap.top().fine, err = heap.top().err;
    int panels = 1;
    while (err > std::max(relTol * std::abs(total), absTol)) {
        if (panels >= maxPanels)
            fail(ErrorCode::QuadratureStall, "tolerance not reached within the panel cap");
        Panel p = heap.top();
        heap.pop();
        double m = 0.5 * (p.a + p.b);
        Panel l = make(p.a, m), r = make(m, p.b);
        total += l.fine + r.fine - p.fine;
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
        ++panels;
    }
    // recompute the sum to shed accumulated rounding from the running updates
    double s = 0.0, e = 0.0;
    while (!heap.empty()) {
        s += heap.top().fine;
        e += heap.top().err;
        heap.pop();
    }
    res.value = s;
    res.error = e;
    res.intervals = panels;
    return res;
}

} // namespace qci::quadrature
