#pragma once

/* Windowed eigenpairs of symmetric tridiagonal matrices, with an optional
   corner coupling (0,n-1) for periodic problems.

   Eigenvalues come from inertia counts (Sylvester) and bisection, so only the
   part of the spectrum inside a window is ever touched. Eigenvectors:
     - non-periodic: twisted factorization (one solve, accurate small components)
     - periodic:     block inverse iteration on clusters + Rayleigh-Ritz
*/

#include "qci/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace qci::linalg {

struct SymTridiagonal {
    std::vector<double> diag;   ///< n entries
    std::vector<double> off;    ///< n-1 entries, (i, i+1)
    double corner = 0.0;        ///< (0, n-1) coupling, periodic only
    bool periodic = false;

    std::size_t size() const { return diag.size(); }

    double norm_bound() const {
        double m = 0.0;
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double r = std::abs(diag[i]);
            if (i > 0) r += std::abs(off[i - 1]);
            if (i + 1 < n) r += std::abs(off[i]);
            if (periodic && (i == 0 || i + 1 == n)) r += std::abs(corner);
            m = std::max(m, r);
        }
        return m;
    }

    /// Gershgorin interval.
    std::pair<double, double> gershgorin() const {
        const std::size_t n = size();
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            if (i > 0) r += std::abs(off[i - 1]);
            if (i + 1 < n) r += std::abs(off[i]);
            if (periodic && (i == 0 || i + 1 == n)) r += std::abs(corner);
            lo = std::min(lo, diag[i] - r);
            hi = std::max(hi, diag[i] + r);
        }
        return {lo, hi};
    }

    void apply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += off[i - 1] * x[i - 1];
            if (i + 1 < n) s += off[i] * x[i + 1];
            y[i] = s;
        }
        if (periodic && n > 1) {
            y[0] += corner * x[n - 1];
            y[n - 1] += corner * x[0];
        }
    }

    /// max_i |((T - lambda) x)_i|
    double residual(double lambda, std::span<const double> x) const {
        std::vector<double> y(size());
        apply(x, y);
        double r = 0.0;
        for (std::size_t i = 0; i < size(); ++i) r = std::max(r, std::abs(y[i] - lambda * x[i]));
        return r;
    }
};

namespace detail {

inline double pivot_floor(const SymTridiagonal& T) {
    return 1e-30 * std::max(1.0, T.norm_bound());
}

inline bool converged(double lo, double hi, double tol) {
    double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    return hi - lo <= std::max(tol, 8.0 * std::numeric_limits<double>::epsilon() * scale);
}

inline double guard(double p, double floor) {
    return std::abs(p) < floor ? -floor : p;
}

} // namespace detail

/// Number of eigenvalues strictly below sigma (negative pivots of LDL^T of T - sigma).
inline std::size_t count_below(const SymTridiagonal& T, double sigma) {
    const std::size_t n = T.size();
    const double floor = detail::pivot_floor(T);
    std::size_t neg = 0;
    if (!T.periodic || n < 3) {
        double q = T.diag[0] - sigma;
        q = detail::guard(q, floor);
        neg += q < 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            q = T.diag[i] - sigma - T.off[i - 1] * T.off[i - 1] / q;
            q = detail::guard(q, floor);
            neg += q < 0.0;
        }
        return neg;
    }
    // Cyclic: eliminate rows 0..n-2, carrying the fill ("spike") in column n-1.
    double piv = detail::guard(T.diag[0] - sigma, floor);
    neg += piv < 0.0;
    double spike = T.corner;
    double last = T.diag[n - 1] - sigma;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        last -= spike * spike / piv;
        double nextPiv = T.diag[i + 1] - sigma - T.off[i] * T.off[i] / piv;
        double nextSpike = -T.off[i] * spike / piv;
        if (i + 2 == n - 1) nextSpike += T.off[n - 2];
        piv = detail::guard(nextPiv, floor);
        neg += piv < 0.0;
        spike = nextSpike;
    }
    last -= spike * spike / piv;
    neg += last < 0.0;
    return neg;
}

/// Eigenvalues in [lo, hi), ascending, with their global indices.
struct WindowedEigenvalues {
    std::vector<double> values;
    std::size_t firstIndex = 0;   ///< global (ascending) index of values[0]
};


/// All eigenvalues in [lo, hi) by recursive bisection on inertia counts.
inline WindowedEigenvalues eigenvalues_in(const SymTridiagonal& T, double lo, double hi, double tol = 0.0) {
    WindowedEigenvalues out;
    if (!(hi > lo)) return out;
    std::size_t cl = count_below(T, lo), ch = count_below(T, hi);
    out.firstIndex = cl;
    if (ch <= cl) return out;

    struct Interval { double a, b; std::size_t ca, cb; };
    std::vector<Interval> stack{{lo, hi, cl, ch}};
    std::vector<std::pair<double, std::size_t>> found;  // (value, multiplicity)
    int guardIter = 0;
    while (!stack.empty()) {
        if (++guardIter > 10'000'000) fail(ErrorCode::SolverDivergence, "bisection did not terminate");
        Interval iv = stack.back();
        stack.pop_back();
        if (iv.cb <= iv.ca) continue;
        if (detail::converged(iv.a, iv.b, tol)) {
            found.push_back({0.5 * (iv.a + iv.b), iv.cb - iv.ca});
            continue;
        }
        double mid = 0.5 * (iv.a + iv.b);
        std::size_t cm = count_below(T, mid);
        cm = std::clamp(cm, iv.ca, iv.cb);
        // push upper half first so the lower half is processed first
        stack.push_back({mid, iv.b, cm, iv.cb});
        stack.push_back({iv.a, mid, iv.ca, cm});
    }
    std::sort(found.begin(), found.end());
    for (auto& [v, m] : found)
        for (std::size_t k = 0; k < m; ++k) out.values.push_back(v);
    return out;
}

/// Eigenvalue with global ascending index k.
inline double eigenvalue_by_index(const SymTridiagonal& T, std::size_t k, double tol = 0.0) {
    auto [lo, hi] = T.gershgorin();
    lo -= 1.0;
    hi += 1.0;
    for (int it = 0; it < 400; ++it) {
        if (detail::converged(lo, hi, tol)) break;
        double mid = 0.5 * (lo + hi);
        if (count_below(T, mid) > k) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Bisection for index k started from a bracket known to contain it.
inline double eigenvalue_by_index(const SymTridiagonal& T, std::size_t k, double lo, double hi, double tol) {
    while (count_below(T, lo) > k) lo -= std::max(1.0, std::abs(hi - lo));
    while (count_below(T, hi) <= k) hi += std::max(1.0, std::abs(hi - lo));
    for (int it = 0; it < 400; ++it) {
        if (detail::converged(lo, hi, tol)) break;
        double mid = 0.5 * (lo + hi);
        if (count_below(T, mid) > k) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Eigenvector of a non-periodic tridiagonal for an accurate eigenvalue (twisted factorization).
/// Returned with unit Euclidean norm.
inline std::vector<double> twisted_eigenvector(const SymTridiagonal& T, double lambda) {
    require(!T.periodic, "twisted factorization needs a non-periodic matrix");
    const std::size_t n = T.size();
    const double floor = detail::pivot_floor(T);
    std::vector<double> dp(n), dm(n);
    dp[0] = detail::guard(T.diag[0] - lambda, floor);
    for (std::size_t i = 1; i < n; ++i)
        dp[i] = detail::guard(T.diag[i] - lambda - T.off[i - 1] * T.off[i - 1] / dp[i - 1], floor);
    dm[n - 1] = detail::guard(T.diag[n - 1] - lambda, floor);
    for (std::size_t i = n - 1; i-- > 0;)
        dm[i] = detail::guard(T.diag[i] - lambda - T.off[i] * T.off[i] / dm[i + 1], floor);

    std::size_t k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double g = std::abs(dp[i] + dm[i] - (T.diag[i] - lambda));
        if (g < best) {
            best = g;
            k = i;
        }
    }

    constexpr double big = 1e150;
    std::vector<double> z(n, 0.0);
    z[k] = 1.0;
    for (std::size_t i = k; i-- > 0;) {
        z[i] = -T.off[i] * z[i + 1] / dp[i];
        if (std::abs(z[i]) > big) {
            for (std::size_t j = i; j <= k; ++j) z[j] /= big;
        }
    }
    double scaleRight = 1.0;  // applied to the part left of and including k if the right part overflows
    for (std::size_t i = k + 1; i < n; ++i) {
        z[i] = -T.off[i - 1] * z[i - 1] / dm[i];
        if (std::abs(z[i]) > big) {
            for (std::size_t j = k + 1; j <= i; ++j) z[j] /= big;
            scaleRight /= big;
        }
    }
    if (scaleRight != 1.0)
        for (std::size_t j = 0; j <= k; ++j) z[j] *= scaleRight;

    double mx = 0.0;
    for (double v : z) mx = std::max(mx, std::abs(v));
    double s = 0.0;
    for (double& v : z) {
        v /= mx;
        s += v * v;
    }
    s = std::sqrt(s);
    for (double& v : z) v /= s;
    return z;
}

/// LDL^T of a (possibly cyclic) shifted tridiagonal, reusable for many right-hand sides.
class ShiftedSolver {
public:
    ShiftedSolver(const SymTridiagonal& T, double sigma) : n_(T.size()), periodic_(T.periodic && T.size() >= 3) {
        const double floor = detail::pivot_floor(T);
        piv_.assign(n_, 0.0);
        l_.assign(n_, 0.0);
        m_.assign(n_, 0.0);
        if (!periodic_) {
            piv_[0] = detail::guard(T.diag[0] - sigma, floor);
            for (std::size_t i = 1; i < n_; ++i) {
                l_[i - 1] = T.off[i - 1] / piv_[i - 1];
                piv_[i] = detail::guard(T.diag[i] - sigma - l_[i - 1] * T.off[i - 1], floor);
            }
            return;
        }
        double piv = detail::guard(T.diag[0] - sigma, floor);
        double spike = T.corner;
        double last = T.diag[n_ - 1] - sigma;
        for (std::size_t i = 0; i + 2 < n_; ++i) {
            piv_[i] = piv;
            l_[i] = T.off[i] / piv;
            m_[i] = spike / piv;
            last -= spike * m_[i];
            double nextPiv = T.diag[i + 1] - sigma - T.off[i] * l_[i];
            double nextSpike = -T.off[i] * m_[i];
            if (i + 2 == n_ - 1) nextSpike += T.off[n_ - 2];
            piv = detail::guard(nextPiv, floor);
            spike = nextSpike;
        }
        piv_[n_ - 2] = piv;
        m_[n_ - 2] = spike / piv;
        last -= spike * m_[n_ - 2];
        piv_[n_ - 1] = detail::guard(last, floor);
    }

    void solve(std::span<double> x) const {
        if (!periodic_) {
            for (std::size_t i = 1; i < n_; ++i) x[i] -= l_[i - 1] * x[i - 1];
            for (std::size_t i = 0; i < n_; ++i) x[i] /= piv_[i];
            for (std::size_t i = n_ - 1; i-- > 0;) x[i] -= l_[i] * x[i + 1];
            return;
        }
        const std::size_t last = n_ - 1;
        for (std::size_t i = 0; i + 2 < n_; ++i) {
            x[i + 1] -= l_[i] * x[i];
            x[last] -= m_[i] * x[i];
        }
        x[last] -= m_[n_ - 2] * x[n_ - 2];
        for (std::size_t i = 0; i < n_; ++i) x[i] /= piv_[i];
        x[n_ - 2] -= m_[n_ - 2] * x[last];
        for (std::size_t i = n_ - 2; i-- > 0;) x[i] -= l_[i] * x[i + 1] + m_[i] * x[last];
    }

private:
    std::size_t n_;
    bool periodic_;
    std::vector<double> piv_, l_, m_;
};

namespace detail {

/// Orthonormalize columns in place (two passes of modified Gram-Schmidt).
inline void orthonormalize(std::vector<std::vector<double>>& X) {
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < X.size(); ++j) {
            for (std::size_t k = 0; k < j; ++k) {
                double d = 0.0;
                for (std::size_t i = 0; i < X[j].size(); ++i) d += X[j][i] * X[k][i];
                for (std::size_t i = 0; i < X[j].size(); ++i) X[j][i] -= d * X[k][i];
            }
            double mx = 0.0;
            for (double v : X[j]) mx = std::max(mx, std::abs(v));
            if (mx == 0.0) fail(ErrorCode::SolverDivergence, "inverse iteration collapsed");
            double s = 0.0;
            for (double& v : X[j]) {
                v /= mx;
                s += v * v;
            }
            s = std::sqrt(s);
            for (double& v : X[j]) v /= s;
        }
    }
}

} // namespace detail

/// (1 + |lambda|) * max|v|: the scale residuals are measured against.
inline double residual_scale(double lambda, std::span<const double> v) {
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    return (1.0 + std::abs(lambda)) * mx;
}

struct EigenPair {
    double value;
    std::vector<double> vector;   ///< unit Euclidean norm
    double residual;              ///< max |(T - value) v|
};

/// Eigenpairs for a cluster of (nearly) equal eigenvalues by block inverse
/// iteration with Rayleigh-Ritz. Works for periodic and non-periodic matrices.
/// `separation` is the distance from the cluster to the rest of the spectrum;
/// the shift is placed a small fraction of it away from the cluster, which keeps
/// the (cyclic) factorization well conditioned while converging in a few steps.
inline std::vector<EigenPair> cluster_eigenpairs(const SymTridiagonal& T, std::span<const double> cluster,
                                                 std::uint64_t seed = 0x5eed, double separation = 0.0) {
    const std::size_t n = T.size(), k = cluster.size();
    double sigma = 0.0;
    for (double v : cluster) sigma += v;
    sigma /= double(k);
    double spread = cluster.back() - cluster.front();
    double offset = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(sigma));
    if (separation > 0.0) offset = std::max(offset, 1e-3 * separation);
    sigma = cluster.front() - std::max(spread, offset);
    ShiftedSolver solver(T, sigma);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<std::vector<double>> X(k, std::vector<double>(n));
    for (auto& col : X)
        for (double& v : col) v = uni(rng);
    detail::orthonormalize(X);

    std::vector<EigenPair> out;
    double worst = 0.0;
    for (int iter = 0; iter < 40; ++iter) {
        for (auto& col : X) solver.solve(col);
        detail::orthonormalize(X);
        Eigen::MatrixXd H(k, k);
        std::vector<std::vector<double>> TX(k, std::vector<double>(n));
        for (std::size_t j = 0; j < k; ++j) T.apply(X[j], TX[j]);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += X[a][i] * TX[b][i];
                H(a, b) = s;
            }
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        std::vector<std::vector<double>> Y(k, std::vector<double>(n, 0.0));
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t a = 0; a < k; ++a) {
                double c = es.eigenvectors()(a, j);
                for (std::size_t i = 0; i < n; ++i) Y[j][i] += c * X[a][i];
            }
        X = std::move(Y);
        out.clear();
        worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double lam = es.eigenvalues()(j);
            double r = T.residual(lam, X[j]);
            worst = std::max(worst, r / (residual_scale(lam, X[j])));
            out.push_back({lam, X[j], r});
        }
        if (iter >= 1 && worst <= 1e-10) return out;
    }
    if (worst > 1e-6) fail(ErrorCode::SolverDivergence, "block inverse iteration did not converge");
    return out;
}

/// Split ascending eigenvalues into clusters whose internal gaps are below `gap`.
inline std::vector<std::vector<double>> cluster_values(std::span<const double> values, double gap) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (out.empty() || values[i] - out.back().back() > gap) out.emplace_back();
        out.back().push_back(values[i]);
    }
    return out;
}

namespace detail {

/// Distance from an eigenvalue cluster to the nearest eigenvalue outside it.
inline double separation(const SymTridiagonal& T, std::span<const double> cluster) {
    double width = std::max(cluster.back() - cluster.front(), 1e-6 * std::max(1.0, std::abs(cluster.front())));
    std::size_t below = count_below(T, cluster.front() - width);
    double sep = std::numeric_limits<double>::infinity();
    if (below > 0) sep = cluster.front() - eigenvalue_by_index(T, below - 1);
    if (below + cluster.size() < T.size())
        sep = std::min(sep, eigenvalue_by_index(T, below + cluster.size()) - cluster.back());
    return std::isfinite(sep) ? std::max(sep, 0.0) : 0.0;
}

} // namespace detail

/// Eigenpairs for the given ascending eigenvalues. Isolated eigenvalues of
/// non-periodic matrices use the twisted factorization; everything else uses
/// block inverse iteration, whose Ritz values replace the bisection values.
/// (Cyclic inertia counts resolve a double eigenvalue only to about sqrt(eps)
/// relative, so the Ritz values matter for periodic problems.)
inline std::vector<EigenPair> eigenpairs(const SymTridiagonal& T, std::span<const double> values) {
    std::vector<EigenPair> out;
    double scale = 1.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    const double gap = 1e-6 * scale;
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
    for (auto& cl : cluster_values(values, gap)) {
        if (cl.size() == 1 && !T.periodic) {
            double lam = cl[0];
            auto v = twisted_eigenvector(T, lam);
            double r = T.residual(lam, v);
            // The twisted vector puts the whole eigenvalue error into row k, scaled by
            // 1/|v_k|; on long grids a step of inverse iteration spreads it out again.
            if (r > 1e-12 * residual_scale(lam, v)) {
                ShiftedSolver S(T, lam);
                auto w = v;
                for (int it = 0; it < 2; ++it) {
                    S.solve(w);
                    double nrm = 0.0;
                    for (double x : w) nrm += x * x;
                    nrm = std::sqrt(nrm);
                    for (double& x : w) x /= nrm;
                }
                double rw = T.residual(lam, w);
                if (rw < r) {
                    v = std::move(w);
                    r = rw;
                }
            }
            out.push_back({lam, std::move(v), r});
            continue;
        }
        auto pairs = cluster_eigenpairs(T, cl, seed++, detail::separation(T, cl));
        for (auto& p : pairs) out.push_back(std::move(p));
    }
    return out;
}

} // namespace qci::linalg
