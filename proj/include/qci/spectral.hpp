#pragma once

/* Joint eigenfunctions of the separable models.

   1D problems are discretized by symmetric second differences and solved with
   the windowed tridiagonal eigensolver. Joint eigenfunctions are stored in
   factored form: |u| = scale * |factor0(x0)| * |factor1(x1)|, where the SOR
   angular factor e^{i m theta} is implicit (modulus one).

   Periodic problems whose potential is even about x = 0 (all cosine-series
   data) are split into even and odd sectors, each a plain tridiagonal. This
   keeps near-degenerate pairs (one even, one odd) resolved to full precision. */

#include "qci/error.hpp"
#include "qci/linalg/tridiagonal.hpp"
#include "qci/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace qci::spectral {

using models::Base;

struct Grid1D {
    /// Closed: n points including both endpoints. Periodic: n points, x_n == x_0.
    /// Cells: n cell centres.
    enum class Layout { Closed, Periodic, Cells };

    double lo = 0.0, hi = 1.0;
    int n = 64;
    Layout layout = Layout::Closed;

    static Grid1D closed(double lo, double hi, int n) { return make(lo, hi, n, Layout::Closed); }
    static Grid1D periodic(double lo, double hi, int n) { return make(lo, hi, n, Layout::Periodic); }
    static Grid1D cells(double lo, double hi, int n) { return make(lo, hi, n, Layout::Cells); }

    double spacing() const { return layout == Layout::Closed ? (hi - lo) / (n - 1) : (hi - lo) / n; }

    double point(int i) const {
        const double d = spacing();
        return layout == Layout::Cells ? lo + (i + 0.5) * d : lo + i * d;
    }

    std::vector<double> points() const {
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i) p[i] = point(i);
        return p;
    }

private:
    static Grid1D make(double lo, double hi, int n, Layout layout) {
        require(n >= 64, "grid needs at least 64 points");
        require(hi > lo, "grid needs hi > lo");
        Grid1D g;
        g.lo = lo;
        g.hi = hi;
        g.n = n;
        g.layout = layout;
        return g;
    }
};

enum class Boundary { Dirichlet, Periodic, Regularity };

inline std::string to_string(Boundary b) {
    switch (b) {
    case Boundary::Dirichlet: return "Dirichlet";
    case Boundary::Periodic: return "Periodic";
    case Boundary::Regularity: return "Regularity";
    }
    return "?";
}

/// Energy window center +- halfWidth * h.
struct SpectralWindow {
    double center = 1.0;
    double halfWidth = 5.0;

    double lo(double h) const { return center - halfWidth * h; }
    double hi(double h) const { return center + halfWidth * h; }
};

struct EigenSolution1D {
    double lambda = 0.0;
    std::vector<double> values;   ///< real part on the grid
    std::vector<double> imag;     ///< empty unless the factor is a complex travelling wave
    Boundary bc = Boundary::Dirichlet;
    double residual = 0.0;        ///< max |(T - lambda) y| of the symmetric discrete problem
    Grid1D grid;

    bool is_complex() const { return !imag.empty(); }
    double modulus(std::size_t i) const {
        return imag.empty() ? std::abs(values[i]) : std::hypot(values[i], imag[i]);
    }
};

struct JointEigenfunction {
    std::string model;
    double h = 0.0;
    std::array<int, 2> qn{};       ///< (m, radial index) or (j, k)
    double e1 = 0.0, e2 = 0.0;
    std::vector<EigenSolution1D> factors;
    double scale = 1.0;            ///< |u| = scale * prod |factor|
    double residual = 0.0;         ///< worst relative factor residual

    double modulus(std::size_t i0, std::size_t i1 = 0) const {
        double v = scale * factors[0].modulus(i0);
        if (factors.size() > 1) v *= factors[1].modulus(i1);
        return v;
    }
};

/// Residual bound every returned eigenpair must meet, relative to (1+|lambda|) max|y|.
inline constexpr double kResidualTolerance = 1e-9;

namespace detail {

inline void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) fail(ErrorCode::PreconditionViolation, std::string(what) + " must be finite");
}

inline double relative_residual(const linalg::SymTridiagonal& T, double lambda, const std::vector<double>& y) {
    return T.residual(lambda, y) / linalg::residual_scale(lambda, y);
}

inline void check_residual(double rel) {
    if (!(rel <= kResidualTolerance)) fail(ErrorCode::SolverDivergence, "eigenvector residual above tolerance");
}

/// Eigenpairs of T with eigenvalues in [lo, hi].
inline std::vector<linalg::EigenPair> window_pairs(const linalg::SymTridiagonal& T, double lo, double hi) {
    auto w = linalg::eigenvalues_in(T, lo, std::nextafter(hi, std::numeric_limits<double>::infinity()));
    return linalg::eigenpairs(T, w.values);
}

/// -h^2 D^2 + V on the interior of a closed grid (zero boundary values).
inline linalg::SymTridiagonal dirichlet_operator(const std::vector<double>& V, double h, double dx) {
    const std::size_t m = V.size() - 2;
    const double s = h * h / (dx * dx);
    linalg::SymTridiagonal T;
    T.diag.resize(m);
    T.off.assign(m - 1, -s);
    for (std::size_t i = 0; i < m; ++i) T.diag[i] = 2.0 * s + V[i + 1];
    return T;
}

/// Periodic operator -h^2 D^2 + q0 + e q1 on x_i = lo + i dx, split by parity
/// about x_0 when the samples are even (q(x_i) = q(x_{n-i})).
class ParityOperator {
public:
    ParityOperator(std::vector<double> q0, std::vector<double> q1, double h, double dx)
        : q0_(std::move(q0)), q1_(std::move(q1)), n_(int(q0_.size())), s_(h * h / (dx * dx)), dx_(dx) {
        require(n_ % 2 == 0 && n_ >= 64, "parity split needs an even periodic grid");
    }

    static bool is_even(const std::vector<double>& q) {
        const std::size_t n = q.size();
        if (n % 2 != 0) return false;
        double scale = 0.0;
        for (double v : q) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(q[i] - q[n - i]) > 1e-14 * std::max(scale, 1.0)) return false;
        return true;
    }

    int n() const { return n_; }
    double spacing() const { return dx_; }

    /// parity 0: basis e_0, (e_i + e_{n-i})/sqrt2, e_{n/2}; parity 1: (e_i - e_{n-i})/sqrt2.
    linalg::SymTridiagonal sector(int parity, double e) const {
        const int m = n_ / 2;
        linalg::SymTridiagonal T;
        if (parity == 0) {
            T.diag.resize(m + 1);
            T.off.assign(m, -s_);
            for (int i = 0; i <= m; ++i) T.diag[i] = 2.0 * s_ + q0_[i] + e * q1_[i];
            T.off[0] = -std::numbers::sqrt2 * s_;
            T.off[m - 1] = -std::numbers::sqrt2 * s_;
        } else {
            T.diag.resize(m - 1);
            T.off.assign(m - 2, -s_);
            for (int i = 1; i < m; ++i) T.diag[i - 1] = 2.0 * s_ + q0_[i] + e * q1_[i];
        }
        return T;
    }

    /// Full-period samples normalized in L2(grid) from a unit sector vector.
    std::vector<double> expand(int parity, const std::vector<double>& y) const {
        const int m = n_ / 2;
        std::vector<double> v(n_, 0.0);
        const double c = 1.0 / std::sqrt(dx_);
        const double r = c / std::numbers::sqrt2;
        if (parity == 0) {
            v[0] = y[0] * c;
            v[m] = y[m] * c;
            for (int i = 1; i < m; ++i) v[i] = v[n_ - i] = y[i] * r;
        } else {
            for (int i = 1; i < m; ++i) {
                v[i] = y[i - 1] * r;
                v[n_ - i] = -v[i];
            }
        }
        return v;
    }

    /// Residual of the full periodic operator on grid samples v (relative scale).
    double periodic_residual(double e, double lambda, const std::vector<double>& v) const {
        double r = 0.0, mx = 0.0;
        for (int i = 0; i < n_; ++i) {
            int im = (i + n_ - 1) % n_, ip = (i + 1) % n_;
            double Tv = (2.0 * s_ + q0_[i] + e * q1_[i]) * v[i] - s_ * (v[im] + v[ip]);
            r = std::max(r, std::abs(Tv - lambda * v[i]));
            mx = std::max(mx, std::abs(v[i]));
        }
        return r / ((1.0 + std::abs(lambda)) * std::max(mx, 1e-300));
    }

private:
    std::vector<double> q0_, q1_;
    int n_;
    double s_, dx_;
};

inline linalg::SymTridiagonal cyclic_operator(const std::vector<double>& V, double h, double dx) {
    const std::size_t n = V.size();
    const double s = h * h / (dx * dx);
    linalg::SymTridiagonal T;
    T.periodic = true;
    T.diag.resize(n);
    T.off.assign(n - 1, -s);
    T.corner = -s;
    for (std::size_t i = 0; i < n; ++i) T.diag[i] = 2.0 * s + V[i];
    return T;
}

} // namespace detail

/// Eigenpairs of -h^2 d^2/dx^2 + V with zero boundary values, eigenvalues in the window.
/// `potential` holds samples at every grid point (endpoint values are unused).
inline std::vector<EigenSolution1D> solve_sl_dirichlet(const std::vector<double>& potential, double h,
                                                       const Grid1D& grid, const SpectralWindow& window) {
    require(h > 0.0, "h must be positive");
    require(grid.layout == Grid1D::Layout::Closed, "Dirichlet problems use a closed grid");
    require(int(potential.size()) == grid.n, "potential must be sampled on the grid");
    require(window.halfWidth > 0.0, "window half-width must be positive");
    std::vector<double> interior(potential.begin() + 1, potential.end() - 1);
    detail::check_finite(interior, "potential");
    const double dx = grid.spacing();
    auto T = detail::dirichlet_operator(potential, h, dx);
    std::vector<EigenSolution1D> out;
    for (auto& p : detail::window_pairs(T, window.lo(h), window.hi(h))) {
        double rel = detail::relative_residual(T, p.value, p.vector);
        detail::check_residual(rel);
        EigenSolution1D s;
        s.lambda = p.value;
        s.bc = Boundary::Dirichlet;
        s.grid = grid;
        s.residual = p.residual;
        s.values.assign(grid.n, 0.0);
        const double c = 1.0 / std::sqrt(dx);
        for (std::size_t i = 0; i < p.vector.size(); ++i) s.values[i + 1] = p.vector[i] * c;
        out.push_back(std::move(s));
    }
    return out;
}

/// Eigenpairs of -h^2 d^2/dx^2 + V on a periodic grid, eigenvalues in the window.
/// Even potentials are solved sector by sector; otherwise the cyclic matrix is used.
inline std::vector<EigenSolution1D> solve_sl_periodic(const std::vector<double>& potential, double h,
                                                      const Grid1D& grid, const SpectralWindow& window) {
    require(h > 0.0, "h must be positive");
    require(grid.layout == Grid1D::Layout::Periodic, "periodic problems use a periodic grid");
    require(int(potential.size()) == grid.n, "potential must be sampled on the grid");
    require(window.halfWidth > 0.0, "window half-width must be positive");
    detail::check_finite(potential, "potential");
    const double dx = grid.spacing();
    std::vector<EigenSolution1D> out;
    auto emit = [&](double lambda, std::vector<double> v, double residual) {
        EigenSolution1D s;
        s.lambda = lambda;
        s.bc = Boundary::Periodic;
        s.grid = grid;
        s.residual = residual;
        s.values = std::move(v);
        out.push_back(std::move(s));
    };
    if (detail::ParityOperator::is_even(potential)) {
        detail::ParityOperator P(potential, std::vector<double>(potential.size(), 0.0), h, dx);
        for (int parity = 0; parity < 2; ++parity) {
            auto T = P.sector(parity, 0.0);
            for (auto& p : detail::window_pairs(T, window.lo(h), window.hi(h))) {
                detail::check_residual(detail::relative_residual(T, p.value, p.vector));
                emit(p.value, P.expand(parity, p.vector), p.residual);
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
        return out;
    }
    auto T = detail::cyclic_operator(potential, h, dx);
    const double c = 1.0 / std::sqrt(dx);
    for (auto& p : detail::window_pairs(T, window.lo(h), window.hi(h))) {
        detail::check_residual(detail::relative_residual(T, p.value, p.vector));
        for (double& x : p.vector) x *= c;
        emit(p.value, std::move(p.vector), p.residual);
    }
    return out;
}

// ---------------------------------------------------------------- harmonic oscillator

/// Grid points per unit length on 1D problems: spacing <= h / 24.
inline int points_for(double length, double h, int minimum = 1024) {
    return std::max(minimum, int(std::ceil(24.0 * length / h)) + 1);
}

/// Eigenpairs of -h^2 d^2/dx^2 + x^2 on [-L, L] (Dirichlet), eigenvalues in the window.
inline std::vector<EigenSolution1D> ho_eigs(const models::HarmonicOscillatorModel& model, double h,
                                            const SpectralWindow& window, int n = 0) {
    require(h > 0.0, "h must be positive");
    require(model.L > 2.0 * std::sqrt(std::max(window.center, 0.0)),
            "truncation length must exceed twice the turning point");
    const Grid1D grid = Grid1D::closed(-model.L, model.L, n > 0 ? n : points_for(2.0 * model.L, h));
    std::vector<double> V(grid.n);
    for (int i = 0; i < grid.n; ++i) V[i] = grid.point(i) * grid.point(i);
    return solve_sl_dirichlet(V, h, grid, window);
}

// ---------------------------------------------------------------- surface of revolution

/// Radial operator. LaplaceBeltrami: -h^2 f^{-1} (f v')' + m^2 h^2 f^{-2} v, the exact
/// separation of the Laplacian on dr^2 + f^2 dtheta^2, on cell centres with zero flux
/// through the pole faces. Reduced: -h^2 v'' + m^2 h^2 f^{-2} v with Dirichlet (m != 0)
/// or Neumann (m = 0) conditions at the poles.
enum class RadialScheme { LaplaceBeltrami, Reduced };

struct SorOptions {
    RadialScheme scheme = RadialScheme::LaplaceBeltrami;
    int n = 0;    ///< radial cells; 0 picks spacing h/24 per unit length (48/h cells on (-1,1))
};

namespace detail {

class SorRadial {
public:
    SorRadial(const models::RevolutionProfile& p, double h, int n, RadialScheme scheme)
        : h_(h), scheme_(scheme), grid_(Grid1D::cells(-1.0, 1.0, n)) {
        const double dx = grid_.spacing();
        fc_.resize(n);
        ff_.resize(n + 1);
        for (int i = 0; i < n; ++i) fc_[i] = p.f(grid_.point(i));
        for (int i = 0; i <= n; ++i) ff_[i] = (i == 0 || i == n) ? 0.0 : p.f(-1.0 + i * dx);
        for (double f : fc_) require(f > 0.0, "profile must be positive at cell centres");
    }

    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& f() const { return fc_; }

    linalg::SymTridiagonal matrix(int m) const { return matrix_symbol(double(m) * double(m) * h_ * h_, m == 0); }

    /// Same operator with the angular symbol m^2 h^2 replaced by mh2.
    linalg::SymTridiagonal matrix_symbol(double mh2, bool zonal) const {
        const int n = grid_.n;
        const double dx = grid_.spacing();
        const double s = h_ * h_ / (dx * dx);
        linalg::SymTridiagonal T;
        T.diag.resize(n);
        T.off.resize(n - 1);
        if (scheme_ == RadialScheme::LaplaceBeltrami) {
            for (int i = 0; i < n; ++i)
                T.diag[i] = (s * (ff_[i] + ff_[i + 1]) + mh2 / fc_[i]) / fc_[i];
            for (int i = 0; i + 1 < n; ++i) T.off[i] = -s * ff_[i + 1] / std::sqrt(fc_[i] * fc_[i + 1]);
        } else {
            const double endDiag = zonal ? s : 3.0 * s;
            for (int i = 0; i < n; ++i) T.diag[i] = 2.0 * s + mh2 / (fc_[i] * fc_[i]);
            T.diag[0] += endDiag - 2.0 * s;
            T.diag[n - 1] += endDiag - 2.0 * s;
            std::fill(T.off.begin(), T.off.end(), -s);
        }
        return T;
    }

    /// Radial samples v with sum v^2 f dr = 1 from a unit eigenvector of matrix(m).
    std::vector<double> radial(const std::vector<double>& y) const {
        const double dx = grid_.spacing();
        std::vector<double> v(y.size());
        if (scheme_ == RadialScheme::LaplaceBeltrami) {
            for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i] / std::sqrt(fc_[i] * dx);
            return v;
        }
        double mass = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) mass += y[i] * y[i] * fc_[i] * dx;
        const double c = 1.0 / std::sqrt(mass);
        for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i] * c;
        return v;
    }

    Boundary boundary(int m) const {
        if (scheme_ == RadialScheme::LaplaceBeltrami) return Boundary::Regularity;
        return m == 0 ? Boundary::Regularity : Boundary::Dirichlet;
    }

private:
    double h_;
    RadialScheme scheme_;
    Grid1D grid_;
    std::vector<double> fc_, ff_;
};

} // namespace detail

inline int sor_default_cells(double h) { return std::max(1024, int(std::ceil(48.0 / h))); }

using JointCallback = std::function<void(const JointEigenfunction&)>;

/// Joint eigenfunctions u = v(r) e^{i m theta} / sqrt(2 pi) with E2 = m h and E1 in the window.
/// Each |m| is solved once and emitted for both signs within mRange.
inline void sor_joint_eigs(const models::RevolutionProfile& profile, double h, std::array<int, 2> mRange,
                           const SpectralWindow& window, const JointCallback& emit, const SorOptions& opt = {}) {
    require(h > 0.0, "h must be positive");
    require(mRange[0] <= mRange[1], "empty m range");
    require(window.halfWidth > 0.0, "window half-width must be positive");
    detail::SorRadial radial(profile, h, opt.n > 0 ? opt.n : sor_default_cells(h), opt.scheme);
    const int mAbsLo = (mRange[0] <= 0 && mRange[1] >= 0) ? 0 : std::min(std::abs(mRange[0]), std::abs(mRange[1]));
    const int mAbsHi = std::max(std::abs(mRange[0]), std::abs(mRange[1]));
    const double lo = window.lo(h), hi = window.hi(h);
    for (int ma = mAbsLo; ma <= mAbsHi; ++ma) {
        auto T = radial.matrix(ma);
        auto w = linalg::eigenvalues_in(T, lo, std::nextafter(hi, std::numeric_limits<double>::infinity()));
        if (w.values.empty()) {
            // the effective potential only grows with |m|
            if (linalg::count_below(T, hi) == 0) break;
            continue;
        }
        auto pairs = linalg::eigenpairs(T, w.values);
        for (std::size_t q = 0; q < pairs.size(); ++q) {
            double rel = detail::relative_residual(T, pairs[q].value, pairs[q].vector);
            detail::check_residual(rel);
            EigenSolution1D f;
            f.lambda = pairs[q].value;
            f.bc = radial.boundary(ma);
            f.grid = radial.grid();
            f.residual = pairs[q].residual;
            f.values = radial.radial(pairs[q].vector);
            JointEigenfunction u;
            u.model = "sor";
            u.h = h;
            u.e1 = pairs[q].value;
            u.scale = 1.0 / std::sqrt(2.0 * std::numbers::pi);
            u.residual = rel;
            u.factors.push_back(std::move(f));
            for (int sign : {1, -1}) {
                int m = sign * ma;
                if (m < mRange[0] || m > mRange[1] || (ma == 0 && sign < 0)) continue;
                u.qn = {m, int(w.firstIndex + q)};
                u.e2 = double(m) * h;
                emit(u);
            }
        }
    }
}

inline std::vector<JointEigenfunction> sor_joint_eigs(const models::RevolutionProfile& profile, double h,
                                                      std::array<int, 2> mRange, const SpectralWindow& window,
                                                      const SorOptions& opt = {}) {
    std::vector<JointEigenfunction> out;
    sor_joint_eigs(profile, h, mRange, window, [&](const JointEigenfunction& u) { out.push_back(u); }, opt);
    return out;
}

/// Largest |m| that can reach the window: m h <= f(0) sqrt(window top).
inline int sor_m_max(const models::RevolutionProfile& profile, double h, const SpectralWindow& window) {
    return int(std::ceil(profile.max_value() * std::sqrt(std::max(window.hi(h), 0.0)) / h)) + 1;
}

// ---------------------------------------------------------------- Liouville

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double x) const { return x >= lo && x <= hi; }
    bool empty() const { return !(hi >= lo); }
};

struct LiouvilleOptions {
    bool oscillator = false;       ///< add the potential b - a
    int n = 0;                     ///< grid points per axis (even); 0 picks max(1024, 24/h)
    Interval lambdaScan;           ///< keep separation constants in this range
    bool travelling = true;        ///< combine degenerate even/odd pairs into e^{+-} waves
    double degeneracyTol = 1e-9;   ///< relative gap below which a pair is treated as degenerate
};

inline int liouville_default_points(double h) {
    int n = std::max(1024, int(std::ceil(24.0 / h)));
    return n + (n % 2);
}

namespace detail {

/// The two separated problems at level E1 = e, with separation constant lambda:
///   A: -h^2 v'' + (qa0 + e qa1) v = lambda v,   B: -h^2 w'' + (qb0 + e qb1) w = -lambda w.
struct SeparatedPair {
    ParityOperator A, B;
};

inline SeparatedPair separated_operators(const models::LiouvilleData& data, double h, int n, bool oscillator) {
    const double dx = 1.0 / n;
    std::vector<double> a(n), b(n), qa0(n, 0.0), qb0(n, 0.0), qa1(n), qb1(n);
    for (int i = 0; i < n; ++i) {
        a[i] = data.a.value(i * dx);
        b[i] = data.b.value(i * dx);
        qa1[i] = -a[i];
        qb1[i] = -b[i];
        if (oscillator) {
            qa0[i] = -a[i] * a[i];
            qb0[i] = b[i] * b[i];
        }
    }
    return {ParityOperator(qa0, qa1, h, dx), ParityOperator(qb0, qb1, h, dx)};
}

/// Lowest `count` eigenvalues of T.
inline std::vector<double> lowest(const linalg::SymTridiagonal& T, std::size_t count) {
    if (count == 0) return {};
    double top = linalg::eigenvalue_by_index(T, count - 1);
    double lo = T.gershgorin().first - 1.0;
    auto w = linalg::eigenvalues_in(T, lo, std::nextafter(top + 1e-12 * std::max(1.0, std::abs(top)),
                                                          std::numeric_limits<double>::infinity()));
    w.values.resize(std::min(w.values.size(), count));
    return w.values;
}

/// Index-k eigenvalue of a sector as a function of e, bracketed by its values at the window ends.
class Branch {
public:
    Branch(const ParityOperator& op, int parity, std::size_t index, double atLo, double atHi)
        : op_(&op), parity_(parity), index_(index), atLo_(atLo), atHi_(atHi) {}

    double operator()(double e) const {
        auto T = op_->sector(parity_, e);
        double pad = 1e-12 * std::max(1.0, std::abs(atLo_));
        return linalg::eigenvalue_by_index(T, index_, std::min(atLo_, atHi_) - pad, std::max(atLo_, atHi_) + pad, 0.0);
    }
    double at_lo() const { return atLo_; }
    double at_hi() const { return atHi_; }

private:
    const ParityOperator* op_;
    int parity_;
    std::size_t index_;
    double atLo_, atHi_;
};

/// Root of the decreasing F on [lo, hi] with F(lo) >= 0 >= F(hi) (Illinois false position).
template <class F>
double matching_root(F&& fn, double lo, double hi, double flo, double fhi, double tol) {
    if (flo < 0.0 || fhi > 0.0) fail(ErrorCode::NoBracket, "matching function does not change sign on the E1 interval");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    int side = 0;
    double x = lo;
    for (int it = 0; it < 100; ++it) {
        x = (lo * fhi - hi * flo) / (fhi - flo);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        double fx = fn(x);
        if (std::abs(fx) <= tol || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
            return x;
        if (fx > 0.0) {
            lo = x;
            flo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if (side == 1) flo *= 0.5;
            side = 1;
        }
    }
    fail(ErrorCode::SolverDivergence, "two-parameter matching did not converge");
}

struct SectorVector {
    std::vector<double> full;    ///< grid-normalized period samples
    double residual = 0.0;       ///< relative
    double raw = 0.0;            ///< absolute sector residual
};

inline SectorVector sector_vector(const ParityOperator& op, int parity, double e, double lambda) {
    auto T = op.sector(parity, e);
    auto y = linalg::twisted_eigenvector(T, lambda);
    double raw = T.residual(lambda, y);
    double rel = raw / linalg::residual_scale(lambda, y);
    if (!(rel <= kResidualTolerance)) {
        // fall back to block inverse iteration (tiny in-sector gaps)
        std::array<double, 1> c{lambda};
        auto p = linalg::cluster_eigenpairs(T, c, 0x1234, linalg::detail::separation(T, c));
        y = std::move(p[0].vector);
        raw = T.residual(lambda, y);
        rel = raw / linalg::residual_scale(lambda, y);
    }
    detail::check_residual(rel);
    // fix the sign so that recomputing the same vector gives the same samples
    double big = 0.0;
    for (double v : y) big = std::max(big, std::abs(v));
    for (double v : y)
        if (std::abs(v) > 0.5 * big) {
            if (v < 0.0)
                for (double& w : y) w = -w;
            break;
        }
    return {op.expand(parity, y), rel, raw};
}

/// Eigenvalue of the other sector within tol of lambda, if any.
inline std::optional<double> partner(const ParityOperator& op, int parity, double e, double lambda, double tol) {
    auto T = op.sector(parity, e);
    std::size_t below = linalg::count_below(T, lambda - tol);
    if (linalg::count_below(T, lambda + tol) <= below) return std::nullopt;
    return linalg::eigenvalue_by_index(T, below, lambda - tol, lambda + tol, 0.0);
}

} // namespace detail

/// Joint eigenfunctions of a Liouville torus (or the Liouville oscillator) with
/// E1 within the window around its center.
///
/// For each pair of branch indices (j, k) the matching function
///   F(e) = lambda_j^A(e) + mu_k^B(e)
/// is strictly decreasing in e; pairs with a sign change across the window are
/// root-found. u = v(x1) w(x2) / sqrt(<a>_v + <b>_w), e2 = lambda_j^A.
inline void liouville_joint_eigs(const models::LiouvilleData& data, double h, const SpectralWindow& window,
                                 const JointCallback& emit, const LiouvilleOptions& opt = {}) {
    require(h > 0.0, "h must be positive");
    require(window.halfWidth > 0.0, "window half-width must be positive");
    if (opt.lambdaScan.empty()) return;
    const int n = opt.n > 0 ? opt.n : liouville_default_points(h);
    require(n % 2 == 0, "Liouville grids need an even point count");
    auto ops = detail::separated_operators(data, h, n, opt.oscillator);
    const auto& A = ops.A;
    const auto& B = ops.B;
    const double dx = 1.0 / n;
    const Grid1D grid = Grid1D::periodic(0.0, 1.0, n);
    const double eLo = window.lo(h), eHi = window.hi(h);

    std::vector<double> aS(n), bS(n);
    for (int i = 0; i < n; ++i) {
        aS[i] = data.a.value(i * dx);
        bS[i] = data.b.value(i * dx);
    }
    auto weighted = [&](const std::vector<double>& re, const std::vector<double>* im, const std::vector<double>& wgt) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double m2 = re[i] * re[i] + (im ? (*im)[i] * (*im)[i] : 0.0);
            s += m2 * wgt[i];
        }
        return s * dx;
    };

    for (int pa = 0; pa < 2; ++pa) {
        auto TAlo = A.sector(pa, eLo), TAhi = A.sector(pa, eHi);
        for (int pb = 0; pb < 2; ++pb) {
            auto TBlo = B.sector(pb, eLo), TBhi = B.sector(pb, eHi);
            const double mu0Hi = linalg::eigenvalue_by_index(TBhi, 0);
            const std::size_t JA = linalg::count_below(TAhi, -mu0Hi);
            if (JA == 0) continue;
            auto lamLo = detail::lowest(TAlo, JA);
            auto lamHi = detail::lowest(TAhi, JA);
            std::map<std::size_t, std::pair<double, double>> muCache;
            auto mu = [&](std::size_t k) {
                auto it = muCache.find(k);
                if (it != muCache.end()) return it->second;
                auto v = std::make_pair(linalg::eigenvalue_by_index(TBlo, k), linalg::eigenvalue_by_index(TBhi, k));
                muCache.emplace(k, v);
                return v;
            };
            for (std::size_t j = 0; j < JA && j < lamLo.size(); ++j) {
                const std::size_t kMin = linalg::count_below(TBlo, -lamLo[j]);
                const std::size_t kEnd = linalg::count_below(TBhi, -lamHi[j]);
                for (std::size_t k = kMin; k < kEnd; ++k) {
                    auto [muLo, muHi] = mu(k);
                    detail::Branch la(A, pa, j, lamLo[j], lamHi[j]);
                    detail::Branch lb(B, pb, k, muLo, muHi);
                    double flo = lamLo[j] + muLo, fhi = lamHi[j] + muHi;
                    if (flo < 0.0 || fhi > 0.0) continue;   // boundary rounding at the window ends
                    double tol = 1e-12 * (1.0 + std::abs(lamLo[j]));
                    double e = detail::matching_root([&](double x) { return la(x) + lb(x); }, eLo, eHi, flo, fhi, tol);
                    double lam = la(e);
                    double muv = lb(e);
                    if (!opt.lambdaScan.contains(lam)) continue;

                    auto va = detail::sector_vector(A, pa, e, lam);
                    auto wb = detail::sector_vector(B, pb, e, muv);
                    EigenSolution1D fa, fb;
                    fa.lambda = lam;
                    fa.values = std::move(va.full);
                    fa.residual = va.raw;
                    fb.lambda = muv;
                    fb.values = std::move(wb.full);
                    fb.residual = wb.raw;
                    fa.bc = fb.bc = Boundary::Periodic;
                    fa.grid = fb.grid = grid;
                    double rel = std::max(va.residual, wb.residual);

                    // travelling waves for degenerate even/odd pairs: the even member carries
                    // the + combination, the odd member the - combination
                    auto combine = [&](const detail::ParityOperator& op, int parity, double val, EigenSolution1D& f) {
                        if (!opt.travelling) return false;
                        double tolD = opt.degeneracyTol * (1.0 + std::abs(val));
                        auto other = detail::partner(op, 1 - parity, e, val, tolD);
                        if (!other) return false;
                        auto ov = detail::sector_vector(op, 1 - parity, e, *other);
                        rel = std::max(rel, ov.residual);
                        const double c = 1.0 / std::numbers::sqrt2;
                        std::vector<double> re(n), im(n);
                        const auto& ev = parity == 0 ? f.values : ov.full;
                        const auto& od = parity == 0 ? ov.full : f.values;
                        const double sign = parity == 0 ? 1.0 : -1.0;
                        for (int i = 0; i < n; ++i) {
                            re[i] = c * ev[i];
                            im[i] = sign * c * od[i];
                        }
                        f.values = std::move(re);
                        f.imag = std::move(im);
                        return true;
                    };
                    combine(A, pa, lam, fa);
                    combine(B, pb, muv, fb);

                    // global indices in the periodic spectrum (even member first when degenerate)
                    auto global = [&](const detail::ParityOperator& op, int parity, std::size_t idx, double val) {
                        double t = 1e-12 * (1.0 + std::abs(val));
                        auto To = op.sector(1 - parity, e);
                        return int(idx + linalg::count_below(To, parity == 0 ? val - t : val + t));
                    };

                    JointEigenfunction u;
                    u.model = opt.oscillator ? "liouville-oscillator" : "liouville";
                    u.h = h;
                    u.qn = {global(A, pa, j, lam), global(B, pb, k, muv)};
                    u.e1 = e;
                    u.e2 = lam;
                    double mass = weighted(fa.values, fa.is_complex() ? &fa.imag : nullptr, aS) +
                                  weighted(fb.values, fb.is_complex() ? &fb.imag : nullptr, bS);
                    u.scale = 1.0 / std::sqrt(mass);
                    u.residual = rel;
                    u.factors.push_back(std::move(fa));
                    u.factors.push_back(std::move(fb));
                    emit(u);
                }
            }
        }
    }
}

inline std::vector<JointEigenfunction> liouville_joint_eigs(const models::LiouvilleData& data, double h,
                                                            const SpectralWindow& window,
                                                            const LiouvilleOptions& opt = {}) {
    std::vector<JointEigenfunction> out;
    liouville_joint_eigs(data, h, window, [&](const JointEigenfunction& u) { out.push_back(u); }, opt);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.e1 != b.e1 ? a.e1 < b.e1 : a.qn < b.qn;
    });
    return out;
}

// ---------------------------------------------------------------- checks on joint eigenfunctions

/// Integral of |u|^2 against the Riemannian volume, by the grid rule of each factor.
inline double mass(const JointEigenfunction& u, const models::QciModel& model) {
    const auto& f0 = u.factors.at(0);
    const double d0 = f0.grid.spacing();
    if (u.factors.size() == 1) {
        // SOR: angular factor integrates to 2 pi
        double s = 0.0;
        for (int i = 0; i < f0.grid.n; ++i) {
            double m = f0.modulus(i);
            s += m * m * models::volume_density(model, {f0.grid.point(i), 0.0});
        }
        return s * d0 * 2.0 * std::numbers::pi * u.scale * u.scale;
    }
    const auto& f1 = u.factors[1];
    const double d1 = f1.grid.spacing();
    const auto& data = models::liouville_data(model);
    double m0 = 0, m0a = 0, m1 = 0, m1b = 0;
    for (int i = 0; i < f0.grid.n; ++i) {
        double m = f0.modulus(i);
        m0 += m * m * d0;
        m0a += m * m * data.a.value(f0.grid.point(i)) * d0;
    }
    for (int i = 0; i < f1.grid.n; ++i) {
        double m = f1.modulus(i);
        m1 += m * m * d1;
        m1b += m * m * data.b.value(f1.grid.point(i)) * d1;
    }
    return u.scale * u.scale * (m0a * m1 + m0 * m1b);
}

/// Rayleigh quotient of the discretized second operator
///   P2 = (a+b)^{-1} (b (-h^2 D1^2) - a (-h^2 D2^2)) [ - a b for the oscillator ]
/// in the (a+b)-weighted inner product, evaluated separably.
inline double p2_rayleigh(const JointEigenfunction& u, const models::LiouvilleData& data, bool oscillator) {
    require(u.factors.size() == 2, "P2 quotient needs a two-factor eigenfunction");
    const auto& v = u.factors[0];
    const auto& w = u.factors[1];
    const int n0 = v.grid.n, n1 = w.grid.n;
    const double d0 = v.grid.spacing(), d1 = w.grid.spacing();
    auto quad = [&](const EigenSolution1D& f, int n, double d) {   // <f, -h^2 D^2 f>
        double s = 0.0;
        for (int part = 0; part < (f.is_complex() ? 2 : 1); ++part) {
            const auto& x = part == 0 ? f.values : f.imag;
            for (int i = 0; i < n; ++i) {
                double lap = (2.0 * x[i] - x[(i + n - 1) % n] - x[(i + 1) % n]) / (d * d);
                s += x[i] * u.h * u.h * lap;
            }
        }
        return s * d;
    };
    auto moment = [&](const EigenSolution1D& f, int n, double d, const models::CosineSeries* c, int power) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double m = f.modulus(i);
            s += m * m * (c ? std::pow(c->value(f.grid.point(i)), power) : 1.0);
        }
        return s * d;
    };
    double v1 = moment(v, n0, d0, nullptr, 1), va = moment(v, n0, d0, &data.a, 1);
    double w1 = moment(w, n1, d1, nullptr, 1), wb = moment(w, n1, d1, &data.b, 1);
    double num = quad(v, n0, d0) * wb - va * quad(w, n1, d1);
    // -ab weighted by (a+b)
    if (oscillator) num -= moment(v, n0, d0, &data.a, 2) * wb + va * moment(w, n1, d1, &data.b, 2);
    double den = va * w1 + v1 * wb;
    return num / den;
}

// ---------------------------------------------------------------- sup norms

/// Base region as a product of per-axis interval unions (an empty list means the whole axis).
struct Region {
    std::vector<Interval> axis0, axis1;

    static Region all() { return {}; }

    bool on_axis(int axis, double c) const {
        const auto& set = axis == 0 ? axis0 : axis1;
        if (set.empty()) return true;
        return std::any_of(set.begin(), set.end(), [c](const Interval& iv) { return iv.contains(c); });
    }
    bool contains(const Base& x) const { return on_axis(0, x[0]) && on_axis(1, x[1]); }
};

struct SupNorm {
    double value = 0.0;
    Base location{};
};

/// max |u| over grid points in the region. Exact for factored u: the maximum of a
/// product of functions of separate variables is the product of the maxima.
inline SupNorm sup_norm(const JointEigenfunction& u, const Region& region) {
    auto axisMax = [&](const EigenSolution1D& f, int axis, double& best, double& at) {
        best = -1.0;
        for (int i = 0; i < f.grid.n; ++i) {
            double x = f.grid.point(i);
            if (!region.on_axis(axis, x)) continue;
            double m = f.modulus(i);
            if (m > best) {
                best = m;
                at = x;
            }
        }
        return best >= 0.0;
    };
    SupNorm out;
    double m0 = 0, x0 = 0;
    if (!axisMax(u.factors.at(0), 0, m0, x0)) fail(ErrorCode::EmptyRegion, "region contains no grid point");
    if (u.factors.size() == 1) {
        // angular factor has constant modulus; any admissible theta will do
        double theta = region.axis1.empty() ? 0.0 : region.axis1.front().lo;
        if (!region.axis1.empty() && region.axis1.front().empty()) fail(ErrorCode::EmptyRegion, "empty angular range");
        out.value = u.scale * m0;
        out.location = {x0, theta};
        return out;
    }
    double m1 = 0, x1 = 0;
    if (!axisMax(u.factors[1], 1, m1, x1)) fail(ErrorCode::EmptyRegion, "region contains no grid point");
    out.value = u.scale * m0 * m1;
    out.location = {x0, x1};
    return out;
}

/// Brute-force variant for arbitrary predicates on the product grid (SOR: 64 angles).
inline SupNorm sup_norm(const JointEigenfunction& u, const std::function<bool(const Base&)>& inRegion) {
    const auto& f0 = u.factors.at(0);
    SupNorm out;
    bool any = false;
    if (u.factors.size() == 1) {
        for (int i = 0; i < f0.grid.n; ++i) {
            for (int t = 0; t < 64; ++t) {
                Base x{f0.grid.point(i), 2.0 * std::numbers::pi * t / 64};
                if (!inRegion(x)) continue;
                double m = u.scale * f0.modulus(i);
                if (!any || m > out.value) out = {m, x};
                any = true;
                break;
            }
        }
    } else {
        const auto& f1 = u.factors[1];
        require(double(f0.grid.n) * f1.grid.n <= 5e7, "predicate sup norm limited to 5e7 grid points");
        for (int i = 0; i < f0.grid.n; ++i)
            for (int j = 0; j < f1.grid.n; ++j) {
                Base x{f0.grid.point(i), f1.grid.point(j)};
                if (!inRegion(x)) continue;
                double m = u.modulus(i, j);
                if (!any || m > out.value) out = {m, x};
                any = true;
            }
    }
    if (!any) fail(ErrorCode::EmptyRegion, "region contains no grid point");
    return out;
}

} // namespace qci::spectral
