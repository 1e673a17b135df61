#pragma once

/* Brute-force 2D eigensolver for the separable models.

   The full operator is discretized with a 5-point stencil (periodic for
   Liouville tori; cell-centred finite volume in r with zero-flux pole faces and
   periodic in theta for surfaces of revolution), symmetrized by the square root
   of the volume weight, and solved near a window by shift-invert subspace
   iteration with sparse LU solves. Eigenvalue counts in a window come from the
   inertia of sparse LDL^T factorizations, so nothing in the window is missed. */

#include "qci/error.hpp"
#include "qci/models.hpp"
#include "qci/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace qci::oracle {

inline constexpr int kMaxAxisPoints = 128;
inline constexpr double kMinH = 1.0 / 40.0;

struct OraclePair {
    double eigenvalue = 0.0;
    std::vector<double> values;   ///< u(x0_i, x1_j) at i * n1 + j, normalized in L2(dVol)
    double residual = 0.0;        ///< relative residual of the symmetrized problem
};

struct OracleResult {
    int n0 = 0, n1 = 0;
    std::vector<OraclePair> pairs;   ///< sorted by eigenvalue
    double pointsPerWavelength = 0.0;
    bool resolutionWarning = false;  ///< fewer than 8 points per wavelength at the window top
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;

/// Symmetrized operator S = W^{1/2} P W^{-1/2} and the map y -> u = W^{-1/2} y / sqrt(cell).
struct Discrete2D {
    SpMat S;
    std::vector<double> unweight;   ///< u = unweight * y gives L2(dVol)-normalized samples
    int n0 = 0, n1 = 0;
    double ppw = 0.0;
};

inline Discrete2D liouville_operator(const models::LiouvilleData& d, bool oscillator, double h, int n0, int n1,
                                     double eTop) {
    Discrete2D out;
    out.n0 = n0;
    out.n1 = n1;
    const double d0 = 1.0 / n0, d1 = 1.0 / n1;
    const double s0 = h * h / (d0 * d0), s1 = h * h / (d1 * d1);
    const int N = n0 * n1;
    std::vector<double> wgt(N);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) wgt[i * n1 + j] = d.a.value(i * d0) + d.b.value(j * d1);
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(5 * N);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const int k = i * n1 + j;
            double diag = (2.0 * s0 + 2.0 * s1) / wgt[k];
            if (oscillator) diag += d.b.value(j * d1) - d.a.value(i * d0);
            tr.emplace_back(k, k, diag);
            const int nb[4] = {((i + 1) % n0) * n1 + j, ((i + n0 - 1) % n0) * n1 + j, i * n1 + (j + 1) % n1,
                               i * n1 + (j + n1 - 1) % n1};
            const double c[4] = {s0, s0, s1, s1};
            for (int q = 0; q < 4; ++q) tr.emplace_back(k, nb[q], -c[q] / std::sqrt(wgt[k] * wgt[nb[q]]));
        }
    out.S.resize(N, N);
    out.S.setFromTriplets(tr.begin(), tr.end());
    out.unweight.resize(N);
    for (int k = 0; k < N; ++k) out.unweight[k] = 1.0 / std::sqrt(wgt[k] * d0 * d1);
    // Euclidean momentum |xi| = sqrt(E (a+b)) at most
    double kmax = std::sqrt(std::max(eTop, 1e-12) * (d.aMax + d.bMax) + (oscillator ? d.aMax * d.aMax : 0.0));
    out.ppw = 2.0 * std::numbers::pi * h / (kmax * std::max(d0, d1));
    return out;
}

inline Discrete2D sor_operator(const models::RevolutionProfile& p, double h, int n0, int n1, double eTop) {
    Discrete2D out;
    out.n0 = n0;
    out.n1 = n1;
    const auto grid = spectral::Grid1D::cells(-1.0, 1.0, n0);
    const double dr = grid.spacing(), dt = 2.0 * std::numbers::pi / n1;
    const double sr = h * h / (dr * dr), st = h * h / (dt * dt);
    std::vector<double> fc(n0), ff(n0 + 1);
    for (int i = 0; i < n0; ++i) fc[i] = p.f(grid.point(i));
    for (int i = 0; i <= n0; ++i) ff[i] = (i == 0 || i == n0) ? 0.0 : p.f(-1.0 + i * dr);
    const int N = n0 * n1;
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(5 * N);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const int k = i * n1 + j;
            const double ang = st / (fc[i] * fc[i]);
            tr.emplace_back(k, k, sr * (ff[i] + ff[i + 1]) / fc[i] + 2.0 * ang);
            if (i + 1 < n0) tr.emplace_back(k, k + n1, -sr * ff[i + 1] / std::sqrt(fc[i] * fc[i + 1]));
            if (i > 0) tr.emplace_back(k, k - n1, -sr * ff[i] / std::sqrt(fc[i] * fc[i - 1]));
            tr.emplace_back(k, i * n1 + (j + 1) % n1, -ang);
            tr.emplace_back(k, i * n1 + (j + n1 - 1) % n1, -ang);
        }
    out.S.resize(N, N);
    out.S.setFromTriplets(tr.begin(), tr.end());
    out.unweight.resize(N);
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) out.unweight[i * n1 + j] = 1.0 / std::sqrt(fc[i] * dr * dt);
    // radial wavelength 2 pi h / sqrt(E); angular 2 pi h f / sqrt(E) in theta units of f dtheta
    const double k = std::sqrt(std::max(eTop, 1e-12));
    const double fmax = p.max_value();
    out.ppw = std::min(2.0 * std::numbers::pi * h / (k * dr), 2.0 * std::numbers::pi * h / (k * fmax * dt));
    return out;
}

/// Number of eigenvalues of S below sigma (Sylvester inertia of S - sigma).
inline long inertia_below(const SpMat& S, double sigma) {
    SpMat I(S.rows(), S.cols());
    I.setIdentity();
    for (int attempt = 0; attempt < 4; ++attempt) {
        double s = sigma * (1.0 + 1e-13 * attempt) + 1e-14 * attempt;
        SpMat M = S - s * I;
        Eigen::SimplicialLDLT<SpMat> ldlt(M);
        if (ldlt.info() != Eigen::Success) continue;
        const auto& D = ldlt.vectorD();
        bool zero = false;
        long neg = 0;
        for (Eigen::Index i = 0; i < D.size(); ++i) {
            if (D(i) == 0.0) zero = true;
            if (D(i) < 0.0) ++neg;
        }
        if (!zero) return neg;
    }
    fail(ErrorCode::LinearSolveFailure, "LDL^T inertia count failed");
}

/// Eigenpairs of S with eigenvalues in [lo, hi), expecting exactly `count` of them.
inline std::vector<std::pair<double, Eigen::VectorXd>> window_solve(const SpMat& S, double lo, double hi, long count,
                                                                    std::uint64_t seed) {
    std::vector<std::pair<double, Eigen::VectorXd>> out;
    if (count <= 0) return out;
    const Eigen::Index N = S.rows();
    const double sigma = 0.5 * (lo + hi);
    SpMat I(N, N);
    I.setIdentity();
    SpMat M = S - sigma * I;
    M.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) fail(ErrorCode::LinearSolveFailure, "sparse LU factorization failed");

    const Eigen::Index p = std::min<Eigen::Index>(N, count + std::max<long>(8, count / 2));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(N, p);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = g(rng);

    const double scale = 1.0 + std::max(std::abs(lo), std::abs(hi));
    for (int it = 0; it < 300; ++it) {
        Eigen::MatrixXd Y = lu.solve(X);
        if (lu.info() != Eigen::Success || !Y.allFinite()) fail(ErrorCode::LinearSolveFailure, "sparse solve failed");
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
        X = qr.householderQ() * Eigen::MatrixXd::Identity(N, p);
        Eigen::MatrixXd SX = S * X;
        Eigen::MatrixXd H = X.transpose() * SX;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
        X = X * es.eigenvectors();
        SX = SX * es.eigenvectors();
        out.clear();
        bool converged = true;
        for (Eigen::Index j = 0; j < p; ++j) {
            double th = es.eigenvalues()(j);
            if (th < lo || th >= hi) continue;
            double r = (SX.col(j) - th * X.col(j)).norm();
            if (r > 1e-10 * scale) converged = false;
            out.emplace_back(th, X.col(j));
        }
        if (converged && long(out.size()) == count) return out;
    }
    fail(ErrorCode::SolverDivergence, "shift-invert subspace iteration did not converge");
}

inline OracleResult solve(const Discrete2D& D, double lo, double hi) {
    OracleResult res;
    res.n0 = D.n0;
    res.n1 = D.n1;
    res.pointsPerWavelength = D.ppw;
    res.resolutionWarning = D.ppw < 8.0;
    // split the window until each piece holds at most 24 eigenvalues
    struct Piece {
        double lo, hi;
        long below, count;
    };
    const long cLo = inertia_below(D.S, lo), cHi = inertia_below(D.S, hi);
    std::vector<Piece> todo{{lo, hi, cLo, cHi - cLo}}, pieces;
    while (!todo.empty()) {
        Piece pc = todo.back();
        todo.pop_back();
        if (pc.count <= 24 || pc.hi - pc.lo < 1e-9 * (1.0 + std::abs(pc.hi))) {
            pieces.push_back(pc);
            continue;
        }
        double mid = 0.5 * (pc.lo + pc.hi);
        long cm = inertia_below(D.S, mid);
        todo.push_back({pc.lo, mid, pc.below, cm - pc.below});
        todo.push_back({mid, pc.hi, cm, pc.below + pc.count - cm});
    }
    std::uint64_t seed = 0x0c1e;
    for (const auto& pc : pieces) {
        for (auto& [th, y] : window_solve(D.S, pc.lo, pc.hi, pc.count, seed++)) {
            OraclePair op;
            op.eigenvalue = th;
            Eigen::VectorXd r = D.S * y - th * y;
            op.residual = r.norm() / ((1.0 + std::abs(th)) * y.norm());
            op.values.resize(y.size());
            for (Eigen::Index k = 0; k < y.size(); ++k) op.values[k] = y(k) * D.unweight[k];
            res.pairs.push_back(std::move(op));
        }
    }
    std::sort(res.pairs.begin(), res.pairs.end(),
              [](const OraclePair& a, const OraclePair& b) { return a.eigenvalue < b.eigenvalue; });
    return res;
}

} // namespace detail

/// Eigenpairs of the full 2D operator P1 with eigenvalues in the window
/// [center - halfWidth h, center + halfWidth h]. counts = points per axis
/// ((x1, x2) for Liouville, (r cells, theta points) for SOR).
inline OracleResult oracle_2d(const models::QciModel& model, double h, const spectral::SpectralWindow& window,
                              std::array<int, 2> counts) {
    require(counts[0] >= 16 && counts[1] >= 16, "oracle grid needs at least 16 points per axis");
    require(counts[0] <= kMaxAxisPoints && counts[1] <= kMaxAxisPoints, "oracle grid is capped at 128 per axis");
    require(h >= kMinH * (1.0 - 1e-12), "oracle needs h >= 1/40");
    const double lo = window.lo(h), hi = std::nextafter(window.hi(h), std::numeric_limits<double>::infinity());
    detail::Discrete2D D = std::visit(
        models::overloaded{
            [&](const models::SurfaceOfRevolution& s) { return detail::sor_operator(s.profile, h, counts[0], counts[1], hi); },
            [&](const models::LiouvilleTorus& t) {
                return detail::liouville_operator(t.data, false, h, counts[0], counts[1], hi);
            },
            [&](const models::LiouvilleOscillator& o) {
                return detail::liouville_operator(o.data, true, h, counts[0], counts[1], hi);
            },
            [&](const models::HarmonicOscillatorModel&) -> detail::Discrete2D {
                fail(ErrorCode::Unsupported, "the 2D oracle needs a two-dimensional model");
            }},
        model);
    return detail::solve(D, lo, hi);
}

// ---------------------------------------------------------------- comparison with the separated solvers

/// Separated eigenfunction sampled on the oracle grid (complex in general).
struct SampledEigen {
    double eigenvalue = 0.0;
    std::array<int, 2> qn{};
    std::vector<std::complex<double>> values;
};

/// Separated SOR spectrum on the oracle grid: radial finite volume with the angular
/// symbol of the periodic second difference in place of m^2.
inline std::vector<SampledEigen> sor_separated_on_grid(const models::RevolutionProfile& p, double h,
                                                       const spectral::SpectralWindow& window, int n0, int n1) {
    spectral::detail::SorRadial radial(p, h, n0, spectral::RadialScheme::LaplaceBeltrami);
    const double dt = 2.0 * std::numbers::pi / n1;
    const double lo = window.lo(h), hi = window.hi(h);
    std::vector<SampledEigen> out;
    for (int m = -(n1 / 2) + 1; m <= n1 / 2; ++m) {
        double sym = 4.0 * std::pow(std::sin(0.5 * m * dt), 2) / (dt * dt);
        auto T = radial.matrix_symbol(sym * h * h, m == 0);
        auto pairs = spectral::detail::window_pairs(T, lo, hi);
        for (std::size_t q = 0; q < pairs.size(); ++q) {
            auto v = radial.radial(pairs[q].vector);
            SampledEigen s;
            s.eigenvalue = pairs[q].value;
            s.qn = {m, int(q)};
            s.values.resize(std::size_t(n0) * n1);
            const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
            for (int i = 0; i < n0; ++i)
                for (int j = 0; j < n1; ++j) s.values[i * n1 + j] = c * v[i] * std::polar(1.0, m * j * dt);
            out.push_back(std::move(s));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.eigenvalue < b.eigenvalue; });
    return out;
}

inline std::vector<SampledEigen> sample(const std::vector<spectral::JointEigenfunction>& us, int n0, int n1) {
    std::vector<SampledEigen> out;
    for (const auto& u : us) {
        const auto& f0 = u.factors.at(0);
        const auto& f1 = u.factors.at(1);
        require(f0.grid.n == n0 && f1.grid.n == n1, "separated factors must live on the oracle grid");
        SampledEigen s;
        s.eigenvalue = u.e1;
        s.qn = u.qn;
        s.values.resize(std::size_t(n0) * n1);
        auto z = [](const spectral::EigenSolution1D& f, int i) {
            return std::complex<double>(f.values[i], f.is_complex() ? f.imag[i] : 0.0);
        };
        for (int i = 0; i < n0; ++i)
            for (int j = 0; j < n1; ++j) s.values[i * n1 + j] = u.scale * z(f0, i) * z(f1, j);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.eigenvalue < b.eigenvalue; });
    return out;
}

/// Basis-independent sup norm of an eigenspace: max_x sqrt(rho(x) / d) with
/// rho = U^* G^{-1} U the reproducing kernel diagonal (G the Gram matrix in the
/// weighted inner product). Equals sup|u| for a single eigenfunction.
inline double cluster_envelope(const std::vector<const std::vector<std::complex<double>>*>& members,
                               const std::vector<double>& weight) {
    const std::size_t d = members.size();
    const std::size_t N = members[0]->size();
    Eigen::MatrixXcd G(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            std::complex<double> s = 0.0;
            for (std::size_t k = 0; k < N; ++k) s += std::conj((*members[a])[k]) * (*members[b])[k] * weight[k];
            G(a, b) = s;
        }
    Eigen::MatrixXcd Gi = G.inverse();
    double best = 0.0;
    Eigen::VectorXcd U(d);
    for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t a = 0; a < d; ++a) U(a) = (*members[a])[k];
        double rho = (U.adjoint() * Gi * U)(0).real();
        best = std::max(best, rho);
    }
    return std::sqrt(best / double(d));
}

struct ComparisonRow {
    double h = 0.0;
    std::array<int, 2> qn{};
    double separatedEig = 0.0, oracleEig = 0.0, relDiff = 0.0;
    double supSeparated = 0.0, supOracle = 0.0, supRelDiff = 0.0;
    int clusterSize = 1;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    int separatedCount = 0, oracleCount = 0;
    bool bijective = false;
    bool resolutionWarning = false;
    double maxRelDiff = 0.0, maxSupRelDiff = 0.0;
};

/// Runs the oracle and the separated solver on the same grid and pairs the
/// spectra in order. Near-degenerate eigenvalues (relative gap below 1e-8) are
/// compared as clusters through their basis-independent envelope.
inline Comparison oracle_compare(const models::QciModel& model, double h, const spectral::SpectralWindow& window,
                                 std::array<int, 2> counts) {
    auto orc = oracle_2d(model, h, window, counts);
    const int n0 = counts[0], n1 = counts[1];
    std::vector<SampledEigen> sep;
    std::vector<double> weight(std::size_t(n0) * n1);
    std::visit(models::overloaded{
                   [&](const models::SurfaceOfRevolution& s) {
                       sep = sor_separated_on_grid(s.profile, h, window, n0, n1);
                       const auto g = spectral::Grid1D::cells(-1.0, 1.0, n0);
                       const double cell = g.spacing() * 2.0 * std::numbers::pi / n1;
                       for (int i = 0; i < n0; ++i)
                           for (int j = 0; j < n1; ++j) weight[i * n1 + j] = s.profile.f(g.point(i)) * cell;
                   },
                   [&](const auto& t) {
                       if constexpr (std::is_same_v<std::decay_t<decltype(t)>, models::HarmonicOscillatorModel>) {
                           fail(ErrorCode::Unsupported, "the 2D oracle needs a two-dimensional model");
                       } else {
                           require(n0 == n1, "Liouville comparison needs equal axis counts");
                           spectral::LiouvilleOptions opt;
                           opt.n = n0;
                           opt.oscillator = std::is_same_v<std::decay_t<decltype(t)>, models::LiouvilleOscillator>;
                           sep = sample(spectral::liouville_joint_eigs(t.data, h, window, opt), n0, n1);
                           const double cell = 1.0 / (double(n0) * n1);
                           for (int i = 0; i < n0; ++i)
                               for (int j = 0; j < n1; ++j)
                                   weight[i * n1 + j] = (t.data.a.value(double(i) / n0) + t.data.b.value(double(j) / n1)) * cell;
                       }
                   }},
               model);

    Comparison cmp;
    cmp.separatedCount = int(sep.size());
    cmp.oracleCount = int(orc.pairs.size());
    cmp.bijective = sep.size() == orc.pairs.size();
    cmp.resolutionWarning = orc.resolutionWarning;
    const std::size_t count = std::min(sep.size(), orc.pairs.size());
    std::vector<std::vector<std::complex<double>>> oc(count);
    for (std::size_t i = 0; i < count; ++i) oc[i].assign(orc.pairs[i].values.begin(), orc.pairs[i].values.end());

    std::size_t start = 0;
    while (start < count) {
        std::size_t end = start + 1;
        while (end < count && sep[end].eigenvalue - sep[end - 1].eigenvalue <= 1e-8 * (1.0 + std::abs(sep[end].eigenvalue)))
            ++end;
        std::vector<const std::vector<std::complex<double>>*> ms, mo;
        for (std::size_t i = start; i < end; ++i) {
            ms.push_back(&sep[i].values);
            mo.push_back(&oc[i]);
        }
        double es = cluster_envelope(ms, weight), eo = cluster_envelope(mo, weight);
        for (std::size_t i = start; i < end; ++i) {
            ComparisonRow r;
            r.h = h;
            r.qn = sep[i].qn;
            r.separatedEig = sep[i].eigenvalue;
            r.oracleEig = orc.pairs[i].eigenvalue;
            r.relDiff = std::abs(r.separatedEig - r.oracleEig) / std::abs(r.oracleEig);
            r.supSeparated = es;
            r.supOracle = eo;
            r.supRelDiff = std::abs(es - eo) / eo;
            r.clusterSize = int(end - start);
            cmp.maxRelDiff = std::max(cmp.maxRelDiff, r.relDiff);
            cmp.maxSupRelDiff = std::max(cmp.maxSupRelDiff, r.supRelDiff);
            cmp.rows.push_back(r);
        }
        start = end;
    }
    return cmp;
}

} // namespace qci::oracle
