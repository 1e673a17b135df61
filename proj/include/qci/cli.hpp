#pragma once

/* Config-driven experiment runner. A run reads one JSON config, computes the
   experiment, and writes results.csv, errors.csv, summary.json and, last,
   manifest.json into the output directory. */

#include "qci/action.hpp"
#include "qci/asymptotics.hpp"
#include "qci/classical.hpp"
#include "qci/fbi.hpp"
#include "qci/io.hpp"
#include "qci/models.hpp"
#include "qci/oracle2d.hpp"
#include "qci/spectral.hpp"

#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <variant>

namespace qci::cli {

using io::json;
using models::Base;

inline constexpr const char* kToolVersion = "qci 0.1.0";

// ---------------------------------------------------------------- configuration

struct SpectrumParams {
    double h = 0.0;
    std::optional<std::array<int, 2>> mRange;
    spectral::Interval e2Band;
    spectral::RadialScheme scheme = spectral::RadialScheme::LaplaceBeltrami;
};

struct SweepParams {
    std::vector<double> hValues;
    std::string region = "global";
    std::optional<std::array<int, 2>> mRange;
    spectral::Interval e2Band;
    spectral::RadialScheme scheme = spectral::RadialScheme::LaplaceBeltrami;
};

struct DecayParams {
    std::vector<double> hValues;
    double epsilon = 0.05;
    spectral::Interval region;
    double e2 = 0.0;   ///< SOR: family E2 = m h
};

struct ActionParams {
    classical::EnergyPair energy;
    std::vector<Base> points;
};

struct ClassifyParams {
    std::vector<classical::EnergyPair> energies;
};

struct FbiParams {
    double h = 0.0;
    int m = 0;                  ///< plane wave e^{imx}
    double mu = 1.0;
    int nx = 64;
    int nxi = 241;
    double xiMax = 3.0;
    int samples = 0;            ///< 0: 16 per wavelength at xiMax
    double cutoffRadius = 0.25 * fbi::kCircumference;
    double tubeRadius = 0.0;    ///< 0: 3 sqrt(h)
    double offshellDistance = 0.5;
};

struct OracleParams {
    double h = 0.0;
    std::array<int, 2> counts{64, 64};
};

using Params = std::variant<SpectrumParams, SweepParams, DecayParams, ActionParams, ClassifyParams, FbiParams, OracleParams>;

struct RunConfig {
    std::string experiment;
    std::optional<models::QciModel> model;
    spectral::SpectralWindow window;
    Params params;
    std::string output;   ///< may be overridden on the command line
    json canonical;       ///< the config without "output", keys sorted
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"spectrum", "supnorm-sweep", "decay", "action", "classify", "fbi", "oracle-compare"};
    return names;
}

namespace detail {

[[noreturn]] inline void config_fail(const std::string& msg) { fail(ErrorCode::ConfigError, msg); }

inline models::QciModel parse_model(io::Fields f) {
    const std::string type = f.get<std::string>("type");
    models::QciModel model;
    if (type == "sor") {
        auto profile = f.get_or<std::string>("profile", "cosine");
        auto amp = f.get_or<double>("amplitude", 1.0);
        if (!(amp > 0.0)) config_fail(f.where("amplitude") + ": must be positive");
        model = models::SurfaceOfRevolution{models::RevolutionProfile::named(profile, amp)};
    } else if (type == "liouville" || type == "liouville-oscillator") {
        auto a = f.get<std::vector<double>>("a");
        auto b = f.get<std::vector<double>>("b");
        if (a.empty() || b.empty()) config_fail(f.where() + ": cosine coefficient lists must be non-empty");
        models::LiouvilleData d(a, b);
        if (type == "liouville") model = models::LiouvilleTorus{d};
        else model = models::LiouvilleOscillator{d};
    } else if (type == "ho") {
        model = models::HarmonicOscillatorModel{f.get_or<double>("E", 1.0), f.get_or<double>("L", 3.0)};
    } else {
        config_fail(f.where("type") + ": unknown model type '" + type + "'");
    }
    f.finish();
    auto rep = models::validate_model(model);
    if (!rep.ok()) {
        std::string failed;
        for (const auto& c : rep.checks)
            if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
        config_fail(f.where() + ": model violates " + failed);
    }
    return model;
}

inline spectral::Interval parse_interval(io::Fields& f, const std::string& key, spectral::Interval fallback = {}) {
    if (!f.has(key)) return fallback;
    auto v = f.get<std::vector<double>>(key);
    if (v.size() != 2 || !(v[0] <= v[1])) config_fail(f.where(key) + ": expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

inline std::optional<std::array<int, 2>> parse_m_range(io::Fields& f) {
    if (!f.has("mRange")) return std::nullopt;
    auto v = f.get<std::vector<int>>("mRange");
    if (v.size() != 2 || v[0] > v[1]) config_fail(f.where("mRange") + ": expected [lo, hi] with lo <= hi");
    return std::array<int, 2>{v[0], v[1]};
}

inline spectral::RadialScheme parse_scheme(io::Fields& f) {
    auto s = f.get_or<std::string>("scheme", "laplace-beltrami");
    if (s == "laplace-beltrami") return spectral::RadialScheme::LaplaceBeltrami;
    if (s == "reduced") return spectral::RadialScheme::Reduced;
    config_fail(f.where("scheme") + ": expected 'laplace-beltrami' or 'reduced'");
}

inline double positive(io::Fields& f, const std::string& key) {
    double v = f.get<double>(key);
    if (!(v > 0.0)) config_fail(f.where(key) + ": must be positive");
    return v;
}

inline std::vector<double> parse_h_values(io::Fields& f, const std::string& key, bool sweep) {
    if (!sweep && !f.has(key)) config_fail(f.where(key) + ": missing required key");
    std::vector<double> hs = f.has(key) ? f.get<std::vector<double>>(key) : asymptotics::default_h_sequence();
    if (hs.empty()) config_fail(f.where(key) + ": empty");
    for (double h : hs)
        if (!(h > 0.0)) config_fail(f.where(key) + ": h values must be positive");
    for (std::size_t i = 1; i < hs.size(); ++i)
        if (!(hs[i] < hs[i - 1])) config_fail(f.where(key) + ": h values must be strictly decreasing");
    if (sweep) {
        try {
            asymptotics::HSweep{hs, {}, {}}.validate();
        } catch (const Error& e) {
            config_fail(f.where(key) + ": " + e.what());
        }
    }
    return hs;
}

inline Params parse_params(const std::string& experiment, io::Fields f, const std::optional<models::QciModel>& model) {
    const bool sor = model && std::holds_alternative<models::SurfaceOfRevolution>(*model);
    Params out;
    if (experiment == "spectrum") {
        SpectrumParams p;
        p.h = positive(f, "h");
        p.mRange = parse_m_range(f);
        p.e2Band = parse_interval(f, "e2Band");
        p.scheme = parse_scheme(f);
        out = p;
    } else if (experiment == "supnorm-sweep") {
        SweepParams p;
        p.hValues = parse_h_values(f, "hValues", true);
        p.region = f.get_or<std::string>("region", "global");
        try {
            asymptotics::named_region(p.region);
        } catch (const Error& e) {
            config_fail(f.where("region") + ": " + e.what());
        }
        p.mRange = parse_m_range(f);
        p.e2Band = parse_interval(f, "e2Band");
        p.scheme = parse_scheme(f);
        out = p;
    } else if (experiment == "decay") {
        DecayParams p;
        p.hValues = parse_h_values(f, "hValues", false);
        p.epsilon = f.get_or<double>("epsilon", 0.05);
        if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) config_fail(f.where("epsilon") + ": must lie in (0, 1)");
        p.region = parse_interval(f, "region");
        if (!f.has("region")) config_fail(f.where("region") + ": missing required key");
        if (sor) p.e2 = positive(f, "e2");
        else if (!std::holds_alternative<models::HarmonicOscillatorModel>(*model))
            config_fail(f.where() + ": decay runs on the 'sor' and 'ho' models");
        out = p;
    } else if (experiment == "action") {
        ActionParams p;
        p.energy = {f.get<double>("e1"), f.get_or<double>("e2", 0.0)};
        auto pts = f.get<std::vector<std::vector<double>>>("points");
        for (const auto& q : pts) {
            if (q.empty() || q.size() > 2) config_fail(f.where("points") + ": each point has 1 or 2 coordinates");
            p.points.push_back({q[0], q.size() > 1 ? q[1] : 0.0});
        }
        out = p;
    } else if (experiment == "classify") {
        ClassifyParams p;
        auto es = f.get<std::vector<std::vector<double>>>("energies");
        for (const auto& e : es) {
            if (e.size() != 2) config_fail(f.where("energies") + ": each energy is [e1, e2]");
            p.energies.push_back({e[0], e[1]});
        }
        if (p.energies.empty()) config_fail(f.where("energies") + ": empty");
        out = p;
    } else if (experiment == "fbi") {
        FbiParams p;
        p.h = positive(f, "h");
        p.m = f.get<int>("m");
        p.mu = f.get_or<double>("mu", p.mu);
        p.nx = f.get_or<int>("nx", p.nx);
        p.nxi = f.get_or<int>("nxi", p.nxi);
        p.xiMax = f.get_or<double>("xiMax", p.xiMax);
        p.samples = f.get_or<int>("samples", 0);
        p.cutoffRadius = f.get_or<double>("cutoffRadius", p.cutoffRadius);
        p.tubeRadius = f.get_or<double>("tubeRadius", 3.0 * std::sqrt(p.h));
        p.offshellDistance = f.get_or<double>("offshellDistance", p.offshellDistance);
        if (!(p.mu > 0.0) || p.nx < 1 || p.nxi < 2 || !(p.xiMax > 0.0) || p.samples < 0)
            config_fail(f.where() + ": need mu > 0, nx >= 1, nxi >= 2, xiMax > 0, samples >= 0");
        out = p;
    } else if (experiment == "oracle-compare") {
        OracleParams p;
        p.h = positive(f, "h");
        if (f.has("counts")) {
            auto c = f.get<std::vector<int>>("counts");
            if (c.size() != 2) config_fail(f.where("counts") + ": expected [n0, n1]");
            p.counts = {c[0], c[1]};
        }
        out = p;
    }
    f.finish();
    return out;
}

} // namespace detail

/// Validates a parsed JSON config. Every failure is a ConfigError naming the field path.
inline RunConfig parse_config(const json& j) {
    io::Fields root(j, "");
    RunConfig cfg;
    cfg.experiment = root.get<std::string>("experiment");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
        detail::config_fail("experiment: unknown experiment '" + cfg.experiment + "'");
    if (root.has("model")) cfg.model = detail::parse_model(root.child("model"));
    else if (cfg.experiment != "fbi") detail::config_fail("model: missing required key");
    if (root.has("window")) {
        auto w = root.child("window");
        cfg.window.center = w.get_or<double>("center", cfg.window.center);
        cfg.window.halfWidth = w.get_or<double>("halfWidth", cfg.window.halfWidth);
        if (!(cfg.window.halfWidth > 0.0)) detail::config_fail("window.halfWidth: must be positive");
        w.finish();
    }
    cfg.output = root.get_or<std::string>("output", "");
    if (cfg.experiment == "oracle-compare" && cfg.model && !std::holds_alternative<models::SurfaceOfRevolution>(*cfg.model) &&
        !models::is_liouville(*cfg.model))
        detail::config_fail("model: oracle-compare runs on 'sor' and Liouville models");
    const json empty = json::object();
    cfg.params = detail::parse_params(cfg.experiment, root.has("params") ? io::Fields(root.raw("params"), "params")
                                                                        : io::Fields(empty, "params"),
                                      cfg.model);
    root.finish();
    cfg.canonical = j;
    cfg.canonical.erase("output");
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, std::string("<root>: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------- experiments

struct ExperimentOutput {
    io::Csv results{{}};
    io::Csv errors{{"key", "code", "message"}};
    json summary = json::object();
};

namespace detail {

inline void record(ExperimentOutput& out, const std::string& key, const Error& e) {
    std::string msg = e.what();
    out.errors.add({key, std::string(to_string(e.code())), msg});
}

inline std::string qn_text(const std::array<int, 2>& q) { return std::to_string(q[0]) + " " + std::to_string(q[1]); }

inline ExperimentOutput run_spectrum(const RunConfig& cfg, const SpectrumParams& p) {
    ExperimentOutput out;
    out.results = io::Csv({"h", "qn1", "qn2", "e1", "e2", "residual", "supNorm", "x1", "x2"});
    asymptotics::Family fam;
    fam.mRange = p.mRange;
    fam.e2Band = p.e2Band;
    fam.sor.scheme = p.scheme;
    int count = 0;
    try {
        asymptotics::enumerate(*cfg.model, p.h, cfg.window, fam, [&](const spectral::JointEigenfunction& u) {
            auto s = spectral::sup_norm(u, spectral::Region::all());
            out.results.add({io::fmt(p.h), io::fmt(u.qn[0]), io::fmt(u.qn[1]), io::fmt(u.e1), io::fmt(u.e2),
                             io::fmt(u.residual), io::fmt(s.value), io::fmt(s.location[0]), io::fmt(s.location[1])});
            ++count;
        });
    } catch (const Error& e) {
        record(out, "h=" + io::fmt(p.h), e);
    }
    if (count == 0 && out.errors.size() == 0)
        record(out, "h=" + io::fmt(p.h), Error(ErrorCode::EmptySpectrum, "no eigenvalue in the window"));
    out.summary["count"] = count;
    return out;
}

inline ExperimentOutput run_sweep(const RunConfig& cfg, const SweepParams& p, int jobs) {
    ExperimentOutput out;
    out.results = io::Csv({"h", "region", "maxSup", "qn1", "qn2", "e1", "e2", "x1", "x2", "count"});
    const auto region = asymptotics::named_region(p.region);
    asymptotics::Family fam;
    fam.mRange = p.mRange;
    fam.e2Band = p.e2Band;
    fam.sor.scheme = p.scheme;
    struct Slot {
        std::optional<asymptotics::ScanRow> row;
        std::optional<Error> error;
    };
    auto task = [&](double h) {
        Slot s;
        try {
            s.row = asymptotics::scan_row(*cfg.model, h, cfg.window, region, fam);
        } catch (const Error& e) {
            s.error = e;
        }
        return s;
    };
    std::vector<Slot> slots(p.hValues.size());
    for (std::size_t next = 0; next < slots.size();) {
        std::vector<std::pair<std::size_t, std::future<Slot>>> batch;
        for (int j = 0; j < std::max(jobs, 1) && next < slots.size(); ++j, ++next)
            batch.emplace_back(next, std::async(jobs > 1 ? std::launch::async : std::launch::deferred, task, p.hValues[next]));
        for (auto& [i, f] : batch) slots[i] = f.get();
    }
    std::vector<asymptotics::ScanRow> rows;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const std::string key = "h=" + io::fmt(p.hValues[i]);
        if (slots[i].error) {
            record(out, key, *slots[i].error);
            continue;
        }
        const auto& r = *slots[i].row;
        if (r.empty) {
            record(out, key, Error(ErrorCode::EmptySpectrum, "no eigenvalue in the window"));
            continue;
        }
        rows.push_back(r);
        out.results.add({io::fmt(r.h), p.region, io::fmt(r.maxSup), io::fmt(r.qn[0]), io::fmt(r.qn[1]), io::fmt(r.e1),
                         io::fmt(r.e2), io::fmt(r.location[0]), io::fmt(r.location[1]), io::fmt(r.count)});
    }
    out.summary["region"] = p.region;
    try {
        auto fit = asymptotics::fit_exponent(rows);
        out.summary["fit"] = {{"exponent", fit.exponent}, {"intercept", fit.intercept}, {"rms", fit.rmsResidual},
                              {"pointCount", fit.pointCount}};
        out.summary["hormanderConstant"] = asymptotics::hormander_constant(rows);
    } catch (const Error& e) {
        record(out, "fit", e);
        out.summary["fit"] = nullptr;
    }
    return out;
}

/// The joint eigenfunction of the decay family with E1 nearest the window centre.
inline spectral::JointEigenfunction decay_member(const RunConfig& cfg, const DecayParams& p, double h) {
    std::optional<spectral::JointEigenfunction> best;
    auto keep = [&](const spectral::JointEigenfunction& u) {
        if (!best || std::abs(u.e1 - cfg.window.center) < std::abs(best->e1 - cfg.window.center)) best = u;
    };
    if (auto* s = std::get_if<models::SurfaceOfRevolution>(&*cfg.model)) {
        const int m = int(std::lround(p.e2 / h));
        spectral::sor_joint_eigs(s->profile, h, {m, m}, cfg.window, keep);
    } else {
        asymptotics::enumerate(*cfg.model, h, cfg.window, {}, keep);
    }
    if (!best) fail(ErrorCode::EmptySpectrum, "no eigenvalue of the family in the window");
    return *best;
}

inline ExperimentOutput run_decay(const RunConfig& cfg, const DecayParams& p) {
    ExperimentOutput out;
    out.results = io::Csv({"h", "x", "S", "logAbsU", "ratio", "defect"});
    json per = json::array();
    for (double h : p.hValues) {
        try {
            auto u = decay_member(cfg, p, h);
            std::function<double(double)> S;
            if (auto* s = std::get_if<models::SurfaceOfRevolution>(&*cfg.model)) {
                const auto prof = s->profile;
                const double e1 = u.e1, e2 = u.e2;
                S = [prof, e1, e2](double r) { return action::sor_action(prof, e2, r, e1).value; };
            } else {
                const double E = u.e1;
                S = [E](double x) { return action::ho_action_exact(E, x); };
            }
            auto rep = asymptotics::decay_profile(u, S, p.epsilon, p.region);
            for (const auto& pt : rep.points)
                out.results.add({io::fmt(h), io::fmt(pt.x), io::fmt(pt.S), io::fmt(pt.logAbsU), io::fmt(pt.ratio),
                                 io::fmt(pt.defect)});
            per.push_back({{"h", h}, {"qn", {u.qn[0], u.qn[1]}}, {"e1", u.e1}, {"e2", u.e2}, {"maxDefect", rep.maxDefect},
                           {"minRatio", rep.minRatio}, {"maxRatio", rep.maxRatio}, {"band", rep.band()}});
        } catch (const Error& e) {
            record(out, "h=" + io::fmt(h), e);
        }
    }
    out.summary["epsilon"] = p.epsilon;
    out.summary["perH"] = per;
    return out;
}

inline ExperimentOutput run_action(const RunConfig& cfg, const ActionParams& p) {
    ExperimentOutput out;
    out.results = io::Csv({"x1", "x2", "S", "error", "nearPole", "truncated"});
    for (const auto& x : p.points) {
        try {
            action::ActionValue v = std::visit(
                models::overloaded{
                    [&](const models::SurfaceOfRevolution& s) { return action::sor_action(s.profile, p.energy.e2, x[0], p.energy.e1); },
                    [&](const models::HarmonicOscillatorModel&) {
                        return action::action_1d_detail(action::ho_turning_points(p.energy.e1), x[0]);
                    },
                    [&](const auto&) { return action::liouville_action(*cfg.model, p.energy, x); }},
                *cfg.model);
            out.results.add({io::fmt(x[0]), io::fmt(x[1]), io::fmt(v.value), io::fmt(v.error), io::fmt(v.nearPole),
                             io::fmt(v.truncated)});
        } catch (const Error& e) {
            record(out, "x=" + io::fmt(x[0]) + " " + io::fmt(x[1]), e);
        }
    }
    out.summary["e1"] = p.energy.e1;
    out.summary["e2"] = p.energy.e2;
    return out;
}

inline ExperimentOutput run_classify(const RunConfig& cfg, const ClassifyParams& p) {
    ExperimentOutput out;
    out.results = io::Csv({"e1", "e2", "classification", "caustics"});
    json list = json::array();
    for (const auto& E : p.energies) {
        try {
            auto td = classical::classify_projection(*cfg.model, E);
            std::string cs;
            json cj = json::array();
            for (const auto& c : td.caustics) {
                cs += (cs.empty() ? "" : ";") + std::to_string(c.axis) + ":" + io::fmt(c.location);
                cj.push_back({{"axis", c.axis}, {"location", c.location}, {"simple", c.simple}});
            }
            const std::string cls = classical::to_string(td.classification);
            out.results.add({io::fmt(E.e1), io::fmt(E.e2), cls, cs});
            list.push_back({{"e1", E.e1}, {"e2", E.e2}, {"classification", cls}, {"caustics", cj}});
        } catch (const Error& e) {
            record(out, "E=" + io::fmt(E.e1) + " " + io::fmt(E.e2), e);
        }
    }
    out.summary["results"] = list;
    if (list.size() == 1) out.summary["classification"] = list[0]["classification"];
    return out;
}

inline ExperimentOutput run_fbi(const FbiParams& p) {
    ExperimentOutput out;
    out.results = io::Csv({"x", "xi", "intensity"});
    const int n = p.samples > 0 ? p.samples : int(std::ceil(16.0 * p.xiMax / p.h));
    auto grid = fbi::FbiGrid::uniform(p.nx, p.xiMax, p.nxi, p.mu, p.h);
    auto pm = fbi::fbi_transform(fbi::plane_wave(p.m, n), grid, p.cutoffRadius);
    for (std::size_t ix = 0; ix < grid.xPoints.size(); ++ix)
        for (std::size_t j = 0; j < grid.xiPoints.size(); ++j)
            out.results.add({io::fmt(grid.xPoints[ix]), io::fmt(grid.xiPoints[j]), io::fmt(pm.at(ix, j))});
    const auto shell = fbi::flat_shell(p.m * p.h);
    out.summary["samples"] = n;
    out.summary["totalMass"] = pm.totalMass;
    try {
        out.summary["tubeFraction"] = fbi::tube_mass(pm, shell, p.tubeRadius);
    } catch (const Error& e) {
        record(out, "tubeFraction", e);
    }
    out.summary["offshellSup"] = fbi::offshell_sup(pm, shell, p.offshellDistance);
    return out;
}

inline ExperimentOutput run_oracle(const RunConfig& cfg, const OracleParams& p) {
    ExperimentOutput out;
    out.results = io::Csv({"h", "qn1", "qn2", "separatedEig", "oracleEig", "relDiff", "supSeparated", "supOracle",
                           "supRelDiff", "clusterSize"});
    auto cmp = oracle::oracle_compare(*cfg.model, p.h, cfg.window, p.counts);
    for (const auto& r : cmp.rows)
        out.results.add({io::fmt(r.h), io::fmt(r.qn[0]), io::fmt(r.qn[1]), io::fmt(r.separatedEig), io::fmt(r.oracleEig),
                         io::fmt(r.relDiff), io::fmt(r.supSeparated), io::fmt(r.supOracle), io::fmt(r.supRelDiff),
                         io::fmt(r.clusterSize)});
    if (!cmp.bijective)
        record(out, "matching", Error(ErrorCode::SolverDivergence,
                                      "separated count " + std::to_string(cmp.separatedCount) + " vs oracle count " +
                                          std::to_string(cmp.oracleCount)));
    out.summary["separatedCount"] = cmp.separatedCount;
    out.summary["oracleCount"] = cmp.oracleCount;
    out.summary["bijective"] = cmp.bijective;
    out.summary["resolutionWarning"] = cmp.resolutionWarning;
    out.summary["maxRelDiff"] = cmp.maxRelDiff;
    out.summary["maxSupRelDiff"] = cmp.maxSupRelDiff;
    return out;
}

} // namespace detail

inline ExperimentOutput run_experiment(const RunConfig& cfg, int jobs = 1) {
    return std::visit(models::overloaded{
                          [&](const SpectrumParams& p) { return detail::run_spectrum(cfg, p); },
                          [&](const SweepParams& p) { return detail::run_sweep(cfg, p, jobs); },
                          [&](const DecayParams& p) { return detail::run_decay(cfg, p); },
                          [&](const ActionParams& p) { return detail::run_action(cfg, p); },
                          [&](const ClassifyParams& p) { return detail::run_classify(cfg, p); },
                          [&](const FbiParams& p) { return detail::run_fbi(p); },
                          [&](const OracleParams& p) { return detail::run_oracle(cfg, p); }},
                      cfg.params);
}

// ---------------------------------------------------------------- artifacts

struct RunManifest {
    std::string configHash;
    std::string toolVersion = kToolVersion;
    std::map<std::string, std::string> fileHashes;
    std::map<std::string, double> stageSeconds;
    std::size_t errorCount = 0;

    json to_json() const {
        return {{"configHash", configHash}, {"toolVersion", toolVersion}, {"files", fileHashes},
                {"stageSeconds", stageSeconds}, {"errorCount", errorCount}};
    }
};

inline std::string config_hash(const RunConfig& cfg) { return io::git_blob_hash(cfg.canonical.dump()); }

/// Runs the experiment and writes the artifacts. The manifest is written last
/// and atomically, so an interrupted run leaves none.
inline RunManifest run(const RunConfig& cfg, const std::filesystem::path& outDir, int jobs = 1) {
    using clock = std::chrono::steady_clock;
    RunManifest man;
    man.configHash = config_hash(cfg);
    std::filesystem::create_directories(outDir);
    std::filesystem::remove(outDir / "manifest.json");

    auto t0 = clock::now();
    ExperimentOutput out = run_experiment(cfg, jobs);
    auto t1 = clock::now();

    json summary = out.summary;
    summary["experiment"] = cfg.experiment;
    summary["configHash"] = man.configHash;
    const std::map<std::string, std::string> files{{"results.csv", out.results.text()},
                                                   {"errors.csv", out.errors.text()},
                                                   {"summary.json", summary.dump(2) + "\n"}};
    for (const auto& [name, text] : files) {
        io::atomic_write(outDir / name, text);
        man.fileHashes[name] = io::git_blob_hash(text);
    }
    auto t2 = clock::now();
    man.stageSeconds["compute"] = std::chrono::duration<double>(t1 - t0).count();
    man.stageSeconds["write"] = std::chrono::duration<double>(t2 - t1).count();
    man.errorCount = out.errors.size();
    io::atomic_write(outDir / "manifest.json", man.to_json().dump(2) + "\n");
    return man;
}

} // namespace qci::cli
