#include "hkam/commands.hpp"
#include "hkam/dynamics.hpp"
#include "hkam/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace hkam {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kReport = "report.json";
constexpr const char* kNFinal = "N_final.csv";
constexpr const char* kGenerators = "generators.csv";
constexpr const char* kQ0 = "q0.csv";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw PreconditionError("missing artifact " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + p.string());
    out << bytes;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json config_echo(const RunConfig& c) {
    json j{{"d", c.d},
           {"n", c.n},
           {"E_max", c.E_max},
           {"Q_pts", c.Q_pts},
           {"s", c.s},
           {"beta", c.beta},
           {"sigma0", c.sigma0},
           {"epsilon", c.epsilon},
           {"delta", c.kam.delta_value()},
           {"potential", potential_to_json(c.potential)}};
    j["omega"] = c.omega ? json(c.omega->omega) : json(nullptr);
    j["schedule"] = {{"max_steps", c.kam.max_steps},
                     {"target_qnorm", c.kam.target()},
                     {"kappa_override", c.kam.kappa_override ? json(*c.kam.kappa_override) : json(nullptr)},
                     {"kappa_floor", c.kam.kappa_floor},
                     {"fourier_cap", c.kam.fourier_cap},
                     {"divisor_scan_cap", c.kam.divisor_scan_cap},
                     {"t_nodes", c.kam.t_nodes}};
    return j;
}

json schedule_json(const Schedule& s) {
    return {{"op", "make_schedule"}, {"m", s.m},         {"sigma", s.sigma},
            {"K", s.K},              {"kappa", s.kappa}, {"eps", number(s.eps)},
            {"kappa_floored", s.kappa_floored}};
}

json diagnostics_json(const StepDiagnostics& d) {
    return {{"op", "kam_step"},
            {"K_scan", d.K_scan},
            {"divisor_min", number(d.divisor_min)},
            {"divisor_ratio_min", number(d.divisor_ratio)},
            {"homological_residual", d.homological_residual},
            {"truncation_defect", d.truncation_defect},
            {"t_quadrature_change", d.t_quadrature_change},
            {"hermitization", d.hermitization},
            {"grid_points", d.grid_points}};
}

struct Artifacts {
    json report;
    NormalFormMatrix n_final;
    Transformation transformation;
};

// Loads and checks the reduce outputs; throws PreconditionError on any mismatch.
Artifacts load_artifacts(const RunConfig& cfg, const BasisPtr& basis, const fs::path& dir) {
    json report;
    try {
        report = json::parse(read_file(dir / kReport));
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("report.json is not valid JSON: ") + e.what());
    }
    if (!report.contains("artifacts")) throw PreconditionError("report.json lacks the artifact table");
    if (report.value("excluded", false)) throw PreconditionError("the reduction excluded this frequency; nothing to verify");
    std::map<std::string, std::string> bytes;
    for (const auto& name : {kNFinal, kGenerators, kQ0}) {
        bytes[name] = read_file(dir / name);
        const auto expected = report["artifacts"].value(name, std::string());
        if (sha256_hex(bytes[name]) != expected)
            throw PreconditionError(std::string("integrity check failed for ") + name);
    }
    std::istringstream nin(bytes[kNFinal]);
    NormalFormMatrix n_final(read_csv(nin, basis), 1e-12);
    std::vector<int> Ks;
    for (const auto& k : report.at("kam").at("generator_K")) Ks.push_back(k.get<int>());
    std::istringstream gin(bytes[kGenerators]);
    auto t = read_generators_csv(gin, basis, cfg.n, Ks);
    return {std::move(report), std::move(n_final), std::move(t)};
}

Frequency require_omega(const RunConfig& cfg) {
    if (!cfg.omega) throw ParameterError("this command needs an explicit omega in the config");
    return *cfg.omega;
}

template <class F>
int guarded(std::ostream& log, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace

BasisPtr make_basis(const RunConfig& cfg) { return std::make_shared<const Basis>(cfg.d, cfg.E_max, cfg.Q_pts); }

QPMatrix scaled_perturbation(const QPMatrix& q, double eps) {
    QPMatrix out = q.resized(q.K());
    for (std::size_t f = 0; f < q.box().size(); ++f) out.coeff(f) = eps * q.coeff(f);
    return out;
}

void write_qp_rows(std::ostream& os, const QPMatrix& q, const std::string& prefix) {
    const auto& cs = q.basis().clusters();
    char buf[96];
    for (std::size_t f = 0; f < q.box().size(); ++f) {
        const BlockMatrix c(q.basis_ptr(), q.coeff(f), false);
        const auto k = q.box().vector(f);
        for (std::size_t i = 0; i < cs.size(); ++i) {
            for (std::size_t j = 0; j < cs.size(); ++j) {
                const auto blk = c.block(i, j);
                if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
                for (Eigen::Index r = 0; r < blk.rows(); ++r) {
                    for (Eigen::Index cc = 0; cc < blk.cols(); ++cc) {
                        os << prefix;
                        for (int v : k) os << v << ',';
                        std::snprintf(buf, sizeof buf, "%.17g,%.17g", blk(r, cc).real(), blk(r, cc).imag());
                        os << cs[i].energy << ',' << r + 1 << ',' << cs[j].energy << ',' << cc + 1 << ',' << buf
                           << '\n';
                    }
                }
            }
        }
    }
}

void write_generators_csv(std::ostream& os, const Transformation& t, int n) {
    os << "step";
    for (int i = 0; i < n; ++i) os << ",k" << i + 1;
    os << ",w_row,l_row,w_col,l_col,re,im\n";
    for (std::size_t m = 0; m < t.generators().size(); ++m)
        write_qp_rows(os, t.generators()[m], std::to_string(m + 1) + ",");
}

void write_qp_csv(std::ostream& os, const QPMatrix& q) {
    for (int i = 0; i < q.n(); ++i) os << 'k' << i + 1 << ',';
    os << "w_row,l_row,w_col,l_col,re,im\n";
    write_qp_rows(os, q, "");
}

Transformation read_generators_csv(std::istream& is, BasisPtr basis, int n, const std::vector<int>& Ks) {
    std::vector<QPMatrix> gens;
    for (int K : Ks) gens.emplace_back(basis, n, K);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line.rfind("step", 0) == 0) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) fields.push_back(tok);
        if (static_cast<int>(fields.size()) != n + 7)
            throw PreconditionError("generators.csv: wrong field count at line " + std::to_string(lineno));
        try {
            const int step = std::stoi(fields[0]);
            std::vector<int> k;
            for (int i = 0; i < n; ++i) k.push_back(std::stoi(fields[static_cast<std::size_t>(1 + i)]));
            const auto at = [&](int i) { return fields[static_cast<std::size_t>(1 + n + i)]; };
            const int wr = std::stoi(at(0)), lr = std::stoi(at(1)), wc = std::stoi(at(2)), lc = std::stoi(at(3));
            const double re = std::stod(at(4)), im = std::stod(at(5));
            if (step < 1 || step > static_cast<int>(gens.size())) throw IndexError("step out of range");
            auto& g = gens[static_cast<std::size_t>(step - 1)];
            const auto f = g.box().flat(k);
            if (f == g.box().size()) throw IndexError("wavenumber outside the recorded box");
            const auto& ca = basis->clusters()[basis->cluster_index(wr)];
            const auto& cb = basis->clusters()[basis->cluster_index(wc)];
            if (lr < 1 || lr > ca.dimension || lc < 1 || lc > cb.dimension) throw IndexError("multiplicity index");
            g.coeff(f)(static_cast<Eigen::Index>(ca.offset) + lr - 1, static_cast<Eigen::Index>(cb.offset) + lc - 1) =
                cplx(re, im);
        } catch (const std::exception& e) {
            throw PreconditionError("generators.csv: bad line " + std::to_string(lineno) + " (" + e.what() + ")");
        }
    }
    return Transformation(std::move(gens));
}

StateVector initial_state_vector(const RunConfig& cfg, const Basis& b) {
    const auto dim = static_cast<Eigen::Index>(b.size());
    StateVector xi = StateVector::Zero(dim);
    if (!cfg.dynamics.xi0.empty()) {
        if (static_cast<Eigen::Index>(cfg.dynamics.xi0.size()) != dim)
            throw ParameterError("dynamics.xi0: length must equal the number of modes");
        for (Eigen::Index i = 0; i < dim; ++i) xi[i] = cfg.dynamics.xi0[static_cast<std::size_t>(i)];
    } else {
        for (Eigen::Index i = 0; i < dim; ++i)
            if (b.weights()[i] <= 5.0) xi[i] = 1.0;
    }
    const double nrm = xi.norm();
    if (!(nrm > 0.0)) throw ParameterError("initial state is zero");
    return xi / nrm;
}

int cmd_reduce(const RunConfig& cfg, std::ostream& log) {
    return guarded(log, [&] {
        const Frequency w = require_omega(cfg);
        const auto basis = make_basis(cfg);
        const QPMatrix q = assemble_Q(cfg.potential, basis);
        const QPMatrix q0 = scaled_perturbation(q, cfg.epsilon);
        const auto n0 = NormalFormMatrix::harmonic(basis);
        const KamOutcome out = run_kam(n0, q0, w, cfg.kam);
        const KamState& st = out.final_state;

        json report;
        report["config"] = config_echo(cfg);
        json clusters = json::array();
        for (const auto& c : basis->clusters()) clusters.push_back({{"energy", c.energy}, {"dimension", c.dimension}});
        report["basis"] = {{"op", "build_basis"}, {"modes", basis->size()}, {"clusters", clusters}};
        const auto decay = decay_profile(q, cfg.kam.norm);
        report["potential"] = {{"op", "decay_profile"},
                               {"sup", decay.sup},
                               {"fitted_exponent", decay.fitted_exponent},
                               {"monotonicity_breaks", decay.monotonicity_breaks}};
        report["parameters"] = {{"op", "KamParams"},
                                {"delta0", cfg.kam.delta0()},
                                {"delta0_prime", cfg.kam.delta0_prime()},
                                {"nu", cfg.kam.nu()},
                                {"alpha", cfg.kam.alpha_exp()},
                                {"alpha1", cfg.kam.alpha1_value()},
                                {"alpha2", cfg.kam.alpha2}};
        json sched = json::array();
        for (int m = 1; m <= std::max(st.m, out.excluded_step); ++m) sched.push_back(schedule_json(make_schedule(cfg.kam, m)));
        report["schedule"] = sched;
        json diags = json::array();
        for (const auto& d : st.diagnostics) diags.push_back(diagnostics_json(d));
        json gen_k = json::array();
        for (const auto& s : st.S_list) gen_k.push_back(s.K());
        json qn = json::array();
        for (double v : st.qnorm_history) qn.push_back(number(v));
        report["kam"] = {{"op", "run_kam"},
                         {"steps", st.m},
                         {"converged", out.converged},
                         {"qnorm_history", qn},
                         {"diagnostics", diags},
                         {"generator_K", gen_k},
                         {"normal_form_distance", out.normal_form_distance},
                         {"normal_form_hermiticity", st.N.matrix().hermiticity_defect()}};
        report["excluded"] = out.excluded;
        if (out.excluded) {
            report["exclusion"] = {{"op", "check_divisors"},
                                   {"step", out.excluded_step},
                                   {"k", out.excluded_k},
                                   {"wa", out.excluded_wa},
                                   {"wb", out.excluded_wb},
                                   {"message", out.exclusion_message}};
            fs::create_directories(cfg.output_dir);
            write_file(fs::path(cfg.output_dir) / kReport, report.dump(2) + "\n");
            log << "omega excluded at step " << out.excluded_step << ": " << out.exclusion_message << '\n';
            return static_cast<int>(kExitExcluded);
        }

        const int samples = cfg.dynamics.phi_samples;
        report["transformation"] = {
            {"op", "transformation_distance"},
            {"phi_samples", samples},
            {"distance_s0", transformation_distance(out.transformation, *basis, cfg.n, 0.0, cfg.beta, samples)},
            {"distance_s1", transformation_distance(out.transformation, *basis, cfg.n, 1.0, cfg.beta, samples)},
            {"unitarity_defect", unitarity_defect(out.transformation, *basis, cfg.n, samples)}};
        const auto wab = wab_check(st.N, q0, cfg.epsilon, cfg.kam.norm);
        report["wab"] = {{"op", "wab_check"},
                         {"operator_distance", wab.operator_distance},
                         {"msb_distance", wab.msb_distance},
                         {"normalized", wab.normalized}};
        const auto a1 = check_A1(st.N);
        report["A1"] = {{"op", "check_A1"}, {"c0_lower", a1.c0_lower}, {"c0_gap", a1.c0_gap}};
        const auto fl = floquet_spectrum(st.N, w, 0);
        report["floquet"] = {{"op", "floquet_spectrum"},
                             {"max_deviation", fl.max_deviation},
                             {"fitted_exponent", fl.fitted_exponent},
                             {"fitted_constant", fl.fitted_constant}};

        std::ostringstream ncsv, gcsv, qcsv;
        write_csv(ncsv, st.N.matrix());
        write_generators_csv(gcsv, out.transformation, cfg.n);
        write_qp_csv(qcsv, q0);
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);
        write_file(dir / kNFinal, ncsv.str());
        write_file(dir / kGenerators, gcsv.str());
        write_file(dir / kQ0, qcsv.str());
        report["artifacts"] = {{kNFinal, sha256_hex(ncsv.str())},
                               {kGenerators, sha256_hex(gcsv.str())},
                               {kQ0, sha256_hex(qcsv.str())}};
        write_file(dir / kReport, report.dump(2) + "\n");
        if (!out.converged) {
            log << "no convergence within " << cfg.kam.max_steps << " steps (qnorm " << st.qnorm_history.back()
                << ")\n";
            return static_cast<int>(kExitError);
        }
        log << "converged in " << st.m << " steps; final qnorm " << st.qnorm_history.back() << '\n';
        return static_cast<int>(kExitOk);
    });
}

namespace {

struct TrajectoryCheck {
    Trajectory direct;
    std::vector<StateVector> reduced;
    double max_error = 0.0;
};

TrajectoryCheck run_trajectories(const RunConfig& cfg, const QPMatrix& q, const Frequency& w,
                                 const NormalFormMatrix& n_final, const Transformation& t) {
    const Basis& b = q.basis();
    const StateVector xi0 = initial_state_vector(cfg, b);
    const double dt = cfg.dynamics.dt.value_or(max_sampling_step(q, cfg.epsilon));
    TrajectoryCheck c;
    c.direct = integrate_direct(q, w, cfg.epsilon, xi0, cfg.dynamics.t_final, dt, cfg.dynamics.tol);
    const ReducedPropagator prop(t, n_final, w);
    for (std::size_t i = 0; i < c.direct.times.size(); ++i) {
        c.reduced.push_back(prop(xi0, c.direct.times[i]));
        c.max_error = std::max(c.max_error, (c.reduced.back() - c.direct.states[i]).norm());
    }
    return c;
}

}  // namespace

int cmd_verify(const RunConfig& cfg, const std::string& artifacts_dir, std::ostream& log) {
    return guarded(log, [&] {
        const Frequency w = require_omega(cfg);
        const auto basis = make_basis(cfg);
        const Artifacts art = load_artifacts(cfg, basis, artifacts_dir);
        const QPMatrix q = assemble_Q(cfg.potential, basis);
        const double eps = cfg.epsilon;
        json checks = json::array();
        bool all = true;
        auto record = [&](const std::string& name, const std::string& op, double value, double threshold, bool pass) {
            checks.push_back({{"criterion", name}, {"op", op}, {"value", number(value)}, {"threshold", threshold},
                              {"pass", pass}});
            log << (pass ? "PASS " : "FAIL ") << name << ": " << value << " (threshold " << threshold << ")\n";
            all = all && pass;
        };

        const auto traj = run_trajectories(cfg, q, w, art.n_final, art.transformation);
        record("direct_vs_reduced_l2", "integrate_direct/propagate_reduced", traj.max_error, 1e-5,
               traj.max_error <= 1e-5);
        record("direct_norm_drift", "integrate_direct", traj.direct.norm_drift, 1e-8, traj.direct.norm_drift <= 1e-8);
        const auto band1 = norm_band(*basis, traj.direct.states, 1.0);
        record("norm_1_band_half_width", "sobolev_norm", band1.half_width(), 20.0 * eps,
               band1.half_width() <= 20.0 * eps);
        const auto band_s = norm_band(*basis, traj.direct.states, cfg.s);
        const double fitted = eps > 0.0 ? band_s.half_width() / eps : 0.0;
        checks.push_back({{"criterion", "norm_s_band_fitted_constant"}, {"op", "sobolev_norm"}, {"value", fitted}});

        auto floquet = [&](double e, const NormalFormMatrix& nf) {
            const auto r = floquet_direct_crosscheck(q, w, e, cfg.dynamics.floquet_k_cut, nf);
            const double tol = 10.0 * e * e + 1e-6;
            const std::string tag = "floquet(eps=" + std::to_string(e) + ")";
            record(tag + "_hausdorff", "floquet_direct_crosscheck", r.hausdorff, tol, r.hausdorff <= tol);
            record(tag + "_single_group_mass", "floquet_direct_crosscheck", r.min_group_mass, 0.99,
                   r.min_group_mass >= 0.99);
            record(tag + "_imaginary_part", "floquet_direct_crosscheck", r.max_imag, 1e-10, r.max_imag <= 1e-10);
        };
        floquet(eps, art.n_final);
        for (double e : cfg.dynamics.floquet_eps) {
            if (e == eps) continue;
            RunConfig alt = cfg;
            alt.epsilon = e;
            alt.kam.epsilon0 = e;
            const auto out = run_kam(NormalFormMatrix::harmonic(basis), scaled_perturbation(q, e), w, alt.kam);
            if (out.excluded) throw PreconditionError("Floquet cross-check run excluded at eps=" + std::to_string(e));
            floquet(e, out.final_state.N);
        }

        const int samples = cfg.dynamics.phi_samples;
        const double unit = unitarity_defect(art.transformation, *basis, cfg.n, samples);
        record("unitarity", "unitarity_defect", unit, 1e-9, unit <= 1e-9);
        for (double sp : {0.0, 1.0}) {
            const double dist = transformation_distance(art.transformation, *basis, cfg.n, sp, cfg.beta, samples);
            record("transformation_distance_s" + std::to_string(static_cast<int>(sp)), "transformation_distance", dist,
                   std::sqrt(eps), dist <= std::sqrt(eps));
        }
        const double nf = msb_norm(art.n_final.matrix() - BlockMatrix::harmonic(basis), cfg.kam.norm);
        record("normal_form_distance", "run_kam", nf, 2.0 * eps, nf <= 2.0 * eps);
        const double herm = art.n_final.matrix().hermiticity_defect();
        record("normal_form_hermiticity", "run_kam", herm, 1e-12, herm <= 1e-12);

        std::ostringstream tcsv;
        write_trajectory_csv(tcsv, *basis, traj.direct, traj.reduced, cfg.s);
        const fs::path dir(artifacts_dir);
        write_file(dir / "trajectory.csv", tcsv.str());
        write_file(dir / "verify.json", json{{"checks", checks}, {"all_pass", all}}.dump(2) + "\n");
        return all ? static_cast<int>(kExitOk) : static_cast<int>(kExitError);
    });
}

int cmd_measure(const RunConfig& cfg, std::ostream& log) {
    return guarded(log, [&] {
        RunConfig c = cfg;
        if (cfg.measure.E_max) c.E_max = *cfg.measure.E_max;
        const auto basis = make_basis(c);
        const auto n0 = NormalFormMatrix::harmonic(basis);
        const auto& m = cfg.measure;
        const auto grid = estimate_measure_grid(n0, m.kappas, m.Ks, m.samples, m.seed, m.box, cfg.n);
        json table = json::array();
        for (std::size_t i = 0; i < grid.Ks.size(); ++i) {
            for (std::size_t j = 0; j < grid.kappas.size(); ++j) {
                const auto& e = grid.table[i][j];
                table.push_back({{"op", "estimate_excluded_measure"},
                                 {"K", grid.Ks[i]},
                                 {"kappa", grid.kappas[j]},
                                 {"samples", e.samples},
                                 {"excluded_fraction", e.excluded_fraction},
                                 {"confidence_halfwidth", e.confidence_halfwidth}});
            }
        }
        json out{{"E_max", basis->energy_cutoff()},
                 {"n", cfg.n},
                 {"seed", m.seed},
                 {"box", {m.box.lo, m.box.hi}},
                 {"estimates", table},
                 {"slope_log_fraction_vs_log_kappa", number(grid.slope)},
                 {"slope_K", grid.Ks.front()}};
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);
        write_file(dir / "measure.json", out.dump(2) + "\n");
        log << "slope " << grid.slope << " at K=" << grid.Ks.front() << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_spectrum(const RunConfig& cfg, const std::string& artifacts_dir, int k_range, std::ostream& log) {
    return guarded(log, [&] {
        const Frequency w = require_omega(cfg);
        const auto basis = make_basis(cfg);
        const Artifacts art = load_artifacts(cfg, basis, artifacts_dir);
        const auto f = floquet_spectrum(art.n_final, w, k_range);
        std::ostringstream os;
        write_spectrum_csv(os, f);
        write_file(fs::path(artifacts_dir) / "spectrum.csv", os.str());
        log << "wrote " << f.points.size() << " spectral points\n";
        return static_cast<int>(kExitOk);
    });
}

int cmd_norms(const RunConfig& cfg, const std::string& artifacts_dir, std::ostream& log) {
    return guarded(log, [&] {
        const Frequency w = require_omega(cfg);
        const auto basis = make_basis(cfg);
        const Artifacts art = load_artifacts(cfg, basis, artifacts_dir);
        const QPMatrix q = assemble_Q(cfg.potential, basis);
        const auto traj = run_trajectories(cfg, q, w, art.n_final, art.transformation);
        std::ostringstream os;
        write_trajectory_csv(os, *basis, traj.direct, traj.reduced, cfg.s);
        write_file(fs::path(artifacts_dir) / "trajectory.csv", os.str());
        log << "wrote " << traj.direct.times.size() << " samples; max l2 discrepancy " << traj.max_error << '\n';
        return static_cast<int>(kExitOk);
    });
}

}  // namespace hkam
