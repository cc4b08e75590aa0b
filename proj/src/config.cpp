#include "hkam/config.hpp"
#include "hkam/errors.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

namespace hkam {

using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& out, std::vector<std::string>& errors, const std::string& where = "") {
    if (!j.is_object() || !j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception&) {
        errors.push_back(where + key + ": wrong type");
    }
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& out, std::vector<std::string>& errors,
              const std::string& where = "") {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception&) {
        errors.push_back(where + key + ": wrong type");
    }
}

cplx parse_complex(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw ParameterError("coefficient must be a number or [re, im]");
}

}  // namespace

PotentialSpec parse_potential(const json& j, std::vector<std::string>& errors) {
    PotentialSpec v;
    if (!j.is_object()) {
        errors.push_back("potential: must be an object");
        return v;
    }
    read(j, "n", v.n, errors, "potential.");
    if (!j.contains("terms")) return v;
    if (!j.at("terms").is_array()) {
        errors.push_back("potential.terms: must be an array");
        return v;
    }
    std::size_t idx = 0;
    for (const auto& t : j.at("terms")) {
        const std::string where = "potential.terms[" + std::to_string(idx++) + "].";
        PotentialTerm term;
        try {
            term.k = t.at("k").get<std::vector<int>>();
            if (t.contains("coefficient")) term.coefficient = parse_complex(t.at("coefficient"));
            if (t.contains("profile")) {
                const auto& p = t.at("profile");
                if (p.contains("gamma")) {
                    const auto& g = p.at("gamma");
                    term.profile.gamma = g.is_array() ? g.get<std::vector<double>>() : std::vector<double>{g.get<double>()};
                }
                if (p.contains("poly")) {
                    const auto& q = p.at("poly");
                    if (q.is_array() && !q.empty() && q[0].is_number())
                        term.profile.poly = {q.get<std::vector<double>>()};
                    else
                        term.profile.poly = q.get<std::vector<std::vector<double>>>();
                }
            }
        } catch (const std::exception& e) {
            errors.push_back(where + " malformed (" + e.what() + ")");
            continue;
        }
        v.terms.push_back(std::move(term));
    }
    return v;
}

json potential_to_json(const PotentialSpec& v) {
    json terms = json::array();
    for (const auto& t : v.terms) {
        terms.push_back({{"k", t.k},
                         {"coefficient", {t.coefficient.real(), t.coefficient.imag()}},
                         {"profile", {{"gamma", t.profile.gamma}, {"poly", t.profile.poly}}}});
    }
    return {{"n", v.n}, {"terms", terms}};
}

RunConfig parse_config(const json& j) {
    std::vector<std::string> errors;
    RunConfig c;
    if (!j.is_object()) throw ParameterError("config: top level must be an object");
    read(j, "d", c.d, errors);
    read(j, "n", c.n, errors);
    read(j, "E_max", c.E_max, errors);
    read(j, "Q_pts", c.Q_pts, errors);
    read(j, "s", c.s, errors);
    read(j, "beta", c.beta, errors);
    read(j, "sigma0", c.sigma0, errors);
    read(j, "epsilon", c.epsilon, errors);
    read_opt(j, "delta", c.delta, errors);
    read(j, "output_dir", c.output_dir, errors);

    if (j.contains("omega") && !j.at("omega").is_null()) {
        try {
            const auto& o = j.at("omega");
            Frequency w;
            if (o.is_string() && o.get<std::string>() == "golden")
                w.omega.assign(1, (std::sqrt(5.0) - 1.0) / 2.0);
            else if (o.is_number())
                w.omega.assign(1, o.get<double>());
            else
                w.omega = o.get<std::vector<double>>();
            c.omega = w;
        } catch (const std::exception&) {
            errors.push_back("omega: must be a number, an array of numbers, or \"golden\"");
        }
    }

    c.potential.n = c.n;
    if (j.contains("potential")) {
        c.potential = parse_potential(j.at("potential"), errors);
        if (!j.at("potential").contains("n")) c.potential.n = c.n;
    }

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        const std::string w = "schedule.";
        read(s, "max_steps", c.kam.max_steps, errors, w);
        read_opt(s, "target_qnorm", c.kam.target_qnorm, errors, w);
        read_opt(s, "alpha1", c.kam.alpha1, errors, w);
        read(s, "alpha2", c.kam.alpha2, errors, w);
        read_opt(s, "kappa_override", c.kam.kappa_override, errors, w);
        read(s, "kappa_floor", c.kam.kappa_floor, errors, w);
        read(s, "fourier_cap", c.kam.fourier_cap, errors, w);
        read(s, "divisor_scan_cap", c.kam.divisor_scan_cap, errors, w);
        read(s, "t_nodes", c.kam.t_nodes, errors, w);
    }
    if (j.contains("dynamics")) {
        const auto& s = j.at("dynamics");
        const std::string w = "dynamics.";
        read(s, "t_final", c.dynamics.t_final, errors, w);
        read_opt(s, "dt", c.dynamics.dt, errors, w);
        read(s, "xi0", c.dynamics.xi0, errors, w);
        read(s, "floquet_k_cut", c.dynamics.floquet_k_cut, errors, w);
        read(s, "floquet_eps", c.dynamics.floquet_eps, errors, w);
        read(s, "phi_samples", c.dynamics.phi_samples, errors, w);
        read(s, "tol", c.dynamics.tol, errors, w);
    }
    if (j.contains("measure")) {
        const auto& s = j.at("measure");
        const std::string w = "measure.";
        read(s, "kappas", c.measure.kappas, errors, w);
        read(s, "Ks", c.measure.Ks, errors, w);
        read(s, "samples", c.measure.samples, errors, w);
        read(s, "seed", c.measure.seed, errors, w);
        read_opt(s, "E_max", c.measure.E_max, errors, w);
        std::vector<double> box;
        read(s, "box", box, errors, w);
        if (!box.empty()) {
            if (box.size() != 2 || !(box[0] < box[1]))
                errors.push_back("measure.box: need [lo, hi] with lo < hi");
            else
                c.measure.box = {box[0], box[1]};
        }
    }

    // Cross-field validation.
    if (c.d < 1) errors.push_back("d: must be >= 1");
    if (c.n < 1) errors.push_back("n: must be >= 1");
    if (c.E_max < c.d) errors.push_back("E_max: must be >= d");
    if (c.Q_pts != 0 && c.Q_pts < c.E_max) errors.push_back("Q_pts: must be 0 (default) or >= E_max");
    if (!(c.s >= 0.0)) errors.push_back("s: must be >= 0");
    if (!(c.beta > 0.0 && c.beta <= 1.0)) errors.push_back("beta: must lie in (0, 1]");
    if (!(c.sigma0 > 0.0)) errors.push_back("sigma0: must be > 0");
    if (!(c.epsilon >= 0.0 && c.epsilon < 1.0)) errors.push_back("epsilon: must lie in [0, 1)");
    if (c.omega) {
        if (c.omega->n() != c.n) errors.push_back("omega: length must equal n");
        try {
            c.omega->validate();
        } catch (const ParameterError& e) {
            errors.push_back(std::string("omega: ") + e.what());
        }
    }
    if (c.potential.n != c.n) errors.push_back("potential.n: must equal n");
    else if (c.d >= 1) {
        try {
            c.potential.validate(c.d);
        } catch (const ParameterError& e) {
            errors.push_back(std::string("potential: ") + e.what());
        }
    }

    c.kam.d = c.d;
    c.kam.n = c.n;
    c.kam.epsilon0 = c.epsilon > 0.0 ? c.epsilon : 1e-3;
    c.kam.sigma0 = c.sigma0;
    c.kam.norm = {c.s, c.beta};
    c.kam.delta = c.delta;
    if (c.d >= 1 && c.n >= 1 && c.beta > 0.0 && c.beta <= 1.0 && c.s >= 0.0 && c.sigma0 > 0.0) {
        try {
            c.kam.validate();
        } catch (const ParameterError& e) {
            errors.push_back(e.what());
        }
    }
    if (!(c.dynamics.t_final >= 0.0)) errors.push_back("dynamics.t_final: must be >= 0");
    if (c.dynamics.dt && !(*c.dynamics.dt > 0.0)) errors.push_back("dynamics.dt: must be > 0");
    if (c.dynamics.floquet_k_cut < 0) errors.push_back("dynamics.floquet_k_cut: must be >= 0");
    if (c.dynamics.phi_samples < 1) errors.push_back("dynamics.phi_samples: must be >= 1");
    if (c.measure.samples < 100) errors.push_back("measure.samples: must be >= 100");
    for (double k : c.measure.kappas)
        if (!(k >= 0.0)) errors.push_back("measure.kappas: entries must be >= 0");
    for (int k : c.measure.Ks)
        if (k < 1) errors.push_back("measure.Ks: entries must be >= 1");

    if (!errors.empty()) {
        std::ostringstream os;
        os << "invalid config (" << errors.size() << " problem" << (errors.size() > 1 ? "s" : "") << "):";
        for (const auto& e : errors) os << "\n  - " << e;
        throw ParameterError(os.str());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParameterError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

}  // namespace hkam
