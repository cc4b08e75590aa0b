#include "fixtures.hpp"

namespace fixtures {

std::string config_path(const std::string& name) { return std::string(HKAM_SOURCE_DIR) + "/configs/" + name; }

const hkam::RunConfig& reference_config() {
    static const hkam::RunConfig cfg = hkam::load_config(config_path("reference.json"));
    return cfg;
}

const hkam::BasisPtr& reference_basis() {
    static const hkam::BasisPtr b = hkam::make_basis(reference_config());
    return b;
}

const hkam::QPMatrix& reference_q() {
    static const hkam::QPMatrix q = hkam::assemble_Q(reference_config().potential, reference_basis());
    return q;
}

const hkam::QPMatrix& reference_q0() {
    static const hkam::QPMatrix q = hkam::scaled_perturbation(reference_q(), reference_config().epsilon);
    return q;
}

const hkam::KamOutcome& reference_run() {
    static const hkam::KamOutcome out = hkam::run_kam(hkam::NormalFormMatrix::harmonic(reference_basis()),
                                                      reference_q0(), *reference_config().omega,
                                                      reference_config().kam);
    return out;
}

}  // namespace fixtures
