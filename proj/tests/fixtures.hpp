#pragma once

#include <string>

#include "hkam/commands.hpp"

namespace fixtures {

std::string config_path(const std::string& name);  // file under configs/
const hkam::RunConfig& reference_config();
const hkam::BasisPtr& reference_basis();
const hkam::QPMatrix& reference_q();    // unscaled Q
const hkam::QPMatrix& reference_q0();   // epsilon * Q
const hkam::KamOutcome& reference_run();

}  // namespace fixtures
