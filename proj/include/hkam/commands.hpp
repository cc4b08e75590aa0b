#pragma once

#include <iosfwd>
#include <string>

#include "hkam/config.hpp"
#include "hkam/dynamics.hpp"

namespace hkam {

// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitExcluded = 2 };

int cmd_reduce(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, const std::string& artifacts_dir, std::ostream& log);
int cmd_measure(const RunConfig& cfg, std::ostream& log);
int cmd_spectrum(const RunConfig& cfg, const std::string& artifacts_dir, int k_range, std::ostream& log);
int cmd_norms(const RunConfig& cfg, const std::string& artifacts_dir, std::ostream& log);

// Shared pieces of the pipeline, exposed for tests.
BasisPtr make_basis(const RunConfig& cfg);
QPMatrix scaled_perturbation(const QPMatrix& q, double eps);

void write_generators_csv(std::ostream& os, const Transformation& t, int n);
// Ks lists the Fourier box of each step in order.
Transformation read_generators_csv(std::istream& is, BasisPtr basis, int n, const std::vector<int>& Ks);
void write_qp_csv(std::ostream& os, const QPMatrix& q);

StateVector initial_state_vector(const RunConfig& cfg, const Basis& b);

}  // namespace hkam
