#pragma once

// Expected exit codes of every fixture problem under each command.

#include <array>
#include <map>
#include <string>

namespace difactor::testing {

// Exit codes for expand, conditions, check, factor, cascade.
inline const std::map<std::string, std::array<int, 5>> kExpected = {
    {"invalid_expression", {2, 2, 2, 2, 2}},
    {"invalid_linear_u", {2, 2, 2, 2, 2}},
    {"invalid_slot", {2, 2, 2, 2, 2}},
    {"nonlinear_ode", {0, 0, 0, 1, 0}},
    {"nonlinear_pde2", {0, 0, 0, 1, 1}},
    {"ode_constant", {0, 0, 0, 0, 0}},
    {"ode_constant_wrong", {0, 0, 1, 0, 1}},
    {"ode_double_root", {0, 0, 0, 0, 0}},
    {"ode_harmonic", {0, 0, 2, 1, 1}},
    {"ode_no_polynomial_solution", {0, 0, 2, 1, 1}},
    {"ode_riccati", {0, 0, 2, 0, 0}},
    {"pde_laplace", {0, 0, 2, 1, 1}},
    {"pde_parabolic", {0, 0, 2, 0, 1}},
    {"pde_wave", {0, 0, 0, 0, 1}},
    {"system_coupled", {0, 0, 0, 1, 0}},
    {"system_diag", {0, 0, 0, 1, 0}},
    {"system_nonlinear", {0, 0, 0, 1, 1}},
    {"system_pde2", {0, 0, 0, 1, 1}},
    {"system_singular", {0, 0, 1, 1, 1}},
};
inline const char* kCommands[] = {"expand", "conditions", "check", "factor", "cascade"};

}  // namespace difactor::testing
