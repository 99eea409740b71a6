#pragma once

// Named generators, terminal conditions and obstacles, constructed from
// JSON parameter blocks so experiments are fully config-driven.

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ppde/pathspace.hpp"
#include "ppde/solver.hpp"
#include "ppde/viscosity.hpp"

namespace ppde {

struct RegistryEntry {
    std::string name;
    std::string params;  // parameter schema, human readable
    std::string notes;   // e.g. the declared theta-modulus
};

Generator make_generator(const std::string& name, const nlohmann::json& params);
std::vector<RegistryEntry> generator_registry();

TerminalCondition make_terminal(const std::string& name,
                                const nlohmann::json& params,
                                const PathTree& tree);
std::vector<RegistryEntry> terminal_registry();

TreeProcess make_obstacle(const std::string& name, const nlohmann::json& params,
                          const PathTree& tree);
std::vector<RegistryEntry> obstacle_registry();

// Deterministic dyadic noise in [-1, 1] (multiples of 1/64), the shared
// randomization for fixtures: exact in binary floating point.
double dyadic_noise(std::uint64_t& state);

}  // namespace ppde
