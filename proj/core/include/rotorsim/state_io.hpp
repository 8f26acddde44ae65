#pragma once

#include <string>

#include "rotorsim/dynamics.hpp"

namespace rotorsim {

// Checkpoint state file format: a JSON document carrying the basis
// descriptor (top class, j_max, optional m restriction) and the payload as
// interleaved re/im pairs with round-trip precision.
std::string state_to_json(const QuantumState& state);
QuantumState state_from_json(const std::string& text);

void save_state(const std::string& path, const QuantumState& state);
QuantumState load_state(const std::string& path);

}  // namespace rotorsim
