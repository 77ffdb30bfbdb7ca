#pragma once

#include <string>

#include "monas/model.hpp"

namespace monas {

// JSON weight checkpoints. Doubles round-trip exactly (shortest-exact
// serialization), so save followed by load reproduces the network bitwise.
void save_checkpoint(const SuperNetwork& net, const std::string& path);
SuperNetwork load_checkpoint(const std::string& path);

}  // namespace monas
