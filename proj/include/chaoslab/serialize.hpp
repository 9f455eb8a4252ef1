#pragma once

#include <string>

#include "json.hpp"

#include "chaoslab/chaos_algebra.hpp"
#include "chaoslab/grid_kernel.hpp"
#include "chaoslab/stein_bounds.hpp"

namespace chaoslab {

// Kernel: {grid: {m, measures[], doubled}, order, coeffs (row-major), symmetric}
nlohmann::json to_json(Grid const& g);
nlohmann::json to_json(Kernel const& f);
// ChaosExpansion: {constant, terms: [{order, kernel}]}
nlohmann::json to_json(ChaosExpansion const& F);
// ChaosVector: {components: [{order, kernel}]}
nlohmann::json to_json(ChaosVector const& v);

// All parsers raise InputError on malformed input.
Grid grid_from_json(nlohmann::json const& j);
Kernel kernel_from_json(nlohmann::json const& j);
ChaosExpansion expansion_from_json(nlohmann::json const& j);
ChaosVector vector_from_json(nlohmann::json const& j);

nlohmann::json read_json_file(std::string const& path);

}  // namespace chaoslab
