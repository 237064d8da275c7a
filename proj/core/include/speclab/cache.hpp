#pragma once

#include <string>

#include "speclab/model.hpp"

namespace speclab::cache {

/// Versioned binary snapshot of an Eigensystem (header: dimension, n, L,
/// potential descriptor, harvest thresholds, pair count). A TwoSidedPower
/// potential loads without its sampler; the eigen data stays usable.
void save_eigensystem(const model::Eigensystem& sys, const std::string& path);
model::Eigensystem load_eigensystem(const std::string& path);

/// Stable file-name key for the (potential, grid, lambda_max) triple.
std::string eigensystem_key(const model::PotentialSpec& p, const model::Grid& grid,
                            double lambda_max);

}  // namespace speclab::cache
