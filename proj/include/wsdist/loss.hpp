#pragma once

#include <span>
#include <vector>

#include "wsdist/grid.hpp"

namespace wsdist {

struct LossConfig {
    double alpha = 1.0;
    // Restrict both terms to classes 1..K. With false, the boundary term also
    // expects a map for class 0 and the cross-entropy counts voxels labeled 0
    // as annotated background.
    bool foreground_only = true;
    double ce_clamp_eps = 1e-10;

    void validate() const;
};

struct ObjectiveTerms {
    double total = 0.0;
    double cross_entropy = 0.0;
    double boundary = 0.0;
};

// Sum of s * phi over the selected classes and all voxels. Linear in probs.
double boundary_loss(const ProbabilityVolume& probs, std::span<const SignedDistanceMap> signed_maps,
                     const LossConfig& cfg = {});

// d(boundary_loss)/d(probs) for each map, in the order given: the maps
// themselves.
std::vector<std::vector<double>> boundary_loss_grad(std::span<const SignedDistanceMap> signed_maps);

// Sum of -log(max(s, eps)) over annotated voxels at their labeled class.
double partial_cross_entropy(const ProbabilityVolume& probs, const LabelVolume& weak_labels,
                             const LossConfig& cfg = {});

ObjectiveTerms combined_objective(const ProbabilityVolume& probs, const LabelVolume& weak_labels,
                                  std::span<const SignedDistanceMap> signed_maps, const LossConfig& cfg = {});

// Pairwise summation; error grows with log(n) rather than n.
double pairwise_sum(std::span<const double> values);

} // namespace wsdist
