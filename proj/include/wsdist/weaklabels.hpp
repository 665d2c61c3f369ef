#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "wsdist/grid.hpp"

namespace wsdist {

struct PointAnnotationConfig {
    // Ellipse semi-axes in voxels; the long one runs along columns.
    double semi_axis_cols = 4.0;
    double semi_axis_rows = 2.0;
    std::uint64_t seed = 0;
    // One annotation per present class per slab. When false, a 3D volume gets
    // a single annotation per class, drawn in the slab of its center.
    bool per_slice = true;

    void validate() const;
};

struct AbsentClassPolicy {
    enum class Mode { zeros, ones, constant };

    Mode mode = Mode::ones;
    double value = 0.0; // only read for Mode::constant

    static AbsentClassPolicy zeros() { return {Mode::zeros, 0.0}; }
    static AbsentClassPolicy ones() { return {Mode::ones, 1.0}; }
    static AbsentClassPolicy constant(double v);

    double fill_value() const;
};

// splitmix64 finalizer; used to derive independent per-slab seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Unbiased draw in [0, bound) from a 64-bit Mersenne Twister (mt19937_64),
// using rejection so the result does not depend on the standard library's
// distribution implementation.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

// Synthesizes point annotations from a full label map: for every slab and
// every foreground class present in it, a center is drawn uniformly from the
// class voxels, a filled ellipse is rasterized around it and intersected with
// the class mask. The component of that intersection containing the center
// is kept, so each (slab, class) pair yields one connected blob.
LabelVolume generate_points(const LabelVolume& full_labels, const PointAnnotationConfig& cfg);

// Lattice offsets (drow, dcol) with (dcol/a)^2 + (drow/b)^2 <= 1.
std::vector<std::pair<int, int>> ellipse_offsets(double semi_axis_cols, double semi_axis_rows);

SignedDistanceMap absent_class_map(const GridShape& shape, const AbsentClassPolicy& policy, int class_id = 0);

} // namespace wsdist
