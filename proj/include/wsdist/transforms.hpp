#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wsdist/grid.hpp"
#include "wsdist/weaklabels.hpp"

namespace wsdist {

enum class DistanceKind { euclidean, geodesic, intensity, mbd };

const char* to_string(DistanceKind kind);
std::optional<DistanceKind> parse_distance_kind(std::string_view name);

// Distance settings. intensity_mix weighs |dI| against the spatial step:
// 0 is purely spatial (euclidean), 1 is purely intensity based.
struct TransformConfig {
    DistanceKind kind = DistanceKind::euclidean;
    double intensity_mix = 0.0;
    Connectivity connectivity = Connectivity::full;
    std::size_t channel = 0;
    bool rescale_to_255 = true;

    // Mix is fixed for euclidean (0) and intensity (1); geodesic defaults to
    // 0.5. Passing a conflicting mix for a fixed kind is an error.
    static TransformConfig make(DistanceKind kind, std::optional<double> mix = std::nullopt);

    void validate() const;
    bool additive() const noexcept { return kind != DistanceKind::mbd; }
};

struct RasterConfig {
    int max_passes = 4;           // one pass = every directional sweep once
    double convergence_tol = 0.0; // stop once a pass lowers no value by more than this

    void validate() const;
};

struct RasterStats {
    int passes = 0;
    bool converged = false;
};

enum class Engine { exact, raster };

// Per-step cost of the weighted-L1 path length.
inline double step_cost(double intensity_a, double intensity_b, double step_length, double mix) noexcept {
    const double di = intensity_a > intensity_b ? intensity_a - intensity_b : intensity_b - intensity_a;
    return mix * di + (1.0 - mix) * step_length;
}

// Best-first propagation from the sources. Additive kinds give the exact
// minimal path cost on the neighborhood graph. For mbd every voxel keeps the
// first (lowest max-min) interval that reaches it, which upper-bounds the true
// minimum barrier and is exact on 1D grids and constant images.
DistanceMap distance_map_exact(const ScalarVolume& image, std::span<const std::size_t> sources,
                               const TransformConfig& cfg, int class_id = 0);

// Iterated directional sweeps (4 per pass in 2D, 6 in 3D). Never below the
// exact result; equal to it once a pass leaves every value unchanged.
DistanceMap distance_map_raster(const ScalarVolume& image, std::span<const std::size_t> sources,
                                const TransformConfig& cfg, const RasterConfig& rcfg = {},
                                int class_id = 0, RasterStats* stats = nullptr);

// Negates the distance inside the class of dist.class_id(); boundary voxels
// are exactly +0.
SignedDistanceMap make_signed_map(const DistanceMap& dist, const LabelVolume& labels);

// Affine map of one channel onto [0, 255]; other channels are copied.
ScalarVolume rescale_intensities(const ScalarVolume& image, std::size_t channel);

struct MapOptions {
    Engine engine = Engine::exact;
    RasterConfig raster;
    // Compute each slab independently as a 2D problem and restack.
    bool per_slice = false;
    // 0 = hardware concurrency.
    unsigned threads = 1;
};

// One signed map per foreground class (ids 1..K, in order). Classes without
// annotation in the processed extent get the absent-policy constant.
std::vector<SignedDistanceMap> signed_maps_for_all_classes(const ScalarVolume& image,
                                                           const LabelVolume& weak_labels,
                                                           const TransformConfig& cfg,
                                                           const AbsentClassPolicy& absent_policy,
                                                           const MapOptions& options = {});

} // namespace wsdist
