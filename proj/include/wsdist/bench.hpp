#pragma once

#include <cstdint>
#include <vector>

#include "wsdist/transforms.hpp"

namespace wsdist {

// Synthetic phantom: nested ellipsoidal classes with distinct mean
// intensities plus uniform noise, and its full label map.
struct Phantom {
    ScalarVolume image;
    LabelVolume labels;
};

Phantom make_phantom(const GridShape& shape, int foreground_classes, std::uint64_t seed);

struct BenchConfig {
    std::vector<std::size_t> size_2d{256, 256};
    std::vector<std::size_t> size_3d{64, 64, 32};
    std::vector<double> spacing_3d{1.0, 1.0, 4.0};
    int foreground_classes = 3;
    int repetitions = 3;
    std::uint64_t seed = 0;
    std::vector<DistanceKind> kinds{DistanceKind::euclidean, DistanceKind::geodesic, DistanceKind::intensity,
                                    DistanceKind::mbd};
    // Engine for euclidean/geodesic/intensity; mbd always runs exact.
    Engine additive_engine = Engine::raster;
    RasterConfig raster;
    unsigned threads = 1;
};

struct BenchRow {
    DistanceKind kind;
    double mean_2d = 0.0; // seconds
    double mean_3d = 0.0;
    std::vector<double> times_2d;
    std::vector<double> times_3d;
};

// Wall time of signed_maps_for_all_classes for all foreground classes, on one
// 2D slice and on one 3D volume, averaged over the repetitions.
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

} // namespace wsdist
