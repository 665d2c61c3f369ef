#include "wsdist/bench.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace wsdist {

Phantom make_phantom(const GridShape& shape, int foreground_classes, std::uint64_t seed) {
    if (foreground_classes < 1) fail(ErrorCode::invalid_argument, "phantom needs a foreground class");
    std::mt19937_64 rng(mix_seed(seed, 0x5eed));
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    const auto& ext = shape.extent();
    std::vector<std::int32_t> labels(shape.size(), 0);
    std::vector<double> image(shape.size());

    // Class k occupies the shell between ellipsoids k and k+1, shrinking
    // inwards so every class is present on the central slabs.
    const double cr = (ext[0] - 1) / 2.0, cc = (ext[1] - 1) / 2.0, cs = (ext[2] - 1) / 2.0;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const Voxel v = shape.voxel(i);
        const double r = (v.row - cr) / (0.45 * ext[0]);
        const double c = (v.col - cc) / (0.40 * ext[1]);
        const double s = ext[2] > 1 ? (v.slab - cs) / (0.48 * ext[2]) : 0.0;
        const double rho = std::sqrt(r * r + c * c + s * s);
        int k = 0;
        for (int j = 1; j <= foreground_classes; ++j)
            if (rho <= 1.0 - 0.8 * (j - 1) / foreground_classes) k = j;
        labels[i] = k;
        const double mean = 40.0 + 150.0 * k / foreground_classes;
        image[i] = mean + 30.0 * (unit() - 0.5);
    }
    return {ScalarVolume(shape, 1, std::move(image)), LabelVolume(shape, foreground_classes + 1, std::move(labels))};
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    if (cfg.repetitions < 1) fail(ErrorCode::invalid_argument, "bench needs at least one repetition");
    const GridShape shape_2d(cfg.size_2d);
    const GridShape shape_3d(cfg.size_3d, cfg.spacing_3d);
    if (shape_2d.rank() != 2 || shape_3d.rank() != 3)
        fail(ErrorCode::invalid_argument, "bench sizes must be 2D and 3D");

    PointAnnotationConfig points;
    points.seed = cfg.seed;
    const auto p2 = make_phantom(shape_2d, cfg.foreground_classes, cfg.seed);
    const auto p3 = make_phantom(shape_3d, cfg.foreground_classes, cfg.seed + 1);
    const auto weak_2d = generate_points(p2.labels, points);
    const auto weak_3d = generate_points(p3.labels, points);

    auto time_once = [&](const Phantom& p, const LabelVolume& weak, DistanceKind kind) {
        const auto tcfg = TransformConfig::make(kind);
        MapOptions opts;
        opts.engine = kind == DistanceKind::mbd ? Engine::exact : cfg.additive_engine;
        opts.raster = cfg.raster;
        opts.threads = cfg.threads;
        const auto start = std::chrono::steady_clock::now();
        const auto maps = signed_maps_for_all_classes(p.image, weak, tcfg, AbsentClassPolicy::ones(), opts);
        const auto stop = std::chrono::steady_clock::now();
        (void)maps;
        return std::chrono::duration<double>(stop - start).count();
    };

    std::vector<BenchRow> rows;
    for (auto kind : cfg.kinds) {
        BenchRow row;
        row.kind = kind;
        for (int r = 0; r < cfg.repetitions; ++r) {
            row.times_2d.push_back(time_once(p2, weak_2d, kind));
            row.times_3d.push_back(time_once(p3, weak_3d, kind));
        }
        row.mean_2d = std::accumulate(row.times_2d.begin(), row.times_2d.end(), 0.0) / cfg.repetitions;
        row.mean_3d = std::accumulate(row.times_3d.begin(), row.times_3d.end(), 0.0) / cfg.repetitions;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace wsdist
