#include "wsdist/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

#include "parallel.hpp"

namespace wsdist {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void check_sources(const GridShape& shape, std::span<const std::size_t> sources) {
    if (sources.empty()) fail(ErrorCode::invalid_argument, "no sources");
    for (auto s : sources)
        if (s >= shape.size()) fail(ErrorCode::precondition, "source index outside the grid");
}

std::vector<double> additive_exact(const GridShape& shape, std::span<const double> intensity,
                                   std::span<const std::size_t> sources, const TransformConfig& cfg) {
    const Stencil stencil(shape, cfg.connectivity);
    const double mix = cfg.intensity_mix;
    std::vector<double> dist(shape.size(), inf);

    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    for (auto s : sources) {
        if (dist[s] == 0.0) continue;
        dist[s] = 0.0;
        open.emplace(0.0, s);
    }
    while (!open.empty()) {
        const auto [d, i] = open.top();
        open.pop();
        if (d > dist[i]) continue;
        const Voxel v = shape.voxel(i);
        for (const auto& o : stencil.offsets()) {
            if (!stencil.in_bounds(v, o)) continue;
            const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + o.flat);
            const double nd = d + step_cost(intensity[i], intensity[j], o.step, mix);
            if (nd < dist[j]) {
                dist[j] = nd;
                open.emplace(nd, j);
            }
        }
    }
    return dist;
}

// Minimum barrier approximation: every voxel settles the first interval
// [lo, hi] popped for it; priority is hi - lo.
std::vector<double> barrier_best_first(const GridShape& shape, std::span<const double> intensity,
                                       std::span<const std::size_t> sources, Connectivity connectivity) {
    const Stencil stencil(shape, connectivity);
    const std::size_t n = shape.size();
    std::vector<double> dist(n, inf);
    std::vector<double> tentative(n, inf);
    std::vector<char> settled(n, 0);

    using Entry = std::tuple<double, std::size_t, double, double>; // cost, voxel, hi, lo
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    for (auto s : sources) {
        if (tentative[s] == 0.0) continue;
        tentative[s] = 0.0;
        open.emplace(0.0, s, intensity[s], intensity[s]);
    }
    while (!open.empty()) {
        const auto [cost, i, top, bottom] = open.top();
        open.pop();
        if (settled[i]) continue;
        settled[i] = 1;
        dist[i] = cost;
        const Voxel v = shape.voxel(i);
        for (const auto& o : stencil.offsets()) {
            if (!stencil.in_bounds(v, o)) continue;
            const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + o.flat);
            if (settled[j]) continue;
            const double h = std::max(top, intensity[j]);
            const double l = std::min(bottom, intensity[j]);
            const double c = h - l;
            if (c < tentative[j]) {
                tentative[j] = c;
                open.emplace(c, j, h, l);
            }
        }
    }
    return dist;
}

// A sweep walks the planes orthogonal to `axis` in `direction`; every voxel
// relaxes from its stencil neighbors in the plane just visited. Voxels of one
// plane never read each other, so the plane loops vectorize.
struct Sweep {
    int axis;
    int direction; // +1 ascending, -1 descending
};

std::vector<Sweep> sweeps_for(int rank) {
    std::vector<Sweep> out;
    for (int a = 0; a < rank; ++a) {
        out.push_back({a, 1});
        out.push_back({a, -1});
    }
    return out;
}

// The two axes spanning the planes of a sweep, (outer, inner). The inner one
// is the fastest-varying axis with more than one voxel.
std::pair<int, int> plane_axes(const GridShape& shape, int sweep_axis) {
    int inner = -1;
    for (int ax = 2; ax >= 0 && inner < 0; --ax)
        if (ax != sweep_axis && shape.extent()[ax] > 1) inner = ax;
    if (inner < 0) inner = sweep_axis == 2 ? 1 : 2;
    return {3 - sweep_axis - inner, inner};
}

// The grid with its last axis moved to the front: (row, col) -> (col, row),
// (row, col, slab) -> (slab, row, col).
GridShape move_last_axis_first(const GridShape& shape) {
    auto dims = shape.dims();
    auto spacing = shape.spacing();
    std::rotate(dims.rbegin(), dims.rbegin() + 1, dims.rend());
    std::rotate(spacing.rbegin(), spacing.rbegin() + 1, spacing.rend());
    return GridShape(std::move(dims), std::move(spacing));
}

// For every index of move_last_axis_first(shape), the matching index in shape.
std::vector<std::size_t> natural_index_of(const GridShape& shape) {
    std::vector<std::size_t> out(shape.size());
    const auto& ext = shape.extent();
    const std::size_t lead = shape.rank() == 3 ? ext[2] : ext[1];
    const std::size_t rest = shape.size() / lead;
    for (std::size_t i = 0; i < shape.size(); ++i) out[(i % lead) * rest + i / lead] = i;
    return out;
}

struct PlaneOffset {
    std::ptrdiff_t flat;
    double spatial; // (1 - mix) * step
    int du, dv;     // shift along the outer and inner plane axes
};

template <bool UseIntensity>
double sweep_once(const GridShape& shape, const Sweep& sweep, const std::vector<PlaneOffset>& offs,
                  std::span<const double> intensity, double mix, std::vector<double>& dist,
                  std::vector<double>& before) {
    const auto& ext = shape.extent();
    const std::array<std::ptrdiff_t, 3> stride{static_cast<std::ptrdiff_t>(ext[1] * ext[2]),
                                               static_cast<std::ptrdiff_t>(ext[2]), 1};
    const auto [u, v] = plane_axes(shape, sweep.axis);
    const auto nu = static_cast<std::ptrdiff_t>(ext[u]), nv = static_cast<std::ptrdiff_t>(ext[v]);
    const auto planes = static_cast<std::ptrdiff_t>(ext[sweep.axis]);
    double* d = dist.data();
    const double* in = intensity.data();
    double largest = 0.0;

    for (std::ptrdiff_t step = 1; step < planes; ++step) {
        const std::ptrdiff_t p = sweep.direction > 0 ? step : planes - 1 - step;
        const std::ptrdiff_t base = p * stride[sweep.axis];
        for (std::ptrdiff_t a = 0, k = 0; a < nu; ++a)
            for (std::ptrdiff_t b = 0; b < nv; ++b) before[k++] = d[base + a * stride[u] + b * stride[v]];

        for (const auto& o : offs) {
            const std::ptrdiff_t u0 = std::max<std::ptrdiff_t>(0, -o.du), u1 = nu - std::max(0, o.du);
            const std::ptrdiff_t v0 = std::max<std::ptrdiff_t>(0, -o.dv), v1 = nv - std::max(0, o.dv);
            for (std::ptrdiff_t a = u0; a < u1; ++a) {
                const std::ptrdiff_t row = base + a * stride[u];
                if (stride[v] == 1) {
                    double* __restrict dst = d + row;
                    const double* __restrict src = d + row + o.flat;
                    const double* __restrict ia = in + row;
                    const double* __restrict ib = in + row + o.flat;
                    for (std::ptrdiff_t b = v0; b < v1; ++b) {
                        double cand = src[b] + o.spatial;
                        if constexpr (UseIntensity) cand += mix * std::abs(ia[b] - ib[b]);
                        dst[b] = cand < dst[b] ? cand : dst[b];
                    }
                } else {
                    for (std::ptrdiff_t b = v0; b < v1; ++b) {
                        const std::ptrdiff_t i = row + b * stride[v];
                        double cand = d[i + o.flat] + o.spatial;
                        if constexpr (UseIntensity) cand += mix * std::abs(in[i] - in[i + o.flat]);
                        d[i] = cand < d[i] ? cand : d[i];
                    }
                }
            }
        }

        for (std::ptrdiff_t a = 0, k = 0; a < nu; ++a)
            for (std::ptrdiff_t b = 0; b < nv; ++b, ++k) {
                const double now = d[base + a * stride[u] + b * stride[v]];
                if (now < before[k]) largest = std::max(largest, before[k] - now);
            }
    }
    return largest;
}

} // namespace

const char* to_string(DistanceKind kind) {
    switch (kind) {
    case DistanceKind::euclidean: return "euclidean";
    case DistanceKind::geodesic: return "geodesic";
    case DistanceKind::intensity: return "intensity";
    case DistanceKind::mbd: return "mbd";
    }
    return "?";
}

std::optional<DistanceKind> parse_distance_kind(std::string_view name) {
    if (name == "euc" || name == "euclidean") return DistanceKind::euclidean;
    if (name == "geo" || name == "geodesic") return DistanceKind::geodesic;
    if (name == "int" || name == "intensity") return DistanceKind::intensity;
    if (name == "mbd") return DistanceKind::mbd;
    return std::nullopt;
}

TransformConfig TransformConfig::make(DistanceKind kind, std::optional<double> mix) {
    TransformConfig cfg;
    cfg.kind = kind;
    switch (kind) {
    case DistanceKind::euclidean: cfg.intensity_mix = 0.0; break;
    case DistanceKind::intensity: cfg.intensity_mix = 1.0; break;
    case DistanceKind::geodesic: cfg.intensity_mix = 0.5; break;
    case DistanceKind::mbd: cfg.intensity_mix = 0.0; break;
    }
    if (mix) {
        if (kind == DistanceKind::mbd) fail(ErrorCode::invalid_argument, "intensity mix does not apply to mbd");
        if ((kind == DistanceKind::euclidean || kind == DistanceKind::intensity) && *mix != cfg.intensity_mix)
            fail(ErrorCode::invalid_argument, std::string("intensity mix is fixed for ") + to_string(kind));
        cfg.intensity_mix = *mix;
    }
    cfg.validate();
    return cfg;
}

void TransformConfig::validate() const {
    if (!(intensity_mix >= 0.0 && intensity_mix <= 1.0))
        fail(ErrorCode::invalid_argument, "intensity mix must lie in [0, 1]");
    if (kind == DistanceKind::euclidean && intensity_mix != 0.0)
        fail(ErrorCode::invalid_argument, "euclidean distance requires mix 0");
    if (kind == DistanceKind::intensity && intensity_mix != 1.0)
        fail(ErrorCode::invalid_argument, "intensity distance requires mix 1");
}

void RasterConfig::validate() const {
    if (max_passes < 1) fail(ErrorCode::invalid_argument, "raster engine needs at least one pass");
    if (!(convergence_tol >= 0.0)) fail(ErrorCode::invalid_argument, "convergence tolerance must be >= 0");
}

DistanceMap distance_map_exact(const ScalarVolume& image, std::span<const std::size_t> sources,
                               const TransformConfig& cfg, int class_id) {
    cfg.validate();
    const auto& shape = image.shape();
    check_sources(shape, sources);
    const auto intensity = image.channel(cfg.channel);
    auto dist = cfg.kind == DistanceKind::mbd
                    ? barrier_best_first(shape, intensity, sources, cfg.connectivity)
                    : additive_exact(shape, intensity, sources, cfg);
    return DistanceMap(shape, class_id, std::move(dist));
}

DistanceMap distance_map_raster(const ScalarVolume& image, std::span<const std::size_t> sources,
                                const TransformConfig& cfg, const RasterConfig& rcfg, int class_id,
                                RasterStats* stats) {
    cfg.validate();
    rcfg.validate();
    if (cfg.kind == DistanceKind::mbd)
        fail(ErrorCode::unsupported, "the raster engine does not support mbd; use the exact engine");
    const auto& shape = image.shape();
    check_sources(shape, sources);
    const auto intensity = image.channel(cfg.channel);
    const double mix = cfg.intensity_mix;

    std::vector<double> dist(shape.size(), inf);
    for (auto s : sources) dist[s] = 0.0;

    // Planes orthogonal to the last axis are strided in memory, so sweeps
    // along it run on a copy with that axis moved to the front.
    const int last = shape.rank() - 1;
    const GridShape moved = move_last_axis_first(shape);
    const auto to_natural = natural_index_of(shape);
    std::vector<double> intensity_moved(shape.size()), dist_moved(shape.size());
    for (std::size_t t = 0; t < to_natural.size(); ++t) intensity_moved[t] = intensity[to_natural[t]];

    struct Plan {
        Sweep sweep;
        bool on_moved;
        std::vector<PlaneOffset> offsets;
    };
    std::vector<Plan> plans;
    for (const auto& sw : sweeps_for(shape.rank())) {
        const bool on_moved = sw.axis == last;
        const GridShape& g = on_moved ? moved : shape;
        const Sweep local_sweep{on_moved ? 0 : sw.axis, sw.direction};
        const auto [u, v] = plane_axes(g, local_sweep.axis);
        Plan plan{local_sweep, on_moved, {}};
        const Stencil stencil(g, cfg.connectivity);
        for (const auto& o : stencil.offsets())
            if (o.delta[local_sweep.axis] == -local_sweep.direction)
                plan.offsets.push_back({o.flat, (1.0 - mix) * o.step, o.delta[u], o.delta[v]});
        plans.push_back(std::move(plan));
    }
    const auto& ext = shape.extent();
    std::vector<double> before(std::max({ext[0] * ext[1], ext[0] * ext[2], ext[1] * ext[2]}));

    RasterStats local;
    for (int pass = 0; pass < rcfg.max_passes; ++pass) {
        double largest_drop = 0.0;
        bool moved_current = false;
        for (const auto& plan : plans) {
            if (plan.on_moved != moved_current) {
                if (plan.on_moved)
                    for (std::size_t t = 0; t < to_natural.size(); ++t) dist_moved[t] = dist[to_natural[t]];
                else
                    for (std::size_t t = 0; t < to_natural.size(); ++t) dist[to_natural[t]] = dist_moved[t];
                moved_current = plan.on_moved;
            }
            const GridShape& g = plan.on_moved ? moved : shape;
            std::span<const double> in = plan.on_moved ? std::span<const double>(intensity_moved) : intensity;
            auto& d = plan.on_moved ? dist_moved : dist;
            const double drop = mix == 0.0 ? sweep_once<false>(g, plan.sweep, plan.offsets, in, mix, d, before)
                                           : sweep_once<true>(g, plan.sweep, plan.offsets, in, mix, d, before);
            largest_drop = std::max(largest_drop, drop);
        }
        if (moved_current)
            for (std::size_t t = 0; t < to_natural.size(); ++t) dist[to_natural[t]] = dist_moved[t];
        local.passes = pass + 1;
        if (largest_drop <= rcfg.convergence_tol) {
            local.converged = true;
            break;
        }
    }
    if (stats) *stats = local;
    return DistanceMap(shape, class_id, std::move(dist));
}

SignedDistanceMap make_signed_map(const DistanceMap& dist, const LabelVolume& labels) {
    if (!(dist.shape() == labels.shape()))
        fail(ErrorCode::shape_mismatch, "distance map and labels have different shapes");
    const int k = dist.class_id();
    std::vector<double> out(dist.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = dist[i];
        out[i] = d == 0.0 ? 0.0 : (labels[i] == k ? -d : d);
    }
    return SignedDistanceMap(dist.shape(), k, std::move(out));
}

ScalarVolume rescale_intensities(const ScalarVolume& image, std::size_t channel) {
    const auto values = image.channel(channel);
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) fail(ErrorCode::numeric, "degenerate intensity range");
    std::vector<double> data(image.data().begin(), image.data().end());
    const std::size_t n = image.shape().size();
    const double scale = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < n; ++i) {
        double& x = data[channel * n + i];
        x = x == hi ? 255.0 : std::min(255.0, (x - lo) * scale);
    }
    return ScalarVolume(image.shape(), image.channels(), std::move(data));
}

namespace {

bool constant_channel(const ScalarVolume& image, std::size_t channel) {
    const auto v = image.channel(channel);
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::vector<double> class_map(const ScalarVolume& image, const LabelVolume& labels, int k,
                              const TransformConfig& cfg, const AbsentClassPolicy& absent,
                              const MapOptions& options) {
    const auto boundary = boundary_of(labels, k, cfg.connectivity);
    if (boundary.empty()) {
        const auto m = absent_class_map(labels.shape(), absent, k);
        return {m.data().begin(), m.data().end()};
    }
    const DistanceMap dist = options.engine == Engine::raster
                                 ? distance_map_raster(image, boundary, cfg, options.raster, k)
                                 : distance_map_exact(image, boundary, cfg, k);
    const auto signed_map = make_signed_map(dist, labels);
    return {signed_map.data().begin(), signed_map.data().end()};
}

} // namespace

std::vector<SignedDistanceMap> signed_maps_for_all_classes(const ScalarVolume& image,
                                                           const LabelVolume& weak_labels,
                                                           const TransformConfig& cfg,
                                                           const AbsentClassPolicy& absent_policy,
                                                           const MapOptions& options) {
    cfg.validate();
    absent_policy.fill_value();
    if (options.engine == Engine::raster) {
        options.raster.validate();
        if (cfg.kind == DistanceKind::mbd)
            fail(ErrorCode::unsupported, "the raster engine does not support mbd; use the exact engine");
    }
    if (weak_labels.num_classes() < 2) fail(ErrorCode::precondition, "need at least one foreground class");
    if (!(image.shape() == weak_labels.shape()))
        fail(ErrorCode::shape_mismatch, "image and labels have different shapes");
    if (cfg.channel >= image.channels()) fail(ErrorCode::invalid_argument, "channel out of range");

    // A constant channel has no differences to rescale; leaving it as is gives
    // the same distances as any constant target.
    const bool uses_intensity = cfg.kind == DistanceKind::mbd || cfg.intensity_mix > 0.0;
    const ScalarVolume prepared = cfg.rescale_to_255 && uses_intensity && !constant_channel(image, cfg.channel)
                                      ? rescale_intensities(image, cfg.channel)
                                      : image;

    const auto& shape = image.shape();
    const int classes = weak_labels.num_classes() - 1;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(classes), std::vector<double>(shape.size()));

    if (options.per_slice && shape.rank() == 3) {
        const std::size_t slabs = shape.slabs();
        detail::parallel_for(slabs * static_cast<std::size_t>(classes), options.threads, [&](std::size_t task) {
            const std::size_t slab = task / static_cast<std::size_t>(classes);
            const int k = static_cast<int>(task % static_cast<std::size_t>(classes)) + 1;
            const auto img = extract_slab(prepared, slab);
            const auto lab = extract_slab(weak_labels, slab);
            const auto slice = class_map(img, lab, k, cfg, absent_policy, options);
            insert_slab(slice, slab, shape, out[static_cast<std::size_t>(k - 1)]);
        });
    } else {
        detail::parallel_for(static_cast<std::size_t>(classes), options.threads, [&](std::size_t task) {
            const int k = static_cast<int>(task) + 1;
            out[task] = class_map(prepared, weak_labels, k, cfg, absent_policy, options);
        });
    }

    std::vector<SignedDistanceMap> maps;
    maps.reserve(out.size());
    for (int k = 1; k <= classes; ++k)
        maps.emplace_back(shape, k, std::move(out[static_cast<std::size_t>(k - 1)]));
    return maps;
}

} // namespace wsdist
