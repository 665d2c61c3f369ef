#include "wsdist/wsdist.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <new>
#include <string>

#include "wsdist/bench.hpp"
#include "wsdist/io.hpp"
#include "wsdist/loss.hpp"
#include "wsdist/metrics.hpp"
#include "wsdist/transforms.hpp"

struct wsdist_image {
    wsdist::ScalarVolume value;
};
struct wsdist_labels {
    wsdist::LabelVolume value;
};
struct wsdist_probs {
    wsdist::ProbabilityVolume value;
};
struct wsdist_maps {
    std::vector<wsdist::SignedDistanceMap> value;
};
struct wsdist_report {
    std::vector<std::pair<std::string, wsdist::MetricReport>> subjects;
};

namespace {

using namespace wsdist;
namespace fs = std::filesystem;

thread_local std::string last_error;

unsigned threads_from_env() {
    if (const char* env = std::getenv("WSDIST_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0') return static_cast<unsigned>(v);
    }
    return 0;
}

std::atomic<unsigned> worker_threads{threads_from_env()};

wsdist_status to_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return WSDIST_ERR_INVALID_ARGUMENT;
    case ErrorCode::shape_mismatch: return WSDIST_ERR_SHAPE_MISMATCH;
    case ErrorCode::parse: return WSDIST_ERR_PARSE;
    case ErrorCode::io: return WSDIST_ERR_IO;
    case ErrorCode::unsupported: return WSDIST_ERR_UNSUPPORTED;
    case ErrorCode::numeric: return WSDIST_ERR_NUMERIC;
    case ErrorCode::precondition: return WSDIST_ERR_PRECONDITION;
    }
    return WSDIST_ERR_INTERNAL;
}

template <class Fn>
wsdist_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        return WSDIST_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& e) {
        last_error = e.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return WSDIST_ERR_INTERNAL;
}

template <class T>
void require(const T* p, const char* name) {
    if (p == nullptr) fail(ErrorCode::invalid_argument, std::string(name) + " must not be null");
}

GridShape to_shape(const wsdist_grid* g) {
    require(g, "grid");
    if (g->rank != 2 && g->rank != 3) fail(ErrorCode::invalid_argument, "grid rank must be 2 or 3");
    const auto r = static_cast<std::size_t>(g->rank);
    return GridShape(std::vector<std::size_t>(g->dims, g->dims + r), std::vector<double>(g->spacing, g->spacing + r));
}

void from_shape(const GridShape& s, wsdist_grid* g) {
    g->rank = s.rank();
    for (int a = 0; a < 3; ++a) {
        g->dims[a] = a < s.rank() ? s.dims()[static_cast<std::size_t>(a)] : 1;
        g->spacing[a] = s.spacing_at(a);
    }
}

DistanceKind to_kind(int kind) {
    switch (kind) {
    case WSDIST_KIND_EUCLIDEAN: return DistanceKind::euclidean;
    case WSDIST_KIND_GEODESIC: return DistanceKind::geodesic;
    case WSDIST_KIND_INTENSITY: return DistanceKind::intensity;
    case WSDIST_KIND_MBD: return DistanceKind::mbd;
    default: fail(ErrorCode::invalid_argument, "unknown distance kind " + std::to_string(kind));
    }
}

Connectivity to_connectivity(int c) {
    if (c == WSDIST_CONN_FACES) return Connectivity::faces;
    if (c == WSDIST_CONN_FULL) return Connectivity::full;
    fail(ErrorCode::invalid_argument, "unknown connectivity " + std::to_string(c));
}

Engine to_engine(int e) {
    if (e == WSDIST_ENGINE_EXACT) return Engine::exact;
    if (e == WSDIST_ENGINE_RASTER) return Engine::raster;
    fail(ErrorCode::invalid_argument, "unknown engine " + std::to_string(e));
}

struct Resolved {
    TransformConfig cfg;
    MapOptions options;
};

Resolved resolve(const wsdist_transform_options* o) {
    require(o, "options");
    Resolved r;
    const auto kind = to_kind(o->kind);
    r.cfg = TransformConfig::make(kind, std::isnan(o->mix) ? std::nullopt : std::optional<double>(o->mix));
    r.cfg.connectivity = to_connectivity(o->connectivity);
    r.cfg.channel = o->channel;
    r.cfg.rescale_to_255 = o->rescale_to_255 != 0;
    r.options.engine = to_engine(o->engine);
    r.options.raster.max_passes = o->max_passes;
    r.options.raster.convergence_tol = o->convergence_tol;
    r.options.per_slice = o->per_slice != 0;
    r.options.threads = worker_threads.load();
    return r;
}

nlohmann::json options_json(const Resolved& r) {
    nlohmann::json j;
    j["kind"] = to_string(r.cfg.kind);
    j["intensity_mix"] = r.cfg.intensity_mix;
    j["connectivity"] = r.cfg.connectivity == Connectivity::full ? "full" : "faces";
    j["channel"] = r.cfg.channel;
    j["rescale_to_255"] = r.cfg.rescale_to_255;
    j["engine"] = r.options.engine == Engine::raster ? "raster" : "exact";
    if (r.options.engine == Engine::raster) {
        j["max_passes"] = r.options.raster.max_passes;
        j["convergence_tol"] = r.options.raster.convergence_tol;
    }
    j["per_slice"] = r.options.per_slice;
    return j;
}

LossConfig to_loss(const wsdist_loss_config* c) {
    LossConfig cfg;
    if (c) {
        cfg.alpha = c->alpha;
        cfg.foreground_only = c->foreground_only != 0;
        cfg.ce_clamp_eps = c->ce_clamp_eps;
    }
    return cfg;
}

void copy_out(std::span<const double> src, double* out, std::size_t count) {
    require(out, "out");
    if (count != src.size())
        fail(ErrorCode::shape_mismatch, "output buffer holds " + std::to_string(count) + " values, need " +
                                            std::to_string(src.size()));
    std::copy(src.begin(), src.end(), out);
}

char* dup_string(const std::string& s) {
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

const SignedDistanceMap& map_at(const wsdist_maps* maps, std::size_t index) {
    require(maps, "maps");
    if (index >= maps->value.size()) fail(ErrorCode::invalid_argument, "map index out of range");
    return maps->value[index];
}

} // namespace

extern "C" {

WSDIST_API const char* wsdist_version(void) { return "1.0.0"; }

WSDIST_API const char* wsdist_last_error(void) { return last_error.c_str(); }

WSDIST_API void wsdist_set_threads(unsigned threads) { worker_threads = threads; }

WSDIST_API unsigned wsdist_get_threads(void) { return worker_threads.load(); }

WSDIST_API void wsdist_string_free(char* s) { std::free(s); }

WSDIST_API void wsdist_transform_options_init(wsdist_transform_options* opts, int kind) {
    if (!opts) return;
    opts->kind = kind;
    opts->mix = std::nan("");
    opts->connectivity = WSDIST_CONN_FULL;
    opts->channel = 0;
    opts->rescale_to_255 = 1;
    opts->engine = WSDIST_ENGINE_EXACT;
    opts->max_passes = RasterConfig{}.max_passes;
    opts->convergence_tol = 0.0;
    opts->per_slice = 0;
}

WSDIST_API void wsdist_loss_config_init(wsdist_loss_config* cfg) {
    if (!cfg) return;
    const LossConfig d;
    cfg->alpha = d.alpha;
    cfg->foreground_only = d.foreground_only ? 1 : 0;
    cfg->ce_clamp_eps = d.ce_clamp_eps;
}

WSDIST_API void wsdist_bench_config_init(wsdist_bench_config* cfg) {
    if (!cfg) return;
    const BenchConfig d;
    std::copy(d.size_2d.begin(), d.size_2d.end(), cfg->size_2d);
    std::copy(d.size_3d.begin(), d.size_3d.end(), cfg->size_3d);
    std::copy(d.spacing_3d.begin(), d.spacing_3d.end(), cfg->spacing_3d);
    cfg->foreground_classes = d.foreground_classes;
    cfg->repetitions = d.repetitions;
    cfg->seed = d.seed;
    cfg->additive_engine = d.additive_engine == Engine::raster ? WSDIST_ENGINE_RASTER : WSDIST_ENGINE_EXACT;
    cfg->max_passes = d.raster.max_passes;
}

/* images */

WSDIST_API wsdist_status wsdist_image_create(const wsdist_grid* grid, size_t channels, const double* data,
                                             wsdist_image** out) {
    return guarded([&] {
        require(out, "out");
        require(data, "data");
        auto shape = to_shape(grid);
        const std::size_t n = shape.size() * channels;
        *out = new wsdist_image{ScalarVolume(std::move(shape), channels, std::vector<double>(data, data + n))};
    });
}

WSDIST_API wsdist_status wsdist_image_read(const char* path, wsdist_image** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new wsdist_image{io::read_scalar_volume(path)};
    });
}

WSDIST_API wsdist_status wsdist_image_write(const wsdist_image* image, const char* path) {
    return guarded([&] {
        require(image, "image");
        require(path, "path");
        io::write_volume(image->value, path);
    });
}

WSDIST_API wsdist_status wsdist_image_info(const wsdist_image* image, wsdist_grid* grid, size_t* channels) {
    return guarded([&] {
        require(image, "image");
        if (grid) from_shape(image->value.shape(), grid);
        if (channels) *channels = image->value.channels();
    });
}

WSDIST_API wsdist_status wsdist_image_copy(const wsdist_image* image, double* out, size_t count) {
    return guarded([&] {
        require(image, "image");
        copy_out(image->value.data(), out, count);
    });
}

WSDIST_API wsdist_status wsdist_image_rescale(const wsdist_image* image, size_t channel, wsdist_image** out) {
    return guarded([&] {
        require(image, "image");
        require(out, "out");
        *out = new wsdist_image{rescale_intensities(image->value, channel)};
    });
}

WSDIST_API void wsdist_image_free(wsdist_image* image) { delete image; }

/* labels */

WSDIST_API wsdist_status wsdist_labels_create(const wsdist_grid* grid, int num_classes, const int32_t* data,
                                              wsdist_labels** out) {
    return guarded([&] {
        require(out, "out");
        require(data, "data");
        auto shape = to_shape(grid);
        const std::size_t n = shape.size();
        *out = new wsdist_labels{LabelVolume(std::move(shape), num_classes, std::vector<std::int32_t>(data, data + n))};
    });
}

WSDIST_API wsdist_status wsdist_labels_read(const char* path, int num_classes, wsdist_labels** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new wsdist_labels{
            io::read_label_volume(path, num_classes > 0 ? std::optional<int>(num_classes) : std::nullopt)};
    });
}

WSDIST_API wsdist_status wsdist_labels_write(const wsdist_labels* labels, const char* path, int has_seed,
                                             uint64_t seed) {
    return guarded([&] {
        require(labels, "labels");
        require(path, "path");
        io::VolumeMeta extra;
        if (has_seed) extra.seed = seed;
        io::write_volume(labels->value, path, io::DType::int32, std::move(extra));
    });
}

WSDIST_API wsdist_status wsdist_labels_info(const wsdist_labels* labels, wsdist_grid* grid, int* num_classes) {
    return guarded([&] {
        require(labels, "labels");
        if (grid) from_shape(labels->value.shape(), grid);
        if (num_classes) *num_classes = labels->value.num_classes();
    });
}

WSDIST_API wsdist_status wsdist_labels_copy(const wsdist_labels* labels, int32_t* out, size_t count) {
    return guarded([&] {
        require(labels, "labels");
        require(out, "out");
        const auto d = labels->value.data();
        if (count != d.size()) fail(ErrorCode::shape_mismatch, "output buffer size does not match the grid");
        std::copy(d.begin(), d.end(), out);
    });
}

WSDIST_API wsdist_status wsdist_labels_boundary(const wsdist_labels* labels, int class_id, int connectivity,
                                                size_t* indices, size_t capacity, size_t* count) {
    return guarded([&] {
        require(labels, "labels");
        require(count, "count");
        const auto b = boundary_of(labels->value, class_id, to_connectivity(connectivity));
        *count = b.size();
        if (indices) std::copy_n(b.begin(), std::min(capacity, b.size()), indices);
    });
}

WSDIST_API void wsdist_labels_free(wsdist_labels* labels) { delete labels; }

/* probabilities */

WSDIST_API wsdist_status wsdist_probs_create(const wsdist_grid* grid, int num_classes, const double* data,
                                             wsdist_probs** out) {
    return guarded([&] {
        require(out, "out");
        require(data, "data");
        if (num_classes < 1) fail(ErrorCode::invalid_argument, "num_classes must be positive");
        auto shape = to_shape(grid);
        const std::size_t n = shape.size() * static_cast<std::size_t>(num_classes);
        *out = new wsdist_probs{ProbabilityVolume(std::move(shape), num_classes, std::vector<double>(data, data + n))};
    });
}

WSDIST_API wsdist_status wsdist_probs_read(const char* path, wsdist_probs** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new wsdist_probs{io::read_probability_volume(path)};
    });
}

WSDIST_API wsdist_status wsdist_probs_write(const wsdist_probs* probs, const char* path) {
    return guarded([&] {
        require(probs, "probs");
        require(path, "path");
        io::write_volume(probs->value, path);
    });
}

WSDIST_API void wsdist_probs_free(wsdist_probs* probs) { delete probs; }

/* distance maps */

WSDIST_API wsdist_status wsdist_distance_map(const wsdist_image* image, const size_t* sources, size_t num_sources,
                                             const wsdist_transform_options* opts, double* out, size_t count) {
    return guarded([&] {
        require(image, "image");
        if (num_sources > 0) require(sources, "sources");
        const auto r = resolve(opts);
        const std::span<const std::size_t> src(sources, num_sources);
        const auto dist = r.options.engine == Engine::raster
                              ? distance_map_raster(image->value, src, r.cfg, r.options.raster)
                              : distance_map_exact(image->value, src, r.cfg);
        copy_out(dist.data(), out, count);
    });
}

WSDIST_API wsdist_status wsdist_signed_maps(const wsdist_image* image, const wsdist_labels* weak_labels,
                                            const wsdist_transform_options* opts,
                                            const wsdist_absent_policy* policy, wsdist_maps** out) {
    return guarded([&] {
        require(image, "image");
        require(weak_labels, "weak_labels");
        require(out, "out");
        const auto r = resolve(opts);
        AbsentClassPolicy absent = AbsentClassPolicy::ones();
        if (policy) {
            switch (policy->mode) {
            case WSDIST_ABSENT_ZEROS: absent = AbsentClassPolicy::zeros(); break;
            case WSDIST_ABSENT_ONES: absent = AbsentClassPolicy::ones(); break;
            case WSDIST_ABSENT_CONSTANT: absent = AbsentClassPolicy::constant(policy->value); break;
            default: fail(ErrorCode::invalid_argument, "unknown absent-class mode");
            }
        }
        *out = new wsdist_maps{signed_maps_for_all_classes(image->value, weak_labels->value, r.cfg, absent, r.options)};
    });
}

WSDIST_API wsdist_status wsdist_maps_create(const wsdist_grid* grid, size_t num_maps, const int* class_ids,
                                            const double* data, wsdist_maps** out) {
    return guarded([&] {
        require(out, "out");
        if (num_maps > 0) {
            require(class_ids, "class_ids");
            require(data, "data");
        }
        const auto shape = to_shape(grid);
        const std::size_t n = shape.size();
        auto maps = std::make_unique<wsdist_maps>();
        for (std::size_t m = 0; m < num_maps; ++m)
            maps->value.emplace_back(shape, class_ids[m], std::vector<double>(data + m * n, data + (m + 1) * n));
        *out = maps.release();
    });
}

WSDIST_API size_t wsdist_maps_count(const wsdist_maps* maps) { return maps ? maps->value.size() : 0; }

WSDIST_API wsdist_status wsdist_maps_class_id(const wsdist_maps* maps, size_t index, int* class_id) {
    return guarded([&] {
        require(class_id, "class_id");
        *class_id = map_at(maps, index).class_id();
    });
}

WSDIST_API wsdist_status wsdist_maps_copy(const wsdist_maps* maps, size_t index, double* out, size_t count) {
    return guarded([&] { copy_out(map_at(maps, index).data(), out, count); });
}

WSDIST_API wsdist_status wsdist_maps_write(const wsdist_maps* maps, const char* dir,
                                           const wsdist_transform_options* opts) {
    return guarded([&] {
        require(maps, "maps");
        require(dir, "dir");
        const nlohmann::json config = opts ? options_json(resolve(opts)) : nlohmann::json(nullptr);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) fail(ErrorCode::io, std::string("cannot create ") + dir + ": " + ec.message());
        for (const auto& m : maps->value)
            io::write_signed_map(m, fs::path(dir) / ("class_" + std::to_string(m.class_id()) + ".npy"), config);
    });
}

WSDIST_API wsdist_status wsdist_maps_read(const char* dir, wsdist_maps** out) {
    return guarded([&] {
        require(dir, "dir");
        require(out, "out");
        if (!fs::is_directory(dir)) fail(ErrorCode::io, std::string(dir) + " is not a directory");
        std::map<int, SignedDistanceMap> found;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            if (entry.path().extension() != ".npy" || name.rfind("class_", 0) != 0) continue;
            auto m = io::read_signed_map(entry.path());
            const int k = m.class_id();
            if (!found.emplace(k, std::move(m)).second)
                fail(ErrorCode::parse, "duplicate signed map for class " + std::to_string(k));
        }
        if (found.empty()) fail(ErrorCode::io, std::string("no class_<k>.npy maps in ") + dir);
        auto maps = std::make_unique<wsdist_maps>();
        for (auto& [k, m] : found) maps->value.push_back(std::move(m));
        *out = maps.release();
    });
}

WSDIST_API void wsdist_maps_free(wsdist_maps* maps) { delete maps; }

/* weak labels */

WSDIST_API wsdist_status wsdist_generate_points(const wsdist_labels* full_labels, double semi_axis_cols,
                                                double semi_axis_rows, uint64_t seed, int per_slice,
                                                wsdist_labels** out) {
    return guarded([&] {
        require(full_labels, "full_labels");
        require(out, "out");
        PointAnnotationConfig cfg;
        cfg.semi_axis_cols = semi_axis_cols;
        cfg.semi_axis_rows = semi_axis_rows;
        cfg.seed = seed;
        cfg.per_slice = per_slice != 0;
        *out = new wsdist_labels{generate_points(full_labels->value, cfg)};
    });
}

/* losses */

WSDIST_API wsdist_status wsdist_boundary_loss(const wsdist_probs* probs, const wsdist_maps* maps,
                                              const wsdist_loss_config* cfg, double* out) {
    return guarded([&] {
        require(probs, "probs");
        require(maps, "maps");
        require(out, "out");
        *out = boundary_loss(probs->value, maps->value, to_loss(cfg));
    });
}

WSDIST_API wsdist_status wsdist_boundary_loss_grad(const wsdist_maps* maps, size_t index, double* out,
                                                   size_t count) {
    return guarded([&] {
        const auto& m = map_at(maps, index);
        const auto grad = boundary_loss_grad(std::span<const SignedDistanceMap>(&m, 1));
        copy_out(grad.front(), out, count);
    });
}

WSDIST_API wsdist_status wsdist_partial_cross_entropy(const wsdist_probs* probs, const wsdist_labels* weak_labels,
                                                      const wsdist_loss_config* cfg, double* out) {
    return guarded([&] {
        require(probs, "probs");
        require(weak_labels, "weak_labels");
        require(out, "out");
        *out = partial_cross_entropy(probs->value, weak_labels->value, to_loss(cfg));
    });
}

WSDIST_API wsdist_status wsdist_combined_objective(const wsdist_probs* probs, const wsdist_labels* weak_labels,
                                                   const wsdist_maps* maps, const wsdist_loss_config* cfg,
                                                   double* total, double* cross_entropy, double* boundary) {
    return guarded([&] {
        require(probs, "probs");
        require(weak_labels, "weak_labels");
        require(maps, "maps");
        const auto t = combined_objective(probs->value, weak_labels->value, maps->value, to_loss(cfg));
        if (total) *total = t.total;
        if (cross_entropy) *cross_entropy = t.cross_entropy;
        if (boundary) *boundary = t.boundary;
    });
}

/* metrics */

WSDIST_API wsdist_status wsdist_dice(const wsdist_labels* gt, const wsdist_labels* pred, int class_id,
                                     double* out) {
    return guarded([&] {
        require(gt, "gt");
        require(pred, "pred");
        require(out, "out");
        *out = dice(gt->value, pred->value, class_id);
    });
}

WSDIST_API wsdist_status wsdist_hd95(const wsdist_labels* gt, const wsdist_labels* pred, int class_id,
                                     double* out, int* defined) {
    return guarded([&] {
        require(gt, "gt");
        require(pred, "pred");
        require(out, "out");
        require(defined, "defined");
        const auto h = hd95(gt->value, pred->value, class_id);
        *defined = h.has_value() ? 1 : 0;
        if (h) *out = *h;
    });
}

WSDIST_API wsdist_status wsdist_report_create(wsdist_report** out) {
    return guarded([&] {
        require(out, "out");
        *out = new wsdist_report{};
    });
}

WSDIST_API wsdist_status wsdist_report_add(wsdist_report* report, const char* subject, const wsdist_labels* gt,
                                           const wsdist_labels* pred) {
    return guarded([&] {
        require(report, "report");
        require(gt, "gt");
        require(pred, "pred");
        report->subjects.emplace_back(subject ? subject : "", evaluate(gt->value, pred->value));
    });
}

WSDIST_API wsdist_status wsdist_report_json(const wsdist_report* report, char** json) {
    return guarded([&] {
        require(report, "report");
        require(json, "json");
        std::vector<MetricReport> all;
        nlohmann::json subjects = nlohmann::json::array();
        for (const auto& [name, r] : report->subjects) {
            all.push_back(r);
            auto s = io::to_json(r);
            s.erase("schema");
            s["subject"] = name;
            subjects.push_back(std::move(s));
        }
        auto j = io::to_json(aggregate(all));
        j["subjects"] = std::move(subjects);
        *json = dup_string(j.dump(2));
    });
}

WSDIST_API void wsdist_report_free(wsdist_report* report) { delete report; }

/* bench */

WSDIST_API wsdist_status wsdist_bench_run(const wsdist_bench_config* cfg, char** json) {
    return guarded([&] {
        require(cfg, "cfg");
        require(json, "json");
        BenchConfig b;
        b.size_2d.assign(cfg->size_2d, cfg->size_2d + 2);
        b.size_3d.assign(cfg->size_3d, cfg->size_3d + 3);
        b.spacing_3d.assign(cfg->spacing_3d, cfg->spacing_3d + 3);
        b.foreground_classes = cfg->foreground_classes;
        b.repetitions = cfg->repetitions;
        b.seed = cfg->seed;
        b.additive_engine = to_engine(cfg->additive_engine);
        b.raster.max_passes = cfg->max_passes;
        b.threads = 1;
        const auto rows = run_bench(b);

        nlohmann::json j;
        j["schema"] = io::report_schema;
        j["repetitions"] = b.repetitions;
        j["size_2d"] = b.size_2d;
        j["size_3d"] = b.size_3d;
        j["spacing_3d"] = b.spacing_3d;
        j["foreground_classes"] = b.foreground_classes;
        j["additive_engine"] = b.additive_engine == Engine::raster ? "raster" : "exact";
        j["rows"] = nlohmann::json::array();
        for (const auto& r : rows) {
            j["rows"].push_back({{"kind", to_string(r.kind)},
                                 {"mean_2d", r.mean_2d},
                                 {"mean_3d", r.mean_3d},
                                 {"times_2d", r.times_2d},
                                 {"times_3d", r.times_3d}});
        }
        *json = dup_string(j.dump(2));
    });
}

} // extern "C"
