#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "wsdist/io.hpp"

namespace wsdist::io {

namespace {

using nlohmann::json;

bool is_leading_axis(const std::string& name) { return name == "channel" || name == "class"; }

template <class T>
std::vector<T> payload_as(const NpyArray& a) {
    std::vector<T> out(a.count());
    std::memcpy(out.data(), a.payload.data(), a.payload.size());
    return out;
}

std::vector<double> to_doubles(const NpyArray& a) {
    std::vector<double> out(a.count());
    switch (a.dtype) {
    case DType::float32: {
        const auto v = payload_as<float>(a);
        std::copy(v.begin(), v.end(), out.begin());
        break;
    }
    case DType::int32: {
        const auto v = payload_as<std::int32_t>(a);
        std::copy(v.begin(), v.end(), out.begin());
        break;
    }
    case DType::uint8: {
        const auto v = payload_as<std::uint8_t>(a);
        std::copy(v.begin(), v.end(), out.begin());
        break;
    }
    }
    return out;
}

template <class T>
NpyArray make_array(DType dtype, std::vector<std::size_t> shape, const std::vector<T>& values) {
    NpyArray a;
    a.dtype = dtype;
    a.shape = std::move(shape);
    a.payload.resize(values.size() * sizeof(T));
    std::memcpy(a.payload.data(), values.data(), a.payload.size());
    return a;
}

NpyArray encode_reals(DType dtype, std::vector<std::size_t> shape, std::span<const double> data) {
    switch (dtype) {
    case DType::float32: {
        std::vector<float> v(data.begin(), data.end());
        return make_array(dtype, std::move(shape), v);
    }
    case DType::int32: {
        std::vector<std::int32_t> v(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data[i] != std::trunc(data[i]) || std::abs(data[i]) > std::numeric_limits<std::int32_t>::max())
                fail(ErrorCode::invalid_argument, "value not representable as int32");
            v[i] = static_cast<std::int32_t>(data[i]);
        }
        return make_array(dtype, std::move(shape), v);
    }
    case DType::uint8: {
        std::vector<std::uint8_t> v(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data[i] != std::trunc(data[i]) || data[i] < 0 || data[i] > 255)
                fail(ErrorCode::invalid_argument, "value not representable as uint8");
            v[i] = static_cast<std::uint8_t>(data[i]);
        }
        return make_array(dtype, std::move(shape), v);
    }
    }
    fail(ErrorCode::invalid_argument, "unknown dtype");
}

std::vector<std::string> spatial_axes(int rank) {
    if (rank == 2) return {"row", "col"};
    return {"row", "col", "slab"};
}

// Validates axes against the array shape and splits off a leading channel or
// class axis. Returns the count along that axis (1 when absent).
std::size_t split_shape(const VolumeMeta& meta, const NpyArray& a, GridShape& grid, const char* leading) {
    if (meta.axes.size() != a.shape.size())
        fail(ErrorCode::parse, "sidecar lists " + std::to_string(meta.axes.size()) + " axes but the array has " +
                                   std::to_string(a.shape.size()));
    std::size_t first = 0;
    std::size_t count = 1;
    if (!meta.axes.empty() && is_leading_axis(meta.axes[0])) {
        if (leading == nullptr || meta.axes[0] != leading)
            fail(ErrorCode::parse, "unexpected leading axis '" + meta.axes[0] + "'");
        count = a.shape[0];
        first = 1;
    }
    std::vector<std::size_t> dims(a.shape.begin() + static_cast<std::ptrdiff_t>(first), a.shape.end());
    const auto expected = spatial_axes(static_cast<int>(dims.size()));
    if (dims.size() < 2 || dims.size() > 3 ||
        !std::equal(expected.begin(), expected.end(), meta.axes.begin() + static_cast<std::ptrdiff_t>(first),
                    meta.axes.end()))
        fail(ErrorCode::parse, "sidecar axes must be [row, col] or [row, col, slab] after an optional leading axis");
    if (meta.spacing.size() != dims.size())
        fail(ErrorCode::parse, "sidecar spacing length does not match the spatial axes");
    grid = GridShape(std::move(dims), meta.spacing);
    return count;
}

VolumeMeta base_meta(const GridShape& shape, const char* leading, VolumeMeta extra) {
    extra.spacing = shape.spacing();
    extra.axes = spatial_axes(shape.rank());
    if (leading) extra.axes.insert(extra.axes.begin(), leading);
    return extra;
}

std::vector<std::size_t> array_shape(const GridShape& shape, std::optional<std::size_t> leading) {
    std::vector<std::size_t> out;
    if (leading) out.push_back(*leading);
    out.insert(out.end(), shape.dims().begin(), shape.dims().end());
    return out;
}

void write_pair(const NpyArray& a, const VolumeMeta& meta, const std::filesystem::path& path) {
    write_npy(a, path);
    write_text_atomic(sidecar_path(path), meta.to_json().dump(2) + "\n");
}

} // namespace

json VolumeMeta::to_json() const {
    json j;
    j["spacing"] = spacing;
    j["axes"] = axes;
    if (!channel_names.empty()) j["channel_names"] = channel_names;
    if (!class_names.empty()) j["class_names"] = class_names;
    if (num_classes) j["num_classes"] = *num_classes;
    if (class_id) j["class_id"] = *class_id;
    if (seed) j["seed"] = *seed;
    if (!transform_config.is_null()) j["transform_config"] = transform_config;
    return j;
}

VolumeMeta VolumeMeta::from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::parse, "sidecar must be a JSON object");
    if (!j.contains("spacing") || !j.contains("axes")) fail(ErrorCode::parse, "sidecar requires spacing and axes");
    VolumeMeta m;
    try {
        m.spacing = j.at("spacing").get<std::vector<double>>();
        m.axes = j.at("axes").get<std::vector<std::string>>();
        if (j.contains("channel_names")) m.channel_names = j["channel_names"].get<std::vector<std::string>>();
        if (j.contains("class_names")) m.class_names = j["class_names"].get<std::vector<std::string>>();
        if (j.contains("num_classes")) m.num_classes = j["num_classes"].get<int>();
        if (j.contains("class_id")) m.class_id = j["class_id"].get<int>();
        if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("transform_config")) m.transform_config = j["transform_config"];
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("sidecar: ") + e.what());
    }
    return m;
}

std::filesystem::path sidecar_path(const std::filesystem::path& npy_path) {
    auto p = npy_path;
    p.replace_extension(".json");
    return p;
}

VolumeMeta read_meta(const std::filesystem::path& npy_path) {
    const auto side = sidecar_path(npy_path);
    std::ifstream in(side);
    if (!in) fail(ErrorCode::io, "missing sidecar " + side.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, side.string() + ": " + e.what());
    }
    return VolumeMeta::from_json(j);
}

std::variant<ScalarVolume, LabelVolume> read_volume(const std::filesystem::path& path) {
    const auto a = read_npy(path);
    if (a.dtype == DType::float32) return read_scalar_volume(path);
    return read_label_volume(path);
}

ScalarVolume read_scalar_volume(const std::filesystem::path& path) {
    const auto meta = read_meta(path);
    const auto a = read_npy(path);
    GridShape grid;
    const std::size_t channels = split_shape(meta, a, grid, "channel");
    return ScalarVolume(grid, channels, to_doubles(a));
}

LabelVolume read_label_volume(const std::filesystem::path& path, std::optional<int> num_classes) {
    const auto meta = read_meta(path);
    const auto a = read_npy(path);
    if (a.dtype == DType::float32) fail(ErrorCode::unsupported, path.string() + ": labels must be int32 or uint8");
    GridShape grid;
    split_shape(meta, a, grid, nullptr);
    std::vector<std::int32_t> data(a.count());
    if (a.dtype == DType::int32) {
        data = payload_as<std::int32_t>(a);
    } else {
        const auto v = payload_as<std::uint8_t>(a);
        std::copy(v.begin(), v.end(), data.begin());
    }
    int k = 0;
    if (num_classes) {
        k = *num_classes;
    } else if (meta.num_classes) {
        k = *meta.num_classes;
    } else if (!meta.class_names.empty()) {
        k = static_cast<int>(meta.class_names.size());
    } else {
        const auto mx = data.empty() ? 0 : *std::max_element(data.begin(), data.end());
        k = std::max(2, mx + 1);
    }
    try {
        return LabelVolume(grid, k, std::move(data));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

ProbabilityVolume read_probability_volume(const std::filesystem::path& path) {
    const auto meta = read_meta(path);
    const auto a = read_npy(path);
    if (a.dtype != DType::float32) fail(ErrorCode::unsupported, path.string() + ": probabilities must be float32");
    GridShape grid;
    if (meta.axes.empty() || meta.axes[0] != "class")
        fail(ErrorCode::parse, path.string() + ": probability volumes need a leading 'class' axis");
    const std::size_t classes = split_shape(meta, a, grid, "class");
    return ProbabilityVolume(grid, static_cast<int>(classes), to_doubles(a));
}

SignedDistanceMap read_signed_map(const std::filesystem::path& path) {
    const auto meta = read_meta(path);
    const auto a = read_npy(path);
    if (a.dtype != DType::float32) fail(ErrorCode::unsupported, path.string() + ": signed maps must be float32");
    if (!meta.class_id) fail(ErrorCode::parse, path.string() + ": signed map sidecar lacks class_id");
    GridShape grid;
    split_shape(meta, a, grid, nullptr);
    return SignedDistanceMap(grid, *meta.class_id, to_doubles(a));
}

void write_volume(const ScalarVolume& volume, const std::filesystem::path& path, DType dtype, VolumeMeta extra) {
    const bool multi = volume.channels() > 1;
    auto meta = base_meta(volume.shape(), multi ? "channel" : nullptr, std::move(extra));
    const auto shape = array_shape(volume.shape(), multi ? std::optional(volume.channels()) : std::nullopt);
    write_pair(encode_reals(dtype, shape, volume.data()), meta, path);
}

void write_volume(const LabelVolume& labels, const std::filesystem::path& path, DType dtype, VolumeMeta extra) {
    if (dtype == DType::float32) fail(ErrorCode::invalid_argument, "labels are stored as int32 or uint8");
    auto meta = base_meta(labels.shape(), nullptr, std::move(extra));
    meta.num_classes = labels.num_classes();
    const auto shape = array_shape(labels.shape(), std::nullopt);
    if (dtype == DType::int32) {
        std::vector<std::int32_t> v(labels.data().begin(), labels.data().end());
        write_pair(make_array(dtype, shape, v), meta, path);
    } else {
        if (labels.num_classes() > 256) fail(ErrorCode::invalid_argument, "too many classes for uint8 storage");
        std::vector<std::uint8_t> v(labels.data().begin(), labels.data().end());
        write_pair(make_array(dtype, shape, v), meta, path);
    }
}

void write_volume(const ProbabilityVolume& probs, const std::filesystem::path& path) {
    const auto meta = base_meta(probs.shape(), "class", {});
    const auto shape = array_shape(probs.shape(), static_cast<std::size_t>(probs.num_classes()));
    write_pair(encode_reals(DType::float32, shape, probs.data()), meta, path);
}

void write_signed_map(const SignedDistanceMap& map, const std::filesystem::path& path, const json& transform_config) {
    VolumeMeta extra;
    extra.class_id = map.class_id();
    extra.transform_config = transform_config;
    const auto meta = base_meta(map.shape(), nullptr, std::move(extra));
    write_pair(encode_reals(DType::float32, array_shape(map.shape(), std::nullopt), map.data()), meta, path);
}

json to_json(const MetricReport& report) {
    auto pair = [](const ClassMetrics& m) {
        json j;
        j["dsc"] = m.dsc;
        j["hd95"] = m.hd95 ? json(*m.hd95) : json(nullptr);
        return j;
    };
    json j;
    j["schema"] = report_schema;
    j["per_class"] = json::object();
    for (const auto& [k, m] : report.per_class) j["per_class"][std::to_string(k)] = pair(m);
    j["overall"] = pair(report.overall);
    j["hd95_undefined"] = report.hd95_undefined;
    return j;
}

} // namespace wsdist::io
