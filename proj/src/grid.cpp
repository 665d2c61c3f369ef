#include "wsdist/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wsdist {

namespace {

void require_shape(const GridShape& shape, std::size_t expected, std::size_t got, const char* what) {
    if (shape.rank() == 0) fail(ErrorCode::invalid_argument, std::string(what) + ": empty grid shape");
    if (expected != got)
        fail(ErrorCode::shape_mismatch, std::string(what) + ": data length " + std::to_string(got) +
                                            " does not match expected " + std::to_string(expected));
}

} // namespace

GridShape::GridShape(std::vector<std::size_t> dims, std::vector<double> spacing)
    : dims_(std::move(dims)), spacing_(std::move(spacing)) {
    if (dims_.size() != 2 && dims_.size() != 3)
        fail(ErrorCode::invalid_argument, "grid rank must be 2 or 3, got " + std::to_string(dims_.size()));
    if (spacing_.size() != dims_.size())
        fail(ErrorCode::invalid_argument, "spacing length does not match grid rank");
    for (std::size_t a = 0; a < dims_.size(); ++a) {
        if (dims_[a] == 0) fail(ErrorCode::invalid_argument, "grid dims must be positive");
        if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
            fail(ErrorCode::invalid_argument, "grid spacing must be finite and positive");
        extent_[a] = dims_[a];
    }
}

GridShape::GridShape(std::vector<std::size_t> dims)
    : GridShape(dims, std::vector<double>(dims.size(), 1.0)) {}

GridShape GridShape::slice_shape() const {
    return GridShape({dims_[0], dims_[1]}, {spacing_[0], spacing_[1]});
}

Stencil::Stencil(const GridShape& shape, Connectivity connectivity) : extent_(shape.extent()) {
    const int rank = shape.rank();
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            for (int ds = -1; ds <= 1; ++ds) {
                const std::array<int, 3> d{dr, dc, ds};
                int nonzero = 0;
                bool valid = true;
                double sq = 0.0;
                for (int a = 0; a < 3; ++a) {
                    if (d[a] == 0) continue;
                    if (a >= rank) valid = false;
                    ++nonzero;
                    const double len = d[a] * shape.spacing_at(a);
                    sq += len * len;
                }
                if (!valid || nonzero == 0) continue;
                if (connectivity == Connectivity::faces && nonzero != 1) continue;
                Offset o;
                o.delta = d;
                o.flat = (static_cast<std::ptrdiff_t>(dr) * static_cast<std::ptrdiff_t>(extent_[1]) + dc) *
                             static_cast<std::ptrdiff_t>(extent_[2]) +
                         ds;
                o.step = std::sqrt(sq);
                offsets_.push_back(o);
            }
        }
    }
}

std::vector<Neighbor> neighbors(const Voxel& v, const GridShape& shape, Connectivity connectivity) {
    if (!shape.contains(v)) fail(ErrorCode::precondition, "voxel index outside the grid");
    const Stencil stencil(shape, connectivity);
    std::vector<Neighbor> out;
    for (const auto& o : stencil.offsets()) {
        if (!stencil.in_bounds(v, o)) continue;
        Voxel n{v.row + o.delta[0], v.col + o.delta[1], v.slab + o.delta[2]};
        out.push_back({n, o.step});
    }
    return out;
}

ScalarVolume::ScalarVolume(GridShape shape, std::size_t channels, std::vector<double> data)
    : shape_(std::move(shape)), channels_(channels), data_(std::move(data)) {
    if (channels_ == 0) fail(ErrorCode::invalid_argument, "scalar volume needs at least one channel");
    require_shape(shape_, channels_ * shape_.size(), data_.size(), "scalar volume");
    for (double x : data_)
        if (!std::isfinite(x)) fail(ErrorCode::numeric, "scalar volume contains a non-finite value");
}

std::span<const double> ScalarVolume::channel(std::size_t c) const {
    if (c >= channels_)
        fail(ErrorCode::invalid_argument, "channel " + std::to_string(c) + " out of range (" +
                                              std::to_string(channels_) + " channels)");
    const std::size_t n = shape_.size();
    return std::span<const double>(data_).subspan(c * n, n);
}

LabelVolume::LabelVolume(GridShape shape, int num_classes, std::vector<std::int32_t> data)
    : shape_(std::move(shape)), num_classes_(num_classes), data_(std::move(data)) {
    if (num_classes_ < 1) fail(ErrorCode::invalid_argument, "label volume needs at least one class");
    require_shape(shape_, shape_.size(), data_.size(), "label volume");
    for (auto id : data_)
        if (id < 0 || id >= num_classes_)
            fail(ErrorCode::invalid_argument, "label " + std::to_string(id) + " outside [0, " +
                                                  std::to_string(num_classes_ - 1) + "]");
}

bool LabelVolume::contains_class(int class_id) const {
    return std::find(data_.begin(), data_.end(), class_id) != data_.end();
}

ProbabilityVolume::ProbabilityVolume(GridShape shape, int num_classes, std::vector<double> data)
    : shape_(std::move(shape)), num_classes_(num_classes), data_(std::move(data)) {
    if (num_classes_ < 1) fail(ErrorCode::invalid_argument, "probability volume needs at least one class");
    const std::size_t n = shape_.size();
    require_shape(shape_, n * static_cast<std::size_t>(num_classes_), data_.size(), "probability volume");
    for (double p : data_)
        if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::numeric, "probability outside [0, 1]");
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int k = 0; k < num_classes_; ++k) sum += data_[static_cast<std::size_t>(k) * n + i];
        if (std::abs(sum - 1.0) > sum_tolerance)
            fail(ErrorCode::numeric, "class probabilities at voxel " + std::to_string(i) +
                                         " sum to " + std::to_string(sum));
    }
}

std::span<const double> ProbabilityVolume::of_class(int k) const {
    if (k < 0 || k >= num_classes_) fail(ErrorCode::invalid_argument, "class index out of range");
    const std::size_t n = shape_.size();
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(k) * n, n);
}

DistanceMap::DistanceMap(GridShape shape, int class_id, std::vector<double> data)
    : shape_(std::move(shape)), class_id_(class_id), data_(std::move(data)) {
    require_shape(shape_, shape_.size(), data_.size(), "distance map");
    for (double d : data_)
        if (std::isnan(d) || d < 0.0) fail(ErrorCode::numeric, "distance map values must be nonnegative");
}

SignedDistanceMap::SignedDistanceMap(GridShape shape, int class_id, std::vector<double> data)
    : shape_(std::move(shape)), class_id_(class_id), data_(std::move(data)) {
    require_shape(shape_, shape_.size(), data_.size(), "signed distance map");
    for (double d : data_)
        if (std::isnan(d)) fail(ErrorCode::numeric, "signed distance map contains NaN");
}

std::vector<std::size_t> boundary_of(const LabelVolume& labels, int class_id, Connectivity connectivity) {
    if (class_id < 0 || class_id >= labels.num_classes())
        fail(ErrorCode::precondition, "class id " + std::to_string(class_id) + " out of range");
    const auto& shape = labels.shape();
    const Stencil stencil(shape, connectivity);
    const auto data = labels.data();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (data[i] != class_id) continue;
        const Voxel v = shape.voxel(i);
        for (const auto& o : stencil.offsets()) {
            // Outside the image counts as "not this class".
            if (!stencil.in_bounds(v, o) ||
                data[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + o.flat)] != class_id) {
                out.push_back(i);
                break;
            }
        }
    }
    return out;
}

ScalarVolume extract_slab(const ScalarVolume& image, std::size_t slab) {
    const auto& shape = image.shape();
    if (slab >= shape.slabs()) fail(ErrorCode::precondition, "slab index out of range");
    const GridShape plane = shape.slice_shape();
    const std::size_t n = plane.size();
    std::vector<double> out(n * image.channels());
    for (std::size_t c = 0; c < image.channels(); ++c) {
        const auto src = image.channel(c);
        for (std::size_t i = 0; i < n; ++i) out[c * n + i] = src[i * shape.slabs() + slab];
    }
    return ScalarVolume(plane, image.channels(), std::move(out));
}

LabelVolume extract_slab(const LabelVolume& labels, std::size_t slab) {
    const auto& shape = labels.shape();
    if (slab >= shape.slabs()) fail(ErrorCode::precondition, "slab index out of range");
    const GridShape plane = shape.slice_shape();
    std::vector<std::int32_t> out(plane.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = labels[i * shape.slabs() + slab];
    return LabelVolume(plane, labels.num_classes(), std::move(out));
}

void insert_slab(std::span<const double> slice, std::size_t slab, const GridShape& volume,
                 std::span<double> out) {
    const std::size_t n = volume.rows() * volume.cols();
    if (slice.size() != n || out.size() != volume.size() || slab >= volume.slabs())
        fail(ErrorCode::shape_mismatch, "slab does not fit the volume");
    for (std::size_t i = 0; i < n; ++i) out[i * volume.slabs() + slab] = slice[i];
}

} // namespace wsdist
