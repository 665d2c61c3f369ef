#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wsdist/error.hpp"

namespace wsdist {

enum class Connectivity {
    faces, // 4-neighborhood in 2D, 6 in 3D
    full,  // 8-neighborhood in 2D, 26 in 3D
};

// A voxel position. Axes are (row, col, slab); slab is the foot-head axis of
// 3D volumes and stays 0 for 2D grids.
struct Voxel {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t slab = 0;

    friend bool operator==(const Voxel&, const Voxel&) = default;
};

// Grid extent and physical spacing (mm per voxel along each axis).
//
// Data of every volume type is stored C-ordered over (row, col[, slab]), so a
// 2D grid is laid out exactly like a 3D grid with a single slab.
class GridShape {
public:
    GridShape() = default;
    GridShape(std::vector<std::size_t> dims, std::vector<double> spacing);

    // Unit spacing convenience constructor.
    explicit GridShape(std::vector<std::size_t> dims);

    int rank() const noexcept { return static_cast<int>(dims_.size()); }
    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    const std::vector<double>& spacing() const noexcept { return spacing_; }

    std::size_t rows() const noexcept { return extent_[0]; }
    std::size_t cols() const noexcept { return extent_[1]; }
    std::size_t slabs() const noexcept { return extent_[2]; }

    // Always three entries; trailing axes of a 2D grid have extent 1.
    const std::array<std::size_t, 3>& extent() const noexcept { return extent_; }
    double spacing_at(int axis) const noexcept { return axis < rank() ? spacing_[axis] : 1.0; }

    std::size_t size() const noexcept { return extent_[0] * extent_[1] * extent_[2]; }

    bool contains(const Voxel& v) const noexcept {
        return v.row < extent_[0] && v.col < extent_[1] && v.slab < extent_[2];
    }

    std::size_t index(const Voxel& v) const noexcept {
        return (v.row * extent_[1] + v.col) * extent_[2] + v.slab;
    }

    Voxel voxel(std::size_t index) const noexcept {
        Voxel v;
        v.slab = index % extent_[2];
        index /= extent_[2];
        v.col = index % extent_[1];
        v.row = index / extent_[1];
        return v;
    }

    // Same dims and same spacing.
    friend bool operator==(const GridShape& a, const GridShape& b) {
        return a.dims_ == b.dims_ && a.spacing_ == b.spacing_;
    }

    // The 2D grid of one slab (rows x cols), keeping the in-plane spacing.
    GridShape slice_shape() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> spacing_;
    std::array<std::size_t, 3> extent_{1, 1, 1};
};

// One neighbor offset together with its physical step length.
struct Offset {
    std::array<int, 3> delta{};
    std::ptrdiff_t flat = 0;
    double step = 0.0;
};

// The neighborhood stencil of a grid under a connectivity. Step lengths are
// the Euclidean norm of the spacing-scaled offset.
class Stencil {
public:
    Stencil(const GridShape& shape, Connectivity connectivity);

    std::span<const Offset> offsets() const noexcept { return offsets_; }

    // Whether v + o stays inside the grid.
    bool in_bounds(const Voxel& v, const Offset& o) const noexcept {
        const std::array<std::size_t, 3> pos{v.row, v.col, v.slab};
        for (int a = 0; a < 3; ++a) {
            if (o.delta[a] < 0 && pos[a] == 0) return false;
            if (o.delta[a] > 0 && pos[a] + 1 >= extent_[a]) return false;
        }
        return true;
    }

private:
    std::vector<Offset> offsets_;
    std::array<std::size_t, 3> extent_;
};

struct Neighbor {
    Voxel voxel;
    double step = 0.0;
};

std::vector<Neighbor> neighbors(const Voxel& v, const GridShape& shape, Connectivity connectivity);

class ScalarVolume {
public:
    ScalarVolume() = default;
    // data is channel-major: channel c occupies [c*N, (c+1)*N).
    ScalarVolume(GridShape shape, std::size_t channels, std::vector<double> data);

    const GridShape& shape() const noexcept { return shape_; }
    std::size_t channels() const noexcept { return channels_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> channel(std::size_t c) const;

private:
    GridShape shape_;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

class LabelVolume {
public:
    LabelVolume() = default;
    // num_classes counts background: ids are in [0, num_classes).
    LabelVolume(GridShape shape, int num_classes, std::vector<std::int32_t> data);

    const GridShape& shape() const noexcept { return shape_; }
    int num_classes() const noexcept { return num_classes_; }
    std::span<const std::int32_t> data() const noexcept { return data_; }
    std::int32_t operator[](std::size_t i) const noexcept { return data_[i]; }

    bool contains_class(int class_id) const;

private:
    GridShape shape_;
    int num_classes_ = 0;
    std::vector<std::int32_t> data_;
};

class ProbabilityVolume {
public:
    static constexpr double sum_tolerance = 1e-6;

    ProbabilityVolume() = default;
    // data is class-major: class k occupies [k*N, (k+1)*N).
    ProbabilityVolume(GridShape shape, int num_classes, std::vector<double> data);

    const GridShape& shape() const noexcept { return shape_; }
    int num_classes() const noexcept { return num_classes_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> of_class(int k) const;

private:
    GridShape shape_;
    int num_classes_ = 0;
    std::vector<double> data_;
};

// Unreachable voxels hold +infinity.
class DistanceMap {
public:
    DistanceMap() = default;
    DistanceMap(GridShape shape, int class_id, std::vector<double> data);

    const GridShape& shape() const noexcept { return shape_; }
    int class_id() const noexcept { return class_id_; }
    std::span<const double> data() const noexcept { return data_; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

private:
    GridShape shape_;
    int class_id_ = 0;
    std::vector<double> data_;
};

class SignedDistanceMap {
public:
    SignedDistanceMap() = default;
    SignedDistanceMap(GridShape shape, int class_id, std::vector<double> data);

    const GridShape& shape() const noexcept { return shape_; }
    int class_id() const noexcept { return class_id_; }
    std::span<const double> data() const noexcept { return data_; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

private:
    GridShape shape_;
    int class_id_ = 0;
    std::vector<double> data_;
};

// Voxels of class_id with at least one neighbor outside the class. Voxels on
// the image border always qualify. Returned as sorted flat indices.
std::vector<std::size_t> boundary_of(const LabelVolume& labels, int class_id,
                                     Connectivity connectivity = Connectivity::full);

// Slab extraction and re-insertion for slice-wise processing.
ScalarVolume extract_slab(const ScalarVolume& image, std::size_t slab);
LabelVolume extract_slab(const LabelVolume& labels, std::size_t slab);
void insert_slab(std::span<const double> slice, std::size_t slab, const GridShape& volume,
                 std::span<double> out);

} // namespace wsdist
