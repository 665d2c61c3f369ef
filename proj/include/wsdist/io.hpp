#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "wsdist/grid.hpp"
#include "wsdist/metrics.hpp"

namespace wsdist::io {

// Element types accepted in NPY payloads. Only little-endian C-order v1.0
// files are read or written.
enum class DType { float32, int32, uint8 };

std::size_t item_size(DType t) noexcept;
const char* descr(DType t) noexcept;

struct NpyArray {
    DType dtype = DType::float32;
    std::vector<std::size_t> shape;
    std::vector<std::byte> payload;

    std::size_t count() const noexcept;
};

NpyArray parse_npy(std::span<const std::byte> bytes);
std::vector<std::byte> encode_npy(const NpyArray& array);

NpyArray read_npy(const std::filesystem::path& path);
void write_npy(const NpyArray& array, const std::filesystem::path& path);

// Contents of the `<name>.json` file next to every `<name>.npy`.
struct VolumeMeta {
    std::vector<double> spacing;
    // Array axes: an optional leading "channel" or "class", then row, col
    // and optionally slab.
    std::vector<std::string> axes;
    std::vector<std::string> channel_names;
    std::vector<std::string> class_names;
    std::optional<int> num_classes;
    std::optional<int> class_id;
    std::optional<std::uint64_t> seed;
    nlohmann::json transform_config; // null when absent

    nlohmann::json to_json() const;
    static VolumeMeta from_json(const nlohmann::json& j);
};

std::filesystem::path sidecar_path(const std::filesystem::path& npy_path);
VolumeMeta read_meta(const std::filesystem::path& npy_path);

// Float payloads load as scalar volumes, integer payloads as labels.
std::variant<ScalarVolume, LabelVolume> read_volume(const std::filesystem::path& path);

ScalarVolume read_scalar_volume(const std::filesystem::path& path);
// num_classes falls back to the sidecar, then to max label + 1.
LabelVolume read_label_volume(const std::filesystem::path& path, std::optional<int> num_classes = std::nullopt);
ProbabilityVolume read_probability_volume(const std::filesystem::path& path);
SignedDistanceMap read_signed_map(const std::filesystem::path& path);

void write_volume(const ScalarVolume& volume, const std::filesystem::path& path, DType dtype = DType::float32,
                  VolumeMeta extra = {});
void write_volume(const LabelVolume& labels, const std::filesystem::path& path, DType dtype = DType::int32,
                  VolumeMeta extra = {});
void write_volume(const ProbabilityVolume& probs, const std::filesystem::path& path);
void write_signed_map(const SignedDistanceMap& map, const std::filesystem::path& path,
                      const nlohmann::json& transform_config = nullptr);

inline constexpr int report_schema = 1;

nlohmann::json to_json(const MetricReport& report);

// Writes via a temporary file in the same directory followed by a rename.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace wsdist::io
