#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace thir {

enum class Label : std::uint8_t { Benign = 0, Malignant = 1, Unknown = 255 };

/// Optical magnification; the enumerator value is the zoom factor, 0 when unknown.
enum class Magnification : std::uint16_t { Unspecified = 0, X40 = 40, X100 = 100, X200 = 200, X400 = 400 };

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text);
std::string to_string(Magnification mag);
std::optional<Magnification> parse_magnification(std::string_view text);
std::optional<Magnification> magnification_from_int(int value);

struct DatasetRecord {
  std::uint32_t id = 0;
  std::filesystem::path path;  // relative to the dataset root
  Label label = Label::Unknown;
  Magnification magnification = Magnification::Unspecified;

  bool operator==(const DatasetRecord&) const = default;
};

/// Label and magnification inferred from a dataset-relative path: directory
/// segments naming benign/malignant first, then BreaKHis filename tokens.
std::pair<Label, Magnification> parse_record_path(const std::filesystem::path& relative);

/// Recursively discovers PNG/JPEG files under root. Manifest rows (CSV header
/// `path,label,magnification`, paths relative to root) override path parsing.
/// Records are sorted by relative path and numbered densely from 0.
std::vector<DatasetRecord> scan_dataset(const std::filesystem::path& root,
                                        const std::optional<std::filesystem::path>& manifest = std::nullopt);

}  // namespace thir
