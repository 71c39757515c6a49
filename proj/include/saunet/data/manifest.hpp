#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saunet/data/sample.hpp"

namespace saunet::data {

enum class Split { train, val, test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct ManifestEntry {
  std::string id;
  std::string image;
  std::string mask;
  std::optional<std::string> fov;
  Split split = Split::train;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Line-delimited JSON. The first record is the header, every other record
/// is one sample; relative paths resolve against the manifest's directory:
///
///   {"name": "DRIVE", "pad_target": [592, 592]}
///   {"id": "21", "image": "img/21.png", "mask": "gt/21.png", "fov": "fov/21.png", "split": "train"}
struct DatasetManifest {
  std::string name;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  void validate() const;
  std::filesystem::path resolve(const std::string& path) const;

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.name == b.name && a.pad_h == b.pad_h && a.pad_w == b.pad_w && a.entries == b.entries;
  }
};

/// Parses and validates; every referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Decodes the samples tagged `split` (all samples when nullopt). Images
/// become [3, H, W] in [0, 1]; masks and fov are thresholded at half range.
std::vector<FundusSample> load_samples(const DatasetManifest& manifest, std::optional<Split> split);

}  // namespace saunet::data
