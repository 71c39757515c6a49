#include "saunet/data/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "saunet/data/png_io.hpp"
#include "saunet/error.hpp"

namespace saunet::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw DataError("unknown split");
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw DataError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

void DatasetManifest::validate() const {
  if (pad_h == 0 || pad_w == 0 || pad_h % 16 != 0 || pad_w % 16 != 0) {
    throw DataError("manifest '" + name + "': pad_target must be positive multiples of 16, got " +
                    std::to_string(pad_h) + "x" + std::to_string(pad_w));
  }
  if (entries.empty()) throw DataError("manifest '" + name + "' has no samples");
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.id.empty()) throw DataError("manifest '" + name + "': sample with empty id");
    if (!seen.insert(e.id).second) throw DataError("manifest '" + name + "': duplicate id '" + e.id + "'");
    if (e.image.empty() || e.mask.empty()) throw DataError("manifest '" + name + "': sample '" + e.id + "' lacks a path");
  }
}

fs::path DatasetManifest::resolve(const std::string& path) const {
  fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!have_header) {
        m.name = j.at("name").get<std::string>();
        const auto target = j.at("pad_target").get<std::vector<std::size_t>>();
        if (target.size() != 2) throw DataError("pad_target must be [H, W]");
        m.pad_h = target[0];
        m.pad_w = target[1];
        have_header = true;
        continue;
      }
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.image = j.at("image").get<std::string>();
      e.mask = j.at("mask").get<std::string>();
      if (j.contains("fov") && !j["fov"].is_null()) e.fov = j["fov"].get<std::string>();
      e.split = parse_split(j.value("split", std::string("train")));
      m.entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw DataError("manifest " + path.string() + " is empty");
  m.validate();
  for (const auto& e : m.entries) {
    for (const std::string* p : {&e.image, &e.mask}) {
      if (!fs::exists(m.resolve(*p))) throw DataError("sample '" + e.id + "': missing file " + m.resolve(*p).string());
    }
    if (e.fov && !fs::exists(m.resolve(*e.fov))) {
      throw DataError("sample '" + e.id + "': missing file " + m.resolve(*e.fov).string());
    }
  }
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  manifest.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << json{{"name", manifest.name}, {"pad_target", {manifest.pad_h, manifest.pad_w}}}.dump() << '\n';
  for (const auto& e : manifest.entries) {
    json j{{"id", e.id}, {"image", e.image}, {"mask", e.mask}};
    if (e.fov) j["fov"] = *e.fov;
    j["split"] = split_name(e.split);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + path.string());
}

namespace {

Raster binarize(Raster r) {
  for (float& v : r.values) v = v >= 0.5f ? 1.0f : 0.0f;
  return r;
}

}  // namespace

std::vector<FundusSample> load_samples(const DatasetManifest& manifest, std::optional<Split> split) {
  std::vector<FundusSample> out;
  for (const auto& e : manifest.entries) {
    if (split && e.split != *split) continue;
    FundusSample s;
    s.id = e.id;
    s.image = read_png(manifest.resolve(e.image), false);
    s.mask = binarize(read_png(manifest.resolve(e.mask), true));
    if (e.fov) s.fov = binarize(read_png(manifest.resolve(*e.fov), true));
    s.validate();
    if (s.image.height > manifest.pad_h || s.image.width > manifest.pad_w) {
      throw DataError("sample '" + e.id + "' is larger than the manifest pad_target");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace saunet::data
