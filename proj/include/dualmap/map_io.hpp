#pragma once

// Binary map formats: `.dmcm` (concrete map), `.dmam` (abstract map) and
// `.dmsc` (scene cloud). Layouts are described in docs/formats.md.

#include "dualmap/abstract_map.hpp"
#include "dualmap/concrete_map.hpp"
#include "dualmap/observation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dualmap {

inline constexpr std::uint32_t kConcreteMapVersion = 1;
inline constexpr std::uint32_t kAbstractMapVersion = 1;
inline constexpr std::uint32_t kSceneCloudVersion = 1;

/// `config_json` is embedded in the header as a record of the run config.
std::vector<std::uint8_t> encode_concrete_map(const ConcreteMap& map, const std::string& config_json = "{}");
ConcreteMap decode_concrete_map(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_abstract_map(const AbstractMap& map, const std::string& config_json = "{}");
AbstractMap decode_abstract_map(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_scene_cloud(const SceneCloud& scene, const std::string& config_json = "{}");
SceneCloud decode_scene_cloud(std::span<const std::uint8_t> bytes);

/// Embedded header JSON of any of the three formats.
std::string header_json(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
/// Writes to a temporary sibling and renames, so readers never see partial files.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace dualmap
