#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qmenv/envelopment.hpp"
#include "qmenv/model.hpp"

namespace qmenv {

using json = nlohmann::json;

inline constexpr const char* kModelFormat = "qmenv-model/1";
inline constexpr const char* kMapFormat = "qmenv-envmap/1";

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

json model_to_json(const QMModel& model);
QMModel model_from_json(const json& doc);

/// Canonical text: the model document without provenance, compact, keys sorted.
std::string canonical_model_text(const QMModel& model);
/// Content hash used to tie run logs to the model that produced them.
std::string model_id(const QMModel& model);

json map_to_json(const EnvelopmentMap& map);
EnvelopmentMap map_from_json(const json& doc);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Parse JSON text; throws ParseError.
json parse_json(const std::string& text, const std::string& what);

/// Documents are written pretty-printed with an optional "provenance" object.
void save_model(const QMModel& model, const std::filesystem::path& path, const json& provenance = nullptr);
QMModel load_model(const std::filesystem::path& path);
void save_map(const EnvelopmentMap& map, const std::filesystem::path& path, const json& provenance = nullptr);
EnvelopmentMap load_map(const std::filesystem::path& path);

} // namespace qmenv
