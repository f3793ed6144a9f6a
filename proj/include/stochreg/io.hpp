#ifndef STOCHREG_IO_HPP
#define STOCHREG_IO_HPP

#include <optional>
#include <string>

#include <json.hpp>

#include "stochreg/model.hpp"

namespace stochreg {

struct ModelFile {
  PlantModel model;
  Exosystem exo;
  std::optional<GainSet> gains;
};

// Matrices are row-major nested arrays; vectors may be flat arrays. Keys:
// A B P F G R C D Q Ca Cb S omega0, optionally K and L.
ModelFile model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const PlantModel& m, const Exosystem& e);

ModelFile read_model_file(const std::string& path);

Mat matrix_from_json(const nlohmann::json& j, const char* name);
Vec vector_from_json(const nlohmann::json& j, const char* name);
nlohmann::json matrix_to_json(const Mat& m);
nlohmann::json vector_to_json(const Eigen::Ref<const Vec>& v);

// Parses text, turning parse errors into ConfigError with a line number.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);
std::string read_text_file(const std::string& path);

// 1-based line of the first occurrence of "key" in text, 0 when absent.
std::size_t line_of_key(const std::string& text, const std::string& key);

}  // namespace stochreg

#endif  // STOCHREG_IO_HPP
