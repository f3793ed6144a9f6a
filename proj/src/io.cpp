#include "stochreg/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stochreg {

Mat matrix_from_json(const nlohmann::json& j, const char* name) {
  if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(name) + " must be a nonempty array");
  if (!j.front().is_array()) {
    // A flat array is a column vector.
    Mat out(j.size(), 1);
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw ConfigError(std::string(name) + " has a non-numeric entry");
      out(i, 0) = j[i].get<double>();
    }
    return out;
  }
  const std::size_t cols = j.front().size();
  Mat out(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ConfigError(std::string(name) + " has ragged rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ConfigError(std::string(name) + " has a non-numeric entry");
      out(i, k) = j[i][k].get<double>();
    }
  }
  return out;
}

Vec vector_from_json(const nlohmann::json& j, const char* name) {
  const Mat m = matrix_from_json(j, name);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ConfigError(std::string(name) + " must be a vector");
}

nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_to_json(const Eigen::Ref<const Vec>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ModelFile model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model must be a JSON object");
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ConfigError(std::string("model is missing key \"") + key + "\"");
    return j.at(key);
  };
  ModelFile f;
  PlantModel& m = f.model;
  m.A = matrix_from_json(need("A"), "A");
  const Eigen::Index n = m.A.rows();
  m.B = vector_from_json(need("B"), "B");
  m.C = vector_from_json(need("C"), "C").transpose();
  f.exo.S = matrix_from_json(need("S"), "S");
  const Eigen::Index nu = f.exo.S.rows();
  f.exo.omega0 = vector_from_json(need("omega0"), "omega0");
  auto matrix_or_zero = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    if (!j.contains(key)) return Mat(Mat::Zero(rows, cols));
    Mat out = matrix_from_json(j.at(key), key);
    // A flat array for an n x 1 or 1 x nu quantity.
    if (out.cols() == 1 && rows == 1 && out.rows() == cols) out.transposeInPlace();
    return out;
  };
  m.P = matrix_or_zero("P", n, nu);
  m.F = matrix_or_zero("F", n, n);
  m.R = matrix_or_zero("R", n, nu);
  m.G = j.contains("G") ? vector_from_json(j.at("G"), "G") : Vec::Zero(n);
  m.D = j.contains("D") ? j.at("D").get<double>() : 0.0;
  m.Q = j.contains("Q") ? RowVec(vector_from_json(j.at("Q"), "Q").transpose()) : RowVec::Zero(nu);
  if (j.contains("Ca")) m.Ca = vector_from_json(j.at("Ca"), "Ca").transpose();
  if (j.contains("Cb")) m.Cb = vector_from_json(j.at("Cb"), "Cb").transpose();

  if (j.contains("K")) {
    GainSet g;
    g.K = vector_from_json(j.at("K"), "K").transpose();
    if (j.contains("L")) g.L = GainSchedule(vector_from_json(j.at("L"), "L"));
    f.gains = g;
  }

  ValidationReport rep = validate_plant(m);
  const ValidationReport exo = validate_exosystem(f.exo);
  rep.failures.insert(rep.failures.end(), exo.failures.begin(), exo.failures.end());
  if (!rep.ok()) {
    std::string msg = "invalid model:";
    for (const auto& s : rep.failures) msg += "\n  " + s;
    throw ModelError(msg);
  }
  return f;
}

nlohmann::json model_to_json(const PlantModel& m, const Exosystem& e) {
  nlohmann::json j;
  j["A"] = matrix_to_json(m.A);
  j["B"] = vector_to_json(m.B);
  j["P"] = matrix_to_json(m.P);
  j["F"] = matrix_to_json(m.F);
  j["G"] = vector_to_json(m.G);
  j["R"] = matrix_to_json(m.R);
  j["C"] = vector_to_json(m.C.transpose());
  j["D"] = m.D;
  j["Q"] = vector_to_json(m.Q.transpose());
  if (m.Ca.size()) j["Ca"] = vector_to_json(m.Ca.transpose());
  if (m.Cb.size()) j["Cb"] = vector_to_json(m.Cb.transpose());
  j["S"] = matrix_to_json(e.S);
  j["omega0"] = vector_to_json(e.omega0);
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    const std::size_t upto = std::min<std::size_t>(err.byte, text.size());
    const std::size_t line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ConfigError(source + ":" + std::to_string(line) + ": JSON syntax error: " + err.what());
  }
}

ModelFile read_model_file(const std::string& path) {
  return model_from_json(parse_json_text(read_text_file(path), path));
}

std::size_t line_of_key(const std::string& text, const std::string& key) {
  const std::size_t pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + std::count(text.begin(), text.begin() + pos, '\n');
}

}  // namespace stochreg
