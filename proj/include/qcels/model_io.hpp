#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "qcels/spectrum.hpp"

namespace qcels {

namespace io_detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Parses JSON text; syntax errors name the line and column.
inline nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = text.substr(0, std::min<std::size_t>(e.byte, text.size()));
    const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
    const auto col = upto.size() - (upto.rfind('\n') == std::string::npos ? 0 : upto.rfind('\n') + 1);
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": JSON syntax error: " << e.what();
    throw ParseError(os.str());
  }
}

inline std::vector<double> number_array(const nlohmann::json& j, const std::string& field, const std::string& source) {
  if (!j.contains(field)) throw ParseError(source + ": missing field '" + field + "'");
  const auto& arr = j.at(field);
  if (!arr.is_array()) throw ParseError(source + ": field '" + field + "' must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      std::ostringstream os;
      os << source << ": field '" << field << "[" << i << "]' is not a number";
      throw ParseError(os.str());
    }
    out.push_back(arr[i].get<double>());
  }
  return out;
}

}  // namespace io_detail

inline nlohmann::json to_json(const SpectralModel& m) {
  return {{"eigenvalues", m.eigenvalues}, {"weights", m.weights}, {"label", m.label}};
}

inline SpectralModel model_from_json(const nlohmann::json& j, const std::string& source = "model") {
  if (!j.is_object()) throw ParseError(source + ": top level must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "eigenvalues" && key != "weights" && key != "label")
      throw ParseError(source + ": unknown field '" + key + "'");
  SpectralModel m;
  m.eigenvalues = io_detail::number_array(j, "eigenvalues", source);
  m.weights = io_detail::number_array(j, "weights", source);
  if (j.contains("label")) {
    if (!j.at("label").is_string()) throw ParseError(source + ": field 'label' must be a string");
    m.label = j.at("label").get<std::string>();
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw ParseError(source + ": invalid model: " + e.what());
  }
  return m;
}

inline void save_model(const std::filesystem::path& path, const SpectralModel& m) {
  m.validate();
  io_detail::write_file(path, to_json(m).dump(2) + "\n");
}

inline SpectralModel load_model(const std::filesystem::path& path) {
  const std::string text = io_detail::read_file(path);
  return model_from_json(io_detail::parse_json(text, path.string()), path.string());
}

}  // namespace qcels
