#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <sstream>
#include <string>

#include "qcels/model_io.hpp"
#include "qcels/sampler.hpp"

namespace qcels {

// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string dataset_csv(const TimeSeriesDataset& ds) {
  std::string out = "n,t,re_z,im_z\n";
  for (std::size_t n = 0; n < ds.values.size(); ++n) {
    out += std::to_string(n) + "," + format_double(ds.times[n]) + "," + format_double(ds.values[n].real()) + "," +
           format_double(ds.values[n].imag()) + "\n";
  }
  return out;
}

inline nlohmann::json dataset_sidecar(const TimeSeriesDataset& ds) {
  nlohmann::json j{{"tau", ds.tau},
                   {"N", ds.n_points()},
                   {"N_s", ds.shots_per_point},
                   {"seed", ds.seed},
                   {"filtered", ds.filtered}};
  if (ds.filter_digest) {
    std::ostringstream os;
    os << std::hex << *ds.filter_digest;
    j["filter_digest"] = os.str();
  } else {
    j["filter_digest"] = nullptr;
  }
  return j;
}

// Writes <stem>.csv and <stem>.json.
inline void save_dataset(const std::filesystem::path& stem, const TimeSeriesDataset& ds) {
  auto csv = stem;
  csv += ".csv";
  auto meta = stem;
  meta += ".json";
  io_detail::write_file(csv, dataset_csv(ds));
  io_detail::write_file(meta, dataset_sidecar(ds).dump(2) + "\n");
}

inline TimeSeriesDataset load_dataset(const std::filesystem::path& stem) {
  auto csv = stem;
  csv += ".csv";
  auto meta = stem;
  meta += ".json";
  const auto j = io_detail::parse_json(io_detail::read_file(meta), meta.string());
  TimeSeriesDataset ds;
  try {
    ds.tau = j.at("tau").get<double>();
    ds.shots_per_point = j.at("N_s").get<int>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.filtered = j.at("filtered").get<bool>();
    if (!j.at("filter_digest").is_null())
      ds.filter_digest = std::stoull(j.at("filter_digest").get<std::string>(), nullptr, 16);
  } catch (const std::exception& e) {
    throw ParseError(meta.string() + ": " + e.what());
  }
  std::istringstream in(io_detail::read_file(csv));
  std::string line;
  std::getline(in, line);
  if (line != "n,t,re_z,im_z") throw ParseError(csv.string() + ":1: expected header n,t,re_z,im_z");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[4];
    for (auto& s : f)
      if (!std::getline(row, s, ',')) throw ParseError(csv.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    try {
      ds.times.push_back(std::stod(f[1]));
      ds.values.emplace_back(std::stod(f[2]), std::stod(f[3]));
    } catch (const std::exception&) {
      throw ParseError(csv.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  if (ds.n_points() != j.at("N").get<int>()) throw ParseError(csv.string() + ": row count disagrees with sidecar N");
  return ds;
}

}  // namespace qcels
