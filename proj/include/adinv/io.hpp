#pragma once

// Text formats for grids, coefficient files, layouts and observations.
// Numbers are written with 17 significant digits so files round-trip.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "adinv/sampling.hpp"
#include "adinv/spectral.hpp"

namespace adinv::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  return os;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot read " + path.string());
  return is;
}

inline std::vector<double> split_numbers(const std::string& line, const fs::path& src) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw FormatError(src.string() + ": bad number '" + cell + "'");
    }
  }
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
}

//! Pretty-printed JSON; keys come out sorted so output is stable.
inline void write_json(const fs::path& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

inline json read_json(const fs::path& path) {
  auto is = open_in(path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---- grids: header "nx,ny", then row i holds values(i, 0..ny-1)

inline void write_grid(const fs::path& path, const Grid& g) {
  auto os = open_out(path);
  os << g.nx << "," << g.ny << "\n";
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) os << (j ? "," : "") << fmt(g.values(i, j));
    os << "\n";
  }
}

inline Grid read_grid(const fs::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path.string() + ": empty grid file");
  const auto dims = split_numbers(line, path);
  if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1) {
    throw FormatError(path.string() + ": header must be nx,ny");
  }
  Grid g(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  for (int i = 0; i < g.nx; ++i) {
    if (!std::getline(is, line)) throw FormatError(path.string() + ": missing grid rows");
    const auto row = split_numbers(line, path);
    if (static_cast<int>(row.size()) != g.ny) throw FormatError(path.string() + ": ragged grid row");
    for (int j = 0; j < g.ny; ++j) g.values(i, j) = row[static_cast<std::size_t>(j)];
  }
  return g;
}

// ---- spectral coefficients: header "n1,n2", then k1,k2,re,im per mode

inline void write_eta(const fs::path& path, const SpectralField& eta) {
  const WavenumberSet K = eta.wavenumbers();
  auto os = open_out(path);
  os << K.n1() << "," << K.n2() << "\n";
  for (int j = 0; j < K.size(); ++j) {
    os << K[j].k1 << "," << K[j].k2 << "," << fmt(eta.coeffs[j].real()) << ","
       << fmt(eta.coeffs[j].imag()) << "\n";
  }
}

inline SpectralField read_eta(const fs::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path.string() + ": empty coefficient file");
  const auto dims = split_numbers(line, path);
  if (dims.size() != 2) throw FormatError(path.string() + ": header must be n1,n2");
  const WavenumberSet K(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  CVec c = CVec::Zero(K.size());
  std::vector<char> seen(static_cast<std::size_t>(K.size()), 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto v = split_numbers(line, path);
    if (v.size() != 4) throw FormatError(path.string() + ": expected k1,k2,re,im");
    const Wavenumber k{static_cast<int>(v[0]), static_cast<int>(v[1])};
    if (!K.contains(k)) throw FormatError(path.string() + ": wavenumber outside K");
    c[K.index(k)] = {v[2], v[3]};
    seen[static_cast<std::size_t>(K.index(k))] = 1;
  }
  for (char s : seen) {
    if (!s) throw FormatError(path.string() + ": missing wavenumbers");
  }
  return SpectralField(K, c, false);
}

// ---- layouts: JSON with a "type" discriminator

inline json layout_to_json(const SensorLayout& layout) {
  json j;
  j["type"] = layout_type_name(layout);
  if (const auto* ir = std::get_if<IrregularLayout>(&layout)) {
    json pts = json::array();
    for (const Point& p : ir->points) pts.push_back({p.x, p.y});
    j["points"] = pts;
  } else if (const auto* nu = std::get_if<NonUniformGridLayout>(&layout)) {
    j["mesh"] = {nu->mt1, nu->mt2};
    j["sel1"] = nu->sel1;
    j["sel2"] = nu->sel2;
  } else {
    const auto& sh = std::get<ShiftedUniformLayout>(layout);
    j["m"] = {sh.m1, sh.m2};
    j["shift"] = {sh.delta[0], sh.delta[1]};
  }
  return j;
}

inline SensorLayout layout_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "irregular") {
      IrregularLayout ir;
      for (const auto& p : j.at("points")) ir.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      return ir;
    }
    if (type == "nonuniform") {
      NonUniformGridLayout nu;
      nu.mt1 = j.at("mesh").at(0).get<int>();
      nu.mt2 = j.at("mesh").at(1).get<int>();
      nu.sel1 = j.at("sel1").get<std::vector<int>>();
      nu.sel2 = j.at("sel2").get<std::vector<int>>();
      return nu;
    }
    if (type == "shifted") {
      ShiftedUniformLayout sh;
      sh.m1 = j.at("m").at(0).get<int>();
      sh.m2 = j.at("m").at(1).get<int>();
      sh.delta = {j.at("shift").at(0).get<double>(), j.at("shift").at(1).get<double>()};
      return sh;
    }
    throw FormatError("unknown layout type '" + type + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed layout: ") + e.what());
  }
}

inline void write_layout(const fs::path& path, const SensorLayout& layout) {
  write_json(path, layout_to_json(layout));
}

inline SensorLayout read_layout(const fs::path& path) { return layout_from_json(read_json(path)); }

// ---- observations: CSV with header t1..tL, one sensor per row, plus a JSON sidecar

inline void write_observations(const fs::path& csv, const fs::path& sidecar, const ObservationSet& obs,
                               const std::string& layout_ref) {
  {
    auto os = open_out(csv);
    for (int l = 0; l < obs.num_times(); ++l) os << (l ? "," : "") << "t" << (l + 1);
    os << "\n";
    for (int m = 0; m < obs.num_sensors(); ++m) {
      for (int l = 0; l < obs.num_times(); ++l) os << (l ? "," : "") << fmt(obs.Y(m, l));
      os << "\n";
    }
  }
  json meta;
  meta["delta"] = obs.delta;
  meta["sigma"] = obs.sigma;
  meta["seed"] = obs.seed;
  meta["layout"] = layout_ref;
  meta["sensors"] = obs.num_sensors();
  meta["times"] = obs.num_times();
  meta["max_discarded_imag"] = obs.max_discarded_imag;
  write_json(sidecar, meta);
}

inline ObservationSet read_observations(const fs::path& csv, const fs::path& sidecar) {
  const json meta = read_json(sidecar);
  ObservationSet obs;
  try {
    obs.delta = meta.at("delta").get<double>();
    obs.sigma = meta.at("sigma").get<double>();
    obs.seed = meta.at("seed").get<std::uint64_t>();
    obs.max_discarded_imag = meta.value("max_discarded_imag", 0.0);
    const fs::path layout = sidecar.parent_path() / meta.at("layout").get<std::string>();
    obs.layout = read_layout(layout);
  } catch (const json::exception& e) {
    throw FormatError(sidecar.string() + ": " + e.what());
  }
  auto is = open_in(csv);
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (!line.empty()) rows.push_back(split_numbers(line, csv));
  }
  const int M = static_cast<int>(rows.size());
  const int L = M ? static_cast<int>(rows[0].size()) : 0;
  obs.Y.resize(M, L);
  for (int m = 0; m < M; ++m) {
    if (static_cast<int>(rows[static_cast<std::size_t>(m)].size()) != L) {
      throw FormatError(csv.string() + ": ragged observation row");
    }
    for (int l = 0; l < L; ++l) obs.Y(m, l) = rows[static_cast<std::size_t>(m)][static_cast<std::size_t>(l)];
  }
  if (M != static_cast<int>(sensor_positions(obs.layout).size())) {
    throw FormatError(csv.string() + ": row count does not match the layout");
  }
  return obs;
}

}  // namespace adinv::io
