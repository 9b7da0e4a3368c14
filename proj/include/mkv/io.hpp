// File formats: ensemble CSV with JSON sidecar, density CSV, selection trace
// JSON. Doubles are printed with 17 significant digits so a write/read round
// trip is bitwise lossless.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkv/ensemble.hpp"
#include "mkv/gl_select.hpp"
#include "mkv/kde.hpp"

namespace mkv {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Query grid "a:b:n": n points uniform on [a, b] inclusive.
struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;

  std::vector<double> points() const {
    if (count == 0) throw std::invalid_argument("GridSpec: empty grid");
    std::vector<double> pts(count);
    if (count == 1) {
      pts[0] = start;
      return pts;
    }
    const double step = (stop - start) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[i] = start + static_cast<double>(i) * step;
    pts.back() = stop;
    return pts;
  }
};

inline GridSpec parse_grid_spec(const std::string& text) {
  GridSpec spec;
  const auto first = text.find(':');
  const auto second = text.find(':', first == std::string::npos ? first : first + 1);
  if (first == std::string::npos || second == std::string::npos)
    throw std::invalid_argument("grid spec must look like start:stop:count, got '" + text + "'");
  try {
    std::size_t used = 0;
    spec.start = std::stod(text.substr(0, first));
    spec.stop = std::stod(text.substr(first + 1, second - first - 1));
    const std::string count_text = text.substr(second + 1);
    const long long count = std::stoll(count_text, &used);
    if (used != count_text.size() || count < 1) throw std::invalid_argument("bad count");
    spec.count = static_cast<std::size_t>(count);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed grid spec '" + text + "'");
  }
  if (spec.count > 1 && !(spec.stop > spec.start))
    throw std::invalid_argument("grid spec needs stop > start for more than one point");
  return spec;
}

struct EnsembleMeta {
  std::uint64_t seed = 0;
  std::size_t n_particles = 0;
  std::size_t n_steps = 0;
  double horizon = 0.0;
  std::string model;
  double time = 0.0;
};

/// CSV `particle,dim0[,dim1,...]` plus a `<path>.json` sidecar with the run metadata.
inline void write_ensemble_csv(const std::string& path, const ParticleEnsemble& ens, const EnsembleMeta& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "particle";
  for (int j = 0; j < ens.dim; ++j) out << ",dim" << j;
  out << "\n";
  for (std::size_t i = 0; i < ens.size(); ++i) {
    out << i;
    for (double v : ens.particle(i)) out << ',' << format_double(v);
    out << "\n";
  }
  if (!out) throw std::runtime_error("short write to " + path);

  nlohmann::json side;
  side["seed"] = meta.seed;
  side["N"] = meta.n_particles;
  side["M"] = meta.n_steps;
  side["T"] = meta.horizon;
  side["model"] = meta.model;
  side["time"] = meta.time;
  std::ofstream sidecar(path + ".json");
  if (!sidecar) throw std::runtime_error("cannot open " + path + ".json for writing");
  sidecar << side.dump(2) << "\n";
}

struct LoadedEnsemble {
  ParticleEnsemble ensemble;
  EnsembleMeta meta;
};

inline LoadedEnsemble read_ensemble_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty ensemble file " + path);
  int dim = 0;
  {
    std::stringstream ss(header);
    std::string col;
    bool first = true;
    while (std::getline(ss, col, ',')) {
      if (first) {
        if (col != "particle") throw std::runtime_error("unexpected header in " + path);
        first = false;
      } else {
        ++dim;
      }
    }
  }
  if (dim < 1) throw std::runtime_error("no coordinate columns in " + path);

  LoadedEnsemble loaded;
  loaded.ensemble.dim = dim;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // particle index
    for (int j = 0; j < dim; ++j) {
      if (!std::getline(ss, field, ',')) throw std::runtime_error("short row in " + path);
      loaded.ensemble.positions.push_back(std::strtod(field.c_str(), nullptr));
    }
  }

  std::ifstream sidecar(path + ".json");
  if (sidecar) {
    nlohmann::json side = nlohmann::json::parse(sidecar);
    loaded.meta.seed = side.value("seed", 0ULL);
    loaded.meta.n_particles = side.value("N", loaded.ensemble.size());
    loaded.meta.n_steps = side.value("M", 0ULL);
    loaded.meta.horizon = side.value("T", 0.0);
    loaded.meta.model = side.value("model", "");
    loaded.meta.time = side.value("time", 0.0);
    loaded.ensemble.seed = loaded.meta.seed;
    loaded.ensemble.time = loaded.meta.time;
    loaded.ensemble.step = loaded.meta.n_steps;
  }
  return loaded;
}

/// CSV `x[,y,...],density[,bandwidth]`, one row per query point.
inline void write_density_csv(const std::string& path, const DensityEstimate& est, bool with_bandwidth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const char* coords[] = {"x", "y", "z"};
  for (int j = 0; j < est.dim; ++j) {
    if (j) out << ',';
    if (j < 3) {
      out << coords[j];
    } else {
      out << "x" << j;
    }
  }
  out << ",density";
  if (with_bandwidth) out << ",bandwidth";
  out << "\n";
  const std::size_t d = static_cast<std::size_t>(est.dim);
  for (std::size_t q = 0; q < est.n_queries(); ++q) {
    for (std::size_t j = 0; j < d; ++j) {
      if (j) out << ',';
      out << format_double(est.queries[q * d + j]);
    }
    out << ',' << format_double(est.values[q]);
    if (with_bandwidth) {
      const double eta = est.bandwidths.size() == 1 ? est.bandwidths[0] : est.bandwidths[q];
      out << ',' << format_double(eta);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("short write to " + path);
}

/// Audit trace of one bandwidth selection: every grid row plus the choice.
inline nlohmann::json selection_trace_json(const BandwidthSelection& sel) {
  nlohmann::json trace;
  trace["x"] = sel.query;
  trace["omega"] = sel.omega;
  trace["selected_eta"] = sel.selected;
  trace["grid"] = nlohmann::json::array();
  for (std::size_t i = 0; i < sel.grid.size(); ++i) {
    trace["grid"].push_back({{"eta", sel.grid[i]},
                             {"estimate", sel.estimates[i]},
                             {"a", sel.a_terms[i]},
                             {"v", sel.v_terms[i]},
                             {"total", sel.total(i)},
                             {"selected", i == sel.selected_index}});
  }
  return trace;
}

}  // namespace mkv
