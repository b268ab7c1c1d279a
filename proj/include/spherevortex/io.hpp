#ifndef SPHEREVORTEX_IO_HPP
#define SPHEREVORTEX_IO_HPP

// Delimited text outputs and the JSON run configuration.
// Floats are written as %.16e (17 significant digits), lines end in "\n".

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spherevortex/dynamics.hpp"
#include "spherevortex/experiments.hpp"
#include "spherevortex/stability.hpp"

namespace spherevortex::io {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// Comma-separated writer; binary mode so the terminator is always "\n".
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw ValidationError("out-dir: cannot open " + path.string() + " for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
  }

  void comment(const std::string& text) { out_ << "# " << text << '\n'; }

  ~CsvWriter() { out_.flush(); }

 private:
  std::ofstream out_;
};

/// One row per (sample, vortex): position and velocity, vortex index 1-based.
inline void write_trajectory(const std::filesystem::path& path, const VortexConfig& cfg, const Trajectory& traj,
                             std::optional<double> eps = std::nullopt) {
  CsvWriter w(path, {"t", "i", "x", "y", "z", "gx", "gy", "gz"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    VortexConfig at = cfg;
    at.points = traj.states[k];
    std::vector<Vec3> v;
    detail::velocities(at.positions(), at.strengths, at.gamma, eps, v);
    for (std::size_t i = 0; i < at.size(); ++i) {
      const Vec3& x = at.points[i].vec();
      w.row({fmt(traj.times[k]), std::to_string(i + 1), fmt(x.x()), fmt(x.y()), fmt(x.z()), fmt(v[i].x()),
             fmt(v[i].y()), fmt(v[i].z())});
    }
  }
}

inline void write_invariants(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path, {"t", "H", "M3", "gauss_sum"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.invariants[k];
    w.row({fmt(traj.times[k]), fmt(s.energy), fmt(s.vertical_moment), fmt(s.gauss_sum)});
  }
}

/// Drift of every invariant from its initial value; the moment drift is the full vector norm.
inline void write_drift(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path, {"t", "dH", "dM3", "dM", "dgauss"});
  if (traj.invariants.empty()) return;
  const auto& a = traj.invariants.front();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.invariants[k];
    w.row({fmt(traj.times[k]), fmt(std::abs(s.energy - a.energy)), fmt(std::abs(s.vertical_moment - a.vertical_moment)),
           fmt((s.moment - a.moment).norm()), fmt(std::abs(s.gauss_sum - a.gauss_sum))});
  }
}

/// Eigenvalue records followed by a summary comment line.
inline void write_spectrum(const std::filesystem::path& path, const SpectrumReport& rep, double omega) {
  CsvWriter w(path, {"re", "im", "residual"});
  for (std::size_t k = 0; k < rep.eigenvalues.size(); ++k) {
    w.row({fmt(rep.eigenvalues[k].real()), fmt(rep.eigenvalues[k].imag()), fmt(rep.residuals[k])});
  }
  w.comment("max_real_part=" + fmt(rep.max_real_part) + ",Omega=" + fmt(omega));
}

/// Reads the summary comment of a spectrum file back.
inline std::pair<double, double> read_spectrum_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# max_real_part=", 0) != 0) continue;
    const auto comma = line.find(",Omega=");
    if (comma == std::string::npos) break;
    return {std::stod(line.substr(16, comma - 16)), std::stod(line.substr(comma + 7))};
  }
  throw ValidationError("spectrum: no summary line in " + path.string());
}

inline void write_jacobian(const std::filesystem::path& path, const TangentMap& tm) {
  CsvWriter w(path, {"i", "j", "a11", "a12", "a21", "a22"});
  for (std::size_t i = 0; i < tm.blocks.size(); ++i) {
    for (std::size_t j = 0; j < tm.blocks[i].size(); ++j) {
      const Mat2& b = tm.blocks[i][j];
      w.row({std::to_string(i + 1), std::to_string(j + 1), fmt(b(0, 0)), fmt(b(0, 1)), fmt(b(1, 0)), fmt(b(1, 1))});
    }
  }
}

inline void write_equilibrium(const std::filesystem::path& path, const RelativeEquilibrium& re, double max_speed_value) {
  CsvWriter w(path, {"Omega", "residual", "degenerate", "max_speed"});
  w.row({fmt(re.omega), fmt(re.residual), re.degenerate ? "1" : "0", fmt(max_speed_value)});
}

inline void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  CsvWriter w(path, {"family", "N", "a", "kappa", "gamma", "eq_residual", "max_real_part", "Omega"});
  for (const auto& r : rows) {
    w.row({family_name(r.family), std::to_string(r.N), fmt(r.a), fmt(r.kappa), fmt(r.gamma), fmt(r.eq_residual),
           fmt(r.max_real_part), fmt(r.omega)});
  }
}

inline void write_collisions(const std::filesystem::path& path, const CollisionStats& st) {
  CsvWriter w(path, {"eps", "trials", "collided", "fraction", "stderr"});
  for (std::size_t k = 0; k < st.eps_grid.size(); ++k) {
    w.row({fmt(st.eps_grid[k]), std::to_string(st.trials), std::to_string(st.collided[k]), fmt(st.fraction[k]),
           fmt(st.std_error[k])});
  }
}

/// Moment time series, one row per (diagnostic time, blob); blob index 1-based.
inline void write_moments(const std::filesystem::path& path, const MomentReport& rep) {
  std::vector<std::string> header{"t", "blob", "cx", "cy", "cz", "I", "R", "dist_ref"};
  for (int n : rep.orders) header.push_back("m" + std::to_string(n));
  if (rep.radii.size() == 2) {
    header.push_back("mass_out_eps");
    header.push_back("mass_out_epsbeta");
  } else {
    for (std::size_t q = 0; q < rep.radii.size(); ++q) header.push_back("mass_out_" + std::to_string(q + 1));
  }
  CsvWriter w(path, header);
  for (const auto& s : rep.samples) {
    for (std::size_t b = 0; b < s.blobs.size(); ++b) {
      const BlobDiagnostics& d = s.blobs[b];
      std::vector<std::string> row{fmt(s.t), std::to_string(b + 1), fmt(d.center.x()), fmt(d.center.y()),
                                   fmt(d.center.z()), fmt(d.second_moment), fmt(d.support_radius),
                                   fmt(d.reference_distance)};
      for (double m : d.moments) row.push_back(fmt(m));
      for (double m : d.mass_outside) row.push_back(fmt(m));
      w.row(row);
    }
  }
}

/// Exit time per blob; empty field when the blob never left its ball.
inline void write_exit(const std::filesystem::path& path, const MomentReport& rep) {
  CsvWriter w(path, {"blob", "exit_time"});
  for (std::size_t b = 0; b < rep.blob_exit_times.size(); ++b) {
    w.row({std::to_string(b + 1), rep.blob_exit_times[b] ? fmt(*rep.blob_exit_times[b]) : ""});
  }
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct BlobRequest {
  double eps = 0.1;
  int particles_per_blob = 100;
  double beta = 0.4;
};

struct RunConfig {
  VortexConfig config;
  std::optional<BlobRequest> blob;
  std::vector<std::string> warnings;
};

namespace detail {

inline double number_at(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(path + ": must be finite");
  return v;
}

}  // namespace detail

/**
 * Parses a run configuration document:
 *   {"gamma": g, "strict_gauss": true,
 *    "vortices": [{"position": [x, y, z], "strength": s}, ...],
 *    "blob": {"eps": e, "particles_per_blob": m, "beta": b}}
 * Positions off the sphere by more than 1e-6 are renormalized with a warning.
 */
inline RunConfig parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config: not a valid JSON document (") + e.what() + ")");
  }
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  RunConfig rc;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& k = it.key();
    if (k != "gamma" && k != "strict_gauss" && k != "vortices" && k != "blob") {
      throw ValidationError(k + ": unknown field");
    }
  }
  rc.config.gamma = doc.contains("gamma") ? detail::number_at(doc["gamma"], "gamma") : 0.0;
  if (doc.contains("strict_gauss")) {
    if (!doc["strict_gauss"].is_boolean()) throw ValidationError("strict_gauss: expected true or false");
    rc.config.strict_gauss = doc["strict_gauss"].get<bool>();
  }
  if (!doc.contains("vortices")) throw ValidationError("vortices: missing");
  const auto& vs = doc["vortices"];
  if (!vs.is_array()) throw ValidationError("vortices: expected a list");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string base = "vortices[" + std::to_string(i) + "]";
    const auto& v = vs[i];
    if (!v.is_object()) throw ValidationError(base + ": expected an object");
    if (!v.contains("position")) throw ValidationError(base + ".position: missing");
    if (!v.contains("strength")) throw ValidationError(base + ".strength: missing");
    const auto& p = v["position"];
    if (!p.is_array() || p.size() != 3) throw ValidationError(base + ".position: expected [x, y, z]");
    Vec3 x;
    for (int c = 0; c < 3; ++c) x[c] = detail::number_at(p[c], base + ".position[" + std::to_string(c) + "]");
    const double norm = x.norm();
    if (!(norm > 0.0)) throw ValidationError(base + ".position: zero vector");
    if (std::abs(norm - 1.0) > 1e-6) {
      std::ostringstream os;
      os.precision(17);
      os << base << ".position: norm " << norm << " renormalized to 1";
      rc.warnings.push_back(os.str());
    }
    rc.config.points.emplace_back(x);
    rc.config.strengths.push_back(detail::number_at(v["strength"], base + ".strength"));
  }
  if (doc.contains("blob")) {
    const auto& b = doc["blob"];
    if (!b.is_object()) throw ValidationError("blob: expected an object");
    BlobRequest br;
    if (b.contains("eps")) br.eps = detail::number_at(b["eps"], "blob.eps");
    if (b.contains("beta")) br.beta = detail::number_at(b["beta"], "blob.beta");
    if (b.contains("particles_per_blob")) {
      if (!b["particles_per_blob"].is_number_integer()) throw ValidationError("blob.particles_per_blob: expected an integer");
      br.particles_per_blob = b["particles_per_blob"].get<int>();
    }
    if (!(br.eps > 0.0 && br.eps < 1.0)) throw ValidationError("blob.eps: must lie in (0, 1)");
    if (!(br.beta > 0.0 && br.beta < 1.0)) throw ValidationError("blob.beta: must lie in (0, 1)");
    if (br.particles_per_blob < 1) throw ValidationError("blob.particles_per_blob: must be >= 1");
    rc.blob = br;
  }
  validate(rc.config);
  return rc;
}

inline RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Serializes a configuration in the format parse_config reads.
inline std::string config_to_json(const VortexConfig& cfg, const std::optional<BlobRequest>& blob = std::nullopt) {
  nlohmann::ordered_json doc;
  doc["gamma"] = cfg.gamma;
  doc["strict_gauss"] = cfg.strict_gauss;
  doc["vortices"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Vec3& x = cfg.points[i].vec();
    doc["vortices"].push_back({{"position", {x.x(), x.y(), x.z()}}, {"strength", cfg.strengths[i]}});
  }
  if (blob) doc["blob"] = {{"eps", blob->eps}, {"particles_per_blob", blob->particles_per_blob}, {"beta", blob->beta}};
  return doc.dump(2) + "\n";
}

}  // namespace spherevortex::io

#endif
