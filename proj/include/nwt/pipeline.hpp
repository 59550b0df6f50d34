#pragma once

// End-to-end orchestration: true state -> schedule -> counts (simulated or
// loaded) -> one inversion -> metrics -> files.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "direct.hpp"
#include "io.hpp"
#include "ml.hpp"
#include "radon.hpp"

namespace nwt {

inline constexpr const char* kVersion = "0.1.0";

/// Module error re-labelled with the pipeline stage it came from.
struct StageError : Error {
  StageError(const std::string& stage, const Error& e) : Error(e.kind(), stage + ": " + e.what()) {}
};

template <class F>
auto run_stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

inline GridSpec state_grid(const RunConfig& c) { return GridSpec(c.state.n_points, c.state.x_extent); }

inline WavePacket true_state(const RunConfig& c) {
  const StateBlock& s = c.state;
  const GridSpec g = state_grid(c);
  if (s.family == "evolved") return evolve_free(make_gaussian(s.l_coh, s.x_center, s.p_center, g), s.tau);
  if (s.family == "cat")  // humps at x_center +- separation / 2
    return make_cat(make_gaussian(s.l_coh, s.x_center + 0.5 * s.separation, s.p_center, g), s.separation);
  return make_gaussian(s.l_coh, s.x_center, s.p_center, g);
}

inline double effective_aux_shift(const RunConfig& c) {
  return c.schedule.aux_shift ? *c.schedule.aux_shift : c.physics.aux_shift();
}

inline Schedule build_schedule(const RunConfig& c) {
  const ScheduleBlock& k = c.schedule;
  if (k.B.empty() && k.dp.empty()) throw ValidationError("schedule: give dp/dx or B/L lists");
  Schedule s = !k.B.empty() ? make_hardware_schedule(k.B, k.L, c.physics, k.exposure, k.with_aux)
                            : make_schedule(k.dp, k.dx, k.exposure, k.with_aux, 0.0);
  s.aux_shift = effective_aux_shift(c);
  s.seed = k.seed;
  return s;
}

inline CountDataset simulate_dataset(const RunConfig& c, const DensityMatrix& rho) {
  const Schedule s = build_schedule(c);
  CountDataset d = c.schedule.noiseless ? expected_counts(rho, s) : simulate_counts(rho, s, c.schedule.seed, c.physics);
  d.length_unit = c.physics.length_unit;
  d.seed = c.schedule.seed;
  d.tag = c.state.family + (c.schedule.noiseless ? " noiseless" : "");
  return d;
}

/// Natural-unit resolution implied by the largest kicks: dx_min = 1 / max|dp|,
/// dp_min = 1 / max|dx|.
inline ResolutionLimits natural_resolution(const CountDataset& d) {
  double up = 0.0, vp = 0.0;
  for (const auto& r : d.records) {
    up = std::max(up, std::abs(r.setting.dp));
    vp = std::max(vp, std::abs(r.setting.dx));
  }
  return {up > 0.0 ? 1.0 / up : std::numeric_limits<double>::infinity(),
          vp > 0.0 ? 1.0 / vp : std::numeric_limits<double>::infinity()};
}

inline WignerSpec output_spec(const RunConfig& c) {
  const GridSpec g = state_grid(c);
  const double xh = c.output.x_half > 0.0 ? c.output.x_half : 0.5 * g.extent();
  const double ph = c.output.p_half > 0.0 ? c.output.p_half : g.p_max();
  const std::size_t n = c.output.wigner_points;
  return {Lattice1D::span(-xh, xh, n), Lattice1D::span(-ph, ph, n)};
}

inline RadonOptions radon_options(const RunConfig& c) {
  RadonOptions o;
  o.n_bins = c.method.radon_bins;
  o.n_omega = c.method.radon_omega;
  o.window = c.method.radon_window == "ram-lak" ? RampWindow::ram_lak : RampWindow::hann;
  return o;
}

inline MLConfig ml_options(const RunConfig& c) {
  MLConfig m;
  m.dim = c.method.ml_dim;
  m.dilution = c.method.ml_dilution;
  m.max_iter = c.method.ml_max_iter;
  m.tol = c.method.ml_tol;
  m.use_aux = c.method.ml_use_aux;
  return m;
}

struct Reconstruction {
  std::string method;
  WignerGrid wigner;
  std::optional<DensityMatrix> state;
  std::optional<MLReport> ml;
  std::optional<InversionDiagnostics> direct;
  std::optional<RadonResult> radon;
};

/// Runs the configured method on a dataset; never modifies the dataset.
inline Reconstruction reconstruct(const RunConfig& c, const CountDataset& data) {
  Reconstruction r;
  r.method = c.method.name;
  const WignerSpec out = output_spec(c);
  if (c.method.name == "direct") {
    InversionDiagnostics d;
    r.wigner = invert_wigner(estimate_gamma(data), out, &d);
    r.direct = d;
  } else if (c.method.name == "radon") {
    RadonResult res = radon_reconstruct(data, out, radon_options(c));
    r.wigner = res.wigner;
    r.radon = std::move(res);
  } else {
    MLReport rep = ml_reconstruct(data, ml_options(c), state_grid(c));
    r.wigner = wigner_of_ml(rep, out);
    r.state = rep.state;
    r.ml = std::move(rep);
  }
  return r;
}

struct Metrics {
  std::optional<double> fidelity;  // Uhlmann for ML, Wigner overlap 2 pi int W W_true otherwise
  std::optional<double> l2_to_truth;
  double negativity = 0.0;
  std::optional<double> truth_negativity;
  double integral = 0.0;
  std::optional<double> kl;
  ResolutionLimits resolution_natural;
  std::optional<ResolutionLimits> resolution_si;  // from the B/L lists
};

struct Provenance {
  std::string config_hash;
  std::string dataset_checksum;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string eigen;
};

struct ReportBundle {
  WignerGrid wigner;
  std::optional<DensityMatrix> state;
  Metrics metrics;
  Provenance provenance;
  std::string method;
  std::optional<std::size_t> iterations;
  std::optional<bool> converged;
  std::vector<std::string> files;
  std::vector<std::string> notes;
};

/// Truth may be absent (loaded dataset); the matching metrics are then omitted.
inline Metrics compute_metrics(const RunConfig& c, const CountDataset& data, const Reconstruction& r,
                               const std::optional<DensityMatrix>& truth) {
  Metrics m;
  m.negativity = negativity_volume(r.wigner);
  m.integral = r.wigner.integral();
  m.resolution_natural = natural_resolution(data);
  if (!c.schedule.B.empty() && !c.schedule.L.empty()) {
    const double bmax = *std::max_element(c.schedule.B.begin(), c.schedule.B.end());
    const double lmax = *std::max_element(c.schedule.L.begin(), c.schedule.L.end());
    if (bmax > 0.0 && lmax > 0.0) m.resolution_si = resolution_limits(bmax, lmax, c.physics);
  }
  if (r.ml) m.kl = r.ml->kl;
  if (truth) {
    const WignerGrid wt = wigner_of_state(*truth, {r.wigner.x, r.wigner.p});
    m.truth_negativity = negativity_volume(wt);
    m.l2_to_truth = relative_l2(r.wigner, wt);
    if (r.state) {
      m.fidelity = fidelity(r.ml ? decimate(*truth, r.ml->decimation) : *truth, *r.state);
    } else if (truth->purity() > 1.0 - 1e-9) {
      const double overlap = 2.0 * pi * (r.wigner.values.array() * wt.values.array()).sum() * r.wigner.cell();
      m.fidelity = std::clamp(overlap, 0.0, 1.0);
    }
  }
  return m;
}

inline nlohmann::json report_json(const ReportBundle& b) {
  nlohmann::json j;
  const Metrics& m = b.metrics;
  j["method"] = b.method;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["metrics"] = {{"fidelity", opt(m.fidelity)},
                  {"relative_l2_to_truth", opt(m.l2_to_truth)},
                  {"negativity_volume", m.negativity},
                  {"truth_negativity_volume", opt(m.truth_negativity)},
                  {"wigner_integral", m.integral},
                  {"kl_divergence", opt(m.kl)},
                  {"dx_min_natural", m.resolution_natural.dx_min},
                  {"dp_min_natural", m.resolution_natural.dp_min}};
  if (m.resolution_si)
    j["metrics"]["resolution_si"] = {{"dx_min_m", m.resolution_si->dx_min}, {"dp_min_kg_m_s", m.resolution_si->dp_min}};
  if (b.iterations) j["ml"] = {{"iterations", *b.iterations}, {"converged", *b.converged}};
  j["provenance"] = {{"config_hash", b.provenance.config_hash},
                     {"dataset_checksum", b.provenance.dataset_checksum},
                     {"seed", b.provenance.seed},
                     {"version", b.provenance.version},
                     {"eigen", b.provenance.eigen}};
  j["files"] = b.files;
  j["notes"] = b.notes;
  return j;
}

inline std::string output_path(const RunConfig& c, const std::string& suffix) {
  return (std::filesystem::path(c.output.dir) / (c.output.prefix + suffix)).string();
}

/// Writes the Wigner CSV/PGM, the density matrix when present and the JSON
/// report; returns the paths written.
inline std::vector<std::string> emit_outputs(const RunConfig& c, ReportBundle& b) {
  std::error_code ec;
  std::filesystem::create_directories(c.output.dir, ec);
  if (ec) throw IoError(c.output.dir, "cannot create directory: " + ec.message());
  const std::string csv = output_path(c, "_wigner.csv"), pgm = output_path(c, "_wigner.pgm");
  emit_wigner(b.wigner, csv, pgm);
  b.files.push_back(csv);
  b.files.push_back(pgm);
  if (b.state) {
    const std::string dm = output_path(c, "_density.txt");
    write_density(*b.state, dm);
    b.files.push_back(dm);
  }
  const std::string rep = output_path(c, "_report.json");
  b.files.push_back(rep);
  detail::write_file(rep, report_json(b).dump(2) + "\n");
  return b.files;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a(serialize_config(c))); }

/// state -> schedule -> counts -> inversion -> metrics -> files. Counts come
/// from output.dataset when set; the true-state metrics are then skipped.
inline ReportBundle run_pipeline(const RunConfig& c, bool write_files = true) {
  ReportBundle b;
  b.method = c.method.name;
  b.provenance.config_hash = config_hash(c);
  b.provenance.seed = c.schedule.seed;
  b.provenance.eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);

  std::optional<DensityMatrix> truth;
  CountDataset data;
  if (!c.output.dataset.empty()) {
    data = run_stage("load", [&] { return read_dataset(c.output.dataset); });
    b.notes.push_back("counts loaded from " + c.output.dataset + "; no true state available");
  } else {
    truth = run_stage("state", [&] { return density_from_pure(true_state(c)); });
    data = run_stage("simulate", [&] { return simulate_dataset(c, *truth); });
    if (write_files) {
      const std::string path = output_path(c, "_dataset.txt");
      run_stage("emit", [&] {
        std::error_code ec;
        std::filesystem::create_directories(c.output.dir, ec);
        write_dataset(data, path);
        return 0;
      });
      b.files.push_back(path);
    }
  }
  const std::string text = format_dataset(data);
  b.provenance.dataset_checksum = text.substr(text.rfind("@checksum ") + 10, 16);

  const Reconstruction r = run_stage("reconstruct:" + c.method.name, [&] { return reconstruct(c, data); });
  b.wigner = r.wigner;
  b.state = r.state;
  if (r.ml) {
    b.iterations = r.ml->iterations;
    b.converged = r.ml->converged;
    if (!r.ml->converged) b.notes.push_back("ml stopped at max_iter without meeting tol");
    if (!r.ml->note.empty()) b.notes.push_back("ml: " + r.ml->note);
  }
  if (r.radon && !r.radon->empty_bins.empty())
    b.notes.push_back("radon: " + std::to_string(r.radon->empty_bins.size()) + " empty angle bins skipped");
  b.metrics = run_stage("metrics", [&] { return compute_metrics(c, data, r, truth); });
  if (write_files) run_stage("emit", [&] { return emit_outputs(c, b); });
  return b;
}

}  // namespace nwt
