// nwt: command-line front end. Exit codes 0 ok, 1 validation, 2 runtime, 3 I/O.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <nwt/nwt.hpp>

namespace {

struct Common {
  std::string config;
  std::vector<std::string> set;
  std::optional<std::string> family, method, dataset, dir, prefix;
  std::optional<std::uint64_t> seed;
  std::optional<double> exposure;
  bool noiseless = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "INI run configuration");
  app->add_option("--set", c.set, "override, section.key=value (repeatable)");
  app->add_option("--family", c.family, "state.family");
  app->add_option("--method", c.method, "method.name");
  app->add_option("--seed", c.seed, "schedule.seed");
  app->add_option("--exposure", c.exposure, "schedule.exposure");
  app->add_flag("--noiseless", c.noiseless, "schedule.noiseless = true");
  app->add_option("--dataset", c.dataset, "output.dataset (read counts from file)");
  app->add_option("--out-dir", c.dir, "output.dir");
  app->add_option("--prefix", c.prefix, "output.prefix");
}

// config file < --set < direct flags
nwt::RunConfig resolve(const Common& c) {
  nwt::RunConfig cfg;
  if (!c.config.empty()) {
    cfg = nwt::parse_config(nwt::detail::read_file(c.config));
  }
  std::vector<std::string> o = c.set;
  if (c.family) o.push_back("state.family=" + *c.family);
  if (c.method) o.push_back("method.name=" + *c.method);
  if (c.seed) o.push_back("schedule.seed=" + std::to_string(*c.seed));
  if (c.exposure) o.push_back("schedule.exposure=" + nwt::format_double(*c.exposure));
  if (c.noiseless) o.push_back("schedule.noiseless=true");
  if (c.dataset) o.push_back("output.dataset=" + *c.dataset);
  if (c.dir) o.push_back("output.dir=" + *c.dir);
  if (c.prefix) o.push_back("output.prefix=" + *c.prefix);
  nwt::apply_overrides(cfg, o);
  return cfg;
}

int exit_code(nwt::ErrorKind k) {
  switch (k) {
    case nwt::ErrorKind::validation: return 1;
    case nwt::ErrorKind::io: return 3;
    default: return 2;
  }
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neutron Wigner tomography: simulate kick schedules and reconstruct phase-space states"};
  app.require_subcommand(1);

  Common c_state, c_sched, c_sim, c_rec, c_met, c_pipe;
  std::string sched_out, sim_out, met_wigner, met_density;
  bool met_truth = false;

  auto* st = app.add_subcommand("state", "build the true state; write its density matrix and Wigner function");
  add_common(st, c_state);
  auto* sc = app.add_subcommand("schedule", "list the kick settings of the configured schedule");
  add_common(sc, c_sched);
  sc->add_option("-o,--out", sched_out, "write the listing here instead of stdout");
  auto* si = app.add_subcommand("simulate", "simulate counts and write a dataset file");
  add_common(si, c_sim);
  si->add_option("-o,--out", sim_out, "dataset path (default <dir>/<prefix>_dataset.txt)");
  auto* re = app.add_subcommand("reconstruct", "reconstruct from a dataset file with the configured method");
  add_common(re, c_rec);
  auto* me = app.add_subcommand("metrics", "metrics of a Wigner CSV and/or density matrix file");
  add_common(me, c_met);
  me->add_option("--wigner", met_wigner, "Wigner CSV");
  me->add_option("--density", met_density, "density matrix file");
  me->add_flag("--truth", met_truth, "compare against the configured state");
  auto* pl = app.add_subcommand("pipeline", "state -> schedule -> counts -> reconstruction -> report");
  add_common(pl, c_pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*st) {
      const auto cfg = resolve(c_state);
      const auto psi = nwt::true_state(cfg);
      const auto rho = nwt::density_from_pure(psi);
      const auto w = nwt::wigner_of_state(rho, nwt::output_spec(cfg));
      std::filesystem::create_directories(cfg.output.dir);
      nwt::write_density(rho, nwt::output_path(cfg, "_state_density.txt"));
      nwt::emit_wigner(w, nwt::output_path(cfg, "_state_wigner.csv"), nwt::output_path(cfg, "_state_wigner.pgm"));
      print_json({{"family", cfg.state.family},
                  {"mean_x", psi.mean_x()},
                  {"variance_x", psi.variance_x()},
                  {"mean_p", psi.mean_p()},
                  {"variance_p", psi.variance_p()},
                  {"negativity_volume", nwt::negativity_volume(w)},
                  {"files",
                   {nwt::output_path(cfg, "_state_density.txt"), nwt::output_path(cfg, "_state_wigner.csv"),
                    nwt::output_path(cfg, "_state_wigner.pgm")}}});
    } else if (*sc) {
      const auto cfg = resolve(c_sched);
      const auto s = nwt::build_schedule(cfg);
      std::ostringstream o;
      o << "# aux_shift " << nwt::format_double(s.aux_shift) << "\n";
      o << "dp[hbar/unit] dx[unit] aux exposure\n";
      for (const auto& k : s.settings)
        o << nwt::format_double(k.dp) << " " << nwt::format_double(k.dx) << " " << (k.aux ? 1 : 0) << " "
          << nwt::format_double(k.exposure) << "\n";
      if (sched_out.empty()) std::cout << o.str();
      else nwt::detail::write_file(sched_out, o.str());
      std::cerr << s.settings.size() << " settings\n";
    } else if (*si) {
      const auto cfg = resolve(c_sim);
      const auto rho = nwt::density_from_pure(nwt::true_state(cfg));
      const auto d = nwt::simulate_dataset(cfg, rho);
      const std::string path = sim_out.empty() ? nwt::output_path(cfg, "_dataset.txt") : sim_out;
      if (sim_out.empty()) std::filesystem::create_directories(cfg.output.dir);
      nwt::write_dataset(d, path);
      std::cerr << d.records.size() << " records, " << d.total_counts() << " counts -> " << path << "\n";
    } else if (*re) {
      const auto cfg = resolve(c_rec);
      if (cfg.output.dataset.empty()) throw nwt::ValidationError("reconstruct needs --dataset or output.dataset");
      print_json(nwt::report_json(nwt::run_pipeline(cfg)));
    } else if (*me) {
      const auto cfg = resolve(c_met);
      if (met_wigner.empty() && met_density.empty()) throw nwt::ValidationError("metrics needs --wigner and/or --density");
      nlohmann::json j;
      std::optional<nwt::DensityMatrix> truth;
      if (met_truth) truth = nwt::density_from_pure(nwt::true_state(cfg));
      if (!met_wigner.empty()) {
        const auto w = nwt::read_wigner_csv(met_wigner);
        j["wigner"] = {{"negativity_volume", nwt::negativity_volume(w)}, {"integral", w.integral()}};
        if (truth) {
          const auto wt = nwt::wigner_of_state(*truth, {w.x, w.p});
          j["wigner"]["relative_l2_to_truth"] = nwt::relative_l2(w, wt);
          j["wigner"]["overlap_fidelity"] =
              2.0 * nwt::pi * (w.values.array() * wt.values.array()).sum() * w.cell();
        }
      }
      if (!met_density.empty()) {
        const auto rho = nwt::read_density(met_density);
        j["density"] = {{"purity", rho.purity()}, {"min_eigenvalue", rho.eigenvalues().minCoeff()}};
        if (truth) {
          const std::size_t f = truth->dim() / rho.dim();
          j["density"]["fidelity"] = nwt::fidelity(f > 1 ? nwt::decimate(*truth, f) : *truth, rho);
        }
      }
      print_json(j);
    } else if (*pl) {
      print_json(nwt::report_json(nwt::run_pipeline(resolve(c_pipe))));
    }
  } catch (const nwt::Error& e) {
    std::cerr << "nwt: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "nwt: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "nwt: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
