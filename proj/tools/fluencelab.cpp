// fluencelab: synthesize, estimate, correct and validate swept-beam PA data.
//
// Exit codes: 0 ok, 1 config, 2 I/O, 3 numeric (including fits at a search bound).

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fluencelab/estimation.hpp"
#include "fluencelab/fluence_models.hpp"
#include "fluencelab/io.hpp"
#include "fluencelab/montecarlo.hpp"
#include "fluencelab/synth_correct.hpp"

using namespace fluencelab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> model;
  std::optional<std::uint64_t> photons;
  std::optional<unsigned> threads;
  std::string format = "csv";

  std::string tensor;
  std::string estimate;
  std::string reference;
  std::size_t target = 0;
  bool identity_fluence = false;
  std::string footprint = "support";
  bool no_mc = false;
  std::optional<double> snr_db;

  std::string plot_in;
  std::vector<std::string> columns;
  std::vector<std::string> pivot;
};

unsigned thread_count(const Options& o) {
  if (o.threads) return *o.threads;
  if (const char* env = std::getenv("FLUENCELAB_THREADS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      throw ConfigError("FLUENCELAB_THREADS must be a nonnegative integer");
    }
  }
  return 0;
}

RunConfig load(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  return load_config(o.config);
}

fs::path out_dir(const Options& o, const RunConfig& cfg) { return o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out); }

void write_provenance(const fs::path& dir, const std::string& command, const RunConfig& cfg, std::uint64_t seed) {
  const json p = {{"command", command}, {"config_fnv1a", hex64(fnv1a(cfg.canonical))}, {"seed", seed}};
  write_text(dir / "provenance.json", p.dump(2) + "\n");
}

// ---------------------------------------------------------------- synth

int cmd_synth(const Options& o) {
  auto cfg = load(o);
  if (o.seed) cfg.noise.seed = *o.seed;
  if (o.model) cfg.model = parse_model(*o.model);
  if (o.snr_db) cfg.noise.snr_db = *o.snr_db;
  const auto spec = cfg.synthesis_spec();
  const auto data = synthesize(spec);
  const fs::path dir = out_dir(o, cfg);

  if (o.format == "bin") {
    write_tensor(dir, data.tensor, {{"config_fnv1a", hex64(fnv1a(cfg.canonical))}, {"seed", spec.seed}});
  } else {
    CsvTable t{{"wavelength_nm", "fiber", "x_mm", "z_mm", "value"}, {}};
    for (std::size_t j = 0; j < data.tensor.frames(); ++j) {
      for (std::size_t k = 0; k < data.tensor.fibers; ++k) {
        for (std::size_t i = 0; i < data.tensor.pixels(); ++i) {
          const Vec3 r = data.tensor.grid.coord(i);
          t.add({data.tensor.wavelengths_nm[j], static_cast<double>(k), r.x, r.z, data.tensor.at(j, k, i)});
        }
      }
    }
    write_csv(dir / "tensor.csv", t);
  }

  CsvTable truth{{"wavelength_nm", "mu_a_per_cm", "mu_s_reduced_per_cm", "mu_eff_per_cm", "sigma_noise"}, {}};
  const auto wl = spec.wavelengths.analysis_wavelengths();
  for (std::size_t j = 0; j < wl.size(); ++j) {
    truth.add({wl[j], per_mm_to_per_cm(spec.medium.mu_a[j]), per_mm_to_per_cm(spec.medium.mu_s_reduced[j]),
               per_mm_to_per_cm(spec.medium.mu_eff_at(j)), data.sigma[j]});
  }
  write_csv(dir / "truth.csv", truth);
  write_provenance(dir, "synth", cfg, spec.seed);
  std::cout << "wrote " << data.tensor.frames() << "x" << data.tensor.fibers << "x" << data.tensor.pixels() << " tensor to "
            << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct Pipeline {
  MeasurementTensor debiased;
  SupportSelection support;
  NormalizedTensor normalized;
  EstimationResult result;
};

Pipeline run_estimation(const MeasurementTensor& tensor, const RunConfig& cfg, const ProbeGeometry& geo,
                        const SearchConfig& search) {
  Pipeline p;
  p.debiased = debias(tensor, estimate_noise_bias(tensor));
  p.support = select_support(p.debiased, cfg.estimation.tau);
  p.normalized = normalize(p.debiased, p.support);
  for (std::size_t i : p.normalized.dropped) {
    std::cerr << "warning: pixel " << i << " dropped (nonpositive fiber sum)\n";
  }
  p.result = fit_parameters(p.normalized, geo, search);
  if (cfg.estimation.smoothing && p.result.fits.size() >= 3) p.result = smooth_spectra(std::move(p.result));
  return p;
}

int cmd_estimate(const Options& o) {
  const auto cfg = load(o);
  if (o.tensor.empty()) throw ConfigError("--tensor is required");
  const auto tensor = read_tensor(o.tensor);
  const auto geo = cfg.geometry.build();
  auto search = cfg.estimation.search;
  if (o.model) search.model = parse_model(*o.model);
  search.threads = thread_count(o);

  const auto p = run_estimation(tensor, cfg, geo, search);
  const fs::path dir = out_dir(o, cfg);
  write_text(dir / "estimate.json", estimation_to_json(p.result, p.normalized, p.support).dump(2) + "\n");
  write_csv(dir / "spectra.csv", estimation_spectra(p.result));
  write_provenance(dir, "estimate", cfg, 0);
  for (const auto& f : p.result.fits) {
    std::cout << f.wavelength_nm << " nm  mu_eff " << fmt9(per_mm_to_per_cm(f.mu_eff)) << " cm^-1";
    if (f.mu_s_reduced) std::cout << "  mu_s' " << fmt9(per_mm_to_per_cm(*f.mu_s_reduced)) << " cm^-1";
    if (f.at_bound) std::cout << "  [at search bound]";
    std::cout << "\n";
  }
  if (p.result.any_at_bound()) {
    std::cerr << "warning: at least one wavelength converged to a search bound\n";
    return kExitNumeric;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- correct

int cmd_correct(const Options& o) {
  const auto cfg = load(o);
  if (o.tensor.empty()) throw ConfigError("--tensor is required");
  const std::string ref_path = o.reference.empty() ? cfg.reference_csv : o.reference;
  if (ref_path.empty()) throw ConfigError("--reference (or reference_csv in the config) is required");
  if (!o.identity_fluence && o.estimate.empty()) throw ConfigError("--estimate is required unless --identity-fluence");

  const auto tensor = read_tensor(o.tensor);
  const auto debiased = debias(tensor, estimate_noise_bias(tensor));
  const auto reference = read_reference_spectrum(ref_path, debiased.wavelengths_nm);
  const auto geo = cfg.geometry.build();

  std::optional<EstimationResult> est;
  if (!o.estimate.empty()) {
    try {
      est = estimation_from_json(json::parse(read_text(o.estimate)));
    } catch (const json::parse_error& e) {
      throw IoError("estimate file is not valid JSON: " + std::string(e.what()));
    }
    if (est->fits.size() != debiased.frames()) throw ConfigError("estimate and tensor differ in wavelength count");
  }

  // Footprint: the target's pixels, restricted to the estimation support
  // unless --footprint target.
  std::vector<std::size_t> pixels;
  if (!cfg.targets.empty()) {
    if (o.target >= cfg.targets.size()) throw ConfigError("--target index out of range");
    pixels = target_pixels(debiased.grid, cfg.targets[o.target]);
    if (o.footprint == "support" && est) {
      std::vector<std::size_t> kept;
      std::set<std::size_t> support(est->pixels.begin(), est->pixels.end());
      for (std::size_t i : pixels) {
        if (support.count(i)) kept.push_back(i);
      }
      if (!kept.empty()) pixels = kept;
    }
  } else if (est) {
    pixels = est->pixels;
  } else {
    throw ConfigError("no target in the config and no estimate support to take a footprint from");
  }

  std::vector<Vec3> points;
  for (std::size_t i : pixels) points.push_back(debiased.grid.coord(i));
  FluenceStack phi(debiased.frames(), debiased.fibers, pixels.size());
  if (o.identity_fluence) {
    std::fill(phi.values.begin(), phi.values.end(), 1.0);
  } else {
    phi = estimated_fluence(*est, geo, points, false);
  }

  const auto d = uncorrected_spectrum(debiased, pixels);
  const auto c = corrected_spectrum(debiased, phi, pixels);
  const auto a_n = unit_normalized(reference);
  const auto d_n = unit_normalized(d.values);
  const auto c_n = unit_normalized(c.values);

  CsvTable t{{"wavelength_nm", "a_ref_unit", "d_uncorrected_unit", "c_corrected_unit"}, {}};
  for (std::size_t j = 0; j < a_n.size(); ++j) t.add({debiased.wavelengths_nm[j], a_n[j], d_n[j], c_n[j]});
  const fs::path dir = out_dir(o, cfg);
  write_csv(dir / "corrected.csv", t);

  const auto sd = spectrum_similarity(d.values, reference);
  const auto sc = spectrum_similarity(c.values, reference);
  CsvTable s{{"spectrum", "l2_distance_unit", "pearson"}, {}};
  s.add({0.0, sd.distance, sd.correlation});
  s.add({1.0, sc.distance, sc.correlation});
  write_text(dir / "similarity.csv", "# spectrum 0 = uncorrected, 1 = corrected\n" + s.str());
  write_provenance(dir, "correct", cfg, 0);
  std::cout << "distance to reference: uncorrected " << fmt9(sd.distance) << ", corrected " << fmt9(sc.distance) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- mc / validate

McConfig mc_config(const Options& o, const RunConfig& cfg) {
  McConfig m = cfg.mc.base;
  if (o.photons) m.photons = *o.photons;
  if (o.seed) m.seed = *o.seed;
  m.threads = thread_count(o);
  m.validate();
  return m;
}

int cmd_mc(const Options& o) {
  const auto cfg = load(o);
  const auto m = mc_config(o, cfg);
  const auto field = simulate(m);
  const fs::path dir = out_dir(o, cfg);
  if (o.format == "bin") {
    write_field(dir / "fluence.bin", field);
  } else {
    write_csv(dir / "axial.csv", axial_slice(field, 0.0, 0.0));
    write_csv(dir / "plane_y0.csv", plane_slice(field, 0.0));
  }
  const auto& t = field.tally;
  CsvTable tally{{"launched", "absorbed", "escaped", "transducer", "specular", "roulette_net", "interactions"}, {}};
  tally.add({t.launched, t.absorbed, t.escaped, t.transducer, t.specular, t.roulette_net, t.interactions});
  write_csv(dir / "tally.csv", tally);
  write_provenance(dir, "mc", cfg, m.seed);
  std::cout << "simulated " << m.photons << " photons; energy balance " << fmt9(t.accounted() / t.launched) << "\n";
  return kExitOk;
}

// Axial profile of MC (if any) and both models, amplitude-matched to the MC
// tail, or to Model I when MC is skipped.
CsvTable axial_profiles(const McConfig& m, double z_lo, double z_hi, bool run_mc, double* mean_dev) {
  const FluenceParams p = FluenceParams::from_medium(m.mu_a, m.mu_s_reduced, m.n_medium / m.n_coupling);
  const Vec3 tip = m.source;
  const double tilt = deg_to_rad(m.tilt_deg);
  auto m1 = [&](Vec3 r) { return model1_fluence(r, tip, tilt, p); };
  auto m2 = [&](Vec3 r) { return model2_fluence(r, tip, p.mu_eff, 1.0); };
  const double z_max = axial_fluence_peak(tip.y, tilt, p);

  AxialLine line;
  line.z_lo = z_lo;
  line.z_hi = z_hi;
  line.fit_from = z_max;
  if (run_mc) {
    const auto field = simulate(m);
    const auto c1 = compare_to_model(field, m1, line);
    const auto c2 = compare_to_model(field, m2, line);
    if (mean_dev) *mean_dev = c1.mean_abs_rel;
    CsvTable t{{"z_mm", "mc_per_mm2", "model1_matched", "model2_matched", "model1_rel_diff"}, {}};
    for (std::size_t i = 0; i < c1.rows.size(); ++i) {
      t.add({c1.rows[i].z, c1.rows[i].mc, c1.rows[i].model, c2.rows[i].model, c1.rows[i].rel_diff});
    }
    return t;
  }
  ModelDiscrepancy disc(tip, tilt, p);
  CsvTable t{{"z_mm", "model1", "model2_matched"}, {}};
  for (double z = z_lo; z <= z_hi + 1e-9; z += line.step) t.add({z, disc.model1(z), disc.model2(z)});
  return t;
}

int cmd_validate(const Options& o) {
  const auto cfg = load(o);
  const auto base = mc_config(o, cfg);
  const fs::path dir = out_dir(o, cfg);
  const bool run_mc = !o.no_mc;

  CsvTable summary{{"sweep", "mu_s_reduced_per_cm", "y_offset_mm", "mean_abs_rel_dev"}, {}};
  for (double mus : cfg.mc.mu_s_sweep) {
    McConfig m = base;
    m.mu_s_reduced = mus;
    double dev = std::numeric_limits<double>::quiet_NaN();
    write_csv(dir / ("profile_mus_" + fmt9(per_mm_to_per_cm(mus)) + "cm.csv"), axial_profiles(m, cfg.mc.z_lo, cfg.mc.z_hi, run_mc, &dev));
    summary.add({0.0, per_mm_to_per_cm(mus), m.source.y, dev});
  }
  for (double y : cfg.mc.y_sweep) {
    McConfig m = base;
    m.source.y = y;
    double dev = std::numeric_limits<double>::quiet_NaN();
    write_csv(dir / ("profile_y_" + fmt9(y) + "mm.csv"), axial_profiles(m, cfg.mc.z_lo, cfg.mc.z_hi, run_mc, &dev));
    summary.add({1.0, per_mm_to_per_cm(m.mu_s_reduced), y, dev});
  }
  write_text(dir / "mc_summary.csv", "# sweep 0 = scattering, 1 = source offset\n" + summary.str());

  // Model II error against Model I versus depth in transport lengths.
  const Vec3 tip = base.source;
  const double tilt = deg_to_rad(base.tilt_deg);
  const double n_rel = base.n_medium / base.n_coupling;
  {
    CsvTable t{{"z_over_lt"}, {}};
    std::vector<ModelDiscrepancy> curves;
    for (double mus : cfg.mc.error_mu_s) {
      t.columns.push_back("error_pct_mus_" + fmt9(per_mm_to_per_cm(mus)) + "cm");
      curves.emplace_back(tip, tilt, FluenceParams::from_medium(base.mu_a, mus, n_rel));
    }
    for (double zl = 1.0; zl <= 40.0 + 1e-9; zl += 0.5) {
      std::vector<double> row{zl};
      for (std::size_t c = 0; c < curves.size(); ++c) row.push_back(curves[c].error_pct(zl / cfg.mc.error_mu_s[c]));
      t.add(row);
    }
    write_csv(dir / "model_error_vs_mus.csv", t);
  }
  {
    CsvTable t{{"z_over_lt"}, {}};
    std::vector<ModelDiscrepancy> curves;
    for (double mua : cfg.mc.mu_a_sweep) {
      t.columns.push_back("error_pct_mua_" + fmt9(per_mm_to_per_cm(mua)) + "cm");
      curves.emplace_back(tip, tilt, FluenceParams::from_medium(mua, base.mu_s_reduced, n_rel));
    }
    for (double zl = 1.0; zl <= 40.0 + 1e-9; zl += 0.5) {
      std::vector<double> row{zl};
      for (auto& c : curves) row.push_back(c.error_pct(zl / base.mu_s_reduced));
      t.add(row);
    }
    write_csv(dir / "model_error_vs_mua.csv", t);
  }
  {
    CsvTable t{{"y_offset_mm"}, {}};
    for (double mus : cfg.mc.error_mu_s) t.columns.push_back("z_max_mm_mus_" + fmt9(per_mm_to_per_cm(mus)) + "cm");
    for (double y = 0.5; y <= 15.0 + 1e-9; y += 0.5) {
      std::vector<double> row{y};
      for (double mus : cfg.mc.error_mu_s) {
        row.push_back(axial_fluence_peak(y, tilt, FluenceParams::from_medium(base.mu_a, mus, n_rel)));
      }
      t.add(row);
    }
    write_csv(dir / "zmax_vs_y.csv", t);
  }
  write_provenance(dir, "validate", cfg, base.seed);
  std::cout << "validation tables written to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- fluence

// Model fluence for every fiber and analysis wavelength on the pixel grid.
int cmd_fluence(const Options& o) {
  const auto cfg = load(o);
  const auto geo = cfg.geometry.build();
  const auto wl = cfg.wavelength_grid().analysis_wavelengths();
  const auto medium = cfg.medium.build(wl);
  const ModelKind model = o.model ? parse_model(*o.model) : cfg.model;
  const auto moments = reflection_moments(geo.n_rel());
  std::vector<FluenceParams> params;
  for (std::size_t j = 0; j < wl.size(); ++j) params.push_back({medium.mu_eff_at(j), medium.mu_s_reduced[j], 1.0, moments});
  std::vector<Vec3> points;
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) points.push_back(cfg.grid.coord(i));
  const auto stack = model_fluence_stack(model, geo, points, params, false);

  const fs::path dir = out_dir(o, cfg);
  if (o.format == "bin") {
    auto t = MeasurementTensor::zeros(wl, std::nullopt, geo.fiber_tips.size(), cfg.grid);
    t.values = stack.values;
    write_tensor(dir, t, {{"content", "model fluence"}, {"model", static_cast<int>(model)}});
  } else {
    CsvTable t{{"wavelength_nm", "fiber", "x_mm", "z_mm", "fluence"}, {}};
    for (std::size_t j = 0; j < wl.size(); ++j) {
      for (std::size_t k = 0; k < geo.fiber_tips.size(); ++k) {
        for (std::size_t i = 0; i < points.size(); ++i) t.add({wl[j], static_cast<double>(k), points[i].x, points[i].z, stack.at(j, k, i)});
      }
    }
    write_csv(dir / "fluence.csv", t);
  }
  write_provenance(dir, "fluence", cfg, 0);
  return kExitOk;
}

// ---------------------------------------------------------------- plotdata

// Column selection, or pivot of long (x, y, value) rows into a matrix whose
// first column is y and whose header lists the x values.
int cmd_plotdata(const Options& o) {
  if (o.plot_in.empty() || o.out.empty()) throw ConfigError("plotdata needs --in and --out");
  const auto in = read_csv(o.plot_in);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(in.columns.begin(), in.columns.end(), name);
    if (it == in.columns.end()) throw ConfigError("plotdata: no column '" + name + "' in " + o.plot_in);
    return static_cast<std::size_t>(it - in.columns.begin());
  };

  CsvTable out;
  if (!o.pivot.empty()) {
    if (o.pivot.size() != 3) throw ConfigError("plotdata: --pivot takes x,y,value");
    const std::size_t cx = col(o.pivot[0]), cy = col(o.pivot[1]), cv = col(o.pivot[2]);
    std::map<double, std::map<double, double>> grid;
    std::set<double> xs;
    for (const auto& r : in.rows) {
      grid[r[cy]][r[cx]] = r[cv];
      xs.insert(r[cx]);
    }
    out.columns.push_back(o.pivot[1]);
    for (double x : xs) out.columns.push_back(o.pivot[0] + "=" + fmt9(x));
    for (const auto& [y, row] : grid) {
      std::vector<double> v{y};
      for (double x : xs) v.push_back(row.count(x) ? row.at(x) : std::numeric_limits<double>::quiet_NaN());
      out.add(v);
    }
  } else {
    const auto names = o.columns.empty() ? in.columns : o.columns;
    std::vector<std::size_t> idx;
    for (const auto& n : names) idx.push_back(col(n));
    out.columns = names;
    for (const auto& r : in.rows) {
      std::vector<double> v;
      for (std::size_t i : idx) v.push_back(r[i]);
      out.add(v);
    }
  }
  write_csv(o.out, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swept-beam photoacoustic fluence modeling, estimation and spectral correction"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration (JSON)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "RNG seed override");
    sub->add_option("--threads", o.threads, "Worker threads, 0 = auto (env FLUENCELAB_THREADS)");
  };

  auto* synth = app.add_subcommand("synth", "Synthesize a measurement tensor");
  common(synth);
  synth->add_option("--model", o.model, "Forward model")->check(CLI::IsMember({1, 2}));
  synth->add_option("--snr", o.snr_db, "SNR in dB (overrides noise.snr_db)");
  synth->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));

  auto* estimate = app.add_subcommand("estimate", "Estimate mu_eff and mu_s' per wavelength");
  common(estimate);
  estimate->add_option("--tensor", o.tensor, "Tensor directory (meta.json + data.f32)")->required();
  estimate->add_option("--model", o.model, "Fit model")->check(CLI::IsMember({1, 2}));

  auto* correct = app.add_subcommand("correct", "Fluence-correct a target's absorption spectrum");
  common(correct);
  correct->add_option("--tensor", o.tensor, "Tensor directory")->required();
  correct->add_option("--estimate", o.estimate, "estimate.json from the estimate command");
  correct->add_option("--reference", o.reference, "Reference spectrum CSV (wavelength_nm, alpha)");
  correct->add_option("--target", o.target, "Target index in the config");
  correct->add_option("--footprint", o.footprint, "Pixels used for the spectra")->check(CLI::IsMember({"support", "target"}));
  correct->add_flag("--identity-fluence", o.identity_fluence, "Use unit fluence (no correction)");

  auto* validate = app.add_subcommand("validate", "Model and Monte Carlo comparison tables");
  common(validate);
  validate->add_option("--photons", o.photons, "Photons per Monte Carlo run");
  validate->add_flag("--no-mc", o.no_mc, "Skip Monte Carlo runs");

  auto* mc = app.add_subcommand("mc", "Run one Monte Carlo simulation");
  common(mc);
  mc->add_option("--photons", o.photons, "Photon count");
  mc->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));

  auto* fluence = app.add_subcommand("fluence", "Evaluate model fluence on the pixel grid");
  common(fluence);
  fluence->add_option("--model", o.model, "Model")->check(CLI::IsMember({1, 2}));
  fluence->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));

  auto* plot = app.add_subcommand("plotdata", "Reshape a CSV table for plotting");
  plot->add_option("--in", o.plot_in, "Input CSV")->required();
  plot->add_option("--out", o.out, "Output CSV")->required();
  plot->add_option("--columns", o.columns, "Columns to keep, in order")->delimiter(',');
  plot->add_option("--pivot", o.pivot, "x,y,value columns to pivot into a matrix")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*estimate) return cmd_estimate(o);
    if (*correct) return cmd_correct(o);
    if (*validate) return cmd_validate(o);
    if (*mc) return cmd_mc(o);
    if (*fluence) return cmd_fluence(o);
    if (*plot) return cmd_plotdata(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
