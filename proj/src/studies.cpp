#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "blochrate/fit.hpp"
#include "blochrate/harness.hpp"
#include "blochrate/parallel.hpp"
#include "blochrate/rate_solver.hpp"
#include "blochrate/rates.hpp"
#include "blochrate/sharp_ops.hpp"

namespace blochrate {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string eps_label(double eps) { return "eps=" + fmt(eps); }

json matrix_json(const RealMatrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    out.push_back(row);
  }
  return out;
}

std::vector<double> vec(const RealVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json fit_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"slope_stderr", f.slope_stderr}, {"points", f.points}};
}

RateChoice rate_choice(const ExperimentConfig& cfg) {
  if (cfg.rate.form) return *cfg.rate.form;
  return cfg.mu > 0.0 ? RateChoice::Dominant : RateChoice::Averaged;
}

// Full rate table W + Ψ for the chosen form at this ε.
RateMatrix rate_table(const ExperimentConfig& cfg, const Scaling& sc, RateChoice form) {
  const RateMatrix W(cfg.system.W);
  if (form == RateChoice::Averaged) return W + psi_averaged(cfg.system, cfg.field, sc);
  if (sc.mu() == 0.0) throw InvalidArgument("the dominant rate needs mu > 0");
  return W + psi_dominant(cfg.system, cfg.field, sc, resonance_set(cfg.system, cfg.field));
}

std::vector<Scaling> scalings(const ExperimentConfig& cfg) {
  std::vector<Scaling> out;
  for (double e : cfg.eps) out.emplace_back(e, cfg.mu, cfg.p);
  return out;
}

std::vector<std::string> level_columns(const char* first, int n) {
  std::vector<std::string> h = {first};
  for (int i = 1; i <= n; ++i) h.push_back("rho_" + std::to_string(i));
  return h;
}

// Max over snapshots of the l2 distance between Bloch populations and a rate trajectory.
double population_error(const BlochTrajectory& bloch, const PopulationTrajectory& rate) {
  double err = 0.0;
  for (std::size_t s = 0; s < bloch.times.size(); ++s)
    err = std::max(err, (bloch.states[s].diagonal() - rate.states[s]).norm());
  return err;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

bool StudyResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

double expected_exponent(Channel c, double mu) {
  switch (c) {
    case Channel::Coherence: return 1.0 - mu;
    case Channel::DvsRhod1: return 1.0 - 2.0 * mu;
    case Channel::DvsRhod2: return std::min(mu, 1.0 - 2.0 * mu);
  }
  return 0.0;
}

StudyResult run_study(const ExperimentConfig& cfg) {
  cfg.validate();
  switch (cfg.study) {
    case Study::SimulateBloch: return run_simulate_bloch(cfg);
    case Study::SimulateRate: return run_simulate_rate(cfg);
    case Study::Rates: return run_rates(cfg);
    case Study::Converge: return run_convergence_study(cfg);
    case Study::AverageOracle: return run_averaging_oracle(cfg);
    case Study::Timelayer: return run_timelayer_study(cfg);
    case Study::Equilibrium: return run_equilibrium_study(cfg);
    case Study::Dioph: return run_dioph_suite(cfg);
  }
  throw InvalidArgument("unknown study");
}

StudyResult run_simulate_bloch(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::SimulateBloch;
  const auto sc = scalings(cfg);
  const int n = cfg.system.size();
  const DensityMatrix rho0 = well_prepared_state(Populations(cfg.initial));
  std::vector<BlochTrajectory> trajs(sc.size());
  parallel_for(sc.size(), cfg.jobs, [&](std::size_t i) {
    trajs[i] = integrate_bloch(cfg.system, cfg.field, sc[i], rho0, cfg.solver);
  });

  CsvTable series{"series.csv", {"eps", "steps", "step", "trace_drift", "herm_residual", "negativity", "coherence_sup"}, {}};
  json cells = json::array();
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const auto& tr = trajs[i];
    const ConservationReport rep = conservation_diagnostics(tr);
    series.rows.push_back({cfg.eps[i], static_cast<double>(tr.steps), tr.step, rep.trace_drift, rep.herm_residual,
                           rep.negativity, tr.coherence_sup});
    CsvTable traj{"trajectory_" + std::to_string(i + 1) + ".csv", level_columns("t", n), {}};
    for (const char* h : {"coherence_l1", "trace", "herm_residual"}) traj.header.push_back(h);
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
      std::vector<double> row = {tr.times[s]};
      const RealVector d = tr.states[s].diagonal();
      row.insert(row.end(), d.data(), d.data() + n);
      row.push_back(tr.diagnostics[s].coherence_l1);
      row.push_back(tr.diagnostics[s].trace);
      row.push_back(tr.diagnostics[s].herm_residual);
      traj.rows.push_back(std::move(row));
    }
    out.tables.push_back(std::move(traj));
    const bool ok = rep.trace_drift <= 1e-8 && rep.herm_residual <= 1e-8 && rep.negativity <= 1e-8;
    out.checks.push_back({"conservation " + eps_label(cfg.eps[i]), ok,
                          "trace drift " + fmt(rep.trace_drift) + ", hermiticity " + fmt(rep.herm_residual) +
                              ", negativity " + fmt(rep.negativity)});
    cells.push_back({{"eps", cfg.eps[i]},
                     {"steps", tr.steps},
                     {"step", tr.step},
                     {"trace_drift", rep.trace_drift},
                     {"herm_residual", rep.herm_residual},
                     {"negativity", rep.negativity},
                     {"coherence_sup", tr.coherence_sup},
                     {"final_populations", vec(tr.states.back().diagonal())},
                     {"trajectory", "trajectory_" + std::to_string(i + 1) + ".csv"}});
  }
  out.tables.insert(out.tables.begin(), std::move(series));
  out.summary["cells"] = cells;
  return out;
}

StudyResult run_simulate_rate(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::SimulateRate;
  const auto sc = scalings(cfg);
  const int n = cfg.system.size();
  const RateChoice form = rate_choice(cfg);
  const Populations rho0(cfg.initial);
  std::vector<PopulationTrajectory> trajs(sc.size());
  parallel_for(sc.size(), cfg.jobs, [&](std::size_t i) {
    trajs[i] = integrate_rate(rate_table(cfg, sc[i], form), rho0, cfg.rate.T, cfg.rate.snapshots);
  });

  CsvTable series{"series.csv", {"eps", "trace_drift", "min_population"}, {}};
  json cells = json::array();
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const auto& tr = trajs[i];
    double drift = 0.0, lowest = std::numeric_limits<double>::infinity();
    CsvTable traj{"trajectory_" + std::to_string(i + 1) + ".csv", level_columns("t", n), {}};
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
      drift = std::max(drift, std::abs(tr.states[s].sum() - rho0.total()));
      lowest = std::min(lowest, tr.states[s].minCoeff());
      std::vector<double> row = {tr.times[s]};
      row.insert(row.end(), tr.states[s].data(), tr.states[s].data() + n);
      traj.rows.push_back(std::move(row));
    }
    out.tables.push_back(std::move(traj));
    series.rows.push_back({cfg.eps[i], drift, lowest});
    out.checks.push_back({"mass and sign " + eps_label(cfg.eps[i]), drift <= 1e-10 && lowest >= -1e-10,
                          "trace drift " + fmt(drift) + ", min population " + fmt(lowest)});
    cells.push_back({{"eps", cfg.eps[i]},
                     {"trace_drift", drift},
                     {"min_population", lowest},
                     {"final_populations", vec(tr.states.back())},
                     {"trajectory", "trajectory_" + std::to_string(i + 1) + ".csv"}});
  }
  out.tables.insert(out.tables.begin(), std::move(series));
  out.summary["rate_form"] = form == RateChoice::Averaged ? "averaged" : "dominant";
  out.summary["cells"] = cells;
  return out;
}

StudyResult run_rates(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::Rates;
  const LevelSystem& sys = cfg.system;
  const int n = sys.size();
  const ResonanceSet res = resonance_set(sys, cfg.field);
  const RealMatrix C = resonant_weight(sys, cfg.field, res);

  json sets = json::array();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && res.resonant(a, b)) sets.push_back({{"n", a + 1}, {"m", b + 1}, {"beta", res.at(a, b)}});
  out.summary["resonances"] = sets;
  out.summary["resonance_tolerance"] = res.tolerance();
  out.summary["C"] = matrix_json(C);

  const bool w_zero = RateMatrix(sys.W).is_zero();
  json regimes;
  for (bool finite : {true, false}) {
    const RegimeInfo r = regime_classify(cfg.mu, cfg.p, finite, w_zero);
    json j = {{"ratio", r.ratio},       {"sigma", r.sigma}, {"nu", r.nu},
              {"homogeneous", r.homogeneous}, {"projector", to_string(r.projector)},
              {"row", r.row},           {"difference", r.difference}, {"notes", r.notes}};
    j["form"] = r.form ? json(to_string(*r.form)) : json(nullptr);
    if (r.homogeneous && r.form) {
      try {
        j["psi_app"] = matrix_json(psi_app(sys, cfg.field, res, r).entries());
      } catch (const InvalidArgument& e) {
        j["psi_app"] = nullptr;
        j["psi_app_error"] = e.what();
      }
    }
    regimes[finite ? "finite_N" : "infinite_N"] = j;
  }
  out.summary["regime"] = regimes;

  CsvTable series{"series.csv", {"eps", "n", "m", "C", "psi_averaged", "psi_dominant", "A", "B_eps"}, {}};
  json cells = json::array();
  for (const Scaling& sc : scalings(cfg)) {
    const RateMatrix avg = psi_averaged(sys, cfg.field, sc);
    json cell = {{"eps", sc.eps()}, {"psi_averaged", matrix_json(avg.entries())}};
    RealMatrix dom = RealMatrix::Zero(n, n), A = dom, B = dom;
    if (cfg.mu > 0.0) {
      const RateMatrix d = psi_dominant(sys, cfg.field, sc, res);
      const SplitAB split = split_AB(sys, cfg.field, sc, res);
      dom = d.entries();
      A = split.A.entries();
      B = split.B_eps.entries();
      const RealMatrix recombined = std::pow(sc.eps(), -cfg.mu) * A + std::pow(sc.eps(), -split.nu) * B;
      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double scale = std::max(std::abs(dom(i, j)), std::abs(recombined(i, j)));
          if (scale > 0.0) worst = std::max(worst, std::abs(dom(i, j) - recombined(i, j)) / scale);
        }
      out.checks.push_back({"split identity " + eps_label(sc.eps()), worst <= 1e-12, "max relative gap " + fmt(worst)});
      cell["psi_dominant"] = matrix_json(dom);
      cell["A"] = matrix_json(A);
      cell["B_eps"] = matrix_json(B);
      cell["nu"] = split.nu;
      cell["split_residual"] = worst;
    }
    const bool signs = avg.entries().minCoeff() >= 0.0 && dom.minCoeff() >= 0.0 && avg.entries().diagonal().isZero(0.0) &&
                       dom.diagonal().isZero(0.0);
    out.checks.push_back({"rate signs " + eps_label(sc.eps()), signs, "nonnegative with zero diagonal"});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) series.rows.push_back({sc.eps(), double(i + 1), double(j + 1), C(i, j), avg(i, j), dom(i, j), A(i, j), B(i, j)});
    cells.push_back(cell);
  }
  out.summary["cells"] = cells;
  out.tables.push_back(std::move(series));
  return out;
}

StudyResult run_convergence_study(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::Converge;
  if (cfg.eps.size() < 3) throw InvalidArgument("convergence study needs at least 3 eps values");
  const Channel channel = cfg.converge.channel;
  if (channel == Channel::DvsRhod2 && cfg.mu == 0.0) throw InvalidArgument("d_vs_rhod2 needs mu > 0");
  const auto sc = scalings(cfg);
  const DensityMatrix rho0 = well_prepared_state(Populations(cfg.initial));

  std::vector<double> errors(sc.size());
  std::vector<long> steps(sc.size());
  parallel_for(sc.size(), cfg.jobs, [&](std::size_t i) {
    const BlochTrajectory tr = integrate_bloch(cfg.system, cfg.field, sc[i], rho0, cfg.solver);
    steps[i] = tr.steps;
    if (channel == Channel::Coherence) {
      errors[i] = tr.coherence_sup;
      return;
    }
    const RateChoice form = channel == Channel::DvsRhod1 ? RateChoice::Averaged : RateChoice::Dominant;
    const RealMatrix gen = sharpen(rate_table(cfg, sc[i], form)).matrix;
    errors[i] = population_error(tr, integrate_generator(gen, cfg.initial, tr.times));
  });

  CsvTable series{"series.csv", {"eps", "error", "steps"}, {}};
  for (std::size_t i = 0; i < sc.size(); ++i) series.rows.push_back({cfg.eps[i], errors[i], double(steps[i])});
  out.tables.push_back(std::move(series));

  const double expected = expected_exponent(channel, cfg.mu);
  const double tol = cfg.converge.tolerance;
  out.summary["channel"] = to_string(channel);
  out.summary["eps"] = cfg.eps;
  out.summary["errors"] = errors;
  out.summary["expected_slope"] = expected;
  out.summary["tolerance"] = tol;

  const bool positive = std::all_of(errors.begin(), errors.end(), [](double e) { return e > 0.0; });
  if (!positive) {
    out.checks.push_back({"slope " + to_string(channel), false, "an error value is zero; no log-log fit"});
    return out;
  }
  const LineFit fit = fit_loglog(cfg.eps, errors);
  out.summary["fit"] = fit_json(fit);
  const bool noisy = fit.slope_stderr > tol;
  out.summary["noisy"] = noisy;
  if (!noisy) {
    out.checks.push_back({"slope " + to_string(channel), std::abs(fit.slope - expected) <= tol,
                          "slope " + fmt(fit.slope) + " ± " + fmt(fit.slope_stderr) + ", expected " + fmt(expected) +
                              " ± " + fmt(tol)});
  } else {
    // Noisy fit: strictly decreasing errors and the endpoint ratio near (ε_last/ε_first)^expected.
    const double ratio = errors.back() / errors.front();
    const double target = std::pow(cfg.eps.back() / cfg.eps.front(), expected);
    const bool ok = strictly_decreasing(errors) && ratio >= 0.5 * target && ratio <= 1.5 * target;
    out.summary["fallback"] = {{"endpoint_ratio", ratio}, {"expected_ratio", target}};
    out.checks.push_back({"fallback " + to_string(channel), ok,
                          "endpoint ratio " + fmt(ratio) + ", band [" + fmt(0.5 * target) + ", " + fmt(1.5 * target) + "]"});
  }
  return out;
}

StudyResult run_averaging_oracle(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::AverageOracle;
  const auto sc = scalings(cfg);
  const auto& S = cfg.oracle.S;
  const std::size_t cells = sc.size() * S.size();
  std::vector<double> residual(cells);
  std::vector<RateMatrix> averaged(sc.size());
  for (std::size_t i = 0; i < sc.size(); ++i) averaged[i] = psi_averaged(cfg.system, cfg.field, sc[i]);

  parallel_for(cells, cfg.jobs, [&](std::size_t c) {
    const std::size_t i = c / S.size(), k = c % S.size();
    const int panels = static_cast<int>(std::ceil(S[k] * cfg.oracle.panels_per_unit));
    const RealMatrix o = average_oracle(cfg.system, cfg.field, sc[i], S[k], panels);
    const RealMatrix& a = averaged[i].entries();
    double worst = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index q = 0; q < a.cols(); ++q) {
        if (r == q) continue;
        const double diff = std::abs(o(r, q) - a(r, q));
        if (a(r, q) > 0.0) worst = std::max(worst, diff / a(r, q));
        else if (diff > 0.0) worst = std::max(worst, diff);
      }
    residual[c] = worst;
  });

  CsvTable series{"series.csv", {"eps", "S", "residual"}, {}};
  json per_eps = json::array();
  for (std::size_t i = 0; i < sc.size(); ++i) {
    std::vector<double> r(residual.begin() + static_cast<std::ptrdiff_t>(i * S.size()),
                          residual.begin() + static_cast<std::ptrdiff_t>((i + 1) * S.size()));
    for (std::size_t k = 0; k < S.size(); ++k) series.rows.push_back({cfg.eps[i], S[k], r[k]});
    const double last = r.back();
    json cell = {{"eps", cfg.eps[i]}, {"S", S}, {"residual", r}, {"psi_averaged", matrix_json(averaged[i].entries())}};
    out.checks.push_back({"match at S=" + fmt(S.back()) + " " + eps_label(cfg.eps[i]), last <= cfg.oracle.match_tolerance,
                          "relative residual " + fmt(last) + " (tolerance " + fmt(cfg.oracle.match_tolerance) + ")"});
    const bool all_zero = std::all_of(r.begin(), r.end(), [](double x) { return x == 0.0; });
    if (all_zero) {
      out.checks.push_back({"residual slope " + eps_label(cfg.eps[i]), true, "all residuals are zero"});
    } else if (S.size() >= 3 && std::all_of(r.begin(), r.end(), [](double x) { return x > 0.0; })) {
      const LineFit fit = fit_loglog(S, r);
      cell["fit"] = fit_json(fit);
      out.checks.push_back({"residual slope " + eps_label(cfg.eps[i]),
                            std::abs(fit.slope + 1.0) <= cfg.oracle.slope_tolerance,
                            "slope " + fmt(fit.slope) + ", expected -1 ± " + fmt(cfg.oracle.slope_tolerance)});
    } else {
      out.checks.push_back({"residual slope " + eps_label(cfg.eps[i]), false, "need 3 positive residuals"});
    }
    per_eps.push_back(cell);
  }
  out.summary["cells"] = per_eps;
  out.tables.push_back(std::move(series));
  return out;
}

StudyResult run_timelayer_study(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::Timelayer;
  if (cfg.mu == 0.0) throw InvalidArgument("time-layer study needs mu > 0");
  const LevelSystem& sys = cfg.system;
  const ResonanceSet res = resonance_set(sys, cfg.field);
  const RateMatrix W(sys.W);
  const RateMatrix b0 = b0_limit(sys, cfg.field, cfg.mu, cfg.p, res);
  const RegimeInfo regime = regime_classify(cfg.mu, cfg.p, true, W.is_zero());
  const double sigma = layer_exponent(regime);
  const auto sc = scalings(cfg);

  std::vector<LayerFit> fits(sc.size());
  std::vector<double> gaps(sc.size()), horizons(sc.size());
  std::vector<PopulationTrajectory> trajs(sc.size());
  parallel_for(sc.size(), cfg.jobs, [&](std::size_t i) {
    const SplitAB split = split_AB(sys, cfg.field, sc[i], res);
    const ProjectorSet proj = build_projectors(split.A, b0, w_mod(sys, psi_dominant(sys, cfg.field, sc[i], res)), regime);
    gaps[i] = spectral_gap_c(split.A, b0, proj);
    if (!std::isfinite(gaps[i])) return;
    const double eps = sc[i].eps();
    const RealMatrix gen = std::pow(eps, -cfg.mu) * sharpen(split.A).matrix +
                           std::pow(eps, -split.nu) * sharpen(split.B_eps).matrix + sharpen(W).matrix;
    horizons[i] = cfg.timelayer.horizon / (gaps[i] * std::pow(eps, -sigma));
    trajs[i] = integrate_generator(gen, cfg.initial, uniform_times(horizons[i], cfg.timelayer.snapshots));
    fits[i] = timelayer_analysis(trajs[i], proj, sc[i], regime, gaps[i]);
  });

  out.summary["regime"] = {{"ratio", regime.ratio}, {"sigma", sigma}, {"nu", regime.nu},
                           {"projector", to_string(regime.projector)}, {"row", regime.row}};
  CsvTable series{"series.csv",
                  {"eps", "gap_c", "horizon", "rate", "predicted_rate", "plateau", "initial", "duration", "points",
                   "fit_residual", "within_band"},
                  {}};
  std::vector<double> rates, plateaus;
  bool all_detected = true;
  json cells = json::array();
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const LayerFit& f = fits[i];
    if (!std::isfinite(gaps[i])) {
      out.checks.push_back({"layer " + eps_label(cfg.eps[i]), false, "layer range is trivial: no layer"});
      all_detected = false;
      continue;
    }
    series.rows.push_back({cfg.eps[i], gaps[i], horizons[i], f.rate, f.predicted_rate, f.plateau, f.initial, f.duration,
                           double(f.points), f.residual, f.within_band ? 1.0 : 0.0});
    cells.push_back({{"eps", cfg.eps[i]}, {"gap_c", gaps[i]}, {"detected", f.detected}, {"rate", f.rate},
                     {"predicted_rate", f.predicted_rate}, {"plateau", f.plateau}, {"within_band", f.within_band},
                     {"layer", "layer_" + std::to_string(i + 1) + ".csv"}});
    CsvTable layer{"layer_" + std::to_string(i + 1) + ".csv", {"t", "layer_norm"}, {}};
    for (std::size_t s = 0; s < f.norms.size(); ++s) layer.rows.push_back({trajs[i].times[s], f.norms[s]});
    out.tables.push_back(std::move(layer));
    all_detected = all_detected && f.detected;
    rates.push_back(f.rate);
    plateaus.push_back(f.plateau);
  }
  out.summary["cells"] = cells;
  out.tables.insert(out.tables.begin(), std::move(series));

  const double tol = cfg.timelayer.tolerance;
  if (!all_detected || rates.size() < 3 || std::any_of(plateaus.begin(), plateaus.end(), [](double x) { return !(x > 0.0); })) {
    out.checks.push_back({"layer exponents", false, "a layer was not detected or fewer than 3 eps values"});
    return out;
  }
  const LineFit rf = fit_loglog(cfg.eps, rates), pf = fit_loglog(cfg.eps, plateaus);
  out.summary["rate_fit"] = fit_json(rf);
  out.summary["plateau_fit"] = fit_json(pf);
  out.checks.push_back({"decay-rate slope", std::abs(rf.slope + sigma) <= tol,
                        "slope " + fmt(rf.slope) + ", expected " + fmt(-sigma) + " ± " + fmt(tol)});
  out.checks.push_back({"plateau slope", std::abs(pf.slope - sigma) <= tol,
                        "slope " + fmt(pf.slope) + ", expected " + fmt(sigma) + " ± " + fmt(tol)});
  return out;
}

StudyResult run_equilibrium_study(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::Equilibrium;
  const LevelSystem& sys = cfg.system;
  const int n = sys.size();
  const RateChoice form = rate_choice(cfg);
  const Populations rho0(cfg.initial);
  const bool pauli_only = sys.V.isZero(0.0);
  const ValidationReport valid = validate_system(sys);

  CsvTable series{"series.csv", {"eps", "distance", "kernel_residual", "block_mass_error", "gibbs_error"}, {}};
  json cells = json::array();
  for (const Scaling& sc : scalings(cfg)) {
    const RateMatrix rate = rate_table(cfg, sc, form);
    const SharpOperator op = sharpen(rate);
    const Populations eq = equilibrium_state(rate, rho0);
    const RealVector yT = evolve_sharp(op, rho0.values(), cfg.equilibrium.T);
    const double distance = (yT - eq.values()).norm();
    const double kernel = apply_sharp(op, eq.values()).cwiseAbs().maxCoeff();

    double mass_err = 0.0;
    const Partition blocks = stable_blocks(rate);
    for (const Block& b : blocks) {
      double m0 = 0.0, m1 = 0.0;
      for (int i : b) {
        m0 += rho0.values()(i);
        m1 += eq.values()(i);
      }
      mass_err = std::max(mass_err, std::abs(m1 - m0));
    }
    const std::string tag = " " + eps_label(sc.eps());
    out.checks.push_back({"convergence" + tag, distance <= cfg.equilibrium.tolerance,
                          "|y(T) - equilibrium| = " + fmt(distance)});
    out.checks.push_back({"kernel" + tag, kernel <= 1e-10 * std::max(1.0, mixed_norm(rate)), "|A_# rho| = " + fmt(kernel)});
    out.checks.push_back({"block mass" + tag, mass_err <= 1e-12, "max block mass error " + fmt(mass_err)});

    // Levels with no rate in or out keep their population.
    double frozen = 0.0;
    for (int i = 0; i < n; ++i)
      if (rate.entries().row(i).isZero(0.0) && rate.entries().col(i).isZero(0.0))
        frozen = std::max(frozen, std::abs(yT(i) - rho0.values()(i)));
    out.checks.push_back({"decoupled levels" + tag, frozen <= 1e-12, "max drift " + fmt(frozen)});

    double gibbs = std::numeric_limits<double>::quiet_NaN();
    if (pauli_only && sys.temperature && valid.valid() && blocks.size() == 1 && n > 1) {
      const RealVector g = thermodynamic_equilibrium(sys.omega, *sys.temperature).values() * rho0.total();
      gibbs = (eq.values() - g).cwiseAbs().maxCoeff();
      out.checks.push_back({"gibbs form" + tag, gibbs <= 1e-12, "max deviation " + fmt(gibbs)});
    }
    series.rows.push_back({sc.eps(), distance, kernel, mass_err, gibbs});
    cells.push_back({{"eps", sc.eps()},
                     {"equilibrium", vec(eq.values())},
                     {"endpoint", vec(yT)},
                     {"distance", distance},
                     {"blocks", blocks}});
  }
  out.summary["rate_form"] = form == RateChoice::Averaged ? "averaged" : "dominant";
  out.summary["T"] = cfg.equilibrium.T;
  out.summary["cells"] = cells;
  out.tables.push_back(std::move(series));
  return out;
}

StudyResult run_dioph_suite(const ExperimentConfig& cfg) {
  StudyResult out;
  out.study = Study::Dioph;
  const LevelSystem& sys = cfg.system;
  const DiophParams& prm = cfg.dioph.params;

  const DiophReport d = check_dioph(sys, cfg.field, prm);
  json res = json::array();
  for (const Witness& w : d.resonances) res.push_back({{"alpha", w.alpha}, {"n", w.n}, {"k", w.k}});
  auto margin = [](double m) { return std::isfinite(m) ? json(m) : json(nullptr); };
  out.summary["dioph"] = {{"holds_a", d.holds_a},          {"holds_b", d.holds_b},
                          {"min_margin_a", margin(d.min_margin_a)}, {"min_margin_b", margin(d.min_margin_b)},
                          {"B_max", d.B_max},              {"scanned", d.scanned},
                          {"resonances", res}};
  out.checks.push_back({"small-divisor condition (a)", d.holds_a, "min weighted margin " + fmt(d.min_margin_a)});
  out.checks.push_back({"small-divisor condition (b)", d.holds_b, "min weighted margin " + fmt(d.min_margin_b)});

  const SpeedReport sp = check_speed(sys, prm);
  out.summary["speed"] = {{"vacuous", sp.vacuous}, {"holds", sp.holds}, {"min_margin", margin(sp.min_margin)}};
  out.checks.push_back({"level speed", sp.holds, sp.vacuous ? "vacuous" : "min margin " + fmt(sp.min_margin)});
  const double c_est = estimate_C_eta(sys, cfg.field, prm.eta, prm.B_max);
  out.summary["C_eta_estimate"] = margin(c_est);

  CsvTable series{"series.csv", {"eps", "triples", "eps_threshold", "size_bound", "postcondition"}, {}};
  json cells = json::array();
  bool bounds_ok = true, empty_ok = true;
  for (const Scaling& sc : scalings(cfg)) {
    const PerturbedReport pr = perturbed_violations(sys, cfg.field, sc, prm);
    bounds_ok = bounds_ok && pr.postcondition_holds;
    if (sc.eps() < pr.eps_threshold && !pr.triples.empty()) empty_ok = false;
    json triples = json::array();
    for (const Witness& w : pr.triples)
      triples.push_back({{"alpha", w.alpha}, {"n", w.n}, {"k", w.k}, {"value", w.value}, {"weighted", w.weighted}});
    series.rows.push_back({sc.eps(), double(pr.triples.size()), pr.eps_threshold, pr.size_bound,
                           pr.postcondition_holds ? 1.0 : 0.0});
    cells.push_back({{"eps", sc.eps()},
                     {"triples", triples},
                     {"eps_threshold", pr.eps_threshold},
                     {"size_bound", pr.size_bound},
                     {"max_delta", pr.max_delta},
                     {"note", pr.note}});
  }
  out.summary["perturbed"] = cells;
  out.tables.push_back(std::move(series));
  out.checks.push_back({"perturbed size bound", bounds_ok, "every returned triple meets the size lower bound"});
  out.checks.push_back({"empty below threshold", empty_ok, "no triples for eps below the scan threshold"});

  if (cfg.dioph.genericity) {
    const GenericitySpec& g = *cfg.dioph.genericity;
    GenericityConfig gc;
    gc.center = g.center;
    gc.radius = g.radius;
    gc.eta = prm.eta;
    gc.omegas = g.omegas.empty() ? vec(sys.omega) : g.omegas;
    gc.B_max = g.B_max;
    gc.n_samples = g.samples;
    gc.c_grid = g.c;
    std::sort(gc.c_grid.begin(), gc.c_grid.end());
    gc.seed = cfg.seed;
    gc.jobs = cfg.jobs;
    const auto rows = genericity_experiment(gc);

    CsvTable gen{"genericity.csv", {"c", "fraction", "violations", "samples"}, {}};
    bool monotone = true;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      gen.rows.push_back({rows[i].c, rows[i].fraction, double(rows[i].violations), double(rows[i].samples)});
      if (i > 0 && rows[i].fraction < rows[i - 1].fraction) monotone = false;
      if (rows[i].c > 0.0) {
        lo = std::min(lo, rows[i].fraction / rows[i].c);
        hi = std::max(hi, rows[i].fraction / rows[i].c);
      }
    }
    out.tables.push_back(std::move(gen));
    const double decades = std::log10(gc.c_grid.back() / gc.c_grid.front());
    const double spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    out.summary["genericity"] = {{"fraction_over_c_min", lo}, {"fraction_over_c_max", hi}, {"decades", decades},
                                 {"monotone", monotone}, {"file", "genericity.csv"}};
    out.checks.push_back({"genericity monotone", monotone, "violation fraction nondecreasing in c"});
    out.checks.push_back({"genericity fraction/c", spread <= g.ratio_band,
                          "max/min of fraction/c = " + fmt(spread) + " over " + fmt(decades) + " decades (band " +
                              fmt(g.ratio_band) + ")"});
  }
  return out;
}

}  // namespace blochrate
