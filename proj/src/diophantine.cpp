#include "blochrate/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blochrate/parallel.hpp"
#include "blochrate/random.hpp"
#include "blochrate/rates.hpp"

namespace blochrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void enumerate(int r, int remaining, MultiIndex& current, std::vector<MultiIndex>& out) {
  const int pos = static_cast<int>(current.size());
  if (pos == r) {
    out.push_back(current);
    return;
  }
  for (int v = -remaining; v <= remaining; ++v) {
    current.push_back(v);
    enumerate(r, remaining - std::abs(v), current, out);
    current.pop_back();
  }
}

double level_weight(int n, double eta) { return std::pow(1.0 + n, 1.0 + eta); }

}  // namespace

void DiophParams::validate() const {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  if (!(C_eta > 0.0)) throw InvalidArgument("C_eta must be positive");
  if (!(N_eta > 0.0)) throw InvalidArgument("N_eta must be positive");
  if (!(K > 0.0)) throw InvalidArgument("K must be positive");
  if (B_max < 0) throw InvalidArgument("B_max must be nonnegative");
}

double dioph_weight(const MultiIndex& alpha, int r, int n, int k, double eta) {
  return std::pow(1.0 + l1_norm(alpha), r - 1 + eta) * level_weight(n, eta) * level_weight(k, eta);
}

std::vector<MultiIndex> enumerate_multi_indices(int r, int radius, bool include_zero) {
  if (r < 1) throw InvalidArgument("multi-index dimension must be positive");
  if (radius < 0) throw InvalidArgument("radius must be nonnegative");
  std::vector<MultiIndex> out;
  MultiIndex current;
  enumerate(r, radius, current, out);
  if (!include_zero)
    out.erase(std::remove_if(out.begin(), out.end(), [](const MultiIndex& a) { return l1_norm(a) == 0; }),
              out.end());
  std::sort(out.begin(), out.end());
  return out;
}

DiophReport check_dioph(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const DiophParams& params) {
  params.validate();
  sys.check_shapes();
  const int n = sys.size();
  const int r = field.rank();
  const double tol = default_resonance_tolerance(sys, field);
  DiophReport rep;
  rep.B_max = params.B_max;
  rep.min_margin_a = kInf;
  rep.min_margin_b = kInf;

  for (const auto& alpha : enumerate_multi_indices(r, params.B_max, false)) {
    const double phase = field.phase(alpha);
    const double alpha_w = std::pow(1.0 + l1_norm(alpha), r - 1 + params.eta);
    if (std::abs(phase) > tol) {
      const double mb = std::abs(phase) * alpha_w;
      if (mb < rep.min_margin_b) {
        rep.min_margin_b = mb;
        rep.worst_b = alpha;
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        ++rep.scanned;
        const double x = phase + sys.omega_diff(i, j);
        if (std::abs(x) <= tol) {
          if (i != j) rep.resonances.push_back({alpha, i + 1, j + 1, x, 0.0});
          continue;
        }
        const double m = std::abs(x) * alpha_w * level_weight(i + 1, params.eta) *
                         level_weight(j + 1, params.eta);
        if (m < rep.min_margin_a) {
          rep.min_margin_a = m;
          rep.worst_a = {alpha, i + 1, j + 1, x, m};
        }
      }
  }
  rep.holds_a = rep.min_margin_a >= params.C_eta;
  rep.holds_b = rep.min_margin_b >= params.C_eta;
  return rep;
}

SpeedReport check_speed(const LevelSystem& sys, const DiophParams& params) {
  params.validate();
  sys.check_shapes();
  SpeedReport rep;
  rep.min_margin = kInf;
  const double tol = 1e-9 * (1.0 + sys.omega.maxCoeff() - sys.omega.minCoeff());
  for (int i = 0; i < sys.size(); ++i)
    for (int j = 0; j < sys.size(); ++j) {
      if (i == j) continue;
      const double w = sys.omega_diff(i, j);
      if (std::abs(w) <= tol) continue;
      rep.vacuous = false;
      const double m = std::abs(w) * level_weight(i + 1, params.eta) * level_weight(j + 1, params.eta);
      if (m < rep.min_margin) {
        rep.min_margin = m;
        rep.n = i + 1;
        rep.k = j + 1;
      }
    }
  rep.holds = rep.vacuous || rep.min_margin >= params.C_eta;
  return rep;
}

double estimate_C_eta(const LevelSystem& sys, const QuasiPeriodicField& field, double eta, int B_max) {
  DiophParams params;
  params.eta = eta;
  params.B_max = B_max;
  const DiophReport d = check_dioph(sys, field, params);
  const SpeedReport s = check_speed(sys, params);
  return std::min({d.min_margin_a, d.min_margin_b, s.min_margin});
}

PerturbedReport perturbed_violations(const LevelSystem& sys, const QuasiPeriodicField& field,
                                     const Scaling& scaling, const DiophParams& params) {
  params.validate();
  sys.check_shapes();
  PerturbedReport rep;
  const int n = sys.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rep.max_delta = std::max(rep.max_delta, std::abs(sys.delta_diff(i, j)));
  if (rep.max_delta == 0.0) {
    rep.note = "max|delta| = 0: lemma vacuous";
    rep.eps_threshold = kInf;
    return rep;
  }
  const int r = field.rank();
  const double ep = std::pow(scaling.eps(), scaling.p());
  const double tol = default_resonance_tolerance(sys, field);
  const double half = 0.5 * params.C_eta;
  rep.size_bound = params.C_eta / (std::pow(scaling.eps(), scaling.p()) * 2.0 * rep.max_delta);

  double thr_p = kInf;  // threshold on ε^p
  for (const auto& beta : enumerate_multi_indices(r, params.B_max, true)) {
    const double phase = field.phase(beta);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double x = phase + sys.omega_diff(i, j);
        if (std::abs(x) <= tol) continue;  // exact resonance
        const double w = dioph_weight(beta, r, i + 1, j + 1, params.eta);
        const double d = sys.delta_diff(i, j);
        if (d != 0.0) thr_p = std::min(thr_p, (std::abs(x) - half / w) / std::abs(d));
        const double y = x + ep * d;
        if (std::abs(y) <= half / w) {
          rep.triples.push_back({beta, i + 1, j + 1, y, std::abs(y) * w});
          if (!(w >= rep.size_bound)) rep.postcondition_holds = false;
        }
      }
  }
  rep.eps_threshold = thr_p > 0.0 ? std::pow(thr_p, 1.0 / scaling.p()) : 0.0;
  if (!rep.postcondition_holds)
    rep.note = "C_eta exceeds the scanned margin: size bound fails";
  return rep;
}

double min_weighted_margin(const std::vector<double>& freq, const std::vector<double>& omegas,
                           const std::vector<MultiIndex>& alphas, double eta) {
  const int r = static_cast<int>(freq.size());
  const int n = static_cast<int>(omegas.size());
  std::vector<double> lw(n);
  for (int i = 0; i < n; ++i) lw[i] = level_weight(i + 1, eta);
  double best = kInf;
  for (const auto& alpha : alphas) {
    double phase = 0.0;
    for (int j = 0; j < r; ++j) phase += alpha[j] * freq[j];
    const double aw = std::pow(1.0 + l1_norm(alpha), r - 1 + eta);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        best = std::min(best, std::abs(phase + omegas[i] - omegas[k]) * aw * lw[i] * lw[k]);
  }
  return best;
}

std::vector<GenericityRow> genericity_experiment(const GenericityConfig& cfg) {
  const int r = static_cast<int>(cfg.center.size());
  if (r < 1 || !(cfg.radius > 0.0)) throw InvalidArgument("invalid sampling ball");
  if (cfg.c_grid.empty()) throw InvalidArgument("empty c grid");
  if (cfg.n_samples < 100) throw InvalidArgument("need at least 100 samples");
  if (cfg.omegas.empty()) throw InvalidArgument("need at least one level energy");
  if (!(cfg.eta > 0.0)) throw InvalidArgument("eta must be positive");
  for (double c : cfg.c_grid)
    if (!(c >= 0.0)) throw InvalidArgument("c grid entries must be nonnegative");

  const auto alphas = enumerate_multi_indices(r, cfg.B_max, false);
  std::vector<double> margins(static_cast<std::size_t>(cfg.n_samples));
  parallel_for(margins.size(), cfg.jobs, [&](std::size_t s) {
    auto rng = substream(cfg.seed, s);
    std::vector<double> x(r);
    for (;;) {
      double norm2 = 0.0;
      for (int j = 0; j < r; ++j) {
        x[j] = uniform(rng, -1.0, 1.0);
        norm2 += x[j] * x[j];
      }
      if (norm2 <= 1.0) break;
    }
    for (int j = 0; j < r; ++j) x[j] = cfg.center[j] + cfg.radius * x[j];
    margins[s] = min_weighted_margin(x, cfg.omegas, alphas, cfg.eta);
  });

  std::vector<GenericityRow> rows;
  for (double c : cfg.c_grid) {
    GenericityRow row;
    row.c = c;
    row.samples = cfg.n_samples;
    row.violations = std::count_if(margins.begin(), margins.end(), [c](double m) { return m < c; });
    row.fraction = static_cast<double>(row.violations) / static_cast<double>(row.samples);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace blochrate
