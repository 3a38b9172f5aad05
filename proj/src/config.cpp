#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "blochrate/harness.hpp"

namespace blochrate {

namespace {

const std::map<std::string, Study>& study_names() {
  static const std::map<std::string, Study> names = {
      {"simulate-bloch", Study::SimulateBloch}, {"simulate-rate", Study::SimulateRate},
      {"rates", Study::Rates},                   {"converge", Study::Converge},
      {"average-oracle", Study::AverageOracle}, {"timelayer", Study::Timelayer},
      {"equilibrium", Study::Equilibrium},       {"dioph", Study::Dioph}};
  return names;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  std::ostringstream msg;
  msg << "config";
  if (node.IsDefined() && !node.Mark().is_null()) msg << " line " << node.Mark().line + 1;
  msg << ": " << what;
  throw InvalidArgument(msg.str());
}

double as_double(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) fail(node, what + " must be a number");
  const std::string text = node.Scalar();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(node, what + " must be a number, got '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) fail(node, what + " must be a finite number, got '" + text + "'");
  return v;
}

int as_int(const YAML::Node& node, const std::string& what) {
  const double v = as_double(node, what);
  if (v != std::floor(v) || std::abs(v) > 2e9) fail(node, what + " must be an integer");
  return static_cast<int>(v);
}

std::vector<double> as_list(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail(node, what + " must be a list");
  std::vector<double> out;
  for (const auto& item : node) out.push_back(as_double(item, what));
  return out;
}

double get(const YAML::Node& parent, const char* key, double fallback) {
  const YAML::Node n = parent[key];
  return n ? as_double(n, key) : fallback;
}

int get_int(const YAML::Node& parent, const char* key, int fallback) {
  const YAML::Node n = parent[key];
  return n ? as_int(n, key) : fallback;
}

void check_keys(const YAML::Node& node, const std::string& section, std::initializer_list<const char*> keys) {
  if (!node.IsMap()) fail(node, section + " must be a mapping");
  for (const auto& kv : node) {
    const std::string k = kv.first.as<std::string>();
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) fail(kv.first, "unknown key '" + k + "' in " + section);
  }
}

// 1-based level index from a config entry.
int level(const YAML::Node& node, int n) {
  const int i = as_int(node, "level index");
  if (i < 1 || i > n) fail(node, "level index " + std::to_string(i) + " outside 1.." + std::to_string(n));
  return i - 1;
}

RealMatrix square_table(const YAML::Node& node, int n, const std::string& what) {
  if (node.IsScalar()) {
    RealMatrix m = RealMatrix::Constant(n, n, as_double(node, what));
    m.diagonal().setZero();
    return m;
  }
  if (!node.IsSequence() || static_cast<int>(node.size()) != n) fail(node, what + " must be a scalar or an N×N list");
  RealMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const auto row = as_list(node[i], what);
    if (static_cast<int>(row.size()) != n) fail(node[i], what + " rows must have N entries");
    for (int j = 0; j < n; ++j) m(i, j) = row[j];
  }
  return m;
}

LevelSystem ladder(const YAML::Node& g) {
  check_keys(g, "system.generator", {"kind", "levels", "coupling", "decay", "gamma"});
  const std::string kind = g["kind"] ? g["kind"].as<std::string>() : "";
  if (kind != "ladder") fail(g, "unknown generator kind '" + kind + "'");
  const int n = get_int(g, "levels", 0);
  if (n < 1) fail(g, "generator needs levels >= 1");
  const double coupling = get(g, "coupling", 1.0);
  const double decay = get(g, "decay", 1.0);
  LevelSystem sys;
  sys.omega.resize(n);
  for (int i = 0; i < n; ++i) sys.omega(i) = i;
  sys.delta = RealVector::Zero(n);
  sys.gamma = RealMatrix::Constant(n, n, get(g, "gamma", 1.0));
  sys.gamma.diagonal().setZero();
  sys.W = RealMatrix::Zero(n, n);
  sys.V = ComplexMatrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) sys.V(i, i + 1) = sys.V(i + 1, i) = coupling * std::pow(decay, i);
  return sys;
}

LevelSystem parse_system(const YAML::Node& s) {
  check_keys(s, "system", {"omega", "delta", "gamma", "V", "W", "W_thermal", "temperature", "generator"});
  LevelSystem sys;
  if (s["generator"]) {
    sys = ladder(s["generator"]);
  } else {
    if (!s["omega"]) fail(s, "system.omega is required");
    const auto omega = as_list(s["omega"], "omega");
    const int n = static_cast<int>(omega.size());
    if (n < 1) fail(s["omega"], "omega must not be empty");
    sys.omega = Eigen::Map<const RealVector>(omega.data(), n);
    sys.delta = RealVector::Zero(n);
    sys.gamma = RealMatrix::Zero(n, n);
    sys.W = RealMatrix::Zero(n, n);
    sys.V = ComplexMatrix::Zero(n, n);
  }
  const int n = sys.size();
  if (s["delta"]) {
    const auto d = as_list(s["delta"], "delta");
    if (static_cast<int>(d.size()) != n) fail(s["delta"], "delta must have N entries");
    sys.delta = Eigen::Map<const RealVector>(d.data(), n);
  }
  if (s["gamma"]) sys.gamma = square_table(s["gamma"], n, "gamma");
  if (s["V"]) {
    if (!s["V"].IsSequence()) fail(s["V"], "V must be a list of [n, m, re] or [n, m, re, im]");
    for (const auto& e : s["V"]) {
      if (!e.IsSequence() || e.size() < 3 || e.size() > 4) fail(e, "V entries are [n, m, re] or [n, m, re, im]");
      const int a = level(e[0], n), b = level(e[1], n);
      if (a == b) fail(e, "V entries must be off-diagonal");
      const Complex v(as_double(e[2], "V"), e.size() == 4 ? as_double(e[3], "V") : 0.0);
      sys.V(a, b) = v;
      sys.V(b, a) = std::conj(v);
    }
  }
  if (s["temperature"]) sys.temperature = as_double(s["temperature"], "temperature");
  if (s["W"] && s["W_thermal"]) fail(s, "give either W or W_thermal, not both");
  if (s["W"]) {
    if (!s["W"].IsSequence()) fail(s["W"], "W must be a list of [n, m, value]");
    for (const auto& e : s["W"]) {
      if (!e.IsSequence() || e.size() != 3) fail(e, "W entries are [n, m, value]");
      const int a = level(e[0], n), b = level(e[1], n);
      if (a == b) fail(e, "W entries must be off-diagonal");
      sys.W(a, b) = as_double(e[2], "W");
    }
  }
  if (s["W_thermal"]) {
    if (!sys.temperature) fail(s["W_thermal"], "W_thermal needs a temperature");
    const double scale = as_double(s["W_thermal"], "W_thermal");
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        const double up = sys.omega(b) - sys.omega(a);
        sys.W(a, b) = up > 0.0 ? scale * std::exp(-up / *sys.temperature) : scale;
      }
  }
  return sys;
}

QuasiPeriodicField parse_field(const YAML::Node& f) {
  check_keys(f, "field", {"freq", "modes"});
  if (!f["freq"]) fail(f, "field.freq is required");
  const auto freq = as_list(f["freq"], "freq");
  std::vector<FourierMode> modes;
  if (f["modes"]) {
    if (!f["modes"].IsSequence()) fail(f["modes"], "field.modes must be a list");
    for (const auto& m : f["modes"]) {
      check_keys(m, "field mode", {"alpha", "re", "im"});
      if (!m["alpha"]) fail(m, "mode needs alpha");
      FourierMode mode;
      for (const auto& a : m["alpha"]) mode.alpha.push_back(as_int(a, "alpha"));
      if (mode.alpha.size() != freq.size()) fail(m["alpha"], "alpha length must equal the number of frequencies");
      mode.coeff = Complex(get(m, "re", 0.0), get(m, "im", 0.0));
      modes.push_back(std::move(mode));
    }
  }
  return QuasiPeriodicField(freq, std::move(modes));
}

}  // namespace

std::string to_string(Study s) {
  for (const auto& [name, value] : study_names())
    if (value == s) return name;
  return "unknown";
}

Study parse_study(const std::string& name) {
  const auto it = study_names().find(name);
  if (it == study_names().end()) throw InvalidArgument("unknown study '" + name + "'");
  return it->second;
}

std::string to_string(Channel c) {
  switch (c) {
    case Channel::Coherence: return "coherence";
    case Channel::DvsRhod1: return "d_vs_rhod1";
    case Channel::DvsRhod2: return "d_vs_rhod2";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  system.check_shapes();
  if (eps.empty()) throw InvalidArgument("scaling.eps must not be empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    Scaling(eps[i], mu, p);
    if (i > 0 && !(eps[i] < eps[i - 1])) throw InvalidArgument("scaling.eps must be strictly decreasing");
  }
  if (initial.size() != system.size()) throw InvalidArgument("initial must have one entry per level");
  Populations check(initial);
  solver.validate();
  if (jobs < 1) throw InvalidArgument("jobs must be positive");
  if (converge.tolerance <= 0.0) throw InvalidArgument("converge.tolerance must be positive");
  if (oracle.S.empty() || oracle.panels_per_unit < 1) throw InvalidArgument("average_oracle needs S values and panels");
  for (double s : oracle.S)
    if (!(s > 0.0)) throw InvalidArgument("average_oracle.S entries must be positive");
  if (!(timelayer.horizon > 0.0) || timelayer.snapshots < 10) throw InvalidArgument("invalid timelayer settings");
  if (!(rate.T > 0.0) || rate.snapshots < 1) throw InvalidArgument("invalid rate settings");
  if (!(equilibrium.T > 0.0) || !(equilibrium.tolerance > 0.0)) throw InvalidArgument("invalid equilibrium settings");
  dioph.params.validate();
  if (dioph.genericity) {
    const auto& g = *dioph.genericity;
    if (g.center.empty() || !(g.radius > 0.0) || g.c.empty() || g.samples < 100)
      throw InvalidArgument("invalid genericity settings");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  check_keys(root, "top level",
             {"study", "seed", "jobs", "out", "system", "field", "scaling", "initial", "solver", "converge",
              "average_oracle", "timelayer", "rate", "equilibrium", "dioph"});

  ExperimentConfig cfg;
  if (root["study"]) cfg.study = parse_study(root["study"].as<std::string>());
  if (root["seed"]) {
    const std::string s = root["seed"].Scalar();
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      fail(root["seed"], "seed must be an unsigned integer");
    }
  }
  cfg.jobs = get_int(root, "jobs", 1);
  if (root["out"]) cfg.out_dir = root["out"].as<std::string>();

  if (!root["system"]) throw InvalidArgument("config: system section is required");
  cfg.system = parse_system(root["system"]);
  if (root["field"]) cfg.field = parse_field(root["field"]);

  if (const auto sc = root["scaling"]) {
    check_keys(sc, "scaling", {"eps", "mu", "p"});
    if (sc["eps"]) cfg.eps = sc["eps"].IsSequence() ? as_list(sc["eps"], "eps") : std::vector<double>{as_double(sc["eps"], "eps")};
    cfg.mu = get(sc, "mu", 0.0);
    cfg.p = get(sc, "p", 1.0);
  }
  if (cfg.eps.empty()) cfg.eps = {0.1};

  const int n = cfg.system.size();
  if (root["initial"]) {
    const auto v = as_list(root["initial"], "initial");
    if (static_cast<int>(v.size()) != n) fail(root["initial"], "initial must have N entries");
    cfg.initial = Eigen::Map<const RealVector>(v.data(), n);
  } else {
    cfg.initial = RealVector::Zero(n);
    cfg.initial(0) = 1.0;
  }

  if (const auto s = root["solver"]) {
    check_keys(s, "solver", {"T", "h0", "snapshots", "stride"});
    cfg.solver.T_final = get(s, "T", cfg.solver.T_final);
    cfg.solver.h0 = get(s, "h0", cfg.solver.h0);
    cfg.solver.target_snapshots = get_int(s, "snapshots", cfg.solver.target_snapshots);
    cfg.solver.snapshot_stride = get_int(s, "stride", cfg.solver.snapshot_stride);
  }
  if (const auto c = root["converge"]) {
    check_keys(c, "converge", {"channel", "tolerance"});
    if (c["channel"]) {
      const std::string ch = c["channel"].as<std::string>();
      if (ch == "coherence") cfg.converge.channel = Channel::Coherence;
      else if (ch == "d_vs_rhod1") cfg.converge.channel = Channel::DvsRhod1;
      else if (ch == "d_vs_rhod2") cfg.converge.channel = Channel::DvsRhod2;
      else fail(c["channel"], "unknown channel '" + ch + "'");
    }
    cfg.converge.tolerance = get(c, "tolerance", cfg.converge.channel == Channel::Coherence ? 0.15 : 0.2);
  }
  if (const auto o = root["average_oracle"]) {
    check_keys(o, "average_oracle", {"S", "panels_per_unit", "match_tolerance", "slope_tolerance"});
    if (o["S"]) cfg.oracle.S = as_list(o["S"], "S");
    cfg.oracle.panels_per_unit = get_int(o, "panels_per_unit", cfg.oracle.panels_per_unit);
    cfg.oracle.match_tolerance = get(o, "match_tolerance", cfg.oracle.match_tolerance);
    cfg.oracle.slope_tolerance = get(o, "slope_tolerance", cfg.oracle.slope_tolerance);
  }
  if (const auto t = root["timelayer"]) {
    check_keys(t, "timelayer", {"horizon", "snapshots", "tolerance"});
    cfg.timelayer.horizon = get(t, "horizon", cfg.timelayer.horizon);
    cfg.timelayer.snapshots = get_int(t, "snapshots", cfg.timelayer.snapshots);
    cfg.timelayer.tolerance = get(t, "tolerance", cfg.timelayer.tolerance);
  }
  if (const auto r = root["rate"]) {
    check_keys(r, "rate", {"form", "T", "snapshots"});
    if (r["form"]) {
      const std::string f = r["form"].as<std::string>();
      if (f == "averaged") cfg.rate.form = RateChoice::Averaged;
      else if (f == "dominant") cfg.rate.form = RateChoice::Dominant;
      else fail(r["form"], "rate.form must be averaged or dominant");
    }
    cfg.rate.T = get(r, "T", cfg.rate.T);
    cfg.rate.snapshots = get_int(r, "snapshots", cfg.rate.snapshots);
  }
  if (const auto e = root["equilibrium"]) {
    check_keys(e, "equilibrium", {"T", "tolerance"});
    cfg.equilibrium.T = get(e, "T", cfg.equilibrium.T);
    cfg.equilibrium.tolerance = get(e, "tolerance", cfg.equilibrium.tolerance);
  }
  if (const auto d = root["dioph"]) {
    check_keys(d, "dioph", {"eta", "C_eta", "N_eta", "K", "B_max", "genericity"});
    auto& prm = cfg.dioph.params;
    prm.eta = get(d, "eta", prm.eta);
    prm.C_eta = get(d, "C_eta", prm.C_eta);
    prm.N_eta = get(d, "N_eta", prm.N_eta);
    prm.K = get(d, "K", prm.K);
    prm.B_max = get_int(d, "B_max", prm.B_max);
    if (const auto g = d["genericity"]) {
      check_keys(g, "dioph.genericity", {"center", "radius", "omegas", "B_max", "samples", "c", "ratio_band"});
      GenericitySpec spec;
      if (!g["center"]) fail(g, "genericity.center is required");
      spec.center = as_list(g["center"], "center");
      spec.radius = get(g, "radius", spec.radius);
      if (g["omegas"]) spec.omegas = as_list(g["omegas"], "omegas");
      spec.B_max = get_int(g, "B_max", spec.B_max);
      spec.samples = get_int(g, "samples", spec.samples);
      if (!g["c"]) fail(g, "genericity.c is required");
      spec.c = as_list(g["c"], "c");
      spec.ratio_band = get(g, "ratio_band", spec.ratio_band);
      cfg.dioph.genericity = spec;
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  const LevelSystem& s = cfg.system;
  const int n = s.size();
  json sys;
  sys["omega"] = std::vector<double>(s.omega.data(), s.omega.data() + n);
  sys["delta"] = std::vector<double>(s.delta.data(), s.delta.data() + n);
  json gamma = json::array(), w = json::array(), v = json::array();
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) row[j] = s.gamma(i, j);
    gamma.push_back(row);
    for (int j = 0; j < n; ++j) {
      if (s.W(i, j) != 0.0) w.push_back({i + 1, j + 1, s.W(i, j)});
      if (j > i && s.V(i, j) != Complex(0.0)) v.push_back({i + 1, j + 1, s.V(i, j).real(), s.V(i, j).imag()});
    }
  }
  sys["gamma"] = gamma;
  sys["W"] = w;
  sys["V"] = v;
  sys["temperature"] = s.temperature ? json(*s.temperature) : json(nullptr);

  json modes = json::array();
  for (const auto& m : cfg.field.modes()) modes.push_back({{"alpha", m.alpha}, {"re", m.coeff.real()}, {"im", m.coeff.imag()}});

  json out;
  out["study"] = to_string(cfg.study);
  out["seed"] = cfg.seed;
  out["system"] = sys;
  out["field"] = {{"freq", cfg.field.frequencies()}, {"modes", modes}};
  out["scaling"] = {{"eps", cfg.eps}, {"mu", cfg.mu}, {"p", cfg.p}};
  out["initial"] = std::vector<double>(cfg.initial.data(), cfg.initial.data() + n);
  out["solver"] = {{"T", cfg.solver.T_final},
                   {"h0", cfg.solver.h0},
                   {"snapshots", cfg.solver.target_snapshots},
                   {"stride", cfg.solver.snapshot_stride}};
  out["converge"] = {{"channel", to_string(cfg.converge.channel)}, {"tolerance", cfg.converge.tolerance}};
  out["average_oracle"] = {{"S", cfg.oracle.S},
                           {"panels_per_unit", cfg.oracle.panels_per_unit},
                           {"match_tolerance", cfg.oracle.match_tolerance},
                           {"slope_tolerance", cfg.oracle.slope_tolerance}};
  out["timelayer"] = {{"horizon", cfg.timelayer.horizon},
                      {"snapshots", cfg.timelayer.snapshots},
                      {"tolerance", cfg.timelayer.tolerance}};
  out["rate"] = {{"form", cfg.rate.form ? (*cfg.rate.form == RateChoice::Averaged ? "averaged" : "dominant") : "auto"},
                 {"T", cfg.rate.T},
                 {"snapshots", cfg.rate.snapshots}};
  out["equilibrium"] = {{"T", cfg.equilibrium.T}, {"tolerance", cfg.equilibrium.tolerance}};
  const auto& prm = cfg.dioph.params;
  json dioph = {{"eta", prm.eta}, {"C_eta", prm.C_eta}, {"N_eta", prm.N_eta}, {"K", prm.K}, {"B_max", prm.B_max}};
  if (cfg.dioph.genericity) {
    const auto& g = *cfg.dioph.genericity;
    dioph["genericity"] = {{"center", g.center}, {"radius", g.radius}, {"omegas", g.omegas},
                           {"B_max", g.B_max},   {"samples", g.samples}, {"c", g.c},
                           {"ratio_band", g.ratio_band}};
  }
  out["dioph"] = dioph;
  return out;
}

}  // namespace blochrate
