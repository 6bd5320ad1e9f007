#include "k41/io.hpp"

#include "k41/error.hpp"
#include "k41/spectral.hpp"
#include "k41/stokes.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

#ifndef K41_VERSION
#define K41_VERSION "0.0.0"
#endif

namespace k41 {

namespace fs = std::filesystem;

Mode parse_mode(const std::string& name) {
  if (name == "simulate") return Mode::simulate;
  if (name == "stokes") return Mode::stokes;
  if (name == "diagnose") return Mode::diagnose;
  if (name == "sweep") return Mode::sweep;
  if (name == "conditions") return Mode::conditions;
  if (name == "scale-verify") return Mode::scale_verify;
  if (name == "eddy") return Mode::eddy;
  throw ConfigError("mode", "unknown mode '" + name + "'");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::stokes: return "stokes";
    case Mode::diagnose: return "diagnose";
    case Mode::sweep: return "sweep";
    case Mode::conditions: return "conditions";
    case Mode::scale_verify: return "scale-verify";
    case Mode::eddy: return "eddy";
  }
  return "simulate";
}

namespace {

/// Typed reads from one JSON object; leftover keys are rejected by `finish`.
class Section {
 public:
  Section(const Json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "config" : prefix_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void read(const std::string& key, double& x) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      x = v->get<double>();
    }
  }

  void read(const std::string& key, int& x) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      x = v->get<int>();
    }
  }

  void read(const std::string& key, std::int64_t& x) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      x = v->get<std::int64_t>();
    }
  }

  void read(const std::string& key, std::uint64_t& x) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(path(key), "expected a nonnegative integer");
      x = v->get<std::uint64_t>();
    }
  }

  void read(const std::string& key, std::uint32_t& x) {
    std::uint64_t wide = x;
    read(key, wide);
    if (wide > 0xffffffffULL) throw ConfigError(path(key), "out of range");
    x = static_cast<std::uint32_t>(wide);
  }

  void read(const std::string& key, bool& x) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      x = v->get<bool>();
    }
  }

  void read(const std::string& key, std::string& x) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      x = v->get<std::string>();
    }
  }

  void read(const std::string& key, std::vector<double>& x) {
    if (const auto* v = find(key)) {
      if (!v->is_array()) throw ConfigError(path(key), "expected an array of numbers");
      x.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(path(key), "expected an array of numbers");
        x.push_back(e.get<double>());
      }
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const std::string& key, Enum& x, Parse parse) {
    std::string name;
    read(key, name);
    if (!has(key)) return;
    try {
      x = parse(name);
    } catch (const ConfigError& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path(item.key()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

const Json empty_object = Json::object();

const Json& child(Section& s, const std::string& key) {
  const auto* v = s.find(key);
  return v ? *v : empty_object;
}

InitialField parse_initial(const std::string& name) {
  if (name == "zero") return InitialField::zero;
  if (name == "random") return InitialField::random;
  throw ConfigError("initial", "expected zero or random");
}

std::string to_string(InitialField f) { return f == InitialField::zero ? "zero" : "random"; }

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

void validate_config(const ExperimentConfig& c) {
  try {
    validate(c.simulation);
  } catch (const ConfigError& e) {
    throw ConfigError("simulation." + e.key(), std::string(e.what()).substr(e.key().size() + 2));
  }
  require(c.members >= 1, "members", "must be at least 1");
  require(!c.out.empty(), "out", "must not be empty");
  const auto& d = c.diagnostics;
  require(d.r_points >= 2, "diagnostics.r_points", "must be at least 2");
  require(d.c0 > 0 && std::isfinite(d.c0), "diagnostics.c0", "must be positive");
  require(d.r0_scale > 0 && std::isfinite(d.r0_scale), "diagnostics.r0_scale", "must be positive");
  require(std::isfinite(d.r0_exponent), "diagnostics.r0_exponent", "must be finite");
  if (c.mode == Mode::diagnose) require(!d.input.empty(), "diagnostics.input", "diagnose needs a checkpoint path");
  require(!c.sweep_nu.empty(), "sweep.nu", "must list at least one viscosity");
  for (double nu : c.sweep_nu) require(nu > 0 && std::isfinite(nu), "sweep.nu", "viscosities must be positive");
  const auto& s = c.scaling;
  require(s.lambda > 0 && std::isfinite(s.lambda), "scaling.lambda", "must be positive");
  require(std::isfinite(s.beta), "scaling.beta", "must be finite");
  require(s.steps >= 1, "scaling.steps", "must be at least 1");
  require(s.initial_scale >= 0, "scaling.initial_scale", "must be nonnegative");
  require(s.threshold > 0, "scaling.threshold", "must be positive");
  const auto& e = c.eddy;
  require(!e.eta.empty(), "eddy.eta", "must list at least one cutoff");
  require(!e.orders.empty(), "eddy.orders", "must list at least one order");
  require(e.j_samples >= 1, "eddy.j_samples", "must be positive");
  for (double eta : e.eta) {
    EddyConfig ec;
    ec.eta = eta;
    ec.samples = e.samples;
    ec.steps = e.steps;
    ec.r_max = e.r_max;
    try {
      validate(ec);
    } catch (const ConfigError& err) {
      throw ConfigError("eddy." + err.key(), std::string(err.what()).substr(err.key().size() + 2));
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  Section top(j, "");
  top.read_enum("mode", c.mode, parse_mode);
  top.read("seed", c.seed);
  top.read("out", c.out);
  top.read("members", c.members);
  top.read("checkpoint", c.checkpoint);

  Section sim(child(top, "simulation"), "simulation");
  auto& s = c.simulation;
  if (c.mode == Mode::scale_verify) s.stepper = Stepper::euler_maruyama;
  sim.read("d", s.d);
  sim.read("L", s.L);
  sim.read("n", s.n);
  sim.read("nu", s.nu);
  sim.read("amp", s.amp);
  sim.read("forcing_kf", s.forcing_kf);
  sim.read("forcing_intensity", s.forcing_intensity);
  sim.read("dt", s.dt);
  sim.read("t_burn", s.t_burn);
  sim.read("t_avg", s.t_avg);
  sim.read("trajectory", s.trajectory);
  sim.read_enum("stepper", s.stepper, parse_stepper);
  sim.read_enum("nonlinearity", s.nonlinearity, parse_nonlinearity);
  sim.read("linear", s.linear);
  sim.read("batches", s.batches);
  sim.read("sample_every", s.sample_every);
  sim.read("stretch_every", s.stretch_every);
  sim.read("stretch_l2_every", s.stretch_l2_every);
  sim.finish();
  s.seed = c.seed;

  Section diag(child(top, "diagnostics"), "diagnostics");
  diag.read("r_points", c.diagnostics.r_points);
  diag.read("c0", c.diagnostics.c0);
  diag.read("r0_scale", c.diagnostics.r0_scale);
  diag.read("r0_exponent", c.diagnostics.r0_exponent);
  diag.read("input", c.diagnostics.input);
  diag.finish();

  Section sweep(child(top, "sweep"), "sweep");
  sweep.read("nu", c.sweep_nu);
  sweep.finish();

  Section scale(child(top, "scaling"), "scaling");
  scale.read("lambda", c.scaling.lambda);
  scale.read("beta", c.scaling.beta);
  scale.read("steps", c.scaling.steps);
  scale.read_enum("initial", c.scaling.initial, parse_initial);
  scale.read("initial_scale", c.scaling.initial_scale);
  scale.read("threshold", c.scaling.threshold);
  scale.finish();

  Section eddy(child(top, "eddy"), "eddy");
  eddy.read("eta", c.eddy.eta);
  if (const auto* orders = eddy.find("orders")) {
    if (!orders->is_array()) throw ConfigError("eddy.orders", "expected an array of names");
    c.eddy.orders.clear();
    for (const auto& o : *orders) {
      if (!o.is_string()) throw ConfigError("eddy.orders", "expected an array of names");
      try {
        c.eddy.orders.push_back(parse_eddy_order(o.get<std::string>()));
      } catch (const ConfigError& e) {
        throw ConfigError("eddy.orders", e.what());
      }
    }
  }
  eddy.read("samples", c.eddy.samples);
  eddy.read("j_samples", c.eddy.j_samples);
  eddy.read("steps", c.eddy.steps);
  eddy.read("r_max", c.eddy.r_max);
  eddy.finish();

  top.finish();
  validate_config(c);
  return c;
}

ExperimentConfig config_from_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::string& path) { return config_from_text(read_text(path)); }

Json config_to_json(const ExperimentConfig& c) {
  const auto& s = c.simulation;
  Json j;
  j["mode"] = to_string(c.mode);
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["members"] = c.members;
  j["checkpoint"] = c.checkpoint;
  j["simulation"] = {{"d", s.d},
                     {"L", s.L},
                     {"n", s.n},
                     {"nu", s.nu},
                     {"amp", s.amp},
                     {"forcing_kf", s.forcing_kf},
                     {"forcing_intensity", s.forcing_intensity},
                     {"dt", s.dt},
                     {"t_burn", s.t_burn},
                     {"t_avg", s.t_avg},
                     {"trajectory", s.trajectory},
                     {"stepper", to_string(s.stepper)},
                     {"nonlinearity", to_string(s.nonlinearity)},
                     {"linear", s.linear},
                     {"batches", s.batches},
                     {"sample_every", s.sample_every},
                     {"stretch_every", s.stretch_every},
                     {"stretch_l2_every", s.stretch_l2_every}};
  const auto& d = c.diagnostics;
  j["diagnostics"] = {{"r_points", d.r_points},
                      {"c0", d.c0},
                      {"r0_scale", d.r0_scale},
                      {"r0_exponent", d.r0_exponent},
                      {"input", d.input}};
  j["sweep"] = {{"nu", c.sweep_nu}};
  const auto& sc = c.scaling;
  j["scaling"] = {{"lambda", sc.lambda},
                  {"beta", sc.beta},
                  {"steps", sc.steps},
                  {"initial", to_string(sc.initial)},
                  {"initial_scale", sc.initial_scale},
                  {"threshold", sc.threshold}};
  Json orders = Json::array();
  for (auto o : c.eddy.orders) orders.push_back(to_string(o));
  j["eddy"] = {{"eta", c.eddy.eta},
               {"orders", orders},
               {"samples", c.eddy.samples},
               {"j_samples", c.eddy.j_samples},
               {"steps", c.eddy.steps},
               {"r_max", c.eddy.r_max}};
  return j;
}

Json experiment_json(const ExperimentConfig& c) {
  Json j = config_to_json(c);
  j.erase("out");
  return j;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string library_version() { return K41_VERSION; }

Provenance provenance(const ExperimentConfig& c) {
  return {fnv1a_hex(experiment_json(c).dump()), c.seed, library_version()};
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

double get_f64(const std::string& in, std::size_t pos) { return std::bit_cast<double>(get_le(in, pos, 8)); }

using Kind = FormatError::Kind;

}  // namespace

std::string encode_checkpoint(const Field& u) {
  const auto& lat = u.lattice();
  const int d = lat.dim();
  std::string out;
  out.reserve(checkpoint_header_bytes + static_cast<std::size_t>(lat.half_size()) * 20 * static_cast<std::size_t>(d));
  out += "K41F";
  put_u32(out, checkpoint_version);
  put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(lat.truncation()));
  put_f64(out, lat.length());
  put_u64(out, static_cast<std::uint64_t>(lat.half_size()));
  for (Index h = 0; h < lat.half_size(); ++h) {
    for (int a = 0; a < d; ++a) put_u32(out, static_cast<std::uint32_t>(lat.half_modes()(a, h)));
    for (int a = 0; a < d; ++a) {
      put_f64(out, u.coeffs()(a, h).real());
      put_f64(out, u.coeffs()(a, h).imag());
    }
  }
  return out;
}

Field decode_checkpoint(const std::string& bytes, double tol) {
  if (bytes.size() < 4) throw FormatError(Kind::truncated, "checkpoint shorter than its magic");
  if (bytes.compare(0, 4, "K41F") != 0) throw FormatError(Kind::magic, "not a K41F checkpoint");
  if (bytes.size() < checkpoint_header_bytes) throw FormatError(Kind::truncated, "checkpoint header is truncated");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != checkpoint_version) {
    throw FormatError(Kind::version, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto d = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
  const auto n = static_cast<std::uint32_t>(get_le(bytes, 12, 4));
  const double L = get_f64(bytes, 16);
  const std::uint64_t count = get_le(bytes, 24, 8);
  if (d != 2 && d != 3) throw FormatError(Kind::invariant, "dimension must be 2 or 3");
  if (n < 1 || n > (d == 2 ? 4096u : 512u)) throw FormatError(Kind::invariant, "truncation out of range");
  if (!(L > 0) || !std::isfinite(L)) throw FormatError(Kind::invariant, "box length must be positive");
  const std::uint64_t record = 20ULL * d;
  if (count > (bytes.size() - checkpoint_header_bytes) / record) {
    throw FormatError(Kind::truncated, "checkpoint body is truncated");
  }
  if (bytes.size() != checkpoint_header_bytes + count * record) {
    throw FormatError(Kind::invariant, "trailing bytes after the last mode");
  }
  auto lat = build_lattice(static_cast<int>(d), L, static_cast<int>(n));
  if (count != static_cast<std::uint64_t>(lat->half_size())) {
    throw FormatError(Kind::invariant, "mode count does not match the lattice");
  }
  Field u(lat);
  std::size_t pos = checkpoint_header_bytes;
  for (Index h = 0; h < lat->half_size(); ++h) {
    for (std::uint32_t a = 0; a < d; ++a, pos += 4) {
      const auto m = static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(bytes, pos, 4)));
      if (m != lat->half_modes()(static_cast<Index>(a), h)) {
        throw FormatError(Kind::invariant, "mode labels are not in canonical order");
      }
    }
    for (std::uint32_t a = 0; a < d; ++a, pos += 16) {
      const double re = get_f64(bytes, pos), im = get_f64(bytes, pos + 8);
      if (!std::isfinite(re) || !std::isfinite(im)) throw FormatError(Kind::invariant, "non-finite coefficient");
      u.coeffs()(static_cast<Index>(a), h) = {re, im};
    }
  }
  if (divergence_residual(u) > tol) throw FormatError(Kind::invariant, "field is not divergence free");
  return u;
}

void write_checkpoint(const Field& u, const std::string& path) { write_text(path, encode_checkpoint(u)); }

Field read_checkpoint(const std::string& path, double tol) { return decode_checkpoint(read_text(path), tol); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("cannot read " + path);
  return s;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string csv_header(const Provenance& p) {
  return "# k41 " + p.version + " config=" + p.config_hash + " seed=" + std::to_string(p.seed) + "\n";
}

Json provenance_json(const Provenance& p) {
  return {{"config_hash", p.config_hash}, {"seed", p.seed}, {"version", p.version}};
}

Json window_json(const Window& w) {
  return {{"lo", w.lo},       {"hi", w.hi},
          {"points", w.points}, {"empty", w.empty},
          {"ratio_min", w.ratio_min}, {"ratio_max", w.ratio_max}};
}

Json row_json(const WindowRow& r) {
  return {{"nu", r.nu},
          {"epsilon", r.epsilon},
          {"eta", r.eta},
          {"theta_diss", r.theta_diss},
          {"theta_over_eta", r.theta_over_eta},
          {"eta_window", window_json(r.eta_window)},
          {"viscous_window", window_json(r.viscous_window)}};
}

Json s2_json(const std::vector<S2Point>& s2) {
  Json a = Json::array();
  for (const auto& p : s2) a.push_back({{"r", p.r}, {"value", p.value}, {"stderr", p.std_error}, {"spread", p.spread}});
  return a;
}

}  // namespace

Json report_json(const DiagnosticsReport& r, const ExperimentConfig& c) {
  Json j;
  j["epsilon"] = r.dissipation.epsilon;
  j["eta"] = r.dissipation.eta;
  j["theta_diss"] = r.dissipation.theta_diss;
  j["s2"] = s2_json(r.s2);
  j["taylor"] = {{"passed", r.taylor.passed()},         {"upper_ok", r.taylor.upper_ok},
                 {"lower_ok", r.taylor.lower_ok},       {"upper_margin", r.taylor.upper_margin},
                 {"lower_margin", r.taylor.lower_margin}, {"lower_points", r.taylor.lower_points}};
  j["window"] = row_json(r.window);
  const auto& cs = r.conditions;
  j["conditions"] = {{"A_value", cs.A_value},   {"Aprime_value", cs.Aprime_value}, {"B_low", cs.B_low},
                     {"B_high", cs.B_high},     {"C_low_half", cs.C_low_half},     {"no_low_modes", cs.no_low_modes}};
  j["stretching"] = {{"mean", r.stretching.mean},
                     {"l2_sq", r.stretching.l2_sq},
                     {"holder_lhs", r.stretching.holder_lhs},
                     {"holder_rhs", r.stretching.holder_rhs}};
  Json bal = Json::array();
  for (const auto& b : r.balance) {
    bal.push_back({{"name", b.name},
                   {"lhs", b.lhs},
                   {"rhs", b.rhs},
                   {"rel_err", b.rel_err},
                   {"stderr", b.std_error},
                   {"asserted", b.asserted},
                   {"passed", b.passed}});
  }
  j["balance"] = bal;
  Json g = Json::array();
  for (Index i = 0; i < r.isotropy.g.size(); ++i) g.push_back(r.isotropy.g(i));
  j["isotropy"] = {{"g", g},
                   {"spread", r.isotropy.spread},
                   {"tolerance", r.isotropy.tolerance},
                   {"sum_error", r.isotropy.sum_error},
                   {"passed", r.isotropy.passed}};
  j["nu"] = r.nu;
  j["config"] = experiment_json(c);
  j["seed"] = c.seed;
  j["provenance"] = provenance_json(provenance(c));
  return j;
}

std::string s2_csv(const std::vector<S2Point>& s2, const Provenance& p) {
  std::string out = csv_header(p) + "r,value,stderr\n";
  for (const auto& pt : s2) out += format_double(pt.r) + "," + format_double(pt.value) + "," + format_double(pt.std_error) + "\n";
  return out;
}

std::string sweep_csv(const std::vector<WindowRow>& rows, const Provenance& p) {
  std::string out = csv_header(p) + "nu,epsilon,eta,theta,ratio_min,ratio_max,theta_over_eta\n";
  for (const auto& r : rows) {
    out += format_double(r.nu) + "," + format_double(r.epsilon) + "," + format_double(r.eta) + "," +
           format_double(r.theta_diss) + "," + format_double(r.eta_window.ratio_min) + "," +
           format_double(r.eta_window.ratio_max) + "," + format_double(r.theta_over_eta) + "\n";
  }
  return out;
}

std::string eddy_csv(const std::vector<EddyRow>& rows, const Provenance& p) {
  std::string out = csv_header(p) + "eta,order,estimate,stderr,reduced_value\n";
  for (const auto& r : rows) {
    out += format_double(r.eta) + "," + to_string(r.order) + "," + format_double(r.estimate.value) + "," +
           format_double(r.estimate.std_error) + "," + format_double(r.reduced_value) + "\n";
  }
  return out;
}

namespace {

struct Context {
  const ExperimentConfig& config;
  const RunOptions& options;
  std::ostream& log;
  fs::path out;
  Provenance prov;

  void emit(const std::string& name, const std::string& text) const {
    const auto path = (out / name).string();
    write_text(path, text);
    log << "wrote " << path << "\n";
  }

  void emit_json(const std::string& name, const Json& j) const { emit(name, j.dump(2) + "\n"); }
};

struct Member {
  EnsembleStats stats;
  Field state;
};

SimulationConfig member_config(const ExperimentConfig& c, double nu, int member) {
  SimulationConfig s = c.simulation;
  s.nu = nu;
  s.seed = c.seed;
  s.trajectory = c.simulation.trajectory + static_cast<std::uint32_t>(member);
  return s;
}

Member simulate_member(const SimulationConfig& s) {
  auto t = run_trajectory(s);
  Member m;
  m.stats = time_average_stats(t);
  m.state = t.state();
  return m;
}

std::function<double(double)> r0_function(const DiagnosticsOptions& d) {
  return [scale = d.r0_scale, p = d.r0_exponent](double nu) { return scale * std::pow(nu, -p); };
}

DiagnosticsReport make_report(const ExperimentConfig& c, const EnsembleStats& stats, const NoiseSpec& spec, double nu) {
  const auto grid = default_r_grid(*stats.lattice, c.diagnostics.r_points);
  return build_report(stats, spec, nu, grid, c.diagnostics.c0, r0_function(c.diagnostics));
}

int verdict(const Context& ctx, const std::vector<BalanceEntry>& balance) {
  bool ok = true;
  for (const auto& b : balance) {
    if (b.asserted && !b.passed) {
      ok = false;
      ctx.log << "balance " << b.name << " outside tolerance: lhs " << b.lhs << " rhs " << b.rhs << " stderr "
              << b.std_error << "\n";
    }
  }
  if (!ok && ctx.options.strict) return 3;
  return 0;
}

int emit_measure(const Context& ctx, const EnsembleStats& stats, const NoiseSpec& spec, double nu) {
  const auto report = make_report(ctx.config, stats, spec, nu);
  ctx.emit_json("report.json", report_json(report, ctx.config));
  ctx.emit("s2.csv", s2_csv(report.s2, ctx.prov));
  return verdict(ctx, report.balance);
}

int run_simulate(const Context& ctx) {
  const auto& c = ctx.config;
  const auto members = parallel_map(c.members, ctx.options.threads,
                                    [&](int i) { return simulate_member(member_config(c, c.simulation.nu, i)); });
  std::vector<EnsembleStats> parts;
  for (const auto& m : members) parts.push_back(m.stats);
  const auto stats = merge_stats(parts);
  if (c.checkpoint) {
    const std::string bytes = encode_checkpoint(members.front().state);
    ctx.emit("state.k41f", bytes);
    Json side{{"file", "state.k41f"},
              {"bytes", bytes.size()},
              {"fnv1a", fnv1a_hex(bytes)},
              {"time", c.simulation.t_burn + c.simulation.t_avg},
              {"provenance", provenance_json(ctx.prov)}};
    ctx.emit_json("state.json", side);
  }
  return emit_measure(ctx, stats, make_noise(member_config(c, c.simulation.nu, 0)), c.simulation.nu);
}

int run_stokes(const Context& ctx) {
  const auto spec = make_noise(ctx.config.simulation);
  return emit_measure(ctx, stokes_stats(spec, ctx.config.simulation.nu), spec, ctx.config.simulation.nu);
}

int run_diagnose(const Context& ctx) {
  const auto& c = ctx.config;
  const Field u = read_checkpoint(c.diagnostics.input);
  SimulationConfig s = c.simulation;
  s.d = u.dim();
  s.n = u.lattice().truncation();
  s.L = u.lattice().length();
  const auto spec = make_noise(s);
  return emit_measure(ctx, field_stats(u, s.nu, s.amp), spec, s.nu);
}

int run_sweep(const Context& ctx) {
  const auto& c = ctx.config;
  const int points = static_cast<int>(c.sweep_nu.size());
  const auto runs = parallel_map(points * c.members, ctx.options.threads, [&](int job) {
    return simulate_member(member_config(c, c.sweep_nu[static_cast<std::size_t>(job / c.members)], job % c.members))
        .stats;
  });
  std::vector<WindowInput> inputs;
  Json rows = Json::array();
  int code = 0;
  for (int p = 0; p < points; ++p) {
    const double nu = c.sweep_nu[static_cast<std::size_t>(p)];
    const std::vector<EnsembleStats> parts(runs.begin() + p * c.members, runs.begin() + (p + 1) * c.members);
    const auto stats = merge_stats(parts);
    const auto report = make_report(c, stats, make_noise(member_config(c, nu, 0)), nu);
    inputs.push_back({nu, report.dissipation.epsilon, report.dissipation.theta_diss, report.s2});
    Json bal = Json::array();
    for (const auto& b : report.balance) {
      bal.push_back({{"name", b.name}, {"lhs", b.lhs}, {"rhs", b.rhs}, {"stderr", b.std_error}, {"passed", b.passed}});
    }
    rows.push_back({{"nu", nu}, {"s2", s2_json(report.s2)}, {"balance", bal}});
    code = std::max(code, verdict(ctx, report.balance));
  }
  const auto scan = k41_window_scan(inputs, c.diagnostics.c0, r0_function(c.diagnostics));
  for (std::size_t i = 0; i < scan.size(); ++i) rows[i]["window"] = row_json(scan[i]);
  bool increasing = true;
  for (std::size_t i = 1; i < scan.size(); ++i) {
    if ((scan[i].nu < scan[i - 1].nu) != (scan[i].theta_over_eta > scan[i - 1].theta_over_eta)) increasing = false;
  }
  Json j;
  j["rows"] = rows;
  j["theta_over_eta_monotone"] = increasing;
  j["config"] = experiment_json(c);
  j["seed"] = c.seed;
  j["provenance"] = provenance_json(ctx.prov);
  ctx.emit_json("sweep.json", j);
  ctx.emit("sweep.csv", sweep_csv(scan, ctx.prov));
  return code;
}

int run_conditions(const Context& ctx) {
  const auto& c = ctx.config;
  const auto members = parallel_map(c.members, ctx.options.threads, [&](int i) {
    return simulate_member(member_config(c, c.simulation.nu, i)).stats;
  });
  const auto stats = merge_stats(members);
  const auto sums = condition_sums(stats);
  const auto sandwich = kernel_sandwich(*stats.lattice);
  Json j;
  j["A_value"] = sums.A_value;
  j["Aprime_value"] = sums.Aprime_value;
  j["B_low"] = sums.B_low;
  j["B_high"] = sums.B_high;
  j["C_low_half"] = sums.C_low_half;
  j["no_low_modes"] = sums.no_low_modes;
  j["Aprime_over_B"] = sums.Aprime_value / (sums.B_low + sums.B_high);
  j["sandwich"] = {{"lower", sandwich.lower}, {"upper", sandwich.upper}};
  j["config"] = experiment_json(c);
  j["seed"] = c.seed;
  j["provenance"] = provenance_json(ctx.prov);
  ctx.emit_json("conditions.json", j);
  return 0;
}

Json params_json(const PhysicalParams& p) { return {{"nu", p.nu}, {"L", p.L}, {"amp", p.amp}}; }

int run_scale_verify(const Context& ctx) {
  const auto& c = ctx.config;
  ScaleVerifyOptions opt;
  opt.steps = c.scaling.steps;
  opt.initial = c.scaling.initial;
  opt.initial_scale = c.scaling.initial_scale;
  const auto r = pathwise_scaling_verify(c.simulation, c.scaling.lambda, c.scaling.beta, opt);
  const bool passed = r.max_discrepancy <= c.scaling.threshold;
  Json j;
  j["max_discrepancy"] = r.max_discrepancy;
  j["threshold"] = c.scaling.threshold;
  j["passed"] = passed;
  j["steps"] = r.steps;
  j["lambda"] = r.lambda;
  j["beta"] = r.beta;
  j["dt"] = r.dt;
  j["dt_tilde"] = r.dt_tilde;
  j["original"] = params_json(r.original);
  j["rescaled"] = params_json(r.rescaled);
  j["config"] = experiment_json(c);
  j["seed"] = c.seed;
  j["provenance"] = provenance_json(ctx.prov);
  ctx.emit_json("scale.json", j);
  if (!passed) {
    ctx.log << "pathwise discrepancy " << r.max_discrepancy << " above " << c.scaling.threshold << "\n";
    return 3;
  }
  return 0;
}

int run_eddy(const Context& ctx) {
  const auto& c = ctx.config;
  const auto& e = c.eddy;
  std::vector<EddyRow> rows;
  Json constants = Json::object(), slopes = Json::object();
  for (auto order : e.orders) {
    const auto J = canonical_constant(order, e.j_samples, c.seed, e.steps, e.r_max, ctx.options.threads);
    constants[to_string(order)] = {{"value", J.value},
                                   {"stderr", J.std_error},
                                   {"samples", J.samples},
                                   {"truncation_tail", truncation_tail(order, e.r_max)}};
    std::vector<double> xs, ys, errs;
    for (double eta : e.eta) {
      EddyConfig ec;
      ec.eta = eta;
      ec.samples = e.samples;
      ec.steps = e.steps;
      ec.r_max = e.r_max;
      ec.seed = c.seed;
      ec.order = order;
      ec.threads = ctx.options.threads;
      EddyRow row;
      row.eta = eta;
      row.order = order;
      row.estimate = mc_moment(ec);
      row.reduced_value = reduced_moment(order, eta, J.value);
      row.reduced_stderr = reduced_moment(order, eta, J.std_error);
      rows.push_back(row);
      xs.push_back(eta);
      ys.push_back(row.estimate.value);
      errs.push_back(row.estimate.std_error);
    }
    if (xs.size() >= 3) {
      const auto fit = slope_fit(xs, ys, errs);
      slopes[to_string(order)] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"ci", fit.ci}};
    }
  }
  Json jr = Json::array();
  for (const auto& r : rows) {
    jr.push_back({{"eta", r.eta},
                  {"order", to_string(r.order)},
                  {"estimate", r.estimate.value},
                  {"stderr", r.estimate.std_error},
                  {"effective_samples", r.estimate.effective_samples},
                  {"low_statistics", r.estimate.low_statistics},
                  {"reduced_value", r.reduced_value},
                  {"reduced_stderr", r.reduced_stderr}});
  }
  Json theta = Json::array();
  for (const auto& g : rows) {
    if (g.order != EddyOrder::grad) continue;
    for (const auto& h : rows) {
      if (h.order == EddyOrder::hess && h.eta == g.eta) {
        const double th = std::sqrt(g.estimate.value / h.estimate.value);
        theta.push_back({{"eta", g.eta}, {"theta_eddy", th}, {"theta_over_eta", th / g.eta}});
      }
    }
  }
  Json j;
  j["constants"] = constants;
  j["rows"] = jr;
  j["slopes"] = slopes;
  j["theta"] = theta;
  j["config"] = experiment_json(c);
  j["seed"] = c.seed;
  j["provenance"] = provenance_json(ctx.prov);
  ctx.emit_json("eddy.json", j);
  ctx.emit("eddy.csv", eddy_csv(rows, ctx.prov));
  for (const auto& r : rows) {
    if (r.estimate.low_statistics) ctx.log << "eta " << r.eta << " " << to_string(r.order) << ": low statistics\n";
  }
  return 0;
}

}  // namespace

namespace {

/// Maps the error categories onto exit codes.
template <typename F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const NumericalBlowup& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  } catch (const VerificationFailure& e) {
    log << "verification failed: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    log << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    log << "io error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    log << "checkpoint error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int run(ExperimentConfig config, const RunOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    if (options.out) config.out = *options.out;
    if (options.seed) {
      config.seed = *options.seed;
      config.simulation.seed = *options.seed;
    }
    if (options.threads < 1) throw ConfigError("threads", "must be at least 1");
    validate_config(config);
    Context ctx{config, options, log, fs::path(config.out), provenance(config)};
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) throw IoError("cannot create " + config.out + ": " + ec.message());
    switch (config.mode) {
      case Mode::simulate: return run_simulate(ctx);
      case Mode::stokes: return run_stokes(ctx);
      case Mode::diagnose: return run_diagnose(ctx);
      case Mode::sweep: return run_sweep(ctx);
      case Mode::conditions: return run_conditions(ctx);
      case Mode::scale_verify: return run_scale_verify(ctx);
      case Mode::eddy: return run_eddy(ctx);
    }
    return 0;
  });
}

int run_command(Mode mode, const std::string& config_path, const RunOptions& options, std::ostream& log) {
  ExperimentConfig config;
  const int code = guarded(log, [&] {
    Json j = Json::object();
    if (!config_path.empty()) {
      const auto text = read_text(config_path);
      try {
        j = Json::parse(text, nullptr, true, true);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(config_path + ": " + e.what());
      }
      if (!j.is_object()) throw ConfigError("config", "expected an object");
    }
    if (!j.contains("mode")) {
      j["mode"] = to_string(mode);
    } else if (!j["mode"].is_string() || j["mode"].get<std::string>() != to_string(mode)) {
      throw ConfigError("mode", "config is for another subcommand");
    }
    config = config_from_json(j);
    return 0;
  });
  if (code != 0) return code;
  return run(config, options, log);
}

}  // namespace k41
