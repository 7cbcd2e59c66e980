#include "lipstab/scenario.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lipstab/csv.hpp"
#include "lipstab/dtn.hpp"
#include "lipstab/error.hpp"
#include "lipstab/forward.hpp"
#include "lipstab/geometry.hpp"
#include "lipstab/parallel.hpp"
#include "lipstab/singular.hpp"
#include "lipstab/stability.hpp"

namespace lipstab {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string version_string() { return "0.1.0"; }

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = {
      {"forward",
       "Dirichlet problem div(gamma grad u) = 0 with a named boundary trace",
       "well-posedness of the complex admittivity equation; real 2x2 reformulation",
       {"trace: string = \"x1\" (x1 | x2 | x1^2-x2^2 | constant)", "solver: string = \"complex\" (complex | real)"},
       {"solution.csv"}},
      {"dtn-norm",
       "Dirichlet-to-Neumann matrices of two admittivities and the norm of their difference",
       "DtN map as the sesquilinear form of the solution; H^1/2 -> H^-1/2 operator norm",
       {"modes: int = 17 (band-limited norm; 0 disables)", "data: string = \"full\" (full | bottom)"},
       {"dtn.csv", "mass.csv", "stiffness.csv", "norm.csv"}},
      {"identity-check",
       "Interior misfit integral against the boundary pairing of the DtN difference",
       "Alessandrini identity: int (g1-g2) grad u1 . grad u2 = <(L1-L2) u2, conj u1>",
       {"trials: int = 1", "trace1: string = \"x1\" (x1 | x2 | x1^2-x2^2 | constant | random)",
        "trace2: string = \"x1\""},
       {"identity.csv"}},
      {"asymptotics",
       "Singular solution across an interface compared with the two-phase cross term",
       "G(x,y) - 2/(g_l + g_l+1) Gamma(x,y) stays bounded as x, y approach the interface",
       {"link: int = 2", "r0_exponents: int list = [2,3,4,5,6] (radii r0 * 2^-e)", "free_space: bool = false"},
       {"asymptotics.csv"}},
      {"s-rate",
       "Blow-up rate of the probe integral on the diagonal",
       "|S(y_r, y_r)| >= C |g1_k - g2_k| r^(2-n) near the interface entering region k",
       {"dimension: int = 3", "gamma1: [lower, upper] (dimension 3)", "gamma2: [lower, upper] (dimension 3)",
        "rho0: number = 1", "exponents: int list = [3,4,5,6,7] (radii rho0 * 2^-e)", "link: int = 2 (dimension 2)"},
       {"s_rate.csv"}},
      {"reconstruct",
       "Gauss-Newton recovery of piecewise constant admittivities from a synthetic DtN matrix",
       "Lipschitz stability |g1 - g2| <= C |L1 - L2| as a well-posed finite inversion",
       {"guess: complex list = all ones", "noise: number list = [0]", "modes: int = 17", "max_iterations: int = 30",
        "random_weight: number = 0.5"},
       {"reconstruction_<i>.csv", "noise.csv"}},
      {"constant-bound",
       "Theoretical Lipschitz constant of the chain argument in iterated-log form",
       "E <= eps / (2 w_N^-1(1/(2(C+1)^N))) with w(t) = |log t|^(-(n-2)/4)",
       {"n: int = 3", "C: number = 1", "N_max: int = 6", "r1: number = r0/4", "r: number = r1/2",
        "N1: number = |Omega|/(c_n r1^n) + 1", "delta1: number = 0.5"},
       {"constant_bound.csv"}},
      {"sweep",
       "E against eps = |L1 - L2| over admittivity pairs",
       "Lipschitz stability with a constant growing with the chain length",
       {"pairs: list of {id, first, second}", "depth_magnitude: number (one pair per strip)",
        "modes: int = 17", "data: string = \"full\" (full | bottom)"},
       {"sweep.csv"}},
      {"three-sphere",
       "Three-sphere ratio for monomials and random harmonic polynomials",
       "|u|_B3r <= C |u|_Br^tau |u|_B4r^(1-tau) with tau = ln(4/3)/ln 4",
       {"count: int = 200", "max_degree: int = 6", "max_monomial: int = 6"},
       {"three_sphere.csv"}},
      {"caccioppoli",
       "Caccioppoli ratio of discrete solutions with random harmonic data",
       "int_B_rho |grad u|^2 <= C/(R-rho)^2 int_B_R |u|^2",
       {"center: [x, y] = domain center", "rho: number", "R: number", "count: int = 20", "degree: int = 4"},
       {"caccioppoli.csv"}},
  };
  return catalog;
}

std::string catalog_text() {
  std::ostringstream os;
  for (const auto& e : experiment_catalog()) {
    os << e.name << "\n  " << e.summary << "\n  anchor: " << e.anchor << "\n";
    for (const auto& p : e.params) os << "  param  " << p << "\n";
    for (const auto& o : e.outputs) os << "  output " << o << "\n";
  }
  return os.str();
}

std::string catalog_json() {
  json arr = json::array();
  for (const auto& e : experiment_catalog()) {
    arr.push_back({{"name", e.name},
                   {"summary", e.summary},
                   {"anchor", e.anchor},
                   {"params", e.params},
                   {"outputs", e.outputs}});
  }
  return arr.dump(2) + "\n";
}

namespace {

// ---------------------------------------------------------------------------
// Config access with field-path diagnostics

Error field_error(const std::string& path, const std::string& what) {
  return Error(ErrorKind::parse, "field '" + path + "': " + what);
}

Error invalid(const std::string& path, const std::string& what) {
  return Error(ErrorKind::validation, "field '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw field_error(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw field_error(join(path, key), "unknown key");
  }
}

const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& key, const std::string& path, std::optional<double> def = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (def) return *def;
    throw field_error(join(path, key), "missing required number");
  }
  if (!v->is_number()) throw field_error(join(path, key), "expected a number");
  return v->get<double>();
}

long long get_int(const json& j, const std::string& key, const std::string& path, std::optional<long long> def = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (def) return *def;
    throw field_error(join(path, key), "missing required integer");
  }
  if (!v->is_number_integer()) throw field_error(join(path, key), "expected an integer");
  return v->get<long long>();
}

bool get_bool(const json& j, const std::string& key, const std::string& path, bool def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_boolean()) throw field_error(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path,
                       std::optional<std::string> def = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (def) return *def;
    throw field_error(join(path, key), "missing required string");
  }
  if (!v->is_string()) throw field_error(join(path, key), "expected a string");
  return v->get<std::string>();
}

cplx parse_complex(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw field_error(path, "expected a number or [re, im]");
}

std::vector<cplx> parse_complex_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw field_error(path, "expected a nonempty list of complex values");
  std::vector<cplx> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_complex(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> get_number_list(const json& j, const std::string& key, const std::string& path,
                                    std::vector<double> def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_array() || v->empty()) throw field_error(join(path, key), "expected a nonempty list of numbers");
  std::vector<double> out;
  for (const auto& x : *v) {
    if (!x.is_number()) throw field_error(join(path, key), "expected a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

// Validation of an admittivity naming the offending config field.
Admittivity make_admittivity(const std::vector<cplx>& values, double lambda, const std::string& path) {
  Admittivity a{values, lambda};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const cplx g = values[i];
    if (!(g.real() >= 1.0 / lambda) || !(std::abs(g) <= lambda)) {
      throw invalid(path + "[" + std::to_string(i) + "]",
                    "gamma_" + std::to_string(i + 1) + " = " + format_number(g.real()) + (g.imag() < 0 ? "" : "+") +
                        format_number(g.imag()) +
                        "i violates the ellipticity condition Re(gamma) >= 1/lambda, |gamma| <= lambda (lambda = " +
                        format_number(lambda) + ")");
    }
  }
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------
// Scenario model

struct Geometry {
  bool disk = false;
  Partition partition;
  double radius = 1.0;
  Vec2 center{0.0, 0.0};
};

struct Scenario {
  json raw;
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output = "lipstab-out";
  std::optional<Geometry> geometry;
  double h = 0.0;
  double lambda = 10.0;
  std::optional<Admittivity> first;
  std::optional<Admittivity> second;
  json params = json::object();
};

const std::set<std::string> kTopKeys = {"version", "experiment", "seed", "output", "geometry",
                                        "h",       "lambda",     "admittivity", "admittivity2", "params"};

std::set<std::string> param_keys(const std::string& kind) {
  if (kind == "forward") return {"trace", "solver"};
  if (kind == "dtn-norm") return {"modes", "data"};
  if (kind == "identity-check") return {"trials", "trace1", "trace2"};
  if (kind == "asymptotics") return {"link", "r0_exponents", "free_space"};
  if (kind == "s-rate") return {"dimension", "gamma1", "gamma2", "rho0", "exponents", "link"};
  if (kind == "reconstruct") return {"guess", "noise", "modes", "max_iterations", "random_weight"};
  if (kind == "constant-bound") return {"n", "C", "N_max", "r1", "r", "N1", "delta1"};
  if (kind == "sweep") return {"pairs", "depth_magnitude", "modes", "data"};
  if (kind == "three-sphere") return {"count", "max_degree", "max_monomial"};
  if (kind == "caccioppoli") return {"center", "rho", "R", "count", "degree"};
  throw field_error("experiment", "unknown experiment kind '" + kind + "' (see `lipstab list`)");
}

bool needs_mesh(const std::string& kind) {
  return kind != "constant-bound" && kind != "three-sphere" && kind != "s-rate";
}

bool needs_pair(const std::string& kind) { return kind == "dtn-norm" || kind == "identity-check"; }

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Scenario s;
  try {
    s.raw = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw Error(ErrorKind::parse, origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
  const json& j = s.raw;
  check_keys(j, "", kTopKeys);
  if (get_int(j, "version", "") != 1) throw field_error("version", "unsupported config version (expected 1)");
  s.experiment = get_string(j, "experiment", "");
  const auto allowed = param_keys(s.experiment);
  if (const json* v = find(j, "seed")) {
    if (!v->is_number_unsigned()) throw field_error("seed", "expected a nonnegative integer");
    s.seed = v->get<std::uint64_t>();
  }
  s.output = get_string(j, "output", "", s.output);
  s.lambda = get_number(j, "lambda", "", 10.0);
  if (!(s.lambda >= 1.0)) throw invalid("lambda", "ellipticity bound must be >= 1");

  if (const json* g = find(j, "geometry")) {
    check_keys(*g, "geometry", {"kind", "strips", "rect", "with_extension", "radius", "center"});
    Geometry geo;
    const std::string kind = get_string(*g, "kind", "geometry", "strips");
    if (kind == "strips") {
      const long long n = get_int(*g, "strips", "geometry");
      if (n < 1 || n > 64) throw invalid("geometry.strips", "strip count must be in 1..64");
      const auto rect = get_number_list(*g, "rect", "geometry", {0.0, 0.0, 1.0, 1.0});
      if (rect.size() != 4) throw field_error("geometry.rect", "expected [x0, y0, x1, y1]");
      try {
        geo.partition = build_partition(static_cast<int>(n), Rect{rect[0], rect[1], rect[2], rect[3]},
                                        get_bool(*g, "with_extension", "geometry", false));
      } catch (const Error& e) {
        throw invalid("geometry", e.what());
      }
    } else if (kind == "disk") {
      geo.disk = true;
      geo.radius = get_number(*g, "radius", "geometry", 1.0);
      if (!(geo.radius > 0.0)) throw invalid("geometry.radius", "radius must be positive");
      const auto c = get_number_list(*g, "center", "geometry", {0.0, 0.0});
      if (c.size() != 2) throw field_error("geometry.center", "expected [x, y]");
      geo.center = Vec2{c[0], c[1]};
    } else {
      throw field_error("geometry.kind", "expected \"strips\" or \"disk\"");
    }
    s.geometry = geo;
  }
  if (find(j, "h")) {
    s.h = get_number(j, "h", "");
    if (!(s.h > 0.0) || s.h < 1.0 / 1024.0) throw invalid("h", "mesh size must lie in [1/1024, inf)");
  }
  if (const json* a = find(j, "admittivity")) {
    s.first = make_admittivity(parse_complex_list(*a, "admittivity"), s.lambda, "admittivity");
  }
  if (const json* a = find(j, "admittivity2")) {
    s.second = make_admittivity(parse_complex_list(*a, "admittivity2"), s.lambda, "admittivity2");
  }
  if (const json* p = find(j, "params")) {
    check_keys(*p, "params", allowed);
    s.params = *p;
  }

  bool mesh_needed = needs_mesh(s.experiment);
  if (s.experiment == "s-rate") mesh_needed = get_int(s.params, "dimension", "params", 3) == 2;
  if (s.experiment == "asymptotics" && get_bool(s.params, "free_space", "params", false)) {
    if (!s.geometry || s.geometry->disk || !s.first) throw field_error("geometry", "free-space asymptotics needs strips and admittivity");
    mesh_needed = false;
  }
  if (mesh_needed) {
    if (!s.geometry) throw field_error("geometry", "required for experiment '" + s.experiment + "'");
    if (!(s.h > 0.0)) throw field_error("h", "required for experiment '" + s.experiment + "'");
    if (!s.first) throw field_error("admittivity", "required for experiment '" + s.experiment + "'");
    const int expected = s.geometry->disk ? 1 : s.geometry->partition.strip_count();
    if (s.first->count() != expected) {
      throw invalid("admittivity", "expected " + std::to_string(expected) + " values, got " +
                                       std::to_string(s.first->count()));
    }
    if (s.second && s.second->count() != expected) {
      throw invalid("admittivity2", "expected " + std::to_string(expected) + " values, got " +
                                        std::to_string(s.second->count()));
    }
  }
  if (needs_pair(s.experiment) && !s.second) {
    throw field_error("admittivity2", "required for experiment '" + s.experiment + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Execution helpers

struct Context {
  const Scenario& sc;
  fs::path dir;
  std::ostream& log;
  std::vector<std::string> outputs;
  json summary = json::object();
  std::optional<std::uint64_t> mesh_hash;
  std::shared_ptr<const Mesh> mesh;

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::validation, "cannot write " + (dir / name).string());
    outputs.push_back(name);
    return f;
  }
};

std::shared_ptr<const Mesh> build_mesh(Context& ctx) {
  const Scenario& sc = ctx.sc;
  try {
    ctx.mesh = sc.geometry->disk ? generate_disk_mesh(sc.geometry->radius, sc.h, sc.geometry->center)
                                 : generate_mesh(sc.geometry->partition, sc.h);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::too_coarse) throw invalid("h", e.what());
    throw;
  }
  ctx.mesh_hash = ctx.mesh->hash();
  return ctx.mesh;
}

const Partition& strips(const Scenario& sc, const std::string& kind) {
  if (sc.geometry->disk) throw invalid("geometry.kind", "experiment '" + kind + "' needs a strip partition");
  return sc.geometry->partition;
}

Eigen::VectorXcd named_trace(const Mesh& m, const std::string& name, const std::string& path, std::mt19937_64& rng) {
  if (name == "x1") return trace_of(m, [](const Vec2& x) { return cplx{x.x(), 0.0}; });
  if (name == "x2") return trace_of(m, [](const Vec2& x) { return cplx{x.y(), 0.0}; });
  if (name == "x1^2-x2^2") return trace_of(m, [](const Vec2& x) { return cplx{x.x() * x.x() - x.y() * x.y(), 0.0}; });
  if (name == "constant") return trace_of(m, [](const Vec2&) { return cplx{1.0, 0.0}; });
  if (name == "random") {
    std::normal_distribution<double> normal;
    Eigen::VectorXcd f(m.boundary_count());
    for (int i = 0; i < f.size(); ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      f[i] = cplx{re, im};
    }
    return f;
  }
  throw invalid(path, "unknown trace '" + name + "'");
}

std::vector<int> int_list(const json& p, const std::string& key, std::vector<int> def) {
  std::vector<int> out;
  for (double v : get_number_list(p, key, "params", std::vector<double>(def.begin(), def.end()))) {
    if (v != std::floor(v)) throw field_error("params." + key, "expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

int modes_param(const json& p) {
  const long long m = get_int(p, "modes", "params", kDefaultModes);
  if (m < 0) throw invalid("params.modes", "must be nonnegative");
  return static_cast<int>(m);
}

SweepData data_param(const json& p) {
  const std::string d = get_string(p, "data", "params", "full");
  if (d == "full") return SweepData::full_boundary;
  if (d == "bottom") return SweepData::bottom_edge;
  throw invalid("params.data", "expected \"full\" or \"bottom\"");
}

std::string hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

// ---------------------------------------------------------------------------
// Experiments

void run_forward(Context& ctx) {
  const auto& p = ctx.sc.params;
  auto mesh = build_mesh(ctx);
  std::mt19937_64 rng(ctx.sc.seed);
  const Eigen::VectorXcd f = named_trace(*mesh, get_string(p, "trace", "params", "x1"), "params.trace", rng);
  const std::string solver = get_string(p, "solver", "params", "complex");
  FieldSolution u;
  if (solver == "complex") {
    u = solve_dirichlet(assemble(mesh, *ctx.sc.first), f);
  } else if (solver == "real") {
    u = solve_real_system(mesh, *ctx.sc.first, f);
  } else {
    throw invalid("params.solver", "expected \"complex\" or \"real\"");
  }
  auto out = ctx.open("solution.csv");
  CsvWriter csv(out, {"node_index", "x", "y", "re_u", "im_u"});
  for (int i = 0; i < mesh->node_count(); ++i) {
    const Vec2& x = mesh->nodes[static_cast<std::size_t>(i)];
    csv.cell(i).cell(x.x()).cell(x.y()).cell(u.values[i].real()).cell(u.values[i].imag());
    csv.end_row();
  }
  ctx.summary["nodes"] = mesh->node_count();
  ctx.summary["residual"] = u.residual;
}

void run_dtn_norm(Context& ctx) {
  const auto& p = ctx.sc.params;
  auto mesh = build_mesh(ctx);
  const int modes = modes_param(p);
  const SweepData data = data_param(p);
  const DtNMap d1 = dtn_matrix(mesh, *ctx.sc.first);
  const DtNMap d2 = dtn_matrix(mesh, *ctx.sc.second);
  {
    auto out = ctx.open("dtn.csv");
    write_dtn_csv(out, d1);
  }
  {
    auto out = ctx.open("mass.csv");
    write_real_matrix_csv(out, d1.mass, "mass", d1.mesh_hash);
  }
  {
    auto out = ctx.open("stiffness.csv");
    write_real_matrix_csv(out, d1.stiffness, "stiffness", d1.mesh_hash);
  }
  DtNMap diff = d1;
  diff.matrix = d1.matrix - d2.matrix;
  if (data == SweepData::bottom_edge) {
    if (mesh->shape != MeshShape::rectangle) throw invalid("params.data", "bottom-edge data needs a strip geometry");
    const double y0 = mesh->box.y0;
    const auto arc = boundary_arc(*mesh, [y0](const Vec2& x) { return std::abs(x.y() - y0) <= 1e-12; });
    diff = local_dtn(diff, arc);
  }
  const double full = operator_norm(diff.matrix, diff.w_half);
  const double band = modes > 0 ? band_norm(diff.matrix, modal_basis(diff, modes)) : full;
  auto out = ctx.open("norm.csv");
  CsvWriter csv(out, {"E", "full_norm", "band_norm", "modes", "h"});
  csv.cell(ctx.sc.first->max_difference(*ctx.sc.second)).cell(full).cell(band).cell(modes).cell(mesh->h);
  csv.end_row();
  ctx.summary["full_norm"] = full;
  ctx.summary["band_norm"] = band;
}

void run_identity(Context& ctx) {
  const auto& p = ctx.sc.params;
  auto mesh = build_mesh(ctx);
  const long long trials = get_int(p, "trials", "params", 1);
  if (trials < 1 || trials > 10000) throw invalid("params.trials", "must be in 1..10000");
  const std::string t1 = get_string(p, "trace1", "params", "x1");
  const std::string t2 = get_string(p, "trace2", "params", "x1");
  std::mt19937_64 rng(ctx.sc.seed);
  const DirichletSolver s1(assemble(mesh, *ctx.sc.first));
  const DirichletSolver s2(assemble(mesh, *ctx.sc.second));
  auto out = ctx.open("identity.csv");
  CsvWriter csv(out, {"lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_err"});
  double worst = 0.0;
  for (long long i = 0; i < trials; ++i) {
    const auto f1 = named_trace(*mesh, t1, "params.trace1", rng);
    const auto f2 = named_trace(*mesh, t2, "params.trace2", rng);
    const IdentityPair id = alessandrini_pair(s1, s2, f1, f2);
    worst = std::max(worst, id.relative_gap());
    csv.cell(id.lhs.real()).cell(id.lhs.imag()).cell(id.rhs.real()).cell(id.rhs.imag()).cell(id.relative_gap());
    csv.end_row();
  }
  ctx.summary["max_rel_err"] = worst;
}

void write_asymptotics(Context& ctx, const AsymptoticsReport& rep) {
  auto out = ctx.open("asymptotics.csv");
  CsvWriter csv(out, {"r", "deviation", "grad_deviation"});
  for (const auto& row : rep.rows) {
    csv.cell(row.r).cell(row.deviation).cell(row.grad_deviation);
    csv.end_row();
  }
  ctx.summary["slope"] = rep.slope;
  ctx.summary["grad_slope"] = rep.grad_slope;
  ctx.summary["bounded"] = rep.bounded;
}

void run_asymptotics(Context& ctx) {
  const auto& p = ctx.sc.params;
  const auto exps = int_list(p, "r0_exponents", {2, 3, 4, 5, 6});
  const Partition& part = strips(ctx.sc, "asymptotics");
  std::vector<double> radii;
  for (int e : exps) radii.push_back(part.r0 * std::ldexp(1.0, -e));
  const long long link = get_int(p, "link", "params", 2);
  if (link < 1 || link > part.strip_count()) throw invalid("params.link", "no such interface");
  const Interface& iface = part.interface(static_cast<int>(link));
  if (get_bool(p, "free_space", "params", false)) {
    const cplx below = iface.below >= 0 ? ctx.sc.first->at(iface.below) : cplx{1.0, 0.0};
    write_asymptotics(ctx, asymptotics_free_space(TwoPhaseCoeffs::make(ctx.sc.first->at(iface.above), below), radii));
    return;
  }
  auto mesh = build_mesh(ctx);
  const Chain chain = build_chain(part, part.regions.back().index);
  const DirichletSolver solver(assemble(mesh, *ctx.sc.first));
  write_asymptotics(ctx, asymptotics_check(part, chain, solver, static_cast<int>(link), radii));
}

void write_rate(Context& ctx, const RateReport& rep) {
  auto out = ctx.open("s_rate.csv");
  CsvWriter csv(out, {"r", "abs_S", "fit_slope"});
  for (const auto& row : rep.rows) {
    csv.cell(row.r).cell(row.abs_s).cell(rep.slope);
    csv.end_row();
  }
  ctx.summary["fit_slope"] = rep.slope;
}

void run_s_rate(Context& ctx) {
  const auto& p = ctx.sc.params;
  const long long dim = get_int(p, "dimension", "params", 3);
  if (dim == 3) {
    auto pair = [&](const std::string& key, std::vector<cplx> def) {
      const json* v = find(p, key);
      auto vals = v ? parse_complex_list(*v, "params." + key) : def;
      if (vals.size() != 2) throw invalid("params." + key, "expected [lower, upper]");
      make_admittivity(vals, ctx.sc.lambda, "params." + key);
      return TwoPhaseCoeffs::make(vals[1], vals[0]);
    };
    const auto c1 = pair("gamma1", {1.0, 2.0});
    const auto c2 = pair("gamma2", {1.0, 3.0});
    const double rho0 = get_number(p, "rho0", "params", 1.0);
    if (!(rho0 > 0.0)) throw invalid("params.rho0", "must be positive");
    std::vector<double> radii;
    for (int e : int_list(p, "exponents", {3, 4, 5, 6, 7})) radii.push_back(rho0 * std::ldexp(1.0, -e));
    write_rate(ctx, half_space_probe(c1, c2, rho0, radii));
    return;
  }
  if (dim != 2) throw invalid("params.dimension", "must be 2 or 3");
  if (!ctx.sc.second) throw field_error("admittivity2", "required for the two-dimensional rate");
  const Partition& part = strips(ctx.sc, "s-rate");
  auto mesh = build_mesh(ctx);
  const long long link = get_int(p, "link", "params", 2);
  if (link < 2 || link > part.strip_count()) throw invalid("params.link", "must name an interior interface");
  std::vector<double> radii;
  for (int e : int_list(p, "exponents", {2, 3, 4, 5, 6})) radii.push_back(part.r0 * std::ldexp(1.0, -e));
  const Chain chain = build_chain(part, part.regions.back().index);
  write_rate(ctx, diagonal_rate(part, chain, mesh, *ctx.sc.first, *ctx.sc.second, static_cast<int>(link), radii));
}

void run_reconstruct(Context& ctx) {
  const auto& p = ctx.sc.params;
  auto mesh = build_mesh(ctx);
  const Admittivity& truth = *ctx.sc.first;
  Admittivity guess = Admittivity::uniform(truth.count(), 1.0, truth.lambda);
  if (const json* g = find(p, "guess")) {
    guess.values = parse_complex_list(*g, "params.guess");
    if (guess.count() != truth.count()) throw invalid("params.guess", "length differs from admittivity");
  }
  ReconstructOptions opt;
  opt.modes = modes_param(p);
  opt.max_iterations = static_cast<int>(get_int(p, "max_iterations", "params", 30));
  if (opt.max_iterations < 0) throw invalid("params.max_iterations", "must be nonnegative");
  const double weight = get_number(p, "random_weight", "params", 0.5);
  const auto noise = get_number_list(p, "noise", "params", {0.0});
  for (double eta : noise) {
    if (!(eta >= 0.0)) throw invalid("params.noise", "noise levels must be nonnegative");
  }
  const Sensitivity sens = sensitivity_jacobian(mesh, truth, opt.modes);
  auto summary_file = ctx.open("noise.csv");
  CsvWriter summary(summary_file, {"eta", "iterations", "misfit", "err_inf", "err_2", "c_emp", "inv_sigma_min"});
  json runs = json::array();
  for (std::size_t i = 0; i < noise.size(); ++i) {
    DtNMap target = sens.dtn;
    if (noise[i] > 0.0) target.matrix += structured_noise(sens, noise[i], ctx.sc.seed + i, weight);
    const Reconstruction rec = gauss_newton_reconstruct(target, mesh, guess, opt, &truth);
    auto out = ctx.open("reconstruction_" + std::to_string(i) + ".csv");
    CsvWriter csv(out, {"iter", "misfit", "err_inf"});
    for (const auto& h : rec.history) {
      csv.cell(h.iter).cell(h.misfit).cell(h.err_inf);
      csv.end_row();
    }
    double e2 = 0.0;
    for (int j = 1; j <= truth.count(); ++j) e2 += std::norm(rec.estimate.at(j) - truth.at(j));
    e2 = std::sqrt(e2);
    summary.cell(noise[i]).cell(rec.iterations).cell(rec.misfit).cell(rec.estimate.max_difference(truth)).cell(e2);
    summary.cell(noise[i] > 0.0 ? e2 / noise[i] : 0.0).cell(1.0 / sens.sigma_min);
    summary.end_row();
    runs.push_back({{"eta", noise[i]}, {"converged", rec.converged}, {"iterations", rec.iterations}});
  }
  ctx.summary["sigma_min"] = sens.sigma_min;
  ctx.summary["rank_deficient"] = sens.rank_deficient;
  ctx.summary["runs"] = runs;
}

void run_constant_bound(Context& ctx) {
  const auto& p = ctx.sc.params;
  const Partition part = ctx.sc.geometry && !ctx.sc.geometry->disk ? ctx.sc.geometry->partition
                                                                    : build_partition(1, Rect{}, false);
  const int n = static_cast<int>(get_int(p, "n", "params", 3));
  const double c = get_number(p, "C", "params", 1.0);
  const long long nmax = get_int(p, "N_max", "params", 6);
  if (nmax < 1 || nmax > 64) throw invalid("params.N_max", "must be in 1..64");
  const double r1 = get_number(p, "r1", "params", part.r0 / 4.0);
  const double r = get_number(p, "r", "params", r1 / 2.0);
  std::optional<double> n1;
  if (find(p, "N1")) n1 = get_number(p, "N1", "params");
  ConstantTracker tracker;
  try {
    tracker = ConstantTracker::make(part, n, c, r1, r, n1, get_number(p, "delta1", "params", 0.5));
  } catch (const Error& e) {
    throw invalid("params", e.what());
  }
  auto out = ctx.open("constant_bound.csv");
  CsvWriter csv(out, {"N", "log_bound", "log10_bound", "log_mu"});
  for (int N = 1; N <= nmax; ++N) {
    const ConstantBound b = constant_bound(N, tracker);
    csv.cell(N).cell(b.log_bound.str()).cell(b.log10()).cell(tracker.log_mu(N - 1));
    csv.end_row();
  }
  ctx.summary["tau"] = tracker.tau;
  ctx.summary["tau_r"] = tracker.tau_r;
  ctx.summary["N1"] = tracker.n1;
}

void run_sweep(Context& ctx) {
  const auto& p = ctx.sc.params;
  auto mesh = build_mesh(ctx);
  std::vector<SweepScenario> pairs;
  const Admittivity& base = *ctx.sc.first;
  if (const json* list = find(p, "pairs")) {
    if (!list->is_array()) throw field_error("params.pairs", "expected a list");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string path = "params.pairs[" + std::to_string(i) + "]";
      const json& e = (*list)[i];
      check_keys(e, path, {"id", "first", "second"});
      SweepScenario s;
      s.id = get_string(e, "id", path, "pair" + std::to_string(i));
      s.first = make_admittivity(parse_complex_list(e.at("first"), path + ".first"), ctx.sc.lambda, path + ".first");
      s.second =
          make_admittivity(parse_complex_list(e.at("second"), path + ".second"), ctx.sc.lambda, path + ".second");
      if (s.first.count() != base.count() || s.second.count() != base.count()) {
        throw invalid(path, "admittivity length differs from the geometry");
      }
      pairs.push_back(std::move(s));
    }
  }
  if (find(p, "depth_magnitude")) {
    const double mag = get_number(p, "depth_magnitude", "params");
    for (int k = 1; k <= base.count(); ++k) {
      Admittivity other = base;
      other.values[static_cast<std::size_t>(k - 1)] += mag;
      pairs.push_back({"depth" + std::to_string(k), base,
                       make_admittivity(other.values, ctx.sc.lambda, "params.depth_magnitude")});
    }
  }
  if (pairs.empty()) {
    if (!ctx.sc.second) throw field_error("params.pairs", "no pairs given and no admittivity2");
    pairs.push_back({"pair0", base, *ctx.sc.second});
  }
  SweepOptions opt;
  opt.modes = modes_param(p);
  opt.data = data_param(p);
  const auto records = stability_sweep(pairs, mesh, opt);
  auto out = ctx.open("sweep.csv");
  CsvWriter csv(out, {"scenario_id", "N", "E", "eps", "ratio", "h"});
  for (const auto& r : records) {
    csv.cell(r.id).cell(r.n).cell(r.E).cell(r.eps).cell(r.ratio).cell(r.h);
    csv.end_row();
  }
  json maxes = json::object();
  for (const auto& [n, v] : max_ratio_per_n(records)) maxes[std::to_string(n)] = v;
  ctx.summary["max_ratio_per_N"] = maxes;
}

void run_three_sphere(Context& ctx) {
  const auto& p = ctx.sc.params;
  const long long count = get_int(p, "count", "params", 200);
  const long long max_degree = get_int(p, "max_degree", "params", 6);
  const long long max_mono = get_int(p, "max_monomial", "params", 6);
  if (count < 0 || max_degree < 1 || max_mono < 0) throw invalid("params", "counts and degrees must be positive");
  auto out = ctx.open("three_sphere.csv");
  CsvWriter csv(out, {"kind", "degree", "ratio"});
  double mono_dev = 0.0;
  for (int m = 0; m <= max_mono; ++m) {
    const auto res = three_sphere_check(HarmonicPolynomial::monomial(m), Vec2::Zero(), 1.0);
    mono_dev = std::max(mono_dev, std::abs(res.ratio - 1.0));
    csv.cell("monomial").cell(m).cell(res.ratio);
    csv.end_row();
  }
  std::mt19937_64 rng(ctx.sc.seed);
  std::uniform_int_distribution<int> degree(1, static_cast<int>(max_degree));
  double worst = 0.0;
  for (long long i = 0; i < count; ++i) {
    const int d = degree(rng);
    const auto poly = HarmonicPolynomial::random(d, rng);
    const auto res = three_sphere_check(poly, Vec2::Zero(), 1.0);
    if (res.skipped) continue;
    worst = std::max(worst, res.ratio);
    csv.cell("random").cell(d).cell(res.ratio);
    csv.end_row();
  }
  ctx.summary["monomial_max_deviation"] = mono_dev;
  ctx.summary["random_max_ratio"] = worst;
}

void run_caccioppoli(Context& ctx) {
  const auto& p = ctx.sc.params;
  auto mesh = build_mesh(ctx);
  Vec2 center = ctx.sc.geometry->disk ? ctx.sc.geometry->center
                                      : Vec2{0.5 * (mesh->box.x0 + mesh->box.x1), 0.5 * (mesh->box.y0 + mesh->box.y1)};
  if (find(p, "center")) {
    const auto c = get_number_list(p, "center", "params", {});
    if (c.size() != 2) throw field_error("params.center", "expected [x, y]");
    center = Vec2{c[0], c[1]};
  }
  const double R = get_number(p, "R", "params");
  const double rho = get_number(p, "rho", "params");
  if (!(rho > 0.0) || !(rho < R)) throw invalid("params.rho", "need 0 < rho < R");
  const long long count = get_int(p, "count", "params", 20);
  const long long degree = get_int(p, "degree", "params", 4);
  if (count < 1 || degree < 0) throw invalid("params", "count must be positive and degree nonnegative");
  std::mt19937_64 rng(ctx.sc.seed);
  const DirichletSolver solver(assemble(mesh, *ctx.sc.first));
  auto out = ctx.open("caccioppoli.csv");
  CsvWriter csv(out, {"sample", "ratio"});
  double worst = 0.0;
  for (long long i = 0; i < count; ++i) {
    const auto poly = HarmonicPolynomial::random(static_cast<int>(degree), rng, center);
    const FieldSolution u = solver.solve(trace_of(*mesh, [&](const Vec2& x) { return cplx{poly(x), 0.0}; }));
    double ratio = 0.0;
    try {
      ratio = caccioppoli_ratio(u, center, rho, R);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::geometry) throw invalid("params.R", e.what());
      throw;
    }
    worst = std::max(worst, ratio);
    csv.cell(static_cast<long long>(i)).cell(ratio);
    csv.end_row();
  }
  ctx.summary["max_ratio"] = worst;
}

void dispatch(Context& ctx) {
  const std::string& k = ctx.sc.experiment;
  if (k == "forward") return run_forward(ctx);
  if (k == "dtn-norm") return run_dtn_norm(ctx);
  if (k == "identity-check") return run_identity(ctx);
  if (k == "asymptotics") return run_asymptotics(ctx);
  if (k == "s-rate") return run_s_rate(ctx);
  if (k == "reconstruct") return run_reconstruct(ctx);
  if (k == "constant-bound") return run_constant_bound(ctx);
  if (k == "sweep") return run_sweep(ctx);
  if (k == "three-sphere") return run_three_sphere(ctx);
  if (k == "caccioppoli") return run_caccioppoli(ctx);
  throw field_error("experiment", "unknown experiment kind '" + k + "'");
}

}  // namespace

RunResult run_scenario_text(const std::string& text, const std::string& origin, const RunOptions& options,
                            std::ostream& log) {
  RunResult result;
  const auto start = std::chrono::steady_clock::now();
  try {
    Scenario sc = parse_scenario(text, origin);
    if (options.seed) sc.seed = *options.seed;
    if (options.out_dir) sc.output = *options.out_dir;
    if (options.threads > 0) set_default_threads(options.threads);

    Context ctx{sc, fs::path(sc.output), log, {}, json::object(), std::nullopt, nullptr};
    fs::create_directories(ctx.dir);
    dispatch(ctx);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest;
    manifest["tool"] = "lipstab";
    manifest["version"] = version_string();
    manifest["experiment"] = sc.experiment;
    manifest["seed"] = sc.seed;
    manifest["threads"] = default_threads();
    manifest["mesh_hash"] = ctx.mesh_hash ? json(hex(*ctx.mesh_hash)) : json(nullptr);
    manifest["wall_time_s"] = wall;
    manifest["outputs"] = ctx.outputs;
    manifest["summary"] = ctx.summary;
    manifest["config"] = sc.raw;
    {
      std::ofstream f(ctx.dir / "manifest.json", std::ios::binary);
      f << manifest.dump(2) << '\n';
    }
    result.out_dir = ctx.dir.string();
    result.outputs = ctx.outputs;
    result.outputs.push_back("manifest.json");
    result.message = sc.experiment + ": wrote " + std::to_string(result.outputs.size()) + " files to " + result.out_dir;
    log << result.message << '\n';
    return result;
  } catch (const Error& e) {
    result.exit_code = e.is_input_error() ? kExitInvalid : kExitNumeric;
    result.message = e.what();
  } catch (const json::exception& e) {
    result.exit_code = kExitInvalid;
    result.message = std::string("parse: ") + e.what();
  } catch (const fs::filesystem_error& e) {
    result.exit_code = kExitInvalid;
    result.message = std::string("output: ") + e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitNumeric;
    result.message = std::string("numeric failure: ") + e.what();
  }
  log << "error: " << result.message << '\n';
  return result;
}

RunResult run_scenario(const std::string& path, const RunOptions& options, std::ostream& log) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    RunResult r;
    r.exit_code = kExitInvalid;
    r.message = "cannot open config file " + path;
    log << "error: " << r.message << '\n';
    return r;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return run_scenario_text(buf.str(), path, options, log);
}

}  // namespace lipstab
