#include "homog/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "homog/la.hpp"
#include "homog/util.hpp"
#include "json.hpp"

namespace homog {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || key == k;
    if (!known) fail(path + "/" + key, "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_num(const json& obj, const std::string& path, const char* key,
               double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + "/" + key, "expected a number");
  return v->get<double>();
}

std::int64_t get_int(const json& obj, const std::string& path, const char* key,
                     std::int64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(path + "/" + key, "expected an integer");
  return v->get<std::int64_t>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "/" + key, "expected a boolean");
  return v->get<bool>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(path + "/" + key, "expected a string");
  return v->get<std::string>();
}

std::vector<double> get_num_list(const json& obj, const std::string& path,
                                 const char* key,
                                 std::vector<double> fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) fail(path + "/" + key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : *v) {
    if (!x.is_number()) fail(path + "/" + key, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::int64_t> get_int_list(const json& obj, const std::string& path,
                                       const char* key,
                                       std::vector<std::int64_t> fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) fail(path + "/" + key, "expected an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& x : *v) {
    if (!x.is_number_integer())
      fail(path + "/" + key, "expected an array of integers");
    out.push_back(x.get<std::int64_t>());
  }
  return out;
}

Mat parse_mat(const json& v, int m, int d, const std::string& path) {
  if (!v.is_array() || std::ssize(v) != m)
    fail(path, "expected " + std::to_string(m) + " rows");
  Mat out(m, d);
  for (int i = 0; i < m; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || std::ssize(row) != d)
      fail(path, "expected rows of length " + std::to_string(d));
    for (int j = 0; j < d; ++j) {
      const auto& x = row[static_cast<std::size_t>(j)];
      if (!x.is_number()) fail(path, "expected numeric entries");
      out(i, j) = x.get<double>();
    }
  }
  return out;
}

MaterialState parse_state(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected a state object");
  check_keys(v, path, {"a", "p", "lam"});
  MaterialState s;
  s.a = get_num(v, path, "a", 1.0);
  s.p = get_num(v, path, "p", 2.0);
  s.lam = get_num(v, path, "lam", 0.0);
  return s;
}

FieldSpec parse_field(const json& v, int d, const std::string& path) {
  check_keys(v, path, {"kind", "distribution"});
  FieldSpec spec;
  spec.d = d;
  spec.kind = field_kind_from_name(get_str(v, path, "kind", "constant"));
  const json* dist = find(v, "distribution");
  if (dist) {
    if (!dist->is_object()) fail(path + "/distribution", "expected an object");
    std::string dpath = path + "/distribution";
    check_keys(*dist, dpath, {"type", "states", "probs", "lo", "hi"});
    std::string type = get_str(*dist, dpath, "type", "discrete");
    if (type == "discrete") {
      const json* states = find(*dist, "states");
      if (!states || !states->is_array() || states->empty())
        fail(dpath + "/states", "expected a nonempty array of states");
      for (std::size_t i = 0; i < states->size(); ++i)
        spec.dist.states.push_back(parse_state(
            (*states)[i], dpath + "/states/" + std::to_string(i)));
      auto probs = get_num_list(*dist, dpath, "probs", {});
      if (probs.empty())
        probs.assign(spec.dist.states.size(),
                     1.0 / static_cast<double>(spec.dist.states.size()));
      spec.dist.probs = probs;
    } else if (type == "uniform") {
      spec.dist.uniform = true;
      const json* lo = find(*dist, "lo");
      const json* hi = find(*dist, "hi");
      if (!lo || !hi) fail(dpath, "uniform distribution needs lo and hi");
      spec.dist.lo = parse_state(*lo, dpath + "/lo");
      spec.dist.hi = parse_state(*hi, dpath + "/hi");
    } else {
      fail(dpath + "/type", "expected \"discrete\" or \"uniform\"");
    }
  } else {
    spec.dist.states.push_back(MaterialState{});
    spec.dist.probs.push_back(1.0);
  }
  return spec;
}

SolveOptions parse_solver(const json* v, const std::string& path) {
  SolveOptions opts;
  if (!v) return opts;
  if (!v->is_object()) fail(path, "expected an object");
  check_keys(*v, path,
             {"max_iters", "tol_grad", "tol_energy", "memory",
              "smoothing_path", "ls_decrease", "ls_backtrack", "ls_max_steps"});
  opts.max_iters = static_cast<int>(get_int(*v, path, "max_iters", 500));
  opts.tol_grad = get_num(*v, path, "tol_grad", opts.tol_grad);
  opts.tol_energy = get_num(*v, path, "tol_energy", opts.tol_energy);
  opts.memory = static_cast<int>(get_int(*v, path, "memory", 10));
  opts.smoothing_path = get_num_list(*v, path, "smoothing_path", {});
  opts.ls_decrease = get_num(*v, path, "ls_decrease", opts.ls_decrease);
  opts.ls_backtrack = get_num(*v, path, "ls_backtrack", opts.ls_backtrack);
  opts.ls_max_steps =
      static_cast<int>(get_int(*v, path, "ls_max_steps", opts.ls_max_steps));
  return opts;
}

void check_eps_divisibility(const BvpTask& task, int d) {
  for (double eps : task.eps_list) {
    double per_unit = static_cast<double>(task.cells_per_eps) / eps;
    auto n = std::llround(per_unit);
    if (n < 1 || std::abs(per_unit - static_cast<double>(n)) > 1e-9 * per_unit)
      throw ConfigError("config /bvp/eps_list: cells_per_eps/eps = " +
                        std::to_string(per_unit) +
                        " is not an integer resolution");
    for (int a = 0; a < d; ++a) {
      double span = (task.domain.hi[a] - task.domain.lo[a]) *
                    static_cast<double>(n);
      if (std::abs(span - std::round(span)) > 1e-9 * std::max(1.0, span))
        throw ConfigError(
            "config /bvp/domain: extent is not a whole number of mesh cells");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
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
    throw ConfigError(origin + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": expected a JSON object");

  // "notes" is accepted so resolved dumps re-parse; its content is rebuilt.
  check_keys(root, "", {"d", "m", "integrand", "field", "solver", "whom",
                        "bvp", "verify", "master_seed", "threads", "out",
                        "notes"});

  ExperimentConfig cfg;
  cfg.d = static_cast<int>(get_int(root, "", "d", 1));
  cfg.m = static_cast<int>(get_int(root, "", "m", 1));
  if (cfg.d < 1 || cfg.d > 3) throw ConfigError("config /d: must be 1, 2 or 3");
  if (cfg.m < 1 || cfg.m * cfg.d > Mat::kMaxEntries)
    throw ConfigError("config /m: m*d out of supported range");

  const json* integrand = find(root, "integrand");
  cfg.integrand.m = cfg.m;
  cfg.integrand.d = cfg.d;
  if (integrand) {
    if (!integrand->is_object()) fail("/integrand", "expected an object");
    check_keys(*integrand, "/integrand", {"family", "p", "q"});
    cfg.integrand.family =
        family_from_name(get_str(*integrand, "/integrand", "family", "quadratic"));
    cfg.integrand.p = get_num(*integrand, "/integrand", "p", 2.0);
    cfg.integrand.q = get_num(*integrand, "/integrand", "q", 2.0);
  }
  validate_spec(cfg.integrand);

  const json* field = find(root, "field");
  if (!field) fail("/field", "required block is missing");
  if (!field->is_object()) fail("/field", "expected an object");
  cfg.field = parse_field(*field, cfg.d, "/field");
  validate_field(cfg.field);

  cfg.solver = parse_solver(find(root, "solver"), "/solver");

  const json* whom = find(root, "whom");
  if (whom) {
    if (!whom->is_object()) fail("/whom", "expected an object");
    check_keys(*whom, "/whom",
               {"xi", "grid", "t_list", "n_seeds", "bc", "resolution"});
    const json* xi = find(*whom, "xi");
    const json* grid = find(*whom, "grid");
    if (xi && grid) fail("/whom", "give either xi or grid, not both");
    if (xi) {
      if (!xi->is_array() || xi->empty())
        fail("/whom/xi", "expected a nonempty array of matrices");
      for (std::size_t i = 0; i < xi->size(); ++i)
        cfg.whom.xi_list.push_back(parse_mat(
            (*xi)[i], cfg.m, cfg.d, "/whom/xi/" + std::to_string(i)));
    }
    if (grid) {
      if (!grid->is_object()) fail("/whom/grid", "expected an object");
      check_keys(*grid, "/whom/grid", {"lo", "step", "n"});
      cfg.whom.use_grid = true;
      cfg.whom.grid_lo = get_num(*grid, "/whom/grid", "lo", -1.0);
      cfg.whom.grid_step = get_num(*grid, "/whom/grid", "step", 0.5);
      cfg.whom.grid_n = static_cast<int>(get_int(*grid, "/whom/grid", "n", 5));
      if (cfg.whom.grid_n < 2 || !(cfg.whom.grid_step > 0.0))
        fail("/whom/grid", "needs n >= 2 and step > 0");
    }
    cfg.whom.t_list = get_int_list(*whom, "/whom", "t_list", cfg.whom.t_list);
    cfg.whom.n_seeds =
        static_cast<int>(get_int(*whom, "/whom", "n_seeds", cfg.whom.n_seeds));
    std::string bc = get_str(*whom, "/whom", "bc", "dirichlet_zero");
    cfg.whom.bc = bc_from_name(bc);
    if (cfg.whom.bc == BoundaryCondition::kDirichletAffine)
      fail("/whom/bc", "cell problems take dirichlet_zero or periodic");
    cfg.whom.resolution = static_cast<int>(
        get_int(*whom, "/whom", "resolution", cfg.whom.resolution));
    if (cfg.whom.resolution < 1) fail("/whom/resolution", "must be >= 1");
    if (cfg.whom.n_seeds < 2) fail("/whom/n_seeds", "must be >= 2");
    for (std::size_t i = 0; i < cfg.whom.t_list.size(); ++i)
      if (cfg.whom.t_list[i] < 1 ||
          (i > 0 && cfg.whom.t_list[i] <= cfg.whom.t_list[i - 1]))
        fail("/whom/t_list", "must be strictly increasing and positive");
  }
  if (cfg.whom.xi_list.empty() && !cfg.whom.use_grid) {
    Mat e(cfg.m, cfg.d);
    for (int k = 0; k < std::min(cfg.m, cfg.d); ++k) e(k, k) = 1.0;
    cfg.whom.xi_list.push_back(e);
  }

  // bvp defaults: unit box, zero datum, no force.
  cfg.bvp.domain.d = cfg.d;
  for (int a = 0; a < cfg.d; ++a) {
    cfg.bvp.domain.lo[a] = 0.0;
    cfg.bvp.domain.hi[a] = 1.0;
  }
  cfg.bvp.g.xi = Mat(cfg.m, cfg.d);
  cfg.bvp.g.b = Vec(cfg.m);
  const json* bvp = find(root, "bvp");
  if (bvp) {
    if (!bvp->is_object()) fail("/bvp", "expected an object");
    check_keys(*bvp, "/bvp",
               {"domain", "g", "force", "eps_list", "cells_per_eps",
                "gap_threshold", "compare_minimizers", "n_seeds", "table"});
    if (const json* dom = find(*bvp, "domain")) {
      if (!dom->is_object()) fail("/bvp/domain", "expected an object");
      check_keys(*dom, "/bvp/domain", {"lo", "hi"});
      auto lo = get_num_list(*dom, "/bvp/domain", "lo", {});
      auto hi = get_num_list(*dom, "/bvp/domain", "hi", {});
      if (std::ssize(lo) != cfg.d || std::ssize(hi) != cfg.d)
        fail("/bvp/domain", "lo/hi need d entries");
      for (int a = 0; a < cfg.d; ++a) {
        cfg.bvp.domain.lo[a] = lo[static_cast<std::size_t>(a)];
        cfg.bvp.domain.hi[a] = hi[static_cast<std::size_t>(a)];
      }
    }
    if (const json* g = find(*bvp, "g")) {
      if (!g->is_object()) fail("/bvp/g", "expected an object");
      check_keys(*g, "/bvp/g", {"xi", "b"});
      if (const json* gxi = find(*g, "xi"))
        cfg.bvp.g.xi = parse_mat(*gxi, cfg.m, cfg.d, "/bvp/g/xi");
      auto b = get_num_list(*g, "/bvp/g", "b", {});
      if (!b.empty()) {
        if (std::ssize(b) != cfg.m) fail("/bvp/g/b", "needs m entries");
        for (int c = 0; c < cfg.m; ++c)
          cfg.bvp.g.b[c] = b[static_cast<std::size_t>(c)];
      }
    }
    if (const json* force = find(*bvp, "force")) {
      if (!force->is_object()) fail("/bvp/force", "expected an object");
      check_keys(*force, "/bvp/force", {"constant", "osc_amplitude"});
      auto fc = get_num_list(*force, "/bvp/force", "constant", {});
      if (!fc.empty()) {
        if (std::ssize(fc) != cfg.m)
          fail("/bvp/force/constant", "needs m entries");
        cfg.bvp.force.constant = Vec(cfg.m);
        for (int c = 0; c < cfg.m; ++c)
          cfg.bvp.force.constant[c] = fc[static_cast<std::size_t>(c)];
      }
      cfg.bvp.force.osc_amplitude =
          get_num(*force, "/bvp/force", "osc_amplitude", 0.0);
    }
    cfg.bvp.eps_list =
        get_num_list(*bvp, "/bvp", "eps_list", cfg.bvp.eps_list);
    cfg.bvp.cells_per_eps = static_cast<int>(
        get_int(*bvp, "/bvp", "cells_per_eps", cfg.bvp.cells_per_eps));
    cfg.bvp.gap_threshold =
        get_num(*bvp, "/bvp", "gap_threshold", cfg.bvp.gap_threshold);
    cfg.bvp.compare_minimizers =
        get_bool(*bvp, "/bvp", "compare_minimizers", false);
    cfg.bvp.n_seeds =
        static_cast<int>(get_int(*bvp, "/bvp", "n_seeds", cfg.bvp.n_seeds));
    if (cfg.bvp.n_seeds < 1) fail("/bvp/n_seeds", "must be >= 1");
    if (const json* table = find(*bvp, "table")) {
      if (!table->is_object()) fail("/bvp/table", "expected an object");
      check_keys(*table, "/bvp/table",
                 {"lo", "step", "n", "t_list", "n_seeds", "values"});
      cfg.bvp.table.lo = get_num(*table, "/bvp/table", "lo", cfg.bvp.table.lo);
      cfg.bvp.table.step =
          get_num(*table, "/bvp/table", "step", cfg.bvp.table.step);
      cfg.bvp.table.n =
          static_cast<int>(get_int(*table, "/bvp/table", "n", cfg.bvp.table.n));
      cfg.bvp.table.t_list =
          get_int_list(*table, "/bvp/table", "t_list", cfg.bvp.table.t_list);
      cfg.bvp.table.n_seeds = static_cast<int>(
          get_int(*table, "/bvp/table", "n_seeds", cfg.bvp.table.n_seeds));
      if (cfg.bvp.table.n < 2 || !(cfg.bvp.table.step > 0.0))
        fail("/bvp/table", "needs n >= 2 and step > 0");
      if (cfg.bvp.table.n_seeds < 2) fail("/bvp/table/n_seeds", "must be >= 2");
      if (const json* vals = find(*table, "values")) {
        if (!vals->is_array()) fail("/bvp/table/values", "expected an array");
        for (const auto& v : *vals) {
          if (!v.is_number()) fail("/bvp/table/values", "expected numbers");
          cfg.bvp.table.values.push_back(v.get<double>());
        }
        std::int64_t want = 1;
        for (int q = 0; q < cfg.m * cfg.d; ++q) want *= cfg.bvp.table.n;
        if (std::ssize(cfg.bvp.table.values) != want)
          fail("/bvp/table/values", "expected n^(m*d) values");
      }
    }
    check_eps_divisibility(cfg.bvp, cfg.d);
  }

  const json* verify = find(root, "verify");
  if (verify) {
    if (!verify->is_object()) fail("/verify", "expected an object");
    check_keys(*verify, "/verify",
               {"suites", "n_configs", "xi_radius", "t", "resolution",
                "n_seeds"});
    if (const json* suites = find(*verify, "suites")) {
      if (!suites->is_array()) fail("/verify/suites", "expected an array");
      for (const auto& s : *suites) {
        if (!s.is_string()) fail("/verify/suites", "expected strings");
        cfg.verify.suites.push_back(s.get<std::string>());
      }
    }
    cfg.verify.n_configs = static_cast<int>(
        get_int(*verify, "/verify", "n_configs", cfg.verify.n_configs));
    cfg.verify.xi_radius =
        get_num(*verify, "/verify", "xi_radius", cfg.verify.xi_radius);
    cfg.verify.t = get_int(*verify, "/verify", "t", cfg.verify.t);
    cfg.verify.resolution = static_cast<int>(
        get_int(*verify, "/verify", "resolution", cfg.verify.resolution));
    cfg.verify.n_seeds = static_cast<int>(
        get_int(*verify, "/verify", "n_seeds", cfg.verify.n_seeds));
    if (cfg.verify.n_configs < 1) fail("/verify/n_configs", "must be >= 1");
    if (cfg.verify.t < 1) fail("/verify/t", "must be >= 1");
    if (cfg.verify.resolution < 1) fail("/verify/resolution", "must be >= 1");
    if (cfg.verify.n_seeds < 2) fail("/verify/n_seeds", "must be >= 2");
  }

  const json* seed = find(root, "master_seed");
  if (seed) {
    if (!seed->is_number_integer() || seed->get<std::int64_t>() < 0)
      fail("/master_seed", "expected a nonnegative integer");
    cfg.master_seed = seed->get<std::uint64_t>();
  }
  cfg.threads = static_cast<int>(get_int(root, "", "threads", 1));
  if (cfg.threads < 1) fail("/threads", "must be >= 1");
  cfg.out_dir = get_str(root, "", "out", "out");

  // Advisory: the refined gradient statement needs 1/q < 1 - 1/p + 1/d.
  if (cfg.integrand.family == Family::kDoublePhase ||
      cfg.integrand.family == Family::kExpPhase) {
    double lhs = 1.0 / cfg.integrand.q;
    double rhs = 1.0 - 1.0 / cfg.integrand.p + 1.0 / cfg.d;
    if (!(lhs < rhs))
      cfg.notes.push_back(
          "exponents violate 1/q < 1 - 1/p + 1/d; the refined gradient "
          "statement does not apply");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const ExperimentConfig& cfg) {
  json root;
  root["d"] = cfg.d;
  root["m"] = cfg.m;
  root["integrand"] = {{"family", family_name(cfg.integrand.family)},
                       {"p", cfg.integrand.p},
                       {"q", cfg.integrand.q}};
  json dist;
  if (cfg.field.dist.uniform) {
    dist["type"] = "uniform";
    dist["lo"] = {{"a", cfg.field.dist.lo.a},
                  {"p", cfg.field.dist.lo.p},
                  {"lam", cfg.field.dist.lo.lam}};
    dist["hi"] = {{"a", cfg.field.dist.hi.a},
                  {"p", cfg.field.dist.hi.p},
                  {"lam", cfg.field.dist.hi.lam}};
  } else {
    dist["type"] = "discrete";
    dist["states"] = json::array();
    for (const auto& s : cfg.field.dist.states)
      dist["states"].push_back({{"a", s.a}, {"p", s.p}, {"lam", s.lam}});
    dist["probs"] = cfg.field.dist.probs;
  }
  root["field"] = {{"kind", field_kind_name(cfg.field.kind)},
                   {"distribution", dist}};
  root["solver"] = {{"max_iters", cfg.solver.max_iters},
                    {"tol_grad", cfg.solver.tol_grad},
                    {"tol_energy", cfg.solver.tol_energy},
                    {"memory", cfg.solver.memory},
                    {"smoothing_path", cfg.solver.smoothing_path},
                    {"ls_decrease", cfg.solver.ls_decrease},
                    {"ls_backtrack", cfg.solver.ls_backtrack},
                    {"ls_max_steps", cfg.solver.ls_max_steps}};
  json whom;
  json xi_list = json::array();
  for (const auto& xi : cfg.whom.xi_list) {
    json rows = json::array();
    for (int i = 0; i < cfg.m; ++i) {
      json row = json::array();
      for (int j = 0; j < cfg.d; ++j) row.push_back(xi(i, j));
      rows.push_back(row);
    }
    xi_list.push_back(rows);
  }
  whom["xi"] = xi_list;
  if (cfg.whom.use_grid)
    whom["grid"] = {{"lo", cfg.whom.grid_lo},
                    {"step", cfg.whom.grid_step},
                    {"n", cfg.whom.grid_n}};
  whom["t_list"] = cfg.whom.t_list;
  whom["n_seeds"] = cfg.whom.n_seeds;
  whom["bc"] = bc_name(cfg.whom.bc);
  whom["resolution"] = cfg.whom.resolution;
  root["whom"] = whom;

  json bvp;
  json dom_lo = json::array(), dom_hi = json::array();
  for (int a = 0; a < cfg.d; ++a) {
    dom_lo.push_back(cfg.bvp.domain.lo[a]);
    dom_hi.push_back(cfg.bvp.domain.hi[a]);
  }
  bvp["domain"] = {{"lo", dom_lo}, {"hi", dom_hi}};
  json gxi = json::array();
  for (int i = 0; i < cfg.m; ++i) {
    json row = json::array();
    for (int j = 0; j < cfg.d; ++j) row.push_back(cfg.bvp.g.xi(i, j));
    gxi.push_back(row);
  }
  json gb = json::array();
  for (int c = 0; c < cfg.m; ++c) gb.push_back(cfg.bvp.g.b[c]);
  bvp["g"] = {{"xi", gxi}, {"b", gb}};
  json fc = json::array();
  for (int c = 0; c < cfg.bvp.force.constant.size(); ++c)
    fc.push_back(cfg.bvp.force.constant[c]);
  bvp["force"] = {{"constant", fc},
                  {"osc_amplitude", cfg.bvp.force.osc_amplitude}};
  bvp["eps_list"] = cfg.bvp.eps_list;
  bvp["cells_per_eps"] = cfg.bvp.cells_per_eps;
  bvp["gap_threshold"] = cfg.bvp.gap_threshold;
  bvp["compare_minimizers"] = cfg.bvp.compare_minimizers;
  bvp["n_seeds"] = cfg.bvp.n_seeds;
  bvp["table"] = {{"lo", cfg.bvp.table.lo},
                  {"step", cfg.bvp.table.step},
                  {"n", cfg.bvp.table.n},
                  {"t_list", cfg.bvp.table.t_list},
                  {"n_seeds", cfg.bvp.table.n_seeds}};
  if (!cfg.bvp.table.values.empty()) bvp["table"]["values"] = cfg.bvp.table.values;
  root["bvp"] = bvp;

  root["verify"] = {{"suites", cfg.verify.suites},
                    {"n_configs", cfg.verify.n_configs},
                    {"xi_radius", cfg.verify.xi_radius},
                    {"t", cfg.verify.t},
                    {"resolution", cfg.verify.resolution},
                    {"n_seeds", cfg.verify.n_seeds}};
  root["master_seed"] = cfg.master_seed;
  root["threads"] = cfg.threads;
  root["out"] = cfg.out_dir;
  if (!cfg.notes.empty()) root["notes"] = cfg.notes;
  return root.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a(dump_config(cfg));
}

std::uint64_t job_seed(std::uint64_t master_seed, std::string_view job_key) {
  return splitmix64(hash_combine(master_seed, fnv1a(job_key)));
}

BVPConfig make_bvp_config(const ExperimentConfig& cfg) {
  BVPConfig out;
  out.domain = cfg.bvp.domain;
  out.integrand = cfg.integrand;
  out.field = cfg.field;
  out.g = cfg.bvp.g;
  out.force = cfg.bvp.force;
  out.eps_list = cfg.bvp.eps_list;
  out.cells_per_eps = cfg.bvp.cells_per_eps;
  out.solve = cfg.solver;
  out.threads = cfg.threads;
  out.gap_threshold = cfg.bvp.gap_threshold;
  out.compare_minimizers = cfg.bvp.compare_minimizers;
  return out;
}

CellOptions make_cell_options(const ExperimentConfig& cfg) {
  CellOptions opts;
  opts.integrand = cfg.integrand;
  opts.field = cfg.field;
  opts.bc = cfg.whom.bc;
  opts.resolution = cfg.whom.resolution;
  opts.solve = cfg.solver;
  opts.threads = cfg.threads;
  return opts;
}

}  // namespace homog
