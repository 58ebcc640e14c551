#include "scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fisherflow/errors.hpp"

namespace fisherflow::cli {
namespace {

const std::set<std::string> kAnalyses{"divisibility", "figure1",      "witness", "no-go",
                                      "filter",       "retrodiction", "quantum"};
const std::set<std::string> kDynamics{"case_study", "constant", "contraction_to_prior"};

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorKind::InvalidInput, "scenario: " + where + ": " + what);
}

// Reads the keys of one object and rejects everything it was not asked for.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) bad(where_, "expected an object");
  }

  void read(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) bad(path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, std::size_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) bad(path(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void read(const char* key, std::uint64_t& out, int) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) bad(path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) bad(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) bad(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::optional<double>& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) bad(path(key), "expected a number or null");
      out = v->get<double>();
    }
  }
  void read(const char* key, Row& out) {
    if (const Json* v = find(key)) out = row(*v, path(key));
  }
  void read(const char* key, std::vector<Row>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) bad(path(key), "expected an array of arrays");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        out.push_back(row((*v)[i], path(key) + "[" + std::to_string(i) + "]"));
    }
  }
  void read(const char* key, std::vector<std::size_t>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) bad(path(key), "expected an array");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_unsigned()) bad(path(key), "expected non-negative integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }
  void read(const char* key, std::vector<std::string>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) bad(path(key), "expected an array");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) bad(path(key), "expected strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  const Json* object(const char* key) { return find(key); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) bad(path(item.key().c_str()), "unknown key");
  }

 private:
  const Json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string path(const char* key) const { return where_ + "." + key; }

  static Row row(const Json& v, const std::string& where) {
    if (!v.is_array()) bad(where, "expected an array of numbers");
    Row out;
    for (const auto& e : v) {
      if (!e.is_number()) bad(where, "expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename Fn>
void nested(Reader& parent, const char* key, const std::string& where, Fn&& fn) {
  if (const Json* v = parent.object(key)) {
    Reader r(*v, where + "." + key);
    fn(r);
    r.finish();
  }
}

}  // namespace

bool Scenario::has_analysis(const std::string& name) const {
  return std::find(analyses.begin(), analyses.end(), name) != analyses.end();
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  Reader r(j, "scenario");
  r.read("name", s.name);
  r.read("seed", s.seed, 0);
  nested(r, "dynamics", "scenario", [&](Reader& d) {
    d.read("kind", s.dynamics.kind);
    d.read("rates", s.dynamics.rates);
    d.read("prior", s.dynamics.prior);
    d.read("epsilon", s.dynamics.epsilon);
  });
  nested(r, "grid", "scenario", [&](Reader& g) {
    g.read("t0", s.grid.t0);
    g.read("t1", s.grid.t1);
    g.read("points", s.grid.points);
  });
  r.read("initial_states", s.initial_states);
  nested(r, "perturbation", "scenario", [&](Reader& p) {
    p.read("mode", s.perturbation.mode);
    p.read("theta_points", s.perturbation.theta_points);
    p.read("direction", s.perturbation.direction);
    p.read("displacement", s.perturbation.displacement);
  });
  r.read("analyses", s.analyses);
  nested(r, "tolerances", "scenario", [&](Reader& t) {
    t.read("rate", s.tolerances.rate);
    t.read("richardson", s.tolerances.richardson);
    t.read("trace_scaling", s.tolerances.trace_scaling);
    t.read("indeterminate_band", s.tolerances.indeterminate_band);
    t.read("filter_relative", s.tolerances.filter_relative);
    t.read("adjoint", s.tolerances.adjoint);
  });
  nested(r, "witness", "scenario", [&](Reader& w) { w.read("required", s.witness.required); });
  nested(r, "nogo", "scenario", [&](Reader& n) {
    n.read("prior", s.nogo.prior);
    n.read("copies", s.nogo.copies);
    n.read("ancilla", s.nogo.ancilla);
  });
  nested(r, "filter", "scenario", [&](Reader& f) {
    f.read("epsilons", s.filter.epsilons);
    f.read("expected", s.filter.expected);
  });
  nested(r, "retrodiction", "scenario", [&](Reader& q) {
    q.read("prior", s.retrodiction.prior);
    q.read("adjoint_trials", s.retrodiction.adjoint_trials);
  });
  nested(r, "quantum", "scenario", [&](Reader& q) {
    q.read("dt", s.quantum.dt);
    q.read("mix", s.quantum.mix);
    q.read("eps", s.quantum.eps);
    q.read("filter_eps", s.quantum.filter_eps);
    q.read("dephasing_eps", s.quantum.dephasing_eps);
    q.read("samples", s.quantum.samples);
    q.read("prior", s.quantum.prior);
  });
  nested(r, "output", "scenario", [&](Reader& o) { o.read("directory", s.output.directory); });
  r.finish();

  if (!kDynamics.count(s.dynamics.kind)) bad("scenario.dynamics.kind", "unknown kind '" + s.dynamics.kind + "'");
  for (const auto& a : s.analyses)
    if (!kAnalyses.count(a)) bad("scenario.analyses", "unknown analysis '" + a + "'");
  if (s.perturbation.mode != "theta_sweep" && s.perturbation.mode != "direction")
    bad("scenario.perturbation.mode", "expected theta_sweep or direction");
  if (s.grid.points < 2) bad("scenario.grid.points", "need at least two grid points");
  if (!(s.grid.t1 > s.grid.t0)) bad("scenario.grid", "t1 must exceed t0");
  return s;
}

Json scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["dynamics"] = {{"kind", s.dynamics.kind},
                   {"rates", s.dynamics.rates},
                   {"prior", s.dynamics.prior},
                   {"epsilon", s.dynamics.epsilon}};
  j["grid"] = {{"t0", s.grid.t0}, {"t1", s.grid.t1}, {"points", s.grid.points}};
  j["initial_states"] = s.initial_states;
  j["perturbation"] = {{"mode", s.perturbation.mode},
                       {"theta_points", s.perturbation.theta_points},
                       {"direction", s.perturbation.direction},
                       {"displacement", s.perturbation.displacement}};
  j["analyses"] = s.analyses;
  j["tolerances"] = {{"rate", s.tolerances.rate},
                     {"richardson", s.tolerances.richardson},
                     {"trace_scaling", s.tolerances.trace_scaling},
                     {"indeterminate_band", s.tolerances.indeterminate_band},
                     {"filter_relative", s.tolerances.filter_relative},
                     {"adjoint", s.tolerances.adjoint}};
  j["witness"] = {{"required", s.witness.required}};
  j["nogo"] = {{"prior", s.nogo.prior}, {"copies", s.nogo.copies}, {"ancilla", s.nogo.ancilla}};
  j["filter"] = {{"epsilons", s.filter.epsilons},
                 {"expected", s.filter.expected ? Json(*s.filter.expected) : Json(nullptr)}};
  j["retrodiction"] = {{"prior", s.retrodiction.prior},
                       {"adjoint_trials", s.retrodiction.adjoint_trials}};
  j["quantum"] = {{"dt", s.quantum.dt},
                  {"mix", s.quantum.mix},
                  {"eps", s.quantum.eps},
                  {"filter_eps", s.quantum.filter_eps},
                  {"dephasing_eps", s.quantum.dephasing_eps},
                  {"samples", s.quantum.samples},
                  {"prior", s.quantum.prior}};
  j["output"] = {{"directory", s.output.directory}};
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open scenario file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::InvalidInput, "scenario '" + path + "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace fisherflow::cli
