#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "fisherflow/distances.hpp"
#include "fisherflow/errors.hpp"
#include "fisherflow/quantum.hpp"
#include "fisherflow/retrodiction.hpp"
#include "fisherflow/witnesses.hpp"

namespace fisherflow::cli {
namespace {

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

Json to_json(const std::optional<Rate>& r) {
  if (!r) return nullptr;
  return {{"to", r->to}, {"from", r->from}, {"value", r->value}};
}

Vector to_vector(const Row& row) {
  Vector v(static_cast<Eigen::Index>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) v(static_cast<Eigen::Index>(i)) = row[i];
  return v;
}

ProbVec prior_or_uniform(const Row& row, std::size_t n) {
  if (row.empty()) return ProbVec::uniform(n);
  if (row.size() != n) fail(ErrorKind::InvalidInput, "prior dimension does not match the dynamics");
  return ProbVec(to_vector(row));
}

std::uint64_t seed_of(const Scenario& s, const RunOptions& opt) { return opt.seed.value_or(s.seed); }

Json header(const std::string& command, const Scenario& s, const RunOptions& opt) {
  Json j;
  j["command"] = command;
  j["scenario"] = scenario_to_json(s);
  j["seed"] = seed_of(s, opt);
  return j;
}

void require_analysis(const Scenario& s, const std::string& name) {
  if (!s.has_analysis(name))
    fail(ErrorKind::InvalidInput, "scenario does not list the '" + name + "' analysis");
}

std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string gnuplot_script(double eps) {
  std::ostringstream g;
  g << "# Trace and Fisher distance heat maps from figure1.csv\n"
    << "set datafile separator ','\n"
    << "set terminal pngcairo size 1200,480\n"
    << "set output 'figure1.png'\n"
    << "eps = " << number(eps) << "\n"
    << "set xlabel 't / pi'\n"
    << "set ylabel 'theta / pi'\n"
    << "set multiplot layout 1,2\n"
    << "set title 'trace distance / eps'\n"
    << "plot 'figure1.csv' every ::1 using ($1/pi):($2/pi):($3/eps) with image notitle\n"
    << "set title 'Fisher distance / eps'\n"
    << "plot 'figure1.csv' every ::1 using ($1/pi):($2/pi):($4/eps) with image notitle\n"
    << "unset multiplot\n";
  return g.str();
}

double min_off_diagonal(const Matrix& r) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < r.cols(); ++j)
    for (Eigen::Index i = 0; i < r.rows(); ++i)
      if (i != j) m = std::min(m, r(i, j));
  return m;
}

// Picks the generator a witness search runs on: the constant one, or the
// most negative grid point of the divisibility scan.
struct WitnessTarget {
  RateMatrix generator;
  std::optional<double> time;
};

WitnessTarget witness_target(const Scenario& s) {
  if (s.dynamics.kind == "constant") return {constant_rates(s), std::nullopt};
  const Dynamics dyn = make_dynamics(s.dynamics, s.grid.t1);
  const auto grid = linspace(s.grid.t0, s.grid.t1, s.grid.points);
  const ScanResult scan = divisibility_scan(dyn, grid, s.tolerances.rate, false, false);
  const ScanPoint* worst = nullptr;
  for (const auto& p : scan.points)
    if (!worst || p.min_rate < worst->min_rate) worst = &p;
  if (!worst) fail(ErrorKind::IntegrationAccuracy, "divisibility scan evaluated no grid point");
  return {generator_of(dyn, worst->t), worst->t};
}

}  // namespace

Dynamics make_dynamics(const DynamicsSpec& spec, double horizon) {
  if (spec.kind == "case_study") return Dynamics::case_study(horizon);
  if (spec.kind == "constant") {
    if (spec.rates.empty()) fail(ErrorKind::InvalidInput, "constant dynamics needs a rate matrix");
    Scenario tmp;
    tmp.dynamics = spec;
    return Dynamics::constant(constant_rates(tmp), horizon);
  }
  if (spec.kind == "contraction_to_prior")
    return Dynamics::contraction_to_prior(ProbVec(to_vector(spec.prior)), spec.epsilon, horizon);
  fail(ErrorKind::InvalidInput, "unknown dynamics kind '" + spec.kind + "'");
}

RateMatrix constant_rates(const Scenario& s) {
  if (s.dynamics.kind != "constant" || s.dynamics.rates.empty())
    fail(ErrorKind::InvalidInput, "this analysis needs constant dynamics with a rate matrix");
  const auto n = static_cast<Eigen::Index>(s.dynamics.rates.size());
  Matrix r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& row = s.dynamics.rates[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != n)
      fail(ErrorKind::InvalidInput, "rate matrix must be square");
    r.row(i) = to_vector(row).transpose();
  }
  return RateMatrix(r);
}

Vector figure1_direction(double theta) {
  Vector a(3), b(3);
  a << 0.0, 1.0, -1.0;
  b << 2.0, -1.0, -1.0;
  return std::cos(theta) / std::sqrt(2.0) * a + std::sin(theta) / std::sqrt(6.0) * b;
}

Figure1Data compute_figure1(const Scenario& s, unsigned threads) {
  if (s.dynamics.kind != "case_study")
    fail(ErrorKind::InvalidInput, "figure1 is defined for the case-study dynamics only");
  if (s.perturbation.mode != "theta_sweep")
    fail(ErrorKind::InvalidInput, "figure1 needs a theta_sweep perturbation");
  if (s.perturbation.theta_points == 0) fail(ErrorKind::InvalidInput, "theta_points must be positive");
  if (!(s.perturbation.displacement > 0.0)) fail(ErrorKind::InvalidInput, "displacement must be positive");
  const ProbVec p0 = s.initial_states.empty() ? ProbVec{0.2, 0.4, 0.4}
                                              : ProbVec(to_vector(s.initial_states.front()));
  if (p0.size() != 3) fail(ErrorKind::InvalidInput, "figure1 initial state must have three entries");

  const Dynamics dyn = make_dynamics(s.dynamics, s.grid.t1);
  Figure1Data data;
  data.times = linspace(s.grid.t0, s.grid.t1, s.grid.points);
  const std::size_t nt = data.times.size();
  const std::size_t nth = s.perturbation.theta_points;
  for (std::size_t k = 0; k < nth; ++k)
    data.thetas.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nth));

  std::vector<Matrix> props(nt), gens(nt);
  std::vector<Vector> states(nt), velocities(nt);
  data.min_rate.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    props[k] = dyn.propagator(data.times[k]);
    gens[k] = dyn.generator_matrix(data.times[k]);
    states[k] = props[k] * p0.vec();
    velocities[k] = gens[k] * states[k];
    data.min_rate[k] = min_off_diagonal(gens[k]);
  }

  const std::size_t total = nt * nth;
  data.d_tr.assign(total, 0.0);
  data.d_fish.assign(total, 0.0);
  data.d_fish_rate.assign(total, 0.0);
  const double eps = s.perturbation.displacement;

  auto work = [&](std::size_t first, std::size_t last) {
    for (std::size_t th = first; th < last; ++th) {
      const Vector d0 = eps * figure1_direction(data.thetas[th]);
      for (std::size_t k = 0; k < nt; ++k) {
        const Vector d = props[k] * d0;
        const ProbVec p(states[k]);
        const ProbVec q(Vector(states[k] + d));
        const std::size_t i = data.index(th, k);
        data.d_tr[i] = d.lpNorm<1>();
        data.d_fish[i] = bhattacharyya(p, q);
        data.d_fish_rate[i] = bhattacharyya_rate(p, q, velocities[k], Vector(gens[k] * q.vec()));
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(nth)));
  if (workers == 1) {
    work(0, nth);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t first = nth * w / workers, last = nth * (w + 1) / workers;
      pool.emplace_back([&, w, first, last] {
        try {
          work(first, last);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return data;
}

std::string figure1_csv(const Figure1Data& data) {
  std::string out = "t,theta,D_tr,D_fish,dDfish_dt,min_rate\n";
  out.reserve(data.d_tr.size() * 130);
  for (std::size_t th = 0; th < data.thetas.size(); ++th)
    for (std::size_t k = 0; k < data.times.size(); ++k) {
      const std::size_t i = data.index(th, k);
      out += number(data.times[k]);
      out += ',';
      out += number(data.thetas[th]);
      out += ',';
      out += number(data.d_tr[i]);
      out += ',';
      out += number(data.d_fish[i]);
      out += ',';
      out += number(data.d_fish_rate[i]);
      out += ',';
      out += number(data.min_rate[k]);
      out += '\n';
    }
  return out;
}

CommandResult cmd_figure1(const Scenario& s, const RunOptions& opt) {
  require_analysis(s, "figure1");
  const Figure1Data data = compute_figure1(s, opt.threads);
  const Dynamics dyn = make_dynamics(s.dynamics, s.grid.t1);
  const std::size_t nt = data.times.size();

  double trace_dev = 0.0;
  bool non_increasing = true;
  for (std::size_t th = 0; th < data.thetas.size(); ++th) {
    const double initial = data.d_tr[data.index(th, 0)];
    for (std::size_t k = 0; k < nt; ++k) {
      const double expected = std::exp(-(data.times[k] - data.times[0])) * initial;
      trace_dev = std::max(trace_dev, std::abs(data.d_tr[data.index(th, k)] - expected) / initial);
      if (k > 0 && data.d_tr[data.index(th, k)] > data.d_tr[data.index(th, k - 1)]) non_increasing = false;
    }
  }

  const ScanResult scan = divisibility_scan(dyn, data.times, s.tolerances.rate);
  Json windows = Json::array();
  bool every_window = true;
  std::size_t positive_points = 0;
  for (std::size_t i = 0; i < data.d_fish_rate.size(); ++i) positive_points += data.d_fish_rate[i] > 0.0;
  for (const auto& w : scan.windows) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (std::size_t th = 0; th < data.thetas.size(); ++th)
      for (std::size_t k = w.first; k <= w.last; ++k) {
        const double v = data.d_fish_rate[data.index(th, k)];
        best = std::max(best, v);
        count += v > 0.0;
      }
    every_window = every_window && count > 0;
    windows.push_back({{"begin", w.begin}, {"end", w.end}, {"max_dDfish_dt", best},
                       {"positive_points", count}});
  }

  Json report = header("figure1", s, opt);
  Json res;
  res["rows"] = data.d_tr.size();
  res["theta_points"] = data.thetas.size();
  res["time_points"] = nt;
  res["trace_scaling_max_relative_deviation"] = trace_dev;
  res["trace_non_increasing"] = non_increasing;
  res["positive_dDfish_dt_points"] = positive_points;
  res["violation_windows"] = windows;
  const double t_ref = std::numbers::pi / 20.0;
  if (t_ref >= s.grid.t0 && t_ref <= s.grid.t1)
    res["min_rate_at_pi_over_20"] = min_off_diagonal(dyn.generator_matrix(t_ref));
  res["checks"] = {{"trace_scaling", trace_dev <= s.tolerances.trace_scaling},
                   {"trace_non_increasing", non_increasing},
                   {"backflow_present", positive_points > 0},
                   {"backflow_in_every_window", every_window && !scan.windows.empty()}};
  report["results"] = res;

  CommandResult out;
  out.report = report;
  const std::filesystem::path dir = opt.out_dir.value_or(s.output.directory);
  std::filesystem::create_directories(dir);
  write_atomic((dir / "figure1.csv").string(), figure1_csv(data));
  write_atomic((dir / "figure1.gp").string(), gnuplot_script(s.perturbation.displacement));
  out.written = {(dir / "figure1.csv").string(), (dir / "figure1.gp").string()};
  return out;
}

CommandResult cmd_scan(const Scenario& s, const RunOptions& opt) {
  require_analysis(s, "divisibility");
  const Dynamics dyn = make_dynamics(s.dynamics, s.grid.t1);
  const auto grid = linspace(s.grid.t0, s.grid.t1, s.grid.points);
  const ScanResult scan = divisibility_scan(dyn, grid, s.tolerances.rate);

  Json res;
  res["markovian"] = scan.markovian();
  res["refined_consistent"] = scan.refined_consistent;
  Json windows = Json::array();
  for (const auto& w : scan.windows)
    windows.push_back({{"begin", w.begin}, {"end", w.end}, {"first", w.first}, {"last", w.last}});
  res["windows"] = windows;
  Json points = Json::array();
  for (const auto& p : scan.points) points.push_back({{"t", p.t}, {"min_rate", p.min_rate}});
  res["points"] = points;
  Json failures = Json::array();
  for (const auto& f : scan.failures) failures.push_back({{"t", f.t}, {"message", f.message}});
  res["failures"] = failures;

  CommandResult out;
  out.report = header("scan", s, opt);
  out.report["results"] = res;
  return out;
}

CommandResult cmd_witness(const Scenario& s, const RunOptions& opt) {
  require_analysis(s, "witness");
  const WitnessTarget target = witness_target(s);
  const std::uint64_t seed = seed_of(s, opt);
  Json res;
  if (target.time) res["time"] = *target.time;
  else res["time"] = nullptr;
  res["generator"] = to_json(target.generator.mat());
  res["markovian"] = is_markovian_generator(target.generator, s.tolerances.rate).markovian;

  CommandResult out;
  if (res["markovian"].get<bool>()) {
    res["found"] = false;
    out.exit_code = s.witness.required ? kWitnessNotFound : kOk;
  } else {
    try {
      const WitnessReport w = dilation_direction_search(target.generator, default_epsilon_ladder(),
                                                        seed, 1000, s.tolerances.rate);
      res["found"] = w.found;
      res["method"] = std::string(to_string(w.method));
      res["base"] = to_json(w.base.vec());
      res["direction"] = to_json(w.direction.vec());
      res["rate_value"] = w.rate_value;
      res["reevaluated"] = reevaluate(w);
      res["epsilon_used"] = w.epsilon_used;
      res["offender"] = to_json(w.offender);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::WitnessNotFound) throw;
      res["found"] = false;
      res["message"] = e.what();
      out.exit_code = s.witness.required ? kWitnessNotFound : kOk;
    }
    const WitnessReport trace = trace_ancilla_witness(target.generator, AncillaMode::AncillaM2,
                                                      s.tolerances.rate);
    res["trace_ancilla"] = {{"found", trace.found}, {"rate_value", trace.rate_value},
                            {"direction", to_json(trace.direction.vec())}};
  }
  out.report = header("witness", s, opt);
  out.report["results"] = res;
  return out;
}

CommandResult cmd_nogo(const Scenario& s, const RunOptions& opt) {
  require_analysis(s, "no-go");
  const RateMatrix r = constant_rates(s);
  const ProbVec pi = prior_or_uniform(s.nogo.prior, r.size());
  Json cases = Json::array();
  bool all_active = true, all_full = true;
  for (std::size_t n : s.nogo.copies)
    for (std::size_t m : s.nogo.ancilla) {
      const NoGoReport rep = no_go_verify(pi, r, n, m, m > 0 ? ProbVec::uniform(m) : ProbVec{1.0});
      all_full = all_full && rep.no_dilation;
      all_active = all_active && rep.lambda_max_active <= -rep.margin;
      cases.push_back({{"copies", n},
                       {"ancilla", m},
                       {"dimension", rep.dimension},
                       {"lambda_max", rep.lambda_max},
                       {"lambda_max_active", rep.lambda_max_active},
                       {"margin", rep.margin},
                       {"no_dilation", rep.no_dilation}});
    }
  const NoGoReport first = no_go_verify(pi, r, 1, 0, ProbVec{1.0});
  Json res;
  res["nonmarkovian"] = first.nonmarkovian;
  res["condition_met"] = first.condition_met;
  res["condition_detail"] = first.condition_detail;
  res["cases"] = cases;
  res["checks"] = {{"negative_on_full_space", all_full}, {"negative_on_active_space", all_active}};
  CommandResult out;
  out.report = header("nogo", s, opt);
  out.report["results"] = res;
  return out;
}

CommandResult cmd_filter(const Scenario& s, const RunOptions& opt) {
  require_analysis(s, "filter");
  const RateMatrix r = constant_rates(s);
  const std::size_t n = r.size();

  // Explicit direction on the system or on system (x) 2-level ancilla;
  // otherwise the trace-ancilla construction picks one.
  RateMatrix gen = r;
  TangentVec d;
  bool has_direction = false;
  if (s.perturbation.mode == "direction") {
    const Vector dv = to_vector(s.perturbation.direction);
    if (static_cast<std::size_t>(dv.size()) == 2 * n) gen = extended_generator({n, 1, 2}, r);
    else if (static_cast<std::size_t>(dv.size()) != n)
      fail(ErrorKind::InvalidInput, "filter direction must have N or 2N entries");
    d = TangentVec(dv);
    has_direction = true;
  } else {
    const WitnessReport trace = trace_ancilla_witness(r, AncillaMode::AncillaM2, s.tolerances.rate);
    if (!trace.found) {
      CommandResult out;
      out.report = header("filter", s, opt);
      out.report["results"] = {{"found", false}};
      out.exit_code = s.witness.required ? kWitnessNotFound : kOk;
      return out;
    }
    gen = trace.generator;
    d = trace.direction;
  }

  const TraceRate tr = trace_rate(d, gen);
  Json res;
  res["explicit_direction"] = has_direction;
  res["direction"] = to_json(d.vec());
  res["trace_rate"] = tr.right_derivative;
  res["trace_squared_rate"] = 2.0 * trace_norm(d) * tr.right_derivative;
  Json rows = Json::array();
  bool within = true;
  for (double eps : s.filter.epsilons) {
    const FilterRate fr = filter_witness_rate(d, gen, eps);
    const double scaled = fr.value / (eps * eps);
    Json row = {{"epsilon", eps}, {"rate_value", fr.value}, {"rate_over_eps2", scaled},
                {"regularized", fr.regularized}};
    if (s.filter.expected) {
      const double rel = std::abs(scaled - *s.filter.expected) / std::abs(*s.filter.expected);
      row["relative_error"] = rel;
      within = within && rel <= s.tolerances.filter_relative;
    }
    rows.push_back(row);
  }
  res["ladder"] = rows;
  if (s.filter.expected) {
    res["expected"] = *s.filter.expected;
    res["checks"] = {{"converged", within}};
  }
  CommandResult out;
  out.report = header("filter", s, opt);
  out.report["results"] = res;
  return out;
}

CommandResult cmd_retro(const Scenario& s, const RunOptions& opt) {
  require_analysis(s, "retrodiction");
  const Dynamics dyn = make_dynamics(s.dynamics, s.grid.t1);
  const ProbVec prior = prior_or_uniform(s.retrodiction.prior, dyn.dimension());
  if (s.grid.t0 != 0.0) fail(ErrorKind::InvalidInput, "retrodiction grids start at t0 = 0");
  const RetrodictionContext ctx(prior, dyn, s.grid.t1, s.grid.points - 1);
  const auto& times = ctx.times();

  Json distances = Json::array();
  bool monotone = true;
  for (const auto& row : s.initial_states) {
    const ProbVec p0(to_vector(row));
    Json series = Json::array();
    double prev = -1.0;
    for (double t : times) {
      const double v = retrodiction_distance_sq(p0, ctx, t).value;
      if (v < prev - 1e-14) monotone = false;
      prev = v;
      series.push_back(v);
    }
    distances.push_back({{"initial_state", row}, {"values", series}});
  }

  std::size_t consistent = 0, inconsistent = 0, inconclusive = 0;
  double spec_lo = std::numeric_limits<double>::infinity(), spec_hi = -spec_lo;
  Json bad_times = Json::array();
  for (std::size_t k = 1; k < times.size(); ++k) {
    const Theorem4Report t4 = theorem4_check(ctx, times[k], 1e-4, s.tolerances.indeterminate_band);
    switch (t4.verdict) {
      case Verdict::Consistent: ++consistent; break;
      case Verdict::Inconsistent: ++inconsistent; bad_times.push_back(times[k]); break;
      case Verdict::Inconclusive: ++inconclusive; break;
    }
    const Vector spec = recovery_spectrum(ctx, k);
    spec_lo = std::min(spec_lo, spec.minCoeff());
    spec_hi = std::max(spec_hi, spec.maxCoeff());
  }

  double adjoint = 0.0;
  const std::size_t stride = std::max<std::size_t>(1, times.size() / 8);
  for (std::size_t k = 0; k < times.size(); k += stride)
    adjoint = std::max(adjoint, adjoint_identity_check(ctx, times[k], s.retrodiction.adjoint_trials,
                                                       seed_of(s, opt) + k)
                                    .max_deviation);

  Json res;
  res["prior"] = to_json(prior.vec());
  res["distances"] = distances;
  res["distance_non_decreasing"] = monotone;
  res["verdicts"] = {{"consistent", consistent}, {"inconsistent", inconsistent},
                     {"inconclusive", inconclusive}};
  res["inconsistent_times"] = bad_times;
  res["recovery_gap_spectrum"] = {{"min", spec_lo}, {"max", spec_hi}};
  res["adjoint_max_deviation"] = adjoint;
  res["checks"] = {{"theorem4_consistent", inconsistent == 0},
                   {"adjoint_identity", adjoint <= s.tolerances.adjoint}};
  CommandResult out;
  out.report = header("retro", s, opt);
  out.report["results"] = res;
  return out;
}

CommandResult cmd_quantum(const Scenario& s, const RunOptions& opt) {
  require_analysis(s, "quantum");
  const RateMatrix r = constant_rates(s);
  const QuantumGenerator l = semiclassical_lindbladian(r);
  const CPCheck cp = cp_check(l.exponential_map(s.quantum.dt));
  const bool markovian = is_markovian_generator(r, s.tolerances.rate).markovian;

  Json res;
  res["classical_markovian"] = markovian;
  res["cp"] = cp.cp;
  res["choi_min_eigenvalue"] = cp.min_eigenvalue;
  res["classification_matches_rates"] = cp.cp == markovian;

  CommandResult out;
  if (!cp.cp) {
    const QuantumChannel step = l.first_order_map(s.quantum.dt);
    const QuantumWitnessReport w = quantum_thm1_witness(step, s.quantum.mix, s.quantum.eps);
    const QuantumWitnessReport half = quantum_thm1_witness(step, 0.5 * s.quantum.mix, s.quantum.eps);
    Json fd = Json::object();
    double worst = 0.0;
    for (std::size_t k = 0; k < kMonotoneKinds.size(); ++k) {
      fd[std::string(to_string(kMonotoneKinds[k]))] = w.fd_rates[k];
      worst = std::max(worst, std::abs(w.fd_rates[k] - w.rate) / std::abs(w.rate));
    }
    const double stability =
        std::abs(half.leading_coefficient - w.leading_coefficient) / std::abs(w.leading_coefficient);
    res["witness"] = {{"rate", w.rate},
                      {"classical_rate", w.classical_rate},
                      {"leading_coefficient", w.leading_coefficient},
                      {"finite_difference", fd},
                      {"finite_difference_max_relative_error", worst},
                      {"mix_halving_relative_change", stability},
                      {"positive", w.rate > 0.0}};
    if (w.rate <= 0.0 && s.witness.required) out.exit_code = kWitnessNotFound;
  } else if (s.witness.required) {
    out.exit_code = kWitnessNotFound;
  }

  if (r.size() <= 4) {
    const ProbVec pi = prior_or_uniform(s.quantum.prior, r.size());
    const QuantumNoGoReport ng = quantum_nogo_check(pi, r, s.quantum.filter_eps, s.quantum.dephasing_eps,
                                                    s.quantum.samples, seed_of(s, opt));
    res["dephased_filter"] = {{"lambda_max_diagonal", ng.lambda_max_diagonal},
                              {"max_sampled_rate", ng.max_sampled_rate},
                              {"max_coherence_ratio", ng.max_coherence_ratio},
                              {"no_dilation", ng.no_dilation}};
  }
  out.report = header("quantum", s, opt);
  out.report["results"] = res;
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::InvalidInput, "cannot write '" + tmp + "'");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) fail(ErrorKind::InvalidInput, "write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void require_finite(const Json& j, const std::string& where) {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>()))
      fail(ErrorKind::IntegrationAccuracy, "non-finite number at " + where);
  } else if (j.is_object()) {
    for (const auto& item : j.items()) require_finite(item.value(), where + "." + item.key());
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) require_finite(j[i], where + "[" + std::to_string(i) + "]");
  }
}

int run(const std::string& command, const std::string& scenario_path, const RunOptions& opt,
        std::ostream& err) {
  using Fn = CommandResult (*)(const Scenario&, const RunOptions&);
  static const std::vector<std::pair<std::string, Fn>> table{
      {"figure1", cmd_figure1}, {"scan", cmd_scan},     {"witness", cmd_witness},
      {"nogo", cmd_nogo},       {"filter", cmd_filter}, {"retro", cmd_retro},
      {"quantum", cmd_quantum}};
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == command; });
  if (it == table.end()) {
    err << "fisherflow: unknown command '" << command << "'\n";
    return kInvalidInput;
  }
  try {
    const Scenario s = load_scenario(scenario_path);
    CommandResult result = it->second(s, opt);
    require_finite(result.report);
    const std::filesystem::path dir = opt.out_dir.value_or(s.output.directory);
    std::filesystem::create_directories(dir);
    write_atomic((dir / (command + ".json")).string(), result.report.dump(2) + "\n");
    return result.exit_code;
  } catch (const Error& e) {
    err << "fisherflow: " << to_string(e.kind()) << ": " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::IntegrationAccuracy:
      case ErrorKind::NearSingular:
        return kNumerical;
      case ErrorKind::WitnessNotFound:
        return kWitnessNotFound;
      default:
        return kInvalidInput;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "fisherflow: " << e.what() << "\n";
    return kInvalidInput;
  }
}

}  // namespace fisherflow::cli
