#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clfsyn/controller.hpp"
#include "clfsyn/synthesis.hpp"

using namespace clfsyn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json poly_record(const Polynomial& p) {
  json out = json::array();
  for (const auto& [m, c] : p.terms()) out.push_back({{"coeff", c}, {"exp", m.exponents}});
  return out;
}

Polynomial poly_from_record(const json& j, int dim) {
  Polynomial p(dim);
  for (const auto& term : j) {
    Monomial mo = Monomial::constant(dim);
    for (int i = 0; i < dim; ++i) mo.exponents[i] = term["exp"][i].get<int>();
    p.add_term(mo, term["coeff"].get<double>());
  }
  return p;
}

struct Overrides {
  int degree = 0;
  double Delta = 0.0, delta = 0.0;
  std::string strategy = "mve";
  std::string ce_mode = "first";
  std::string demonstrator = "mpc";
  std::string basis;
  unsigned seed = 1;
  std::string out_dir = ".";
};

ProblemSpec load_with_overrides(const std::string& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open problem file: " + path);
  json j;
  in >> j;
  if (ov.degree > 0) j["D"] = ov.degree;
  if (ov.Delta > 0) j["Delta"] = ov.Delta;
  if (ov.delta > 0) j["delta"] = ov.delta;
  if (!ov.basis.empty()) j["basis"] = ov.basis;
  std::istringstream again(j.dump());
  return load_problem(again);
}

CandidateStrategy parse_strategy(const std::string& s) {
  if (s == "mve") return CandidateStrategy::MVE;
  if (s == "cheby") return CandidateStrategy::Chebyshev;
  if (s == "analytic") return CandidateStrategy::Analytic;
  throw CLI::ValidationError("--strategy", "unknown strategy: " + s);
}

json result_json(const ProblemSpec& ps, const SynthesisResult& res, const Overrides& ov) {
  json out;
  out["schema"] = 1;
  out["problem"] = ps.name;
  out["status"] = res.success ? "certificate" : "failure";
  if (!res.success) {
    out["cause"] = failure_cause_name(res.cause);
    out["possibly_spurious"] = res.possibly_spurious;
  } else {
    out["clf"] = poly_record(res.V);
    json coeffs = json::array();
    for (int i = 0; i < res.c.size(); ++i) coeffs.push_back(res.c[i]);
    out["coefficients"] = coeffs;
  }
  out["stats"] = {{"iterations", res.stats.iterations},
                  {"demonstrations", res.stats.demonstrations},
                  {"verifier_seconds", res.stats.verifier_seconds},
                  {"total_seconds", res.stats.total_seconds},
                  {"invariant_violations", res.stats.invariant_violations},
                  {"hull_collapses", res.stats.hull_collapses},
                  {"termination", res.stats.termination}};
  out["config"] = {{"D", ps.relaxation_degree}, {"Delta", ps.learner_box},
                   {"delta", ps.robustness},   {"strategy", ov.strategy},
                   {"ce_mode", ov.ce_mode},    {"demonstrator", ov.demonstrator},
                   {"seed", ov.seed}};
  return out;
}

int cmd_synth(const std::string& problem_path, const Overrides& ov) {
  ProblemSpec ps = load_with_overrides(problem_path, ov);
  fs::create_directories(ov.out_dir);
  std::ofstream runlog(fs::path(ov.out_dir) / "runlog.jsonl");
  SynthesisOptions opt;
  opt.strategy = parse_strategy(ov.strategy);
  opt.ce_mode = ov.ce_mode == "max" ? CounterexampleMode::MaxViolation : CounterexampleMode::First;
  opt.run_log = &runlog;
  std::unique_ptr<ExternalDemonstrator> ext;
  if (ov.demonstrator == "external") {
    ext = std::make_unique<ExternalDemonstrator>(std::cin, std::cout, ps.system.m);
    opt.demonstrator = ext.get();
  }
  SynthesisResult res = synthesize(ps, opt);
  json out = result_json(ps, res, ov);
  if (res.success) {
    AuditReport audit = audit_certificate(ps, res.V, 10000, ov.seed);
    out["audit"] = {{"samples", audit.samples},
                    {"failures", audit.failures},
                    {"worst_positivity", audit.worst_positivity},
                    {"worst_decrease", audit.worst_decrease}};
    json cert;
    cert["schema"] = 1;
    cert["problem"] = ps.name;
    cert["V"] = poly_record(res.V);
    std::ofstream cf(fs::path(ov.out_dir) / "certificate.json");
    cf << cert.dump(2) << "\n";
  }
  std::ofstream rf(fs::path(ov.out_dir) / "result.json");
  rf << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return res.success ? 0 : 2;
}

int cmd_verify(const std::string& problem_path, const std::string& cert_path, const Overrides& ov) {
  ProblemSpec ps = load_with_overrides(problem_path, ov);
  std::ifstream cf(cert_path);
  if (!cf) {
    std::cerr << "cannot open certificate file: " << cert_path << "\n";
    return 1;
  }
  json cj;
  cf >> cj;
  Polynomial V = poly_from_record(cj.at("V"), ps.cert_dim());
  // express V in the problem's basis
  Eigen::VectorXd c(ps.basis_size());
  Polynomial residual = V;
  for (int k = 0; k < ps.basis_size(); ++k) {
    const auto& terms = ps.basis[k].terms();
    if (terms.size() != 1) {
      std::cerr << "verify: only monomial bases are invertible from a raw polynomial\n";
      return 1;
    }
    const double lead = terms.begin()->second;
    c[k] = V.coefficient(terms.begin()->first) / lead;
    residual = residual - ps.basis[k] * c[k];
  }
  if (!residual.same_terms(Polynomial(ps.cert_dim()), 1e-12)) {
    std::cerr << "certificate polynomial leaves the problem's basis span\n";
    return 1;
  }
  Verifier ver(ps);
  VerifyResult vr = ver.verify(c, ov.ce_mode == "max" ? CounterexampleMode::MaxViolation
                                                      : CounterexampleMode::First);
  if (std::holds_alternative<Verified>(vr)) {
    json out{{"schema", 1}, {"status", "verified"}};
    json transcript = json::array();
    for (const auto& rep : std::get<Verified>(vr).transcript) {
      transcript.push_back({{"kind", rep.kind == TaskKind::Positivity ? "positivity" : "decrease"},
                            {"id", rep.id},
                            {"optimum", rep.optimum}});
    }
    out["transcript"] = transcript;
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  const auto& ce = std::get<MomentCounterexample>(vr);
  json out{{"schema", 1},
           {"status", "refuted"},
           {"kind", ce.kind == TaskKind::Positivity ? "positivity" : "decrease"},
           {"gamma", ce.gamma},
           {"spurious", ce.spurious}};
  json xs = json::array();
  for (int i = 0; i < ce.state.size(); ++i) xs.push_back(ce.state[i]);
  out["x"] = xs;
  std::cout << out.dump(2) << "\n";
  return 2;
}

int cmd_simulate(const std::string& problem_path, const std::string& cert_path,
                 const std::vector<std::string>& x0_list, double duration, double dt,
                 const std::string& law_name, const Overrides& ov) {
  ProblemSpec ps = load_with_overrides(problem_path, ov);
  if (x0_list.empty()) {
    std::cerr << "simulate: at least one --x0 required\n";
    return 1;
  }
  std::ifstream cf(cert_path);
  if (!cf) {
    std::cerr << "cannot open certificate file: " << cert_path << "\n";
    return 1;
  }
  json cj;
  cf >> cj;
  Polynomial V = poly_from_record(cj.at("V"), ps.cert_dim());
  FeedbackLaw law{law_name == "sontag" ? FeedbackKind::Sontag : FeedbackKind::PolytopeMinSelect, V,
                  ps.system};
  fs::create_directories(ov.out_dir);
  json summary;
  summary["schema"] = 1;
  summary["traces"] = json::array();
  int idx = 0;
  for (const auto& x0_spec : x0_list) {
    Eigen::VectorXd x0(ps.system.n);
    std::istringstream xs(x0_spec);
    std::string tok;
    for (int i = 0; i < ps.system.n; ++i) {
      if (!std::getline(xs, tok, ',')) {
        std::cerr << "simulate: --x0 needs " << ps.system.n << " comma-separated values\n";
        return 1;
      }
      x0[i] = std::stod(tok);
    }
    SimulationTrace tr = simulate(ps.system, law, x0, duration, dt);
    const std::string csv_name = "trace_" + std::to_string(idx) + ".csv";
    std::ofstream cs(fs::path(ov.out_dir) / csv_name);
    trace_to_csv(tr, cs);
    bool stayed_safe = true;
    if (ps.spec.kind != SpecKind::GlobalStability) {
      for (const auto& xsamp : tr.states) stayed_safe = stayed_safe && ps.spec.S.contains(xsamp, 1e-9);
    }
    bool reached = false;
    double t_reach = -1.0;
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
      const bool in_target = ps.spec.T.constraints.empty() ? tr.states[k].norm() <= 0.1
                                                           : ps.spec.T.contains(tr.states[k]);
      if (in_target) {
        reached = true;
        t_reach = tr.times[k];
        break;
      }
    }
    json jt{{"x0", x0_spec},
            {"csv", csv_name},
            {"stayed_safe", stayed_safe},
            {"reached_target", reached},
            {"time_to_target", t_reach},
            {"diverged", tr.diverged}};
    summary["traces"].push_back(jt);
    ++idx;
  }
  std::ofstream sf(fs::path(ov.out_dir) / "summary.json");
  sf << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_bench(const std::string& manifest_path, const Overrides& ov) {
  std::ifstream mf(manifest_path);
  if (!mf) {
    std::cerr << "cannot open manifest: " << manifest_path << "\n";
    return 1;
  }
  json mj;
  mf >> mj;
  if (!mj.contains("rows") || mj["rows"].empty()) {
    std::cerr << "bench: empty manifest\n";
    return 1;
  }
  fs::create_directories(ov.out_dir);
  std::ofstream csv(fs::path(ov.out_dir) / "bench.csv");
  csv << "problem,D,strategy,ce_mode,demonstrations,iterations,verifier_seconds,total_seconds,status\n";
  const fs::path base = fs::path(manifest_path).parent_path();
  for (const auto& row : mj["rows"]) {
    const std::string prob = row.at("problem").get<std::string>();
    Overrides rov = ov;
    if (row.contains("D")) rov.degree = row["D"].get<int>();
    if (row.contains("strategy")) rov.strategy = row["strategy"].get<std::string>();
    if (row.contains("ce_mode")) rov.ce_mode = row["ce_mode"].get<std::string>();
    std::string status = "error";
    long dem = 0, itr = 0;
    double vt = 0, tt = 0;
    try {
      ProblemSpec ps = load_with_overrides((base / prob).string(), rov);
      SynthesisOptions opt;
      opt.strategy = parse_strategy(rov.strategy);
      opt.ce_mode = rov.ce_mode == "max" ? CounterexampleMode::MaxViolation : CounterexampleMode::First;
      SynthesisResult res = synthesize(ps, opt);
      status = res.success ? "Succ" : "Fail";
      dem = res.stats.demonstrations;
      itr = res.stats.iterations;
      vt = res.stats.verifier_seconds;
      tt = res.stats.total_seconds;
    } catch (const std::exception& e) {
      std::cerr << prob << ": " << e.what() << "\n";
    }
    csv << prob << "," << rov.degree << "," << rov.strategy << "," << rov.ce_mode << "," << dem
        << "," << itr << "," << vt << "," << tt << "," << status << "\n";
    csv.flush();
  }
  std::cout << "wrote " << (fs::path(ov.out_dir) / "bench.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"control Lyapunov-like certificate synthesis"};
  app.require_subcommand(1);

  Overrides ov;
  std::string problem_path, cert_path, manifest_path;
  std::vector<std::string> x0_list;
  double duration = 60.0, dt = 0.01;
  std::string law_name = "minselect";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--degree", ov.degree, "relaxation degree override");
    sub->add_option("--Delta", ov.Delta, "learner box override");
    sub->add_option("--delta", ov.delta, "robustness override");
    sub->add_option("--strategy", ov.strategy, "mve|cheby|analytic")
        ->check(CLI::IsMember({"mve", "cheby", "analytic"}));
    sub->add_option("--ce-mode", ov.ce_mode, "first|max")->check(CLI::IsMember({"first", "max"}));
    sub->add_option("--demonstrator", ov.demonstrator, "mpc|external")
        ->check(CLI::IsMember({"mpc", "external"}));
    sub->add_option("--basis", ov.basis, "basis override (e.g. monomials:deg=2)");
    sub->add_option("--seed", ov.seed, "seed for sampled validations");
    sub->add_option("--out", ov.out_dir, "output directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "synthesize a certificate");
  synth->add_option("problem", problem_path, "problem JSON")->required();
  add_common(synth);

  CLI::App* verify = app.add_subcommand("verify", "verify a supplied certificate");
  verify->add_option("problem", problem_path, "problem JSON")->required();
  verify->add_option("certificate", cert_path, "certificate JSON")->required();
  add_common(verify);

  CLI::App* sim = app.add_subcommand("simulate", "simulate the closed loop");
  sim->add_option("problem", problem_path, "problem JSON")->required();
  sim->add_option("certificate", cert_path, "certificate JSON")->required();
  sim->add_option("--x0", x0_list, "initial state (comma separated); repeatable")->required();
  sim->add_option("--duration", duration, "simulation length");
  sim->add_option("--dt", dt, "time step");
  sim->add_option("--law", law_name, "minselect|sontag")
      ->check(CLI::IsMember({"minselect", "sontag"}));
  add_common(sim);

  CLI::App* bench = app.add_subcommand("bench", "run a benchmark manifest");
  bench->add_option("manifest", manifest_path, "manifest JSON")->required();
  add_common(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(problem_path, ov);
    if (verify->parsed()) return cmd_verify(problem_path, cert_path, ov);
    if (sim->parsed()) return cmd_simulate(problem_path, cert_path, x0_list, duration, dt, law_name, ov);
    if (bench->parsed()) return cmd_bench(manifest_path, ov);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
