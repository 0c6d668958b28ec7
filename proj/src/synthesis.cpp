#include "clfsyn/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace clfsyn {

using nlohmann::json;

std::string failure_cause_name(FailureCause cause) {
  switch (cause) {
    case FailureCause::EmptyRegion: return "empty_region";
    case FailureCause::VolumeExhausted: return "volume_exhausted";
    case FailureCause::IterationCap: return "iteration_cap";
    case FailureCause::NumericalDeadlock: return "numerical_deadlock";
  }
  return "?";
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

struct SynthesisLoop::Impl {
  ProblemSpec problem;
  SynthesisOptions options;
  Verifier verifier;
  std::unique_ptr<MpcDemonstrator> own_demonstrator;
  Demonstrator* demonstrator = nullptr;

  CandidateRegion region;
  LoopStats stats;
  std::vector<Observation> observations;
  long cap = 0;
  int initial_dim = 0;

  bool done = false;
  SynthesisResult outcome;

  Impl(const ProblemSpec& ps, const SynthesisOptions& opt)
      : problem(ps), options(opt), verifier(ps) {
    if (options.demonstrator) {
      demonstrator = options.demonstrator;
    } else {
      own_demonstrator = std::make_unique<MpcDemonstrator>(ps.system, ps.mpc);
      demonstrator = own_demonstrator.get();
    }
    region = init_region(ps.basis, ps.learner_box, spec_needs_origin_equality(ps.spec.kind));
    initial_dim = region.reduced_dim();
    cap = iteration_bound(initial_dim, ps.learner_box, ps.robustness) + initial_dim;
  }

  void finish_failure(FailureCause cause, bool maybe_spurious) {
    done = true;
    outcome.success = false;
    outcome.cause = cause;
    outcome.possibly_spurious = maybe_spurious;
    stats.termination = failure_cause_name(cause) + (maybe_spurious ? " (possibly spurious)" : "");
    outcome.stats = stats;
    outcome.observations = observations;
  }

  void finish_certificate(const Eigen::VectorXd& c, std::vector<TaskReport> transcript) {
    done = true;
    outcome.success = true;
    outcome.c = c;
    Eigen::VectorXd cc = c;
    outcome.V = linear_combination(cc, problem.basis);
    outcome.transcript = std::move(transcript);
    stats.termination = "certificate";
    outcome.stats = stats;
    outcome.observations = observations;
  }

  void log_line(const json& j) {
    if (options.run_log) (*options.run_log) << j.dump() << "\n";
  }

  bool step() {
    if (done) return true;
    const auto t0 = std::chrono::steady_clock::now();
    if (stats.iterations >= cap + stats.hull_collapses) {
      finish_failure(FailureCause::IterationCap, false);
      return true;
    }
    ++stats.iterations;
    const long iter = stats.iterations;

    CandidateProposal prop = region.propose(options.strategy);
    if (prop.status == RegionStatus::Numerical) {
      // a flat region often breaks the MVE solve; refactor the hull once
      if (region.refactor_affine_hull()) {
        ++stats.hull_collapses;
        prop = region.propose(options.strategy);
      }
    }
    if (prop.status == RegionStatus::Empty) {
      finish_failure(FailureCause::EmptyRegion, spurious_seen);
      return true;
    }
    if (prop.status == RegionStatus::Numerical) {
      finish_failure(FailureCause::NumericalDeadlock, false);
      return true;
    }
    if (prop.ellipsoid) {
      stats.log_volumes.push_back(prop.ellipsoid->log_volume);
      // shape collapse: region embedded in a lower-dimensional subspace
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prop.ellipsoid->shape,
                                                         Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < 1e-10 && stats.hull_collapses < region.full_dim()) {
        if (region.refactor_affine_hull()) {
          ++stats.hull_collapses;
          prop = region.propose(options.strategy);
          if (prop.status != RegionStatus::Ok) {
            finish_failure(prop.status == RegionStatus::Empty ? FailureCause::EmptyRegion
                                                              : FailureCause::NumericalDeadlock,
                           spurious_seen);
            return true;
          }
        }
      }
      if (prop.ellipsoid && should_terminate(*prop.ellipsoid, problem.robustness)) {
        finish_failure(FailureCause::VolumeExhausted, spurious_seen);
        return true;
      }
    }

    const Eigen::VectorXd c = prop.c;
    const auto tv0 = std::chrono::steady_clock::now();
    VerifyResult vr = verifier.verify(c, options.ce_mode);
    stats.verifier_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tv0).count();

    if (std::holds_alternative<Verified>(vr)) {
      finish_certificate(c, std::get<Verified>(vr).transcript);
      json rec{{"iteration", iter}, {"kind", "verified"}};
      if (prop.ellipsoid) rec["log_vol_E"] = prop.ellipsoid->log_volume;
      log_line(rec);
      stats.total_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return true;
    }

    MomentCounterexample ce = std::get<MomentCounterexample>(vr);
    if (ce.spurious && ce.value_functional.size() == 0) {
      finish_failure(FailureCause::NumericalDeadlock, true);
      return true;
    }
    if (ce.spurious) spurious_seen = true;

    Observation obs;
    obs.kind = ce.kind;
    obs.task_id = ce.task_id;
    obs.iteration = static_cast<int>(iter);
    obs.state = ce.state;
    obs.time = ce.time;
    obs.Z = ce.Z;

    if (ce.kind == TaskKind::Positivity) {
      if (region.add_cut(ce.value_functional, CutKind::Positivity, static_cast<int>(iter))) {
        obs.cut_rows.push_back(ce.value_functional);
      }
    } else {
      Eigen::VectorXd u = demonstrator->demonstrate_input(ce.state);
      if (!problem.system.U.contains(u, 1e-9)) u = project_input(problem.system.U, u);
      ++stats.demonstrations;
      obs.u = u;
      if (ce.positivity_row_valid) {
        if (region.add_cut(ce.value_functional, CutKind::Decrease, static_cast<int>(iter))) {
          obs.cut_rows.push_back(ce.value_functional);
        }
      }
      Eigen::VectorXd dec_row = ce.decrease_functional(u);
      if (region.add_cut(dec_row, CutKind::Decrease, static_cast<int>(iter))) {
        obs.cut_rows.push_back(dec_row);
      }
    }
    if (obs.cut_rows.empty()) {
      // duplicate or degenerate cut: the region cannot make progress
      if (++no_progress >= 5) {
        finish_failure(FailureCause::NumericalDeadlock, true);
        return true;
      }
    } else {
      no_progress = 0;
    }

    if (options.check_invariants && !obs.cut_rows.empty()) {
      const double margin = region.worst_row_margin(c);
      if (!(margin <= -CandidateRegion::kStrictMargin / 2)) ++stats.invariant_violations;
    }

    json rec{{"iteration", iter},
             {"kind", ce.kind == TaskKind::Positivity ? "positivity" : "decrease"},
             {"task", ce.task_id},
             {"gamma", ce.gamma}};
    if (prop.ellipsoid) rec["log_vol_E"] = prop.ellipsoid->log_volume;
    if (ce.kind == TaskKind::Decrease) rec["demo"] = vec_to_json(obs.u);
    if (ce.spurious) rec["spurious"] = true;
    log_line(rec);

    observations.push_back(std::move(obs));
    stats.total_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return false;
  }

  bool spurious_seen = false;
  int no_progress = 0;
};

SynthesisLoop::SynthesisLoop(const ProblemSpec& problem, const SynthesisOptions& options)
    : impl_(std::make_unique<Impl>(problem, options)) {}
SynthesisLoop::~SynthesisLoop() = default;
SynthesisLoop::SynthesisLoop(SynthesisLoop&&) noexcept = default;

bool SynthesisLoop::finished() const { return impl_->done; }
bool SynthesisLoop::step() { return impl_->step(); }
const CandidateRegion& SynthesisLoop::region() const { return impl_->region; }
const LoopStats& SynthesisLoop::stats() const { return impl_->stats; }
long SynthesisLoop::iteration_cap() const { return impl_->cap; }

SynthesisResult SynthesisLoop::run() {
  while (!impl_->step()) {
  }
  return impl_->outcome;
}

SynthesisResult SynthesisLoop::result() const {
  if (!impl_->done) throw std::logic_error("result: loop not finished");
  return impl_->outcome;
}

std::string SynthesisLoop::checkpoint() const {
  json j;
  j["schema"] = 1;
  j["kind"] = "clfsyn-checkpoint";
  j["problem"] = impl_->problem.name;
  j["iterations"] = impl_->stats.iterations;
  j["demonstrations"] = impl_->stats.demonstrations;
  j["hull_collapses"] = impl_->stats.hull_collapses;
  j["invariant_violations"] = impl_->stats.invariant_violations;
  j["log_volumes"] = impl_->stats.log_volumes;
  j["finished"] = impl_->done;
  json obs = json::array();
  for (const auto& o : impl_->observations) {
    json jo;
    jo["kind"] = o.kind == TaskKind::Positivity ? "positivity" : "decrease";
    jo["task"] = o.task_id;
    jo["iteration"] = o.iteration;
    jo["state"] = vec_to_json(o.state);
    jo["time"] = o.time;
    if (o.u.size()) jo["u"] = vec_to_json(o.u);
    json rows = json::array();
    for (const auto& r : o.cut_rows) rows.push_back(vec_to_json(r));
    jo["rows"] = rows;
    obs.push_back(jo);
  }
  j["observations"] = obs;
  return j.dump();
}

SynthesisLoop SynthesisLoop::restore(const ProblemSpec& problem, const SynthesisOptions& options,
                                     const std::string& checkpoint_json) {
  json j = json::parse(checkpoint_json);
  if (j.value("kind", "") != "clfsyn-checkpoint" || j.value("schema", 0) != 1) {
    throw std::runtime_error("restore: not a recognized checkpoint");
  }
  SynthesisLoop loop(problem, options);
  auto& impl = *loop.impl_;
  for (const auto& jo : j["observations"]) {
    Observation o;
    o.kind = jo["kind"] == "positivity" ? TaskKind::Positivity : TaskKind::Decrease;
    o.task_id = jo["task"].get<int>();
    o.iteration = jo["iteration"].get<int>();
    o.state = vec_from_json(jo["state"]);
    o.time = jo["time"].get<double>();
    if (jo.contains("u")) {
      o.u = vec_from_json(jo["u"]);
      ++impl.stats.demonstrations;
    }
    for (const auto& jr : jo["rows"]) {
      Eigen::VectorXd row = vec_from_json(jr);
      impl.region.add_cut(row, o.kind == TaskKind::Positivity ? CutKind::Positivity : CutKind::Decrease,
                          o.iteration);
      o.cut_rows.push_back(row);
    }
    impl.observations.push_back(std::move(o));
  }
  impl.stats.iterations = j["iterations"].get<long>();
  impl.stats.demonstrations = j["demonstrations"].get<long>();
  impl.stats.hull_collapses = j.value("hull_collapses", 0L);
  impl.stats.invariant_violations = j.value("invariant_violations", 0L);
  impl.stats.log_volumes = j.value("log_volumes", std::vector<double>{});
  for (long k = 0; k < impl.stats.hull_collapses; ++k) impl.region.refactor_affine_hull();
  return loop;
}

SynthesisResult synthesize(const ProblemSpec& problem, const SynthesisOptions& options) {
  SynthesisLoop loop(problem, options);
  return loop.run();
}

SynthesisResult resume(const ProblemSpec& problem, const SynthesisOptions& options,
                       const std::string& checkpoint_json) {
  SynthesisLoop loop = SynthesisLoop::restore(problem, options, checkpoint_json);
  return loop.run();
}

}  // namespace clfsyn
