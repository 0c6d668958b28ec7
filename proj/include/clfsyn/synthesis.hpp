#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "clfsyn/demonstrator.hpp"
#include "clfsyn/learner.hpp"
#include "clfsyn/system.hpp"
#include "clfsyn/verifier.hpp"

namespace clfsyn {

struct Observation {
  TaskKind kind = TaskKind::Positivity;
  int task_id = 0;
  int iteration = 0;
  Eigen::VectorXd state;
  double time = 0.0;
  Eigen::VectorXd u;                       // Decrease observations only
  std::vector<Eigen::VectorXd> cut_rows;   // functionals added (compatible side > 0)
  Eigen::MatrixXd Z;                       // lifted counterexample (in-memory only)
};

struct LoopStats {
  long iterations = 0;
  long demonstrations = 0;
  double verifier_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<double> log_volumes;  // per-iteration log Vol(E_j), MVE strategy
  std::string termination;
  long invariant_violations = 0;    // online candidate-elimination check
  long hull_collapses = 0;
};

enum class FailureCause { EmptyRegion, VolumeExhausted, IterationCap, NumericalDeadlock };

std::string failure_cause_name(FailureCause cause);

struct SynthesisResult {
  bool success = false;
  Eigen::VectorXd c;
  Polynomial V;
  std::vector<TaskReport> transcript;
  FailureCause cause = FailureCause::IterationCap;
  bool possibly_spurious = false;
  LoopStats stats;
  std::vector<Observation> observations;
};

struct SynthesisOptions {
  CandidateStrategy strategy = CandidateStrategy::MVE;
  CounterexampleMode ce_mode = CounterexampleMode::First;
  Demonstrator* demonstrator = nullptr;  // null: MPC from the problem config
  std::ostream* run_log = nullptr;       // JSON-lines, one record per iteration
  bool check_invariants = true;
};

/// One findCandidate -> verify -> update loop, exposed step by step so tests
/// can watch the region evolve; checkpoints are resumable mid-run.
class SynthesisLoop {
 public:
  SynthesisLoop(const ProblemSpec& problem, const SynthesisOptions& options);
  ~SynthesisLoop();
  SynthesisLoop(SynthesisLoop&&) noexcept;

  bool finished() const;
  /// Run one iteration; returns true when the loop has finished.
  bool step();
  SynthesisResult run();
  SynthesisResult result() const;  // valid once finished

  const CandidateRegion& region() const;
  const LoopStats& stats() const;
  long iteration_cap() const;

  std::string checkpoint() const;
  static SynthesisLoop restore(const ProblemSpec& problem, const SynthesisOptions& options,
                               const std::string& checkpoint_json);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SynthesisResult synthesize(const ProblemSpec& problem, const SynthesisOptions& options = {});
SynthesisResult resume(const ProblemSpec& problem, const SynthesisOptions& options,
                       const std::string& checkpoint_json);

}  // namespace clfsyn
