#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uqbench/anchor.hpp"
#include "uqbench/datagen.hpp"
#include "uqbench/nn.hpp"
#include "uqbench/prediction.hpp"
#include "uqbench/uqmethods.hpp"

namespace uqbench {

/// |prediction - unnoisy ground truth|.
double deviation(double pred_mean, double truth);

/// Non-strict: the zero-deviation/zero-std corner counts as covered.
bool covered(const UqPrediction& pred, double truth);

/// A test location with its precomputed truth and train-box membership.
/// `label` is empty for design-grid points and names the extra trend inputs
/// (e.g. "x=-2.38").
struct TestInput {
  int id = 0;
  VectorXd x;
  std::string label;
  double ground_truth = 0.0;
  bool in_distribution = false;
};

struct NamedInput {
  std::string label;
  VectorXd x;
};

/// Materialized experiment: model, fixed training inputs, and the test
/// locations (design grid plus any named extras).
struct ExperimentSetup {
  ExperimentPreset preset;
  std::vector<VectorXd> train_inputs;
  std::vector<TestInput> test_inputs;
  int grid_size = 0;  // first grid_size test inputs come from the design
};

/// The paper's trend-plot locations per experiment; empty for E3.
std::vector<NamedInput> default_named_inputs(const ExperimentPreset& preset);

ExperimentSetup make_setup(const ExperimentPreset& preset,
                           const std::vector<NamedInput>& named);
ExperimentSetup make_setup(const ExperimentPreset& preset);

// ---------------------------------------------------------------------------
// Method adapters: anything that can be fit on a dataset and queried for a
// (mean, std) prediction participates in the repetition protocol.

class FittedMethod {
 public:
  virtual ~FittedMethod() = default;
  virtual UqPrediction predict(const VectorXd& x, Rng& rng) const = 0;
  /// Batched hook; the default just loops.
  virtual std::vector<UqPrediction> predict_all(
      const std::vector<TestInput>& inputs, Rng& rng) const;
};

class MethodUnderTest {
 public:
  virtual ~MethodUnderTest() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<FittedMethod> fit(const Dataset& data,
                                            std::uint64_t train_seed) const = 0;
};

/// Harness-level method description, resolved from configuration.
struct MethodSpec {
  std::string name;  // BLR, BD, CD, VD, Ens, EnsAdvA, EnsBS
  DropoutSpec dropout;
  EnsembleSpec ensemble;
};

/// Builds the adapter for a spec; NaN "auto" knobs (the variational KL
/// weight) are resolved here from the preset: kl_weight = 2*sigma^2/N.
std::unique_ptr<MethodUnderTest> make_method(const MethodSpec& spec,
                                             const ExperimentSetup& setup,
                                             const TrainConfig& base_cfg);

// ---------------------------------------------------------------------------
// Repetition protocol and aggregation.

/// Everything recorded for one method at one test input over k repetitions.
/// Failed repetitions keep NaN placeholders; `rep_ok` lives on the set.
struct EvalRecord {
  int input_id = 0;
  VectorXd x;
  std::string label;
  double ground_truth = 0.0;
  bool in_distribution = false;
  std::string method;
  std::vector<UqPrediction> reps;
};

struct RepetitionSet {
  std::string method;
  std::vector<EvalRecord> records;  // one per test input
  std::vector<bool> rep_ok;
  std::vector<std::uint64_t> noise_seeds;
  std::vector<std::uint64_t> train_seeds;
  int k_total = 0;

  int k_effective() const;
};

/// For r = 1..k: redraw the training noise (inputs stay fixed), refit the
/// method with fresh derived seeds, and predict at every test input.
/// Training divergence marks the repetition failed instead of aborting.
RepetitionSet run_repetitions(const ExperimentSetup& setup,
                              const MethodUnderTest& method, int k,
                              std::uint64_t master_seed, int workers = 1);

struct ReportRow {
  int input_id = 0;
  VectorXd x;
  std::string label;
  double ground_truth = 0.0;
  bool in_distribution = false;
  double mean_deviation = 0.0;
  double deviation_stderr = 0.0;
  double mean_uncertainty = 0.0;
  double uncertainty_stderr = 0.0;
  double coverage = 0.0;
  double coverage_stderr = 0.0;
  double rmse = 0.0;  // root mean squared deviation over repetitions
  int k_effective = 0;
};

struct CoverageReport {
  std::string method;
  std::vector<ReportRow> rows;
  int k_total = 0;
  int k_effective = 0;
};

/// Per-input means with standard errors and binomial coverage error bars.
/// Requires at least 90% of the repetitions to have succeeded.
CoverageReport summarize(const RepetitionSet& set);

/// Optimality diagnostic: flags rows where the method reports a smaller mean
/// uncertainty than the anchor while its own repetition RMSE exceeds that
/// uncertainty — the signature of an unjustifiably small error bar.
std::vector<bool> lemma_flags(const CoverageReport& method_report,
                              const CoverageReport& anchor_report);

}  // namespace uqbench
