#include "uqbench/eval.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "uqbench/errors.hpp"
#include "uqbench/rng.hpp"
#include "uqbench/textio.hpp"

namespace uqbench {

double deviation(double pred_mean, double truth) {
  if (!std::isfinite(pred_mean) || !std::isfinite(truth)) {
    throw InvalidArgument("deviation: inputs must be finite");
  }
  return std::abs(pred_mean - truth);
}

bool covered(const UqPrediction& pred, double truth) {
  return deviation(pred.mean, truth) <= 1.96 * pred.std;
}

std::vector<NamedInput> default_named_inputs(const ExperimentPreset& preset) {
  std::vector<NamedInput> named;
  switch (preset.id) {
    case ExperimentId::E1:
      for (double v : {-2.38, 1.2, -5.11}) {
        VectorXd x(1);
        x[0] = v;
        named.push_back({"x=" + format_double(v), x});
      }
      break;
    case ExperimentId::E2:
      for (double lambda : {0.5996, 0.074}) {
        const int d = preset.model.basis.input_dim();
        VectorXd x(d);
        for (int j = 0; j < d; ++j) {
          x[j] = (1.0 - lambda) * preset.test_design.lo[j] +
                 lambda * preset.test_design.hi[j];
        }
        named.push_back({"lambda=" + format_double(lambda), x});
      }
      break;
    case ExperimentId::E3:
      break;
  }
  return named;
}

ExperimentSetup make_setup(const ExperimentPreset& preset,
                           const std::vector<NamedInput>& named) {
  ExperimentSetup setup{preset, preset.train_inputs(), {}, 0};
  const std::vector<VectorXd> grid = preset.test_inputs();
  setup.grid_size = static_cast<int>(grid.size());
  setup.test_inputs.reserve(grid.size() + named.size());
  int id = 0;
  for (const VectorXd& x : grid) {
    setup.test_inputs.push_back(TestInput{id++, x, "", preset.model.truth_at(x),
                                          preset.in_train_box(x)});
  }
  for (const NamedInput& n : named) {
    setup.test_inputs.push_back(TestInput{id++, n.x, n.label,
                                          preset.model.truth_at(n.x),
                                          preset.in_train_box(n.x)});
  }
  return setup;
}

ExperimentSetup make_setup(const ExperimentPreset& preset) {
  return make_setup(preset, default_named_inputs(preset));
}

std::vector<UqPrediction> FittedMethod::predict_all(
    const std::vector<TestInput>& inputs, Rng& rng) const {
  std::vector<UqPrediction> preds;
  preds.reserve(inputs.size());
  for (const TestInput& input : inputs) {
    preds.push_back(predict(input.x, rng));
  }
  return preds;
}

namespace {

class BlrFitted : public FittedMethod {
 public:
  BlrFitted(BlrPosterior post, const BasisFunction& basis)
      : post_(std::move(post)), basis_(basis) {}

  UqPrediction predict(const VectorXd& x, Rng&) const override {
    return predict_blr(post_, basis_, x);
  }

  const BlrPosterior& posterior() const { return post_; }

 private:
  BlrPosterior post_;
  BasisFunction basis_;
};

class BlrMethod : public MethodUnderTest {
 public:
  BlrMethod(BasisFunction basis, double sigma)
      : basis_(std::move(basis)), sigma_(sigma) {}

  std::string name() const override { return "BLR"; }

  std::unique_ptr<FittedMethod> fit(const Dataset& data,
                                    std::uint64_t) const override {
    return std::make_unique<BlrFitted>(fit_blr(basis_, data, sigma_), basis_);
  }

 private:
  BasisFunction basis_;
  double sigma_;
};

class DropoutFitted : public FittedMethod {
 public:
  DropoutFitted(DropoutModel model, int mc_samples)
      : model_(std::move(model)), mc_samples_(mc_samples) {}

  UqPrediction predict(const VectorXd& x, Rng& rng) const override {
    return predict_dropout(model_, x, mc_samples_, rng.raw());
  }

 private:
  DropoutModel model_;
  int mc_samples_;
};

class DropoutMethod : public MethodUnderTest {
 public:
  DropoutMethod(std::string name, Architecture arch, TrainConfig cfg,
                DropoutSpec spec)
      : name_(std::move(name)), arch_(std::move(arch)), cfg_(cfg), spec_(spec) {}

  std::string name() const override { return name_; }

  std::unique_ptr<FittedMethod> fit(const Dataset& data,
                                    std::uint64_t train_seed) const override {
    TrainConfig cfg = cfg_;
    cfg.seed = train_seed;
    DropoutModel model;
    switch (spec_.mode) {
      case DropoutMode::FixedRate:
        model = train_bd(arch_, data, cfg, spec_);
        break;
      case DropoutMode::Concrete:
        model = train_cd(arch_, data, cfg, spec_);
        break;
      case DropoutMode::Variational:
        model = train_vd(arch_, data, cfg, spec_);
        break;
    }
    return std::make_unique<DropoutFitted>(std::move(model), spec_.mc_samples);
  }

 private:
  std::string name_;
  Architecture arch_;
  TrainConfig cfg_;
  DropoutSpec spec_;
};

class EnsembleFitted : public FittedMethod {
 public:
  explicit EnsembleFitted(EnsembleModel model) : model_(std::move(model)) {}

  UqPrediction predict(const VectorXd& x, Rng&) const override {
    return predict_ensemble(model_, x);
  }

  std::vector<UqPrediction> predict_all(const std::vector<TestInput>& inputs,
                                        Rng&) const override {
    MatrixXd packed(model_.arch.input_dim(),
                    static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      packed.col(static_cast<Eigen::Index>(i)) = inputs[i].x;
    }
    return predict_ensemble_many(model_, packed);
  }

 private:
  EnsembleModel model_;
};

class EnsembleMethod : public MethodUnderTest {
 public:
  EnsembleMethod(std::string name, Architecture arch, TrainConfig cfg,
                 EnsembleSpec spec)
      : name_(std::move(name)), arch_(std::move(arch)), cfg_(cfg), spec_(spec) {}

  std::string name() const override { return name_; }

  std::unique_ptr<FittedMethod> fit(const Dataset& data,
                                    std::uint64_t train_seed) const override {
    TrainConfig cfg = cfg_;
    cfg.seed = train_seed;
    return std::make_unique<EnsembleFitted>(
        train_ensemble(arch_, data, cfg, spec_));
  }

 private:
  std::string name_;
  Architecture arch_;
  TrainConfig cfg_;
  EnsembleSpec spec_;
};

}  // namespace

std::unique_ptr<MethodUnderTest> make_method(const MethodSpec& spec,
                                             const ExperimentSetup& setup,
                                             const TrainConfig& base_cfg) {
  const GenerativeModel& model = setup.preset.model;
  if (spec.name == "BLR") {
    return std::make_unique<BlrMethod>(model.basis, model.sigma);
  }

  const Architecture arch = make_architecture(model.basis.input_dim());
  if (spec.name == "BD" || spec.name == "CD" || spec.name == "VD") {
    DropoutSpec dropout = spec.dropout;
    if (std::isnan(dropout.kl_weight)) {
      dropout.kl_weight = 2.0 * model.sigma * model.sigma /
                          static_cast<double>(setup.train_inputs.size());
    }
    dropout.mode = spec.name == "BD"   ? DropoutMode::FixedRate
                   : spec.name == "CD" ? DropoutMode::Concrete
                                       : DropoutMode::Variational;
    return std::make_unique<DropoutMethod>(spec.name, arch, base_cfg, dropout);
  }
  if (spec.name == "Ens" || spec.name == "EnsAdvA" || spec.name == "EnsBS") {
    EnsembleSpec ensemble = spec.ensemble;
    ensemble.mode = spec.name == "Ens"      ? EnsembleMode::Standard
                    : spec.name == "EnsAdvA" ? EnsembleMode::Adversarial
                                             : EnsembleMode::Bootstrap;
    return std::make_unique<EnsembleMethod>(spec.name, arch, base_cfg, ensemble);
  }
  throw InvalidArgument("unknown method name: " + spec.name);
}

int RepetitionSet::k_effective() const {
  int n = 0;
  for (bool ok : rep_ok) n += ok ? 1 : 0;
  return n;
}

RepetitionSet run_repetitions(const ExperimentSetup& setup,
                              const MethodUnderTest& method, int k,
                              std::uint64_t master_seed, int workers) {
  if (k < 1) throw InvalidArgument("run_repetitions: k must be >= 1");
  if (workers < 1) workers = 1;

  const std::size_t inputs = setup.test_inputs.size();
  RepetitionSet set;
  set.method = method.name();
  set.k_total = k;
  set.rep_ok.assign(k, false);
  set.noise_seeds.resize(k);
  set.train_seeds.resize(k);
  for (int r = 0; r < k; ++r) {
    set.noise_seeds[r] =
        mix_seed(master_seed, SeedPurpose::kNoise, static_cast<std::uint64_t>(r));
    set.train_seeds[r] = mix_seed(master_seed, SeedPurpose::kMethodTrain,
                                  static_cast<std::uint64_t>(r));
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  set.records.reserve(inputs);
  for (const TestInput& input : setup.test_inputs) {
    EvalRecord rec;
    rec.input_id = input.id;
    rec.x = input.x;
    rec.label = input.label;
    rec.ground_truth = input.ground_truth;
    rec.in_distribution = input.in_distribution;
    rec.method = method.name();
    rec.reps.assign(k, UqPrediction{nan, nan});
    set.records.push_back(std::move(rec));
  }

  auto run_one = [&](int r) {
    const Dataset data = sample_observations(setup.preset.model,
                                             setup.train_inputs,
                                             set.noise_seeds[r]);
    try {
      const std::unique_ptr<FittedMethod> fitted =
          method.fit(data, set.train_seeds[r]);
      Rng predict_rng(mix_seed(master_seed, SeedPurpose::kPrediction,
                               static_cast<std::uint64_t>(r)));
      const std::vector<UqPrediction> preds =
          fitted->predict_all(setup.test_inputs, predict_rng);
      for (std::size_t i = 0; i < inputs; ++i) {
        set.records[i].reps[r] = preds[i];
      }
      set.rep_ok[r] = true;
    } catch (const TrainingDiverged&) {
      set.rep_ok[r] = false;  // divergence is a finding, not an abort
    }
  };

  if (workers == 1 || k == 1) {
    for (int r = 0; r < k; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= k) return;
        run_one(r);
      }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min(workers, k);
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return set;
}

namespace {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_and_stderr(const std::vector<double>& values) {
  const std::size_t n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  const double sample_std = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, sample_std / std::sqrt(static_cast<double>(n))};
}

}  // namespace

CoverageReport summarize(const RepetitionSet& set) {
  if (set.records.empty()) {
    throw InvalidArgument("summarize: no records");
  }
  const int k_eff = set.k_effective();
  if (10 * k_eff < 9 * set.k_total) {
    throw InsufficientData("summarize: only " + std::to_string(k_eff) + " of " +
                           std::to_string(set.k_total) +
                           " repetitions succeeded");
  }

  CoverageReport report;
  report.method = set.method;
  report.k_total = set.k_total;
  report.k_effective = k_eff;
  report.rows.reserve(set.records.size());

  std::vector<double> devs, uncs;
  for (const EvalRecord& rec : set.records) {
    devs.clear();
    uncs.clear();
    int covered_count = 0;
    double dev_sq_sum = 0.0;
    for (int r = 0; r < set.k_total; ++r) {
      if (!set.rep_ok[r]) continue;
      const UqPrediction& pred = rec.reps[r];
      const double dev = deviation(pred.mean, rec.ground_truth);
      devs.push_back(dev);
      uncs.push_back(pred.std);
      dev_sq_sum += dev * dev;
      if (covered(pred, rec.ground_truth)) ++covered_count;
    }
    const MeanStderr dev_stats = mean_and_stderr(devs);
    const MeanStderr unc_stats = mean_and_stderr(uncs);
    const double p_hat =
        static_cast<double>(covered_count) / static_cast<double>(k_eff);

    ReportRow row;
    row.input_id = rec.input_id;
    row.x = rec.x;
    row.label = rec.label;
    row.ground_truth = rec.ground_truth;
    row.in_distribution = rec.in_distribution;
    row.mean_deviation = dev_stats.mean;
    row.deviation_stderr = dev_stats.stderr_;
    row.mean_uncertainty = unc_stats.mean;
    row.uncertainty_stderr = unc_stats.stderr_;
    row.coverage = p_hat;
    row.coverage_stderr =
        std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(k_eff));
    row.rmse = std::sqrt(dev_sq_sum / static_cast<double>(k_eff));
    row.k_effective = k_eff;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<bool> lemma_flags(const CoverageReport& method_report,
                              const CoverageReport& anchor_report) {
  if (method_report.rows.size() != anchor_report.rows.size()) {
    throw InvalidArgument("lemma_flags: reports cover different inputs");
  }
  std::vector<bool> flags(method_report.rows.size(), false);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const ReportRow& row = method_report.rows[i];
    const ReportRow& anchor = anchor_report.rows[i];
    flags[i] = row.mean_uncertainty < anchor.mean_uncertainty &&
               row.rmse > row.mean_uncertainty;
  }
  return flags;
}

}  // namespace uqbench
