#include "rawcsi/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "rawcsi/error.h"
#include "rawcsi/rng.h"

namespace rawcsi::harness {

namespace {

constexpr std::uint64_t kShuffleRole = 0x53485546;  // "SHUF"
constexpr std::size_t kEvalBatch = 64;

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string optimizerText(const nn::OptimizerConfig& opt) {
  if (const auto* s = std::get_if<nn::Sgd>(&opt)) {
    return "sgd lr=" + formatDouble(s->lr) + " momentum=" + formatDouble(s->momentum);
  }
  const auto& a = std::get<nn::Adam>(opt);
  return "adam lr=" + formatDouble(a.lr) + " beta1=" + formatDouble(a.beta1) + " beta2=" + formatDouble(a.beta2) +
         " eps=" + formatDouble(a.eps);
}

std::vector<int> labelsOf(const CsiDataset& ds, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(ds.instances[i].label);
  return out;
}

// Consecutive batches of batchSize; a trailing singleton joins the previous
// batch so batch norm always sees N >= 2.
std::vector<std::vector<std::size_t>> makeBatches(const std::vector<std::size_t>& order, std::size_t batchSize) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batchSize) {
    batches.emplace_back(order.begin() + i, order.begin() + std::min(order.size(), i + batchSize));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

FoldReport evaluate(const nn::Network& net, const CsiDataset& test, std::size_t numClasses) {
  FoldReport r;
  r.confusion.assign(numClasses, std::vector<std::uint64_t>(numClasses, 0));
  std::vector<std::size_t> idx(test.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < idx.size(); start += kEvalBatch) {
    const std::span<const std::size_t> chunk(idx.data() + start, std::min(kEvalBatch, idx.size() - start));
    const Tensor probs = net.predict(toBatch(test, chunk));
    for (std::size_t s = 0; s < chunk.size(); ++s) {
      const auto row = probs.data().subspan(s * numClasses, numClasses);
      const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      ++r.confusion[test.instances[chunk[s]].label][pred];
    }
  }
  const auto total = r.total();
  r.trueDetectionRate = total ? static_cast<double>(r.correct()) / static_cast<double>(total) : 0.0;
  return r;
}

}  // namespace

std::string inputModeName(InputMode mode) {
  switch (mode) {
    case InputMode::kRawComplex: return "raw-complex";
    case InputMode::kAmplitudeOnly: return "amplitude-only";
    case InputMode::kSanitizedComplex: return "sanitized-complex";
  }
  return "raw-complex";
}

InputMode parseInputMode(std::string_view text) {
  if (text == "raw-complex") return InputMode::kRawComplex;
  if (text == "amplitude-only") return InputMode::kAmplitudeOnly;
  if (text == "sanitized-complex") return InputMode::kSanitizedComplex;
  fail(Errc::kConfigInvalid, "input mode must be raw-complex, amplitude-only or sanitized-complex");
}

void TrainConfig::validate() const {
  if (batchSize < 2) fail(Errc::kConfigInvalid, "batch size must be at least 2");
  if (epochs < 1) fail(Errc::kConfigInvalid, "epochs must be at least 1");
  pipeline.validate();
}

TrainConfig parseTrainConfig(const KeyValueConfig& kv, const std::string& p) {
  TrainConfig tc;
  const auto opt = kv.getString(p + "optimizer", "adam");
  if (opt == "adam") {
    nn::Adam a;
    a.lr = kv.getDouble(p + "lr", a.lr);
    a.beta1 = kv.getDouble(p + "beta1", a.beta1);
    a.beta2 = kv.getDouble(p + "beta2", a.beta2);
    a.eps = kv.getDouble(p + "eps", a.eps);
    tc.optimizer = a;
  } else if (opt == "sgd") {
    tc.optimizer = nn::Sgd{kv.getDouble(p + "lr", 0.01), kv.getDouble(p + "momentum", 0.0)};
  } else {
    fail(Errc::kConfigInvalid, p + "optimizer must be adam or sgd");
  }
  tc.batchSize = static_cast<std::size_t>(kv.getUint(p + "batch_size", tc.batchSize));
  tc.epochs = static_cast<std::size_t>(kv.getUint(p + "epochs", tc.epochs));
  tc.seed = kv.getUint(p + "seed", tc.seed);
  tc.inputMode = parseInputMode(kv.getString(p + "input_mode", inputModeName(tc.inputMode)));
  tc.pipeline.unwrapThreshold = kv.getDouble("pipeline.unwrap_threshold", tc.pipeline.unwrapThreshold);
  const auto norm = kv.getString("pipeline.normalization", "l2");
  if (norm == "l2") {
    tc.pipeline.normalization = sigproc::Normalization::kL2PerMeasurement;
  } else if (norm == "max") {
    tc.pipeline.normalization = sigproc::Normalization::kMaxPerMeasurement;
  } else if (norm == "none") {
    tc.pipeline.normalization = sigproc::Normalization::kNone;
  } else {
    fail(Errc::kConfigInvalid, "pipeline.normalization must be l2, max or none");
  }
  tc.pipeline.sanitize = kv.getBool("pipeline.sanitize", tc.pipeline.sanitize);
  const auto fit = kv.getString("pipeline.slope_fit", "endpoints");
  if (fit == "endpoints") {
    tc.pipeline.slopeFit = sigproc::SlopeFit::kEndpoints;
  } else if (fit == "least-squares") {
    tc.pipeline.slopeFit = sigproc::SlopeFit::kLeastSquares;
  } else {
    fail(Errc::kConfigInvalid, "pipeline.slope_fit must be endpoints or least-squares");
  }
  if (kv.getBool(p + "early_stop", false)) {
    EarlyStop es;
    es.patience = static_cast<std::size_t>(kv.getUint(p + "early_stop.patience", es.patience));
    es.minDelta = kv.getDouble(p + "early_stop.min_delta", es.minDelta);
    tc.earlyStop = es;
  }
  tc.validate();
  return tc;
}

std::uint64_t FoldReport::total() const {
  std::uint64_t t = 0;
  for (const auto& row : confusion) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::uint64_t FoldReport::correct() const {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) c += confusion[i][i];
  return c;
}

bool RunReport::sameResults(const RunReport& o) const {
  return folds == o.folds && meanRate == o.meanRate && stdRate == o.stdRate && configDigest == o.configDigest &&
         inputMode == o.inputMode && seed == o.seed;
}

void aggregate(RunReport& report) {
  std::vector<double> rates;
  for (const auto& f : report.folds)
    if (!f.failed) rates.push_back(f.trueDetectionRate);
  report.meanRate = 0.0;
  report.stdRate = 0.0;
  if (rates.empty()) return;
  report.meanRate = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
  if (rates.size() > 1) {
    double ss = 0.0;
    for (double r : rates) ss += (r - report.meanRate) * (r - report.meanRate);
    report.stdRate = std::sqrt(ss / static_cast<double>(rates.size() - 1));
  }
}

CsiDataset preprocessDataset(const CsiDataset& ds, InputMode mode, const sigproc::PipelineConfig& cfg) {
  ds.validate();
  if (mode == InputMode::kRawComplex) return ds;
  CsiDataset out = ds;
  out.meta["input_mode"] = inputModeName(mode);
  for (auto& inst : out.instances) {
    if (mode == InputMode::kAmplitudeOnly) {
      const Tensor amp = sigproc::normalizeAmplitude(sigproc::amplitude(inst), cfg.normalization);
      inst.planes = interleave(amp, Tensor(amp.shape()));
    } else {
      inst = sigproc::sanitizedComplex(inst, cfg).instance;
    }
  }
  return out;
}

Tensor toBatch(const CsiDataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) fail(Errc::kEmptyInput, "empty batch");
  const Shape& s = ds.instances[indices.front()].planes.shape();
  const std::size_t per = shapeProduct(s);
  Tensor batch({indices.size(), s[0], s[1], s[2]});
  double* dst = batch.data().data();
  for (auto i : indices) {
    const auto& p = ds.instances.at(i).planes;
    if (p.shape() != s) fail(Errc::kHeterogeneousShapes, "instance " + std::to_string(i));
    dst = std::copy_n(p.data().data(), per, dst);
  }
  return batch;
}

TrainOutcome trainModel(const CsiDataset& trainIn, const CsiDataset& testIn, const framework::ArchitectureSpec& arch,
                        const TrainConfig& tc) {
  tc.validate();
  framework::validate(arch);
  const auto s = trainIn.shape();
  const framework::InputShape expected{2 * s.m, s.n, s.c};
  if (expected != arch.input || testIn.shape() != s) {
    fail(Errc::kShapeMismatch, "dataset shape does not match the architecture input");
  }
  if (trainIn.numClasses() != arch.numClasses || testIn.numClasses() != arch.numClasses) {
    fail(Errc::kShapeMismatch, "label space does not match numClasses");
  }
  if (trainIn.size() < 2) fail(Errc::kBatchTooSmall, "need at least 2 training instances");

  const CsiDataset train = preprocessDataset(trainIn, tc.inputMode, tc.pipeline);
  const CsiDataset test = preprocessDataset(testIn, tc.inputMode, tc.pipeline);

  nn::Network net = framework::build(arch, tc.seed);
  nn::Optimizer opt(tc.optimizer);
  FoldReport report;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  double bestLoss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    auto engine = makeEngine(tc.seed, {kShuffleRole, epoch});
    shuffle(order.begin(), order.end(), engine);
    double sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : makeBatches(order, tc.batchSize)) {
      const auto labels = labelsOf(train, batch);
      auto lg = net.backward(toBatch(train, batch), labels);
      if (!std::isfinite(lg.loss)) {
        fail(Errc::kDivergedLoss, "loss became non-finite in epoch " + std::to_string(epoch));
      }
      opt.step(net.parameters().tensors(), lg.gradients.tensors());
      sum += lg.loss * static_cast<double>(batch.size());
      seen += batch.size();
    }
    const double epochLoss = sum / static_cast<double>(seen);
    report.lossCurve.push_back(epochLoss);
    if (tc.earlyStop) {
      if (epochLoss < bestLoss - tc.earlyStop->minDelta) {
        bestLoss = epochLoss;
        stale = 0;
      } else if (++stale >= tc.earlyStop->patience) {
        break;
      }
    }
  }

  net.freeze();
  FoldReport eval = evaluate(net, test, arch.numClasses);
  report.confusion = std::move(eval.confusion);
  report.trueDetectionRate = eval.trueDetectionRate;
  return {std::move(report), std::move(net)};
}

FoldReport trainOnce(const CsiDataset& train, const CsiDataset& test, const framework::ArchitectureSpec& arch,
                     const TrainConfig& tc) {
  return trainModel(train, test, arch, tc).fold;
}

std::string configDigest(const framework::ArchitectureSpec& arch, const TrainConfig& tc) {
  std::ostringstream os;
  os << framework::serialize(arch) << optimizerText(tc.optimizer) << "\nbatch=" << tc.batchSize
     << "\nepochs=" << tc.epochs << "\nseed=" << tc.seed;
  if (tc.earlyStop) os << "\nearly_stop=" << tc.earlyStop->patience << "," << formatDouble(tc.earlyStop->minDelta);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

RunReport crossValidate(const CsiDataset& ds, const framework::ArchitectureSpec& arch, const TrainConfig& tc,
                        std::size_t k, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const FoldPlan plan = makeFolds(ds, k, seed);
  RunReport report;
  report.seed = seed;
  report.inputMode = inputModeName(tc.inputMode);
  TrainConfig digestCfg = tc;
  digestCfg.seed = seed;
  report.configDigest = configDigest(arch, digestCfg);
  for (std::size_t f = 0; f < k; ++f) {
    const auto trainIdx = plan.trainIndices(f);
    const auto testIdx = plan.testIndices(f);
    TrainConfig foldCfg = tc;
    foldCfg.seed = mix64(seed ^ f);
    try {
      report.folds.push_back(trainOnce(ds.subset(trainIdx), ds.subset(testIdx), arch, foldCfg));
    } catch (const Error& e) {
      if (e.code() != Errc::kDivergedLoss) throw;
      FoldReport failed;
      failed.failed = true;
      failed.failure = e.what();
      failed.confusion.assign(arch.numClasses, std::vector<std::uint64_t>(arch.numClasses, 0));
      report.folds.push_back(std::move(failed));
    }
  }
  aggregate(report);
  report.wallClockSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

RunReport crossValidatePerUser(const CsiDataset& ds, const framework::ArchitectureSpec& arch,
                               const TrainConfig& tc, std::size_t k, std::uint64_t seed) {
  const auto it = ds.meta.find(kUserMetaKey);
  if (it == ds.meta.end()) return crossValidate(ds, arch, tc, k, seed);
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::string> users;
  std::stringstream ss(it->second);
  for (std::string u; std::getline(ss, u, ',');) users.push_back(u);
  if (users.size() != ds.size()) {
    fail(Errc::kInvariantViolation, "user key lists " + std::to_string(users.size()) + " ids for " +
                                        std::to_string(ds.size()) + " instances");
  }
  std::map<std::string, std::vector<std::size_t>> byUser;
  for (std::size_t i = 0; i < users.size(); ++i) byUser[users[i]].push_back(i);

  RunReport report;
  report.seed = seed;
  report.inputMode = inputModeName(tc.inputMode);
  TrainConfig digestCfg = tc;
  digestCfg.seed = seed;
  report.configDigest = configDigest(arch, digestCfg);
  std::vector<double> userMeans;
  for (const auto& [user, idx] : byUser) {
    CsiDataset part = ds.subset(idx);
    part.meta.erase(kUserMetaKey);
    auto r = crossValidate(part, arch, tc, k, seed);
    userMeans.push_back(r.meanRate);
    for (auto& f : r.folds) report.folds.push_back(std::move(f));
  }
  aggregate(report);
  // Macro average: every user counts once regardless of instance count.
  report.meanRate = std::accumulate(userMeans.begin(), userMeans.end(), 0.0) / static_cast<double>(userMeans.size());
  report.wallClockSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<AblationRow> runAblation(const CsiDataset& ds, const framework::ArchitectureSpec& base,
                                     std::span<const framework::Knob> knobs, const TrainConfig& tc, std::size_t k) {
  std::vector<framework::ArchitectureSpec> specs;
  for (const auto& knob : knobs) specs.push_back(framework::ablate(base, knob));

  std::vector<AblationRow> rows;
  rows.push_back({"baseline", base, crossValidate(ds, base, tc, k, tc.seed), false});
  for (std::size_t i = 0; i < knobs.size(); ++i) {
    if (specs[i] == base) {
      rows.push_back({framework::knobName(knobs[i]), specs[i], rows.front().report, true});
    } else {
      rows.push_back({framework::knobName(knobs[i]), specs[i], crossValidate(ds, specs[i], tc, k, tc.seed), false});
    }
  }
  return rows;
}

}  // namespace rawcsi::harness
