// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// gating criterion fails. Tolerances and budgets are fixed here on purpose.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rawcsi/framework.h"
#include "rawcsi/harness.h"
#include "rawcsi/nn/checkpoint.h"
#include "rawcsi/nn/gradcheck.h"
#include "rawcsi/sigproc.h"
#include "rawcsi/synth.h"

namespace {

using namespace rawcsi;
using Clock = std::chrono::steady_clock;

constexpr double kPi = std::numbers::pi;

// Smaller filter banks keep the six-run sweeps inside their wall-clock budget
// on a single core; the learnability run uses the full preset.
constexpr std::size_t kSweepFilters = 16;
constexpr std::size_t kEpochs = 5;
constexpr std::size_t kTrainPerClass = 200;
constexpr std::size_t kTestPerClass = 50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool report(int id, const char* name, bool gating, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secondsSince(t0));
  std::fflush(stdout);
  return o.pass || !gating;
}

// Instance-major generation puts the first t * K entries at t per class.
std::pair<CsiDataset, CsiDataset> split(const CsiDataset& ds, std::size_t classes) {
  std::vector<std::size_t> tr, te;
  for (std::size_t i = 0; i < ds.size(); ++i) (i < kTrainPerClass * classes ? tr : te).push_back(i);
  return {ds.subset(tr), ds.subset(te)};
}

synth::SynthConfig deskConfig(std::uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.instancesPerClass = kTrainPerClass + kTestPerClass;
  cfg.seed = seed;
  return cfg;
}

harness::TrainConfig budget(std::uint64_t seed) {
  harness::TrainConfig tc;
  tc.epochs = kEpochs;
  tc.seed = seed;
  return tc;
}

framework::InputShape inputOf(const synth::SynthConfig& cfg) { return {2 * cfg.m, cfg.n, cfg.c}; }

double trainAndScore(const synth::SynthConfig& cfg, const framework::ArchitectureSpec& arch, std::uint64_t seed) {
  const auto [train, test] = split(synth::generate(cfg), cfg.numClasses);
  return harness::trainOnce(train, test, arch, budget(seed)).trueDetectionRate;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  const auto results = nn::runGradientChecks({});
  const double secs = secondsSince(t0);
  bool ok = secs < 120.0;
  std::string d;
  for (const auto& r : results) {
    ok = ok && r.passed && r.configs >= 20;
    d += r.layer + "=" + fmt("%.2e", r.maxRelError) + " ";
  }
  return {ok, d + "(tol 1e-4, 20 configs/layer)"};
}

Outcome signalAlgebra() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> wrapped(-kPi, kPi), slope(-3.0, 3.0), offset(-10.0, 10.0);
  std::uniform_int_distribution<std::size_t> len(2, 64);
  double worstLinear = 0.0, worstIdem = 0.0, worstStep = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = len(rng);
    std::vector<double> p(n), lin(n);
    const double a = slope(rng), b = offset(rng);
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = wrapped(rng);
      lin[j] = a * static_cast<double>(j) + b;
    }
    const auto u = sigproc::unwrap(p);
    const auto uu = sigproc::unwrap(u);
    for (std::size_t j = 0; j < n; ++j) worstIdem = std::max(worstIdem, std::abs(uu[j] - u[j]));
    for (std::size_t j = 1; j < n; ++j) worstStep = std::max(worstStep, std::abs(u[j] - u[j - 1]));
    for (double v : sigproc::sanitize(lin)) worstLinear = std::max(worstLinear, std::abs(v));
  }

  synth::SynthConfig cfg;
  cfg.numClasses = 4;
  cfg.instancesPerClass = 10;
  cfg.c = 3;
  double worstPolar = 0.0;
  for (const auto& inst : synth::generate(cfg).instances) {
    const Tensor amp = sigproc::amplitude(inst);
    const auto ph = sigproc::phase(inst);
    for (std::size_t i = 0; i < inst.m(); ++i)
      for (std::size_t j = 0; j < inst.n(); ++j)
        for (std::size_t k = 0; k < inst.c(); ++k) {
          const double r = amp.at(i, j, k), th = ph.values.at(i, j, k);
          const auto z = inst.complexAt(i, j, k);
          worstPolar = std::max({worstPolar, std::abs(r * std::cos(th) - z.real()), std::abs(r * std::sin(th) - z.imag())});
        }
  }
  const double secs = secondsSince(t0);
  const bool ok = worstLinear < 1e-12 && worstIdem == 0.0 && worstStep <= kPi && worstPolar < 1e-12 && secs < 30.0;
  return {ok, "linear " + fmt("%.1e", worstLinear) + ", idempotence " + fmt("%.1e", worstIdem) + ", max step " +
                  fmt("%.4f", worstStep) + ", polar " + fmt("%.1e", worstPolar)};
}

Outcome unwrapInstability() {
  const auto pair = sigproc::straddlingPair();
  const auto probe = sigproc::unwrapInstabilityProbe(pair.a, pair.b);
  bool ok = probe.preDist < 0.1 && probe.postDist > 2 * kPi - 0.2;

  const std::string csv = "acceptance_demo_unwrap.csv";
  const std::string cmd = std::string("\"") + RAWCSI_CLI + "\" demo-unwrap --out " + csv + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  ok = ok && rc == 0 && header == "subcarrier,rawA,rawB,unwrappedA,unwrappedB" && rows == pair.a.size();
  std::remove(csv.c_str());
  return {ok, "preDist " + fmt("%.4f", probe.preDist) + ", postDist " + fmt("%.4f", probe.postDist) + ", csv rows " +
                  std::to_string(rows)};
}

Outcome learnability() {
  const auto t0 = Clock::now();
  const auto cfg = deskConfig(1);
  const auto clean = synth::generate(synth::impairmentFree(cfg));
  const auto [ctr, cte] = split(clean, cfg.numClasses);
  const double oracle = synth::nearestCentroidAccuracy(ctr, cte);
  if (oracle != 1.0) return {false, "nearest-centroid on clean data " + fmt("%.4f", oracle)};

  const double rate = trainAndScore(cfg, framework::activityPreset(inputOf(cfg), cfg.numClasses), 1);
  const double secs = secondsSince(t0);
  return {rate >= 0.95 && secs < 600.0,
          "oracle 1.0, rate " + fmt("%.4f", rate) + " (need >= 0.95, " + std::to_string(kEpochs) + " epochs)"};
}

Outcome batchNormAblation() {
  bool ok = true;
  std::string d;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto cfg = deskConfig(seed);
    cfg.ampScaleRange = {0.1, 10.0};
    const auto arch = framework::activityPreset(inputOf(cfg), cfg.numClasses, kSweepFilters);
    const double on = trainAndScore(cfg, arch, seed);
    const double off = trainAndScore(cfg, framework::ablate(arch, framework::BatchNormOff{}), seed);
    ok = ok && on - off >= 0.25;
    d += "seed " + std::to_string(seed) + " on " + fmt("%.3f", on) + " off " + fmt("%.3f", off) + "; ";
  }
  return {ok, d + "need gap >= 0.25 on every seed"};
}

Outcome rfiRobustness() {
  const auto t0 = Clock::now();
  double sumClean = 0.0, sumRfi = 0.0, worstRfi = 1.0;
  std::string d;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto cfg = deskConfig(seed);
    const auto arch = framework::activityPreset(inputOf(cfg), cfg.numClasses, kSweepFilters);
    const double clean = trainAndScore(cfg, arch, seed);
    cfg.rfi = synth::RfiConfig{};
    const double rfi = trainAndScore(cfg, arch, seed);
    sumClean += clean;
    sumRfi += rfi;
    worstRfi = std::min(worstRfi, rfi);
    d += "seed " + std::to_string(seed) + " clean " + fmt("%.3f", clean) + " rfi " + fmt("%.3f", rfi) + "; ";
  }
  const double secs = secondsSince(t0);
  const bool ok = sumRfi < sumClean && worstRfi >= 0.70 && secs < 900.0;
  return {ok, d + "mean drop " + fmt("%.4f", (sumClean - sumRfi) / 3.0)};
}

std::string slurpConfig(const std::string& path) {
  std::ifstream in(path);
  std::string out, line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out += line + "\n";
  }
  return out;
}

Outcome determinismAndFormats() {
  synth::SynthConfig cfg;
  cfg.numClasses = 3;
  cfg.instancesPerClass = 6;
  cfg.c = 2;
  const auto ds = synth::generate(cfg);
  std::stringstream a;
  writeDataset(ds, a);
  std::stringstream back(a.str());
  std::stringstream b;
  writeDataset(readDataset(back), b);
  const bool csit = a.str() == b.str();

  const auto arch = framework::activityPreset(inputOf(cfg), cfg.numClasses, 4);
  const auto net = framework::build(arch, 5);
  std::stringstream c1;
  nn::writeCheckpoint(net, c1);
  auto reloaded = framework::build(arch, 99);
  std::stringstream src(c1.str());
  nn::loadCheckpoint(reloaded, nn::readTensors(src));
  std::stringstream c2;
  nn::writeCheckpoint(reloaded, c2);
  const bool ckpt = c1.str() == c2.str();

  auto tc = budget(2);
  tc.epochs = 2;
  const auto r1 = harness::crossValidate(ds, arch, tc, 3, 2);
  const auto r2 = harness::crossValidate(ds, arch, tc, 3, 2);
  std::ostringstream j1, j2;
  auto strip = [](harness::RunReport r) {
    r.wallClockSeconds = 0.0;
    return r;
  };
  harness::emitReport(strip(r1), "json", j1);
  harness::emitReport(strip(r2), "json", j2);
  const bool runs = r1.sameResults(r2) && j1.str() == j2.str();

  const std::string dir = RAWCSI_GOLDEN_DIR;
  const bool signfi = slurpConfig(dir + "/signfi_preset.cfg") ==
                      framework::serialize(framework::signfiPreset({400, 30, 3}, 276), "arch.");
  const bool activity = slurpConfig(dir + "/activity_preset.cfg") ==
                        framework::serialize(framework::activityPreset({10, 52, 1}, 8), "arch.");
  const bool ok = csit && ckpt && runs && signfi && activity;
  auto yn = [](bool v) { return v ? "ok" : "MISMATCH"; };
  return {ok, std::string("csit ") + yn(csit) + ", checkpoint " + yn(ckpt) + ", run reports " + yn(runs) +
                  ", signfi golden " + yn(signfi) + ", activity golden " + yn(activity)};
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report(1, "gradient-correctness", true, gradients);
  ok &= report(2, "signal-processing-algebra", true, signalAlgebra);
  ok &= report(3, "unwrap-instability", true, unwrapInstability);
  ok &= report(4, "synthetic-learnability", true, learnability);
  ok &= report(5, "batchnorm-ablation-trend", true, batchNormAblation);
  ok &= report(6, "rfi-robustness", true, rfiRobustness);
  ok &= report(7, "determinism-and-formats", true, determinismAndFormats);
  std::printf("SKIP 8 real-signfi-crossval: needs the converted public dataset, run by hand\n");
  return ok ? 0 : 1;
}
