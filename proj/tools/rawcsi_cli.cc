// rawcsi: command-line front end for dataset synthesis, preprocessing,
// training, cross-validation and ablation runs.
//
// Exit codes: 0 success, 1 failed check (gradcheck), 2 usage, 3 data, 4 diverged.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rawcsi/csi.h"
#include "rawcsi/error.h"
#include "rawcsi/framework.h"
#include "rawcsi/harness.h"
#include "rawcsi/keyvalue.h"
#include "rawcsi/nn/checkpoint.h"
#include "rawcsi/nn/gradcheck.h"
#include "rawcsi/sigproc.h"
#include "rawcsi/synth.h"

namespace {

using namespace rawcsi;

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct Globals {
  std::string configPath;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

KeyValueConfig loadConfig(const Globals& g) {
  KeyValueConfig kv = g.configPath.empty() ? KeyValueConfig() : KeyValueConfig::load(g.configPath);
  if (g.seed) {
    const auto s = std::to_string(*g.seed);
    kv.set("synth.seed", s);
    kv.set("train.seed", s);
  }
  return kv;
}

// Runs `body` with the chosen sink: --out file or stdout.
template <typename Body>
void withSink(const std::string& out, bool binary, Body body) {
  if (out.empty() || out == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(out, binary ? std::ios::binary : std::ios::out);
  if (!f) fail(Errc::kIoFailure, "cannot open " + out + " for writing");
  body(f);
  f.close();
  if (!f) fail(Errc::kIoFailure, "write to " + out + " failed");
}

void requireFormat(const std::string& f) {
  if (f != "json" && f != "csv") fail(Errc::kUsage, "--format must be json or csv");
}

// arch.preset selects activity (default) or signfi sized to the dataset;
// arch.preset = custom reads the full arch.* layout.
framework::ArchitectureSpec architectureFor(const KeyValueConfig& kv, const CsiDataset& ds) {
  const auto s = ds.shape();
  const framework::InputShape input{2 * s.m, s.n, s.c};
  const auto preset = kv.getString("arch.preset", "activity");
  const auto filters = static_cast<std::size_t>(kv.getUint("arch.filters", framework::kDefaultFilters));
  framework::ArchitectureSpec arch;
  if (preset == "activity") {
    arch = framework::activityPreset(input, ds.numClasses(), filters);
  } else if (preset == "signfi") {
    arch = framework::signfiPreset(input, ds.numClasses(), filters);
  } else if (preset == "custom") {
    arch = framework::parseArchitecture(kv, "arch.");
  } else {
    fail(Errc::kConfigInvalid, "arch.preset must be activity, signfi or custom");
  }
  framework::validate(arch);
  return arch;
}

std::uint64_t runSeed(const KeyValueConfig& kv) { return kv.getUint("train.seed", 1); }

bool anyFailed(const harness::RunReport& r) {
  for (const auto& f : r.folds)
    if (f.failed) return true;
  return false;
}

int cmdSynth(const Globals& g, bool sanity) {
  const auto kv = loadConfig(g);
  const auto cfg = synth::parseSynthConfig(kv);
  if (g.out.empty()) fail(Errc::kUsage, "synth needs --out <file.csit>");
  saveDataset(synth::generate(cfg), g.out);
  if (sanity) {
    const auto r = synth::oracleSanityCheck(cfg);
    std::cerr << "nearest-centroid clean=" << formatDouble(r.cleanAccuracy)
              << " impaired=" << formatDouble(r.impairedAccuracy) << '\n';
  }
  return 0;
}

int cmdPreprocess(const Globals& g, const std::string& in, const std::string& mode) {
  const auto kv = loadConfig(g);
  auto tc = harness::parseTrainConfig(kv);
  if (!mode.empty()) tc.inputMode = harness::parseInputMode(mode);
  if (g.out.empty()) fail(Errc::kUsage, "preprocess needs --out <file.csit>");
  saveDataset(harness::preprocessDataset(loadDataset(in), tc.inputMode, tc.pipeline), g.out);
  return 0;
}

int cmdTrain(const Globals& g, const std::string& trainPath, const std::string& testPath,
             const std::string& checkpoint) {
  requireFormat(g.format);
  const auto kv = loadConfig(g);
  const auto tc = harness::parseTrainConfig(kv);
  const auto train = loadDataset(trainPath);
  const auto test = loadDataset(testPath);
  const auto arch = architectureFor(kv, train);
  harness::RunReport report;
  report.seed = tc.seed;
  report.inputMode = harness::inputModeName(tc.inputMode);
  report.configDigest = harness::configDigest(arch, tc);
  auto outcome = harness::trainModel(train, test, arch, tc);
  report.folds.push_back(outcome.fold);
  harness::aggregate(report);
  if (!checkpoint.empty()) nn::saveCheckpoint(outcome.network, checkpoint);
  withSink(g.out, false, [&](std::ostream& os) { harness::emitReport(report, g.format, os); });
  return 0;
}

int cmdCrossval(const Globals& g, const std::string& data, std::size_t folds, bool perUser) {
  requireFormat(g.format);
  const auto kv = loadConfig(g);
  const auto tc = harness::parseTrainConfig(kv);
  const auto ds = loadDataset(data);
  const auto arch = architectureFor(kv, ds);
  if (folds == 0) folds = static_cast<std::size_t>(kv.getUint("crossval.folds", 5));
  perUser = perUser || kv.getBool("crossval.per_user", false);
  const auto report = perUser ? harness::crossValidatePerUser(ds, arch, tc, folds, runSeed(kv))
                              : harness::crossValidate(ds, arch, tc, folds, runSeed(kv));
  withSink(g.out, false, [&](std::ostream& os) { harness::emitReport(report, g.format, os); });
  return anyFailed(report) ? kExitDiverged : 0;
}

int cmdAblate(const Globals& g, const std::string& data, const std::vector<std::string>& knobTexts,
              std::size_t folds) {
  requireFormat(g.format);
  const auto kv = loadConfig(g);
  const auto tc = harness::parseTrainConfig(kv);
  const auto ds = loadDataset(data);
  const auto arch = architectureFor(kv, ds);
  if (folds == 0) folds = static_cast<std::size_t>(kv.getUint("crossval.folds", 5));
  std::vector<framework::Knob> knobs;
  for (const auto& t : knobTexts) knobs.push_back(framework::parseKnob(t));
  const auto rows = harness::runAblation(ds, arch, knobs, tc, folds);
  withSink(g.out, false, [&](std::ostream& os) { harness::emitAblationTable(rows, g.format, os); });
  for (const auto& r : rows)
    if (anyFailed(r.report)) return kExitDiverged;
  return 0;
}

int cmdGradcheck(const Globals& g, std::size_t configs) {
  requireFormat(g.format);
  nn::GradCheckOptions o;
  o.configsPerLayer = configs;
  if (g.seed) o.seed = *g.seed;
  const auto results = nn::runGradientChecks(o);
  bool ok = true;
  withSink(g.out, false, [&](std::ostream& os) {
    if (g.format == "csv") {
      os << "layer,configs,elements,skipped,max_rel_error,passed\n";
      for (const auto& r : results) {
        os << r.layer << ',' << r.configs << ',' << r.elements << ',' << r.skipped << ','
           << formatDouble(r.maxRelError) << ',' << (r.passed ? "yes" : "no") << '\n';
      }
    } else {
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const auto& r : results) {
        j.push_back({{"layer", r.layer},
                     {"configs", r.configs},
                     {"elements", r.elements},
                     {"skipped", r.skipped},
                     {"maxRelError", r.maxRelError},
                     {"passed", r.passed}});
      }
      os << j.dump(2) << '\n';
    }
  });
  for (const auto& r : results) ok = ok && r.passed;
  return ok ? 0 : kExitCheckFailed;
}

int cmdDemoUnwrap(const Globals& g, std::size_t n) {
  const auto pair = sigproc::straddlingPair(n);
  const auto ua = sigproc::unwrap(pair.a);
  const auto ub = sigproc::unwrap(pair.b);
  const auto probe = sigproc::unwrapInstabilityProbe(pair.a, pair.b);
  withSink(g.out, false, [&](std::ostream& os) {
    os << "subcarrier,rawA,rawB,unwrappedA,unwrappedB\n";
    for (std::size_t j = 0; j < n; ++j) {
      os << j << ',' << formatDouble(pair.a[j]) << ',' << formatDouble(pair.b[j]) << ',' << formatDouble(ua[j])
         << ',' << formatDouble(ub[j]) << '\n';
    }
  });
  std::cerr << "preDist=" << formatDouble(probe.preDist) << " postDist=" << formatDouble(probe.postDist)
            << " straddled=" << (probe.straddled ? "yes" : "no") << '\n';
  return 0;
}

int cmdReport(const Globals& g, const std::string& in) {
  std::ifstream f(in);
  if (!f) fail(Errc::kIoFailure, "cannot open " + in);
  const auto report = harness::parseReportJson(f);
  withSink(g.out, false, [&](std::ostream& os) { harness::emitReport(report, g.format, os); });
  return 0;
}

int exitCodeFor(Errc code) {
  switch (code) {
    case Errc::kUsage:
    case Errc::kConfigInvalid:
    case Errc::kInvalidKnob:
    case Errc::kValidationFailed:
    case Errc::kShapeIncompatible:
      return kExitUsage;
    case Errc::kDivergedLoss:
      return kExitDiverged;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raw complex CSI recognition toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.configPath, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "overrides synth.seed and train.seed");
  app.add_option("--out", g.out, "output path (stdout when omitted)");
  app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "csv"}));

  bool sanity = false;
  auto* synthCmd = app.add_subcommand("synth", "generate a synthetic CSIT dataset");
  synthCmd->add_flag("--sanity", sanity, "print nearest-centroid separability check");

  std::string in, mode;
  auto* preCmd = app.add_subcommand("preprocess", "apply an input-mode transform to a dataset");
  preCmd->add_option("--in", in, "input CSIT")->required();
  preCmd->add_option("--mode", mode, "raw-complex | amplitude-only | sanitized-complex");

  std::string trainPath, testPath, checkpoint;
  auto* trainCmd = app.add_subcommand("train", "train on one dataset, evaluate on another");
  trainCmd->add_option("--train", trainPath)->required();
  trainCmd->add_option("--test", testPath)->required();
  trainCmd->add_option("--checkpoint", checkpoint, "write the trained model (CSIM)");

  std::string data;
  std::size_t folds = 0;
  bool perUser = false;
  auto* cvCmd = app.add_subcommand("crossval", "stratified k-fold cross-validation");
  cvCmd->add_option("--data", data)->required();
  cvCmd->add_option("--folds", folds, "defaults to crossval.folds or 5");
  cvCmd->add_flag("--per-user", perUser, "cross-validate each user separately");

  std::vector<std::string> knobs;
  auto* ablCmd = app.add_subcommand("ablate", "baseline plus one run per knob");
  ablCmd->add_option("--data", data)->required();
  ablCmd->add_option("--knob", knobs, "depth:<k> | bn-off | pool-off (repeatable)");
  ablCmd->add_option("--folds", folds, "defaults to crossval.folds or 5");

  std::size_t configs = 20;
  auto* gcCmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gcCmd->add_option("--configs", configs, "random configurations per layer");

  std::size_t subcarriers = 30;
  auto* demoCmd = app.add_subcommand("demo-unwrap", "CSV of the unwrap instability example");
  demoCmd->add_option("--n", subcarriers, "subcarriers")->check(CLI::Range(3, 4096));

  auto* reportCmd = app.add_subcommand("report", "re-emit a JSON report");
  reportCmd->add_option("--in", in, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synthCmd) return cmdSynth(g, sanity);
    if (*preCmd) return cmdPreprocess(g, in, mode);
    if (*trainCmd) return cmdTrain(g, trainPath, testPath, checkpoint);
    if (*cvCmd) return cmdCrossval(g, data, folds, perUser);
    if (*ablCmd) return cmdAblate(g, data, knobs, folds);
    if (*gcCmd) return cmdGradcheck(g, configs);
    if (*demoCmd) return cmdDemoUnwrap(g, subcarriers);
    if (*reportCmd) return cmdReport(g, in);
  } catch (const Error& e) {
    std::cerr << "rawcsi: " << e.what() << '\n';
    return exitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rawcsi: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
