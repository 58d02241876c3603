#include "rawcsi/synth.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "rawcsi/error.h"
#include "rawcsi/rng.h"

namespace rawcsi::synth {

namespace {

enum Role : std::uint64_t {
  kRoleClass = 1,
  kRoleImpairment = 2,
  kRoleNoise = 3,
  kRoleRfi = 4,
};

void checkRange(const Range& r, const char* what) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    fail(Errc::kConfigInvalid, std::string(what) + " range is not well ordered");
  }
}

std::complex<double> complexNormal(Engine& e, double stdDev) {
  const double s = stdDev / std::numbers::sqrt2;
  const double re = standardNormal(e) * s;
  const double im = standardNormal(e) * s;
  return {re, im};
}

Range parseRange(const KeyValueConfig& kv, const std::string& key, Range fallback) {
  return {kv.getDouble(key + ".min", fallback.lo), kv.getDouble(key + ".max", fallback.hi)};
}

}  // namespace

void SynthConfig::validate() const {
  if (numClasses == 0 || instancesPerClass == 0 || m == 0 || n == 0 || c == 0 || paths == 0) {
    fail(Errc::kConfigInvalid, "classes, instances, m, n, c and paths must be positive");
  }
  checkRange(pathGainRange, "path gain");
  checkRange(delaySpreadRange, "delay spread");
  checkRange(phaseSlopeRange, "phase slope");
  checkRange(phaseOffsetRange, "phase offset");
  checkRange(ampScaleRange, "amplitude scale");
  if (delaySpreadRange.lo < 0.0 || delaySpreadRange.hi >= 1.0) {
    fail(Errc::kConfigInvalid, "delay spread must lie in [0, 1)");
  }
  if (!(ampScaleRange.lo > 0.0)) fail(Errc::kConfigInvalid, "amplitude scale minimum must be positive");
  if (!(noiseStd >= 0.0)) fail(Errc::kConfigInvalid, "noise std must be non-negative");
  if (rfi) {
    if (rfi->subbandWidth == 0 || rfi->subbandStart + rfi->subbandWidth > n) {
      fail(Errc::kConfigInvalid, "RFI subband must lie within [0, n)");
    }
    if (!(rfi->burstProb >= 0.0 && rfi->burstProb <= 1.0) || !(rfi->burstStd >= 0.0)) {
      fail(Errc::kConfigInvalid, "RFI burst probability/std out of range");
    }
  }
}

SynthConfig impairmentFree(SynthConfig cfg) {
  cfg.noiseStd = 0.0;
  cfg.phaseSlopeRange = {0.0, 0.0};
  cfg.phaseOffsetRange = {0.0, 0.0};
  cfg.ampScaleRange = {1.0, 1.0};
  cfg.rfi.reset();
  return cfg;
}

std::vector<std::complex<double>> classResponse(std::size_t classId, const SynthConfig& cfg) {
  if (classId >= cfg.numClasses) fail(Errc::kIndexOutOfRange, "class " + std::to_string(classId));
  std::vector<std::complex<double>> h(cfg.n * cfg.c);
  for (std::size_t ant = 0; ant < cfg.c; ++ant) {
    auto e = makeEngine(cfg.seed, {kRoleClass, classId, ant});
    std::vector<double> gain(cfg.paths), delay(cfg.paths);
    for (std::size_t p = 0; p < cfg.paths; ++p) {
      gain[p] = uniform(e, cfg.pathGainRange.lo, cfg.pathGainRange.hi);
      delay[p] = uniform(e, cfg.delaySpreadRange.lo, cfg.delaySpreadRange.hi);
    }
    for (std::size_t j = 0; j < cfg.n; ++j) {
      std::complex<double> v{0.0, 0.0};
      for (std::size_t p = 0; p < cfg.paths; ++p) {
        v += gain[p] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j) * delay[p]);
      }
      h[j * cfg.c + ant] = v;
    }
  }
  return h;
}

MeasurementImpairment drawImpairment(const SynthConfig& cfg, std::size_t classId, std::size_t instance,
                                     std::size_t measurement) {
  auto e = makeEngine(cfg.seed, {kRoleImpairment, classId, instance, measurement});
  MeasurementImpairment imp;
  imp.slope = uniform(e, cfg.phaseSlopeRange.lo, cfg.phaseSlopeRange.hi);
  imp.offset = uniform(e, cfg.phaseOffsetRange.lo, cfg.phaseOffsetRange.hi);
  const double u = uniform01(e);
  const auto& r = cfg.ampScaleRange;
  if (r.lo == r.hi) {
    imp.scale = r.lo;
  } else if (cfg.scaleDistribution == ScaleDistribution::kLogUniform) {
    imp.scale = std::exp(std::log(r.lo) + (std::log(r.hi) - std::log(r.lo)) * u);
  } else {
    imp.scale = r.lo + (r.hi - r.lo) * u;
  }
  return imp;
}

CsiDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<std::complex<double>>> responses;
  for (std::size_t k = 0; k < cfg.numClasses; ++k) responses.push_back(classResponse(k, cfg));

  CsiDataset ds;
  for (std::size_t k = 0; k < cfg.numClasses; ++k) ds.labelNames.push_back("class" + std::to_string(k));
  ds.meta["source"] = "synthetic";
  ds.meta["seed"] = std::to_string(cfg.seed);
  ds.meta["rfi"] = cfg.rfi ? "true" : "false";
  ds.meta["instances_per_class"] = std::to_string(cfg.instancesPerClass);

  std::vector<std::complex<double>> values(cfg.m * cfg.n * cfg.c);
  ds.instances.reserve(cfg.numClasses * cfg.instancesPerClass);
  for (std::size_t inst = 0; inst < cfg.instancesPerClass; ++inst) {
    for (std::size_t k = 0; k < cfg.numClasses; ++k) {
      const auto& h = responses[k];
      for (std::size_t i = 0; i < cfg.m; ++i) {
        const auto imp = drawImpairment(cfg, k, inst, i);
        auto noise = makeEngine(cfg.seed, {kRoleNoise, k, inst, i});
        for (std::size_t j = 0; j < cfg.n; ++j) {
          const auto rot = std::polar(imp.scale, imp.slope * static_cast<double>(j) + imp.offset);
          for (std::size_t a = 0; a < cfg.c; ++a) {
            auto v = rot * h[j * cfg.c + a];
            if (cfg.noiseStd > 0.0) v += complexNormal(noise, cfg.noiseStd);
            values[(i * cfg.n + j) * cfg.c + a] = v;
          }
        }
        if (cfg.rfi) {
          auto burst = makeEngine(cfg.seed, {kRoleRfi, k, inst, i});
          if (uniform01(burst) < cfg.rfi->burstProb) {
            for (std::size_t j = cfg.rfi->subbandStart; j < cfg.rfi->subbandStart + cfg.rfi->subbandWidth; ++j)
              for (std::size_t a = 0; a < cfg.c; ++a)
                values[(i * cfg.n + j) * cfg.c + a] += complexNormal(burst, cfg.rfi->burstStd);
          }
        }
      }
      ds.instances.push_back(CsiInstance::fromComplex(cfg.m, cfg.n, cfg.c, values, static_cast<int>(k)));
    }
  }
  return ds;
}

double nearestCentroidAccuracy(const CsiDataset& train, const CsiDataset& test) {
  train.validate();
  test.validate();
  if (test.size() == 0) return 0.0;
  const std::size_t dim = train.instances.front().planes.size();
  const std::size_t k = train.numClasses();
  std::vector<std::vector<double>> centroid(k, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> count(k, 0);
  for (const auto& inst : train.instances) {
    auto& c = centroid[inst.label];
    for (std::size_t d = 0; d < dim; ++d) c[d] += inst.planes.flat(d);
    ++count[inst.label];
  }
  for (std::size_t cls = 0; cls < k; ++cls)
    if (count[cls])
      for (auto& v : centroid[cls]) v /= static_cast<double>(count[cls]);

  std::size_t correct = 0;
  for (const auto& inst : test.instances) {
    double best = std::numeric_limits<double>::infinity();
    int bestClass = -1;
    for (std::size_t cls = 0; cls < k; ++cls) {
      if (!count[cls]) continue;
      double dist = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = inst.planes.flat(d) - centroid[cls][d];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        bestClass = static_cast<int>(cls);
      }
    }
    if (bestClass == inst.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

SanityReport oracleSanityCheck(const SynthConfig& cfg) {
  const auto clean = generate(impairmentFree(cfg));
  const auto impaired = generate(cfg);
  return {nearestCentroidAccuracy(clean, clean), nearestCentroidAccuracy(impaired, impaired)};
}

SynthConfig parseSynthConfig(const KeyValueConfig& kv, const std::string& p) {
  SynthConfig cfg;
  const auto sz = [&](const char* key, std::size_t fallback) {
    return static_cast<std::size_t>(kv.getUint(p + key, fallback));
  };
  cfg.numClasses = sz("classes", cfg.numClasses);
  cfg.instancesPerClass = sz("instances_per_class", cfg.instancesPerClass);
  cfg.m = sz("m", cfg.m);
  cfg.n = sz("n", cfg.n);
  cfg.c = sz("c", cfg.c);
  cfg.paths = sz("paths", cfg.paths);
  cfg.pathGainRange = parseRange(kv, p + "path_gain", cfg.pathGainRange);
  cfg.delaySpreadRange = parseRange(kv, p + "delay_spread", cfg.delaySpreadRange);
  cfg.noiseStd = kv.getDouble(p + "noise_std", cfg.noiseStd);
  cfg.phaseSlopeRange = parseRange(kv, p + "phase_slope", cfg.phaseSlopeRange);
  cfg.phaseOffsetRange = parseRange(kv, p + "phase_offset", cfg.phaseOffsetRange);
  cfg.ampScaleRange = parseRange(kv, p + "amp_scale", cfg.ampScaleRange);
  const auto dist = kv.getString(p + "amp_scale.distribution", "log-uniform");
  if (dist == "log-uniform") {
    cfg.scaleDistribution = ScaleDistribution::kLogUniform;
  } else if (dist == "uniform") {
    cfg.scaleDistribution = ScaleDistribution::kUniform;
  } else {
    fail(Errc::kConfigInvalid, p + "amp_scale.distribution must be log-uniform or uniform");
  }
  if (kv.getBool(p + "rfi", false)) {
    RfiConfig r;
    r.subbandStart = sz("rfi.start", r.subbandStart);
    r.subbandWidth = sz("rfi.width", r.subbandWidth);
    r.burstStd = kv.getDouble(p + "rfi.burst_std", r.burstStd);
    r.burstProb = kv.getDouble(p + "rfi.burst_prob", r.burstProb);
    cfg.rfi = r;
  }
  cfg.seed = kv.getUint(p + "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

}  // namespace rawcsi::synth
