#include "rawcsi/sigproc.h"

#include <algorithm>
#include <cmath>

#include "rawcsi/error.h"

namespace rawcsi::sigproc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool unwrapTriggers(double step, double threshold) { return step > threshold || step < -threshold; }

double lInf(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(unwrapThreshold > 0.0)) fail(Errc::kConfigInvalid, "unwrap threshold must be positive");
}

Tensor amplitude(const CsiInstance& inst) {
  const auto [re, im] = deinterleave(inst.planes);
  Tensor out(re.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.flat(i) = std::hypot(re.flat(i), im.flat(i));
  return out;
}

Tensor normalizeAmplitude(const Tensor& amp, Normalization mode) {
  if (amp.rank() != 3) fail(Errc::kShapeMismatch, "amplitude must be [m, n, c]");
  Tensor out = amp;
  if (mode == Normalization::kNone) return out;
  const std::size_t m = amp.dim(0), n = amp.dim(1), c = amp.dim(2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      double norm = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = amp.at(i, j, k);
        norm = mode == Normalization::kL2PerMeasurement ? norm + v * v : std::max(norm, std::abs(v));
      }
      if (mode == Normalization::kL2PerMeasurement) norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.at(i, j, k) = amp.at(i, j, k) / norm;
    }
  }
  return out;
}

PhaseVector PhaseField::vectorAt(std::size_t sample, std::size_t antenna) const {
  const std::size_t n = values.dim(1);
  PhaseVector p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = values.at(sample, j, antenna);
  return p;
}

std::size_t PhaseField::undefinedCount() const {
  return static_cast<std::size_t>(std::count(undefined.begin(), undefined.end(), std::uint8_t{1}));
}

PhaseField phase(const CsiInstance& inst) {
  const auto [re, im] = deinterleave(inst.planes);
  PhaseField out{Tensor(re.shape()), std::vector<std::uint8_t>(re.size(), 0)};
  for (std::size_t i = 0; i < re.size(); ++i) {
    const double x = re.flat(i), y = im.flat(i);
    if (x == 0.0 && y == 0.0) {
      out.undefined[i] = 1;
      continue;
    }
    double theta = std::atan2(y, x);
    if (theta <= -std::numbers::pi) theta = std::numbers::pi;  // -1-0i lands on +pi
    out.values.flat(i) = theta;
  }
  return out;
}

PhaseVector unwrap(std::span<const double> p, double threshold) {
  PhaseVector out(p.begin(), p.end());
  double correction = 0.0;
  for (std::size_t j = 1; j < p.size(); ++j) {
    const double step = p[j] - p[j - 1];
    if (step > threshold) {
      correction -= kTwoPi;
    } else if (step < -threshold) {
      correction += kTwoPi;
    }
    out[j] = p[j] + correction;
  }
  return out;
}

PhaseVector sanitize(std::span<const double> p, SlopeFit fit) {
  const std::size_t n = p.size();
  if (n < 2) fail(Errc::kDegenerateLength, "sanitize needs at least 2 subcarriers");
  const double jMean = static_cast<double>(n - 1) / 2.0;
  double slope = 0.0;
  if (fit == SlopeFit::kEndpoints) {
    slope = (p[n - 1] - p[0]) / static_cast<double>(n - 1);
  } else {
    double pMean = 0.0;
    for (double v : p) pMean += v;
    pMean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dj = static_cast<double>(j) - jMean;
      num += dj * (p[j] - pMean);
      den += dj * dj;
    }
    slope = num / den;
  }
  double offset = 0.0;
  for (std::size_t j = 0; j < n; ++j) offset += p[j] - slope * static_cast<double>(j);
  offset /= static_cast<double>(n);

  PhaseVector out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = p[j] - slope * static_cast<double>(j) - offset;
  return out;
}

SanitizedInstance sanitizedComplex(const CsiInstance& inst, const PipelineConfig& cfg) {
  cfg.validate();
  const Tensor amp = normalizeAmplitude(amplitude(inst), cfg.normalization);
  PhaseField ph = phase(inst);
  const std::size_t m = inst.m(), n = inst.n(), c = inst.c();
  if (cfg.sanitize && n < 2) fail(Errc::kDegenerateLength, "sanitize needs at least 2 subcarriers");

  Tensor re(amp.shape()), im(amp.shape());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      PhaseVector theta = ph.vectorAt(i, k);
      if (cfg.sanitize) theta = sanitize(unwrap(theta, cfg.unwrapThreshold), cfg.slopeFit);
      for (std::size_t j = 0; j < n; ++j) {
        const double a = amp.at(i, j, k);
        re.at(i, j, k) = a * std::cos(theta[j]);
        im.at(i, j, k) = a * std::sin(theta[j]);
      }
    }
  }
  return {CsiInstance(interleave(re, im), inst.label), std::move(ph.undefined)};
}

ProbeReport unwrapInstabilityProbe(std::span<const double> a, std::span<const double> b, double threshold) {
  if (a.size() != b.size()) {
    fail(Errc::kLengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  ProbeReport report;
  report.preDist = lInf(a, b);
  report.postDist = lInf(unwrap(a, threshold), unwrap(b, threshold));
  for (std::size_t j = 1; j < a.size(); ++j) {
    if (unwrapTriggers(a[j] - a[j - 1], threshold) != unwrapTriggers(b[j] - b[j - 1], threshold)) {
      report.straddled = true;
      break;
    }
  }
  return report;
}

StraddlingPair straddlingPair(std::size_t n) {
  if (n < 2) fail(Errc::kDegenerateLength, "straddling pair needs at least 2 subcarriers");
  StraddlingPair pair{PhaseVector(n), PhaseVector(n)};
  pair.a[0] = pair.b[0] = -1.55;
  pair.a[1] = -1.55 + 3.10;
  pair.b[1] = -1.55 + 3.18;
  // Gentle downward drift afterwards, staying inside (-pi, pi].
  const double drift = n > 2 ? std::min(0.1, 2.5 / static_cast<double>(n - 2)) : 0.0;
  for (std::size_t j = 2; j < n; ++j) {
    pair.a[j] = pair.a[j - 1] - drift;
    pair.b[j] = pair.b[j - 1] - drift;
  }
  return pair;
}

}  // namespace rawcsi::sigproc
