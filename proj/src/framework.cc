#include "rawcsi/framework.h"

#include <sstream>

#include "rawcsi/error.h"

namespace rawcsi::framework {

namespace {

[[noreturn]] void invalid(const std::string& rule) { fail(Errc::kValidationFailed, rule); }

ArchitectureSpec presetChecked(ArchitectureSpec spec) {
  try {
    validate(spec);
  } catch (const Error& e) {
    fail(Errc::kShapeIncompatible, e.what());
  }
  return spec;
}

}  // namespace

ArchitectureSpec signfiPreset(InputShape input, std::size_t numClasses, std::size_t filters) {
  if (input.rows < 80 || input.cols < 10) {
    fail(Errc::kShapeIncompatible, "signfi preset needs 2m >= 80 and n >= 10 (pool 40x3 after the 2x1 stride)");
  }
  ArchitectureSpec s;
  s.input = input;
  s.numClasses = numClasses;
  s.conv = {
      {{2, 1}, {2, 1}, filters, true},
      {{3, 3}, {1, 1}, filters, true},
      {{5, 5}, {1, 1}, filters, true},
      {{10, 10}, {1, 1}, filters, true},
  };
  s.poolBank = {{3, 3}, {5, 5}, {10, 3}, {20, 3}, {40, 3}};
  s.fc = {{1000, 0.8}};
  return presetChecked(std::move(s));
}

ArchitectureSpec activityPreset(InputShape input, std::size_t numClasses, std::size_t filters) {
  if (input.cols < 16) fail(Errc::kShapeIncompatible, "activity preset needs n >= 16");
  ArchitectureSpec s;
  s.input = input;
  s.numClasses = numClasses;
  s.conv = {{{2, 1}, {2, 1}, filters, true}};
  for (std::size_t w : {2, 3, 4, 8, 12, 16}) s.conv.push_back({{1, w}, {1, 1}, filters, true});
  s.poolBank = {{1, 2}, {1, 3}, {1, 4}};
  s.fc = {{1000, 0.8}, {1000, 0.8}};
  return presetChecked(std::move(s));
}

void validate(const ArchitectureSpec& spec) {
  if (spec.input.rows == 0 || spec.input.cols == 0 || spec.input.channels == 0) {
    invalid("input shape must be positive");
  }
  if (spec.input.rows % 2 != 0) invalid("input rows must be 2m (interleaved Re/Im)");
  if (spec.numClasses < 2) invalid("numClasses must be at least 2");
  if (spec.conv.empty()) invalid("at least one conv stage is required");
  const auto& first = spec.conv.front();
  if (first.kernel != Extent2{2, 1} || first.stride != Extent2{2, 1}) {
    invalid("first stage must be 2x1/2x1");
  }
  for (const auto& c : spec.conv)
    if (c.filters == 0) invalid("conv filters must be positive");
  if (!spec.poolBypass && spec.poolBank.empty()) invalid("pool bank must be non-empty");
  if (spec.poolBypass && !spec.poolBank.empty()) invalid("pool bank must be empty when bypassed");
  for (const auto& f : spec.fc) {
    if (f.units == 0) invalid("fc units must be positive");
    if (!(f.dropout >= 0.0 && f.dropout < 1.0)) invalid("dropout must lie in [0, 1)");
  }
  try {
    nn::shapeCheck(toNetworkSpec(spec));
  } catch (const Error& e) {
    invalid(std::string("shape check failed: ") + e.what());
  }
}

nn::NetworkSpec toNetworkSpec(const ArchitectureSpec& spec) {
  nn::NetworkSpec n;
  n.input = {spec.input.rows, spec.input.cols, spec.input.channels};
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const auto& c = spec.conv[i];
    n.conv.push_back({c.kernel, c.stride, i == 0 ? nn::Padding::kValid : nn::Padding::kSame, c.filters, c.batchNorm});
  }
  n.pools = spec.poolBypass ? std::vector<Extent2>{} : spec.poolBank;
  for (const auto& f : spec.fc) n.hidden.push_back({f.units, f.dropout});
  n.numClasses = spec.numClasses;
  return n;
}

nn::Network build(const ArchitectureSpec& spec, std::uint64_t seed) {
  validate(spec);
  return nn::Network(toNetworkSpec(spec), seed);
}

ArchitectureSpec ablate(const ArchitectureSpec& spec, const Knob& knob) {
  ArchitectureSpec out = spec;
  if (const auto* d = std::get_if<ConvDepth>(&knob)) {
    if (d->depth < 1 || d->depth > spec.conv.size()) {
      fail(Errc::kInvalidKnob, "conv depth " + std::to_string(d->depth) + " outside [1, " +
                                   std::to_string(spec.conv.size()) + "]");
    }
    out.conv.resize(d->depth);
  } else if (std::holds_alternative<BatchNormOff>(knob)) {
    for (auto& c : out.conv) c.batchNorm = false;
  } else {
    out.poolBank.clear();
    out.poolBypass = true;
  }
  return out;
}

std::string knobName(const Knob& knob) {
  if (const auto* d = std::get_if<ConvDepth>(&knob)) return "depth:" + std::to_string(d->depth);
  if (std::holds_alternative<BatchNormOff>(knob)) return "bn-off";
  return "pool-off";
}

Knob parseKnob(std::string_view text) {
  if (text == "bn-off") return BatchNormOff{};
  if (text == "pool-off") return AvgPoolOff{};
  if (text.starts_with("depth:")) {
    try {
      return ConvDepth{static_cast<std::size_t>(parseUint(text.substr(6), "depth"))};
    } catch (const Error&) {
    }
  }
  fail(Errc::kInvalidKnob, "unknown knob '" + std::string(text) + "' (expected depth:<k>, bn-off or pool-off)");
}

std::string formatExtent(Extent2 e) { return std::to_string(e.rows) + "x" + std::to_string(e.cols); }

Extent2 parseExtent(std::string_view text) {
  const auto x = text.find('x');
  if (x == std::string_view::npos) fail(Errc::kConfigInvalid, "extent '" + std::string(text) + "' is not RxC");
  return {static_cast<std::size_t>(parseUint(text.substr(0, x), "extent rows")),
          static_cast<std::size_t>(parseUint(text.substr(x + 1), "extent cols"))};
}

std::string serialize(const ArchitectureSpec& spec, std::string_view prefix) {
  std::ostringstream os;
  const std::string p(prefix);
  const auto b = [](bool v) { return v ? "true" : "false"; };
  os << p << "input.rows = " << spec.input.rows << "\n";
  os << p << "input.cols = " << spec.input.cols << "\n";
  os << p << "input.channels = " << spec.input.channels << "\n";
  os << p << "classes = " << spec.numClasses << "\n";
  os << p << "conv.count = " << spec.conv.size() << "\n";
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const auto& c = spec.conv[i];
    const std::string k = p + "conv." + std::to_string(i + 1) + ".";
    os << k << "kernel = " << formatExtent(c.kernel) << "\n";
    os << k << "stride = " << formatExtent(c.stride) << "\n";
    os << k << "filters = " << c.filters << "\n";
    os << k << "batchnorm = " << b(c.batchNorm) << "\n";
  }
  os << p << "pool.bypass = " << b(spec.poolBypass) << "\n";
  os << p << "pool.count = " << spec.poolBank.size() << "\n";
  for (std::size_t i = 0; i < spec.poolBank.size(); ++i)
    os << p << "pool." << i + 1 << ".size = " << formatExtent(spec.poolBank[i]) << "\n";
  os << p << "fc.count = " << spec.fc.size() << "\n";
  for (std::size_t i = 0; i < spec.fc.size(); ++i) {
    const std::string k = p + "fc." + std::to_string(i + 1) + ".";
    os << k << "units = " << spec.fc[i].units << "\n";
    os << k << "dropout = " << formatDouble(spec.fc[i].dropout) << "\n";
  }
  return os.str();
}

ArchitectureSpec parseArchitecture(const KeyValueConfig& cfg, std::string_view prefix) {
  const std::string p(prefix);
  const auto req = [&](const std::string& key) { return cfg.require(p + key); };
  const auto num = [&](const std::string& key) {
    return static_cast<std::size_t>(parseUint(req(key), p + key));
  };
  ArchitectureSpec s;
  s.input = {num("input.rows"), num("input.cols"), num("input.channels")};
  s.numClasses = num("classes");
  const std::size_t convCount = num("conv.count");
  for (std::size_t i = 1; i <= convCount; ++i) {
    const std::string k = "conv." + std::to_string(i) + ".";
    ConvStage c;
    c.kernel = parseExtent(req(k + "kernel"));
    c.stride = parseExtent(req(k + "stride"));
    c.filters = static_cast<std::size_t>(cfg.getUint(p + k + "filters", kDefaultFilters));
    c.batchNorm = cfg.getBool(p + k + "batchnorm", true);
    s.conv.push_back(c);
  }
  s.poolBypass = cfg.getBool(p + "pool.bypass", false);
  const std::size_t poolCount = num("pool.count");
  for (std::size_t i = 1; i <= poolCount; ++i) s.poolBank.push_back(parseExtent(req("pool." + std::to_string(i) + ".size")));
  const std::size_t fcCount = num("fc.count");
  for (std::size_t i = 1; i <= fcCount; ++i) {
    const std::string k = "fc." + std::to_string(i) + ".";
    s.fc.push_back({num(k + "units"), parseDouble(req(k + "dropout"), p + k + "dropout")});
  }
  return s;
}

}  // namespace rawcsi::framework
