#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "rawcsi/error.h"
#include "rawcsi/harness.h"

namespace rawcsi::harness {

namespace {

using nlohmann::ordered_json;

enum class Format { kJson, kCsv };

Format parseFormat(std::string_view format) {
  if (format == "json") return Format::kJson;
  if (format == "csv") return Format::kCsv;
  fail(Errc::kUsage, "unknown report format '" + std::string(format) + "' (expected json or csv)");
}

std::uint64_t flush(const std::string& text, std::ostream& sink) {
  sink.write(text.data(), static_cast<std::streamsize>(text.size()));
  sink.flush();
  if (!sink) fail(Errc::kIoFailure, "report sink rejected write");
  return text.size();
}

ordered_json foldJson(const FoldReport& f) {
  ordered_json j;
  j["trueDetectionRate"] = f.trueDetectionRate;
  j["confusion"] = f.confusion;
  j["lossCurve"] = f.lossCurve;
  j["failed"] = f.failed;
  if (f.failed) j["failure"] = f.failure;
  return j;
}

ordered_json reportJson(const RunReport& r) {
  ordered_json j;
  j["configDigest"] = r.configDigest;
  j["inputMode"] = r.inputMode;
  j["seed"] = r.seed;
  j["meanRate"] = r.meanRate;
  j["stdRate"] = r.stdRate;
  j["wallClockSeconds"] = r.wallClockSeconds;
  j["folds"] = ordered_json::array();
  for (const auto& f : r.folds) j["folds"].push_back(foldJson(f));
  return j;
}

std::string csvDouble(double v) { return formatDouble(v); }

void foldCsvRow(std::ostream& os, const std::string& row, const FoldReport& f, const RunReport& r) {
  os << row << ',' << csvDouble(f.trueDetectionRate) << ",," << f.correct() << ',' << f.total() << ','
     << f.lossCurve.size() << ',' << (f.lossCurve.empty() ? std::string() : csvDouble(f.lossCurve.back())) << ','
     << (f.failed ? "failed" : "ok") << ',' << r.configDigest << ',' << r.inputMode << ',' << r.seed << '\n';
}

constexpr const char* kCsvHeader =
    "row,true_detection_rate,stddev,correct,total,epochs,final_loss,status,config_digest,input_mode,seed\n";

}  // namespace

std::uint64_t emitReport(const RunReport& report, std::string_view format, std::ostream& sink) {
  const Format fmt = parseFormat(format);
  std::ostringstream os;
  if (fmt == Format::kJson) {
    os << reportJson(report).dump(2) << '\n';
  } else {
    os << kCsvHeader;
    for (std::size_t f = 0; f < report.folds.size(); ++f) foldCsvRow(os, std::to_string(f), report.folds[f], report);
    std::uint64_t correct = 0, total = 0;
    for (const auto& f : report.folds) {
      correct += f.correct();
      total += f.total();
    }
    os << "aggregate," << csvDouble(report.meanRate) << ',' << csvDouble(report.stdRate) << ',' << correct << ','
       << total << ",,,," << report.configDigest << ',' << report.inputMode << ',' << report.seed << '\n';
  }
  return flush(os.str(), sink);
}

RunReport parseReportJson(std::istream& source) {
  ordered_json j;
  try {
    j = ordered_json::parse(source);
    RunReport r;
    r.configDigest = j.at("configDigest").get<std::string>();
    r.inputMode = j.at("inputMode").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.meanRate = j.at("meanRate").get<double>();
    r.stdRate = j.at("stdRate").get<double>();
    r.wallClockSeconds = j.at("wallClockSeconds").get<double>();
    for (const auto& fj : j.at("folds")) {
      FoldReport f;
      f.trueDetectionRate = fj.at("trueDetectionRate").get<double>();
      f.confusion = fj.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
      f.lossCurve = fj.at("lossCurve").get<std::vector<double>>();
      f.failed = fj.at("failed").get<bool>();
      if (f.failed) f.failure = fj.value("failure", std::string());
      r.folds.push_back(std::move(f));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kInvariantViolation, std::string("malformed report: ") + e.what());
  }
}

std::uint64_t emitAblationTable(std::span<const AblationRow> rows, std::string_view format, std::ostream& sink) {
  const Format fmt = parseFormat(format);
  std::ostringstream os;
  if (fmt == Format::kJson) {
    ordered_json j = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json e;
      e["label"] = row.label;
      e["duplicateOfBaseline"] = row.duplicateOfBaseline;
      e["report"] = reportJson(row.report);
      j.push_back(std::move(e));
    }
    os << j.dump(2) << '\n';
  } else {
    os << "label,mean_rate,stddev,delta_vs_baseline,failed_folds,duplicate_of_baseline,config_digest\n";
    const double base = rows.empty() ? 0.0 : rows.front().report.meanRate;
    for (const auto& row : rows) {
      std::size_t failed = 0;
      for (const auto& f : row.report.folds) failed += f.failed ? 1 : 0;
      os << row.label << ',' << csvDouble(row.report.meanRate) << ',' << csvDouble(row.report.stdRate) << ','
         << csvDouble(row.report.meanRate - base) << ',' << failed << ',' << (row.duplicateOfBaseline ? "yes" : "no")
         << ',' << row.report.configDigest << '\n';
    }
  }
  return flush(os.str(), sink);
}

}  // namespace rawcsi::harness
