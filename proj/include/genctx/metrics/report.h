#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "genctx/data/corpus.h"

namespace genctx::metrics {

/// One metric over several seeds.
struct MetricReport {
  std::string metric;
  std::string split;
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;  // one per seed

  void add(std::uint64_t seed, double value);
  double mean() const;
  /// Population standard deviation (divides by the number of seeds).
  double stddev() const;
  nlohmann::json to_json() const;
};

/// Generated texts of one source, keyed by the source segment ("stream/j").
struct ContextSource {
  std::string name;  // "Previous GT text", "P1", ...
  std::map<std::string, std::string> texts;
};

struct ContextReportRow {
  std::string source;
  double rouge1 = 0.0;      // mean ROUGE-1 F against the next segment's transcript
  double mean_words = 0.0;  // mean whitespace word count of the texts
  std::size_t pairs = 0;
};

/// One row per source. Every non-final segment j of the manifest must have a
/// text; it is scored against the transcript of segment j+1. Throws
/// std::invalid_argument naming the first missing generation.
std::vector<ContextReportRow> context_report(const data::StreamManifest& manifest,
                                             const std::vector<ContextSource>& sources);

/// Aligned-column text table.
std::string format_table(const std::vector<std::string>& headers,
                         const std::vector<std::vector<std::string>>& rows);

std::string format_context_report(const std::vector<ContextReportRow>& rows);

}  // namespace genctx::metrics
