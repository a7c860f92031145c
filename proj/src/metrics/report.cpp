#include "genctx/metrics/report.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "genctx/context/http_backend.h"
#include "genctx/metrics/rouge.h"

namespace genctx::metrics {

void MetricReport::add(std::uint64_t seed, double value) {
  seeds.push_back(seed);
  values.push_back(value);
}

double MetricReport::mean() const {
  if (values.empty()) throw std::logic_error(fmt::format("metric '{}' has no values", metric));
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double MetricReport::stddev() const {
  const double m = mean();
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

nlohmann::json MetricReport::to_json() const {
  return {{"metric", metric}, {"split", split},  {"seeds", seeds},
          {"values", values}, {"mean", mean()}, {"std", stddev()}};
}

std::vector<ContextReportRow> context_report(const data::StreamManifest& manifest,
                                             const std::vector<ContextSource>& sources) {
  std::vector<ContextReportRow> rows;
  for (const ContextSource& source : sources) {
    ContextReportRow row;
    row.source = source.name;
    for (const data::Segment& seg : manifest.segments) {
      const data::Segment* next = manifest.find(seg.stream, seg.index + 1);
      if (next == nullptr) continue;
      const auto it = source.texts.find(seg.key());
      if (it == source.texts.end()) {
        throw std::invalid_argument(fmt::format("source '{}' has no generation for segment {}", source.name, seg.key()));
      }
      row.rouge1 += rouge1_f(it->second, next->transcript());
      row.mean_words += static_cast<double>(context::count_tokens(it->second));
      ++row.pairs;
    }
    if (row.pairs > 0) {
      row.rouge1 /= static_cast<double>(row.pairs);
      row.mean_words /= static_cast<double>(row.pairs);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_table(const std::vector<std::string>& headers,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      out += c == 0 ? fmt::format("{:<{}}", cell, width[c]) : fmt::format("  {:>{}}", cell, width[c]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(headers);
  std::size_t total = 0;
  for (std::size_t w : width) total += w + 2;
  out += std::string(total > 2 ? total - 2 : 0, '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

std::string format_context_report(const std::vector<ContextReportRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.source, fmt::format("{:.2f}", r.rouge1), fmt::format("{:.1f}", r.mean_words)});
  }
  return format_table({"Context", "ROUGE-1", "Avg. words"}, cells);
}

}  // namespace genctx::metrics
