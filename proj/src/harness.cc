// Copyright 2026 The LQR Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lqrlab/harness.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "nlohmann/json.hpp"
#include "lqrlab/stats.h"

namespace lqrlab {
namespace {

constexpr const char* kMetricMeanLqr = "mean_lqr";
constexpr const char* kMetricInputToFinal = "input_to_final";
constexpr const char* kMetricSnr = "snr_baseline";

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV record; double quotes protect commas and "" is a literal
// quote.
std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(Trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(Trim(field));
  return fields;
}

std::optional<double> ParseNumber(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string Format6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Unit {
  double mean_lqr = 0.0;
  double input_to_final = 0.0;
  std::optional<double> snr_db;
  std::vector<double> scores;
};

std::vector<Unit> AggregateUnits(const std::vector<ItemScore>& items,
                                 size_t n_columns, Aggregation aggregation) {
  std::vector<Unit> units;
  if (aggregation == Aggregation::kPerItem) {
    for (const ItemScore& item : items) {
      units.push_back({item.mean_lqr, item.input_to_final, item.snr_db,
                       item.scores});
    }
    return units;
  }
  // Systems in order of first appearance among the sorted items.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ItemScore*>> groups;
  for (const ItemScore& item : items) {
    auto [it, inserted] = groups.try_emplace(item.system_id);
    if (inserted) order.push_back(item.system_id);
    it->second.push_back(&item);
  }
  for (const std::string& id : order) {
    const auto& members = groups[id];
    const double inv = 1.0 / static_cast<double>(members.size());
    Unit unit;
    unit.scores.assign(n_columns, 0.0);
    double snr_sum = 0.0;
    size_t snr_count = 0;
    for (const ItemScore* item : members) {
      unit.mean_lqr += item->mean_lqr;
      unit.input_to_final += item->input_to_final;
      for (size_t c = 0; c < n_columns; ++c) unit.scores[c] += item->scores[c];
      if (item->snr_db) {
        snr_sum += *item->snr_db;
        ++snr_count;
      }
    }
    unit.mean_lqr *= inv;
    unit.input_to_final *= inv;
    for (double& s : unit.scores) s *= inv;
    if (snr_count > 0) unit.snr_db = snr_sum / static_cast<double>(snr_count);
    units.push_back(std::move(unit));
  }
  return units;
}

CorrelationCell Correlate(const std::string& column, const std::string& metric,
                          const std::vector<double>& x,
                          const std::vector<double>& y) {
  CorrelationCell cell;
  cell.score_column = column;
  cell.metric = metric;
  cell.n = x.size();
  try {
    cell.rho = Pearson(x, y);
    cell.tau = Spearman(x, y);
  } catch (const LqrError& e) {
    cell.rho = std::nan("");
    cell.tau = std::nan("");
    cell.error = std::string(ErrorCodeName(e.code()));
  }
  return cell;
}

}  // namespace

Manifest ParseManifest(const std::string& text,
                       const std::filesystem::path& base_dir,
                       bool require_scores) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    if (!Trim(line).empty()) header = SplitCsvLine(line);
  }
  if (header.empty()) {
    throw LqrError(ErrorCode::kEmptyManifest, "manifest has no header");
  }
  // A UTF-8 byte order mark would otherwise hide the first column name.
  if (header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);

  int path_col = -1, system_col = -1, item_col = -1, ref_col = -1;
  std::vector<int> score_cols;
  Manifest manifest;
  for (size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    const int idx = static_cast<int>(i);
    if (name == "path") {
      path_col = idx;
    } else if (name == "system") {
      system_col = idx;
    } else if (name == "item") {
      item_col = idx;
    } else if (name == "reference") {
      ref_col = idx;
    } else {
      score_cols.push_back(idx);
      manifest.score_columns.push_back(name);
    }
  }
  if (path_col < 0) {
    throw LqrError(ErrorCode::kMissingPathColumn, "header lacks a 'path' column");
  }
  if (require_scores && score_cols.empty()) {
    throw LqrError(ErrorCode::kEmptyManifest, "manifest has no score columns");
  }

  auto resolve = [&base_dir](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path)
        .string();
  };

  size_t row = 0;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> fields = SplitCsvLine(line);
    auto bad = [row](const std::string& why) {
      return LqrError(ErrorCode::kBadRow, "row " + std::to_string(row) + ": " + why);
    };
    if (fields.size() != header.size()) {
      throw bad("expected " + std::to_string(header.size()) + " fields, got " +
                std::to_string(fields.size()));
    }
    ManifestEntry entry;
    entry.row_number = row;
    const std::string& raw_path = fields[static_cast<size_t>(path_col)];
    if (raw_path.empty()) throw bad("empty path");
    entry.media_path = resolve(raw_path);
    entry.item_id = item_col >= 0 && !fields[static_cast<size_t>(item_col)].empty()
                        ? fields[static_cast<size_t>(item_col)]
                        : raw_path;
    if (system_col >= 0 && !fields[static_cast<size_t>(system_col)].empty()) {
      entry.system_id = fields[static_cast<size_t>(system_col)];
    }
    if (ref_col >= 0 && !fields[static_cast<size_t>(ref_col)].empty()) {
      entry.reference_path = resolve(fields[static_cast<size_t>(ref_col)]);
    }
    for (size_t c = 0; c < score_cols.size(); ++c) {
      const std::string& cell = fields[static_cast<size_t>(score_cols[c])];
      const std::optional<double> v = ParseNumber(cell);
      if (!v) {
        throw bad("column '" + manifest.score_columns[c] + "' value '" + cell +
                  "' is not a number");
      }
      entry.scores.push_back(*v);
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) {
    throw LqrError(ErrorCode::kEmptyManifest, "manifest has no data rows");
  }
  return manifest;
}

Manifest LoadManifest(const std::filesystem::path& path, bool require_scores) {
  std::ifstream in(path);
  if (!in) {
    throw LqrError(ErrorCode::kIoFailure, "cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseManifest(buffer.str(), path.parent_path(), require_scores);
}

std::string AggregationName(Aggregation aggregation) {
  return aggregation == Aggregation::kPerSystem ? "per_system" : "per_item";
}

MediaKind MediaKindFromPath(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".wav" || ext == ".wave") return MediaKind::kWav;
  if (ext == ".ltnt") return MediaKind::kLtnt;
  throw LqrError(ErrorCode::kUnsupportedEncoding,
                 "unknown media extension '" + ext + "' for " + path.string());
}

AudioClip LoadClipForEncoder(const std::filesystem::path& path,
                             const EncoderConfig& cfg) {
  return ResampleLinear(LoadWav(path), cfg.sample_rate);
}

LatentBundle LoadMediaLatents(const std::filesystem::path& path,
                              const EncoderConfig& cfg) {
  if (MediaKindFromPath(path) == MediaKind::kLtnt) return LoadLatents(path);
  LatentBundle bundle;
  bundle.latents = EncodeSpectral(LoadClipForEncoder(path, cfg), cfg);
  bundle.sample_rate = static_cast<uint32_t>(cfg.sample_rate);
  bundle.hop = static_cast<uint32_t>(cfg.hop);
  return bundle;
}

LqrReport ScoreMedia(const std::filesystem::path& path, const RvqModel& model,
                     const EncoderConfig& cfg, const LqrOptions& options) {
  const LatentBundle bundle = LoadMediaLatents(path, cfg);
  if (!bundle.stage_outputs.empty()) {
    return ComputeReport(TraceFromStageOutputs(bundle.latents,
                                               bundle.stage_outputs,
                                               model.variance_mode),
                         options);
  }
  return ScoreLatents(model, bundle.latents, options);
}

CorrelationReport CorrelateItems(std::vector<ItemScore> items,
                                 const std::vector<std::string>& score_columns,
                                 Aggregation aggregation) {
  std::stable_sort(items.begin(), items.end(),
                   [](const ItemScore& a, const ItemScore& b) {
                     return a.item_id < b.item_id;
                   });
  CorrelationReport report;
  report.aggregation = aggregation;
  const std::vector<Unit> units =
      AggregateUnits(items, score_columns.size(), aggregation);
  const bool have_snr = std::ranges::any_of(
      units, [](const Unit& u) { return u.snr_db.has_value(); });

  for (size_t c = 0; c < score_columns.size(); ++c) {
    std::vector<double> subjective, lqr_mean, lqr_0k;
    for (const Unit& u : units) {
      subjective.push_back(u.scores[c]);
      lqr_mean.push_back(u.mean_lqr);
      lqr_0k.push_back(u.input_to_final);
    }
    report.cells.push_back(
        Correlate(score_columns[c], kMetricMeanLqr, lqr_mean, subjective));
    report.cells.push_back(
        Correlate(score_columns[c], kMetricInputToFinal, lqr_0k, subjective));
    if (have_snr) {
      std::vector<double> snr, snr_subjective;
      for (const Unit& u : units) {
        if (!u.snr_db) continue;
        snr.push_back(*u.snr_db);
        snr_subjective.push_back(u.scores[c]);
      }
      report.cells.push_back(
          Correlate(score_columns[c], kMetricSnr, snr, snr_subjective));
    }
  }
  report.items = std::move(items);
  return report;
}

CorrelationReport Evaluate(const Manifest& manifest, const RvqModel& model,
                           const EvalConfig& cfg) {
  ValidateModel(model);
  const size_t n = manifest.entries.size();
  std::vector<std::optional<ItemScore>> results(n);
  std::vector<std::string> failures(n);

  auto score_one = [&](size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    try {
      const LqrReport r = ScoreMedia(entry.media_path, model, cfg.encoder, cfg.lqr);
      ItemScore item;
      item.item_id = entry.item_id;
      item.system_id = entry.system_id.value_or(entry.item_id);
      item.mean_lqr = r.mean_lqr;
      item.input_to_final = r.input_to_final;
      item.scores = entry.scores;
      if (entry.reference_path &&
          MediaKindFromPath(entry.media_path) == MediaKind::kWav) {
        const SnrResult snr =
            SnrBaseline(LoadClipForEncoder(*entry.reference_path, cfg.encoder),
                        LoadClipForEncoder(entry.media_path, cfg.encoder));
        if (!snr.infinite) item.snr_db = snr.db;
      }
      results[i] = std::move(item);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };

  const size_t jobs =
      std::clamp<size_t>(static_cast<size_t>(std::max(cfg.jobs, 1)), 1, n);
  if (jobs == 1) {
    for (size_t i = 0; i < n; ++i) score_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) score_one(i);
      });
    }
    for (std::thread& t : workers) t.join();
  }

  std::vector<ItemScore> items;
  std::vector<std::pair<std::string, std::string>> exclusions;
  for (size_t i = 0; i < n; ++i) {
    if (results[i]) {
      items.push_back(std::move(*results[i]));
    } else {
      exclusions.emplace_back(manifest.entries[i].item_id, failures[i]);
    }
  }
  std::ranges::sort(exclusions);

  size_t units = items.size();
  if (cfg.aggregation == Aggregation::kPerSystem) {
    std::vector<std::string> systems;
    for (const ItemScore& item : items) systems.push_back(item.system_id);
    std::ranges::sort(systems);
    units = static_cast<size_t>(std::unique(systems.begin(), systems.end()) -
                                systems.begin());
  }
  if (units < 3) {
    std::string detail = std::to_string(units) + " scorable " +
                         (cfg.aggregation == Aggregation::kPerSystem ? "systems"
                                                                     : "items");
    if (!exclusions.empty()) detail += "; first failure: " + exclusions.front().second;
    throw LqrError(ErrorCode::kTooFewPoints, detail);
  }

  CorrelationReport report =
      CorrelateItems(std::move(items), manifest.score_columns, cfg.aggregation);
  report.exclusions = std::move(exclusions);
  report.total_items = n;
  report.model_provenance = model.trained_on;
  return report;
}

std::string FormatReportCsv(const CorrelationReport& report) {
  std::string out = "score_column,metric,n,rho,tau\n";
  for (const CorrelationCell& cell : report.cells) {
    out += cell.score_column + "," + cell.metric + "," + std::to_string(cell.n) +
           "," + Format6(cell.rho) + "," + Format6(cell.tau) + "\n";
  }
  return out;
}

std::string FormatReportJson(const CorrelationReport& report) {
  nlohmann::ordered_json j;
  j["aggregation"] = AggregationName(report.aggregation);
  j["model_provenance"] = report.model_provenance;
  if (!report.config_echo.empty()) {
    nlohmann::ordered_json config =
        nlohmann::ordered_json::parse(report.config_echo, nullptr, false);
    j["config"] = config.is_discarded() ? nlohmann::ordered_json(report.config_echo)
                                        : config;
  }
  j["total_items"] = report.total_items;
  j["cells"] = nlohmann::ordered_json::array();
  for (const CorrelationCell& cell : report.cells) {
    nlohmann::ordered_json c;
    c["score_column"] = cell.score_column;
    c["metric"] = cell.metric;
    c["n"] = cell.n;
    c["rho"] = cell.error.empty() ? nlohmann::ordered_json(cell.rho)
                                  : nlohmann::ordered_json(nullptr);
    c["tau"] = cell.error.empty() ? nlohmann::ordered_json(cell.tau)
                                  : nlohmann::ordered_json(nullptr);
    if (!cell.error.empty()) c["error"] = cell.error;
    j["cells"].push_back(c);
  }
  j["items"] = nlohmann::ordered_json::array();
  for (const ItemScore& item : report.items) {
    nlohmann::ordered_json i;
    i["item_id"] = item.item_id;
    i["system_id"] = item.system_id;
    i["mean_lqr"] = item.mean_lqr;
    i["input_to_final"] = item.input_to_final;
    if (item.snr_db) i["snr_db"] = *item.snr_db;
    j["items"].push_back(i);
  }
  j["exclusions"] = nlohmann::ordered_json::array();
  for (const auto& [id, reason] : report.exclusions) {
    j["exclusions"].push_back({{"item_id", id}, {"reason", reason}});
  }
  return j.dump(2) + "\n";
}

void WriteReport(const CorrelationReport& report,
                 const std::filesystem::path& path, ReportFormat format) {
  const std::string text = format == ReportFormat::kCsv ? FormatReportCsv(report)
                                                        : FormatReportJson(report);
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) {
    throw LqrError(ErrorCode::kIoFailure, "cannot write " + path.string());
  }
}

}  // namespace lqrlab
