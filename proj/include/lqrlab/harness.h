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

#ifndef LQRLAB_HARNESS_H_
#define LQRLAB_HARNESS_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lqrlab/encoder.h"
#include "lqrlab/lqr.h"
#include "lqrlab/rvq.h"

namespace lqrlab {

struct ManifestEntry {
  std::string media_path;  // resolved against the manifest's directory
  std::string item_id;     // `item` column, or the path as written
  std::optional<std::string> system_id;
  std::optional<std::string> reference_path;
  std::vector<double> scores;  // parallel to Manifest::score_columns
  size_t row_number = 0;       // 1-based data row
};

struct Manifest {
  std::vector<std::string> score_columns;
  std::vector<ManifestEntry> entries;
};

// CSV with a header row. `path` is required; `system`, `item` and
// `reference` are optional; every other column is a numeric score column.
// Throws MissingPathColumn, BadRow (message carries the row number),
// EmptyManifest. With require_scores, a manifest without score columns is
// rejected as EmptyManifest.
Manifest ParseManifest(const std::string& text,
                       const std::filesystem::path& base_dir = {},
                       bool require_scores = true);
Manifest LoadManifest(const std::filesystem::path& path,
                      bool require_scores = true);

enum class Aggregation { kPerItem, kPerSystem };
std::string AggregationName(Aggregation aggregation);

// Media ingestion shared by `score`, `train` and `eval`.
enum class MediaKind { kWav, kLtnt };
MediaKind MediaKindFromPath(const std::filesystem::path& path);

// Loads a WAV and resamples it to the encoder rate.
AudioClip LoadClipForEncoder(const std::filesystem::path& path,
                             const EncoderConfig& cfg);

// Latents for either route: WAV is encoded, LTNT is imported.
LatentBundle LoadMediaLatents(const std::filesystem::path& path,
                              const EncoderConfig& cfg);

// Scores a file. LTNT containers that carry stage outputs are reduced
// directly from them; everything else is quantized with the model.
LqrReport ScoreMedia(const std::filesystem::path& path, const RvqModel& model,
                     const EncoderConfig& cfg, const LqrOptions& options = {});

struct EvalConfig {
  EncoderConfig encoder;
  LqrOptions lqr;
  Aggregation aggregation = Aggregation::kPerItem;
  int jobs = 1;
};

struct ItemScore {
  std::string item_id;
  std::string system_id;
  double mean_lqr = 0.0;
  double input_to_final = 0.0;
  std::optional<double> snr_db;
  std::vector<double> scores;
};

struct CorrelationCell {
  std::string score_column;
  std::string metric;
  size_t n = 0;
  double rho = 0.0;
  double tau = 0.0;
  // Empty on success, otherwise the error name (e.g. "DegenerateVariance").
  std::string error;
};

struct CorrelationReport {
  Aggregation aggregation = Aggregation::kPerItem;
  std::vector<CorrelationCell> cells;
  std::vector<ItemScore> items;
  // (item_id, reason) for every item that failed to score.
  std::vector<std::pair<std::string, std::string>> exclusions;
  size_t total_items = 0;
  std::string model_provenance;
  std::string config_echo;
};

// Correlates already-scored items. Items are sorted by item_id first so the
// result does not depend on input order. Metrics are mean_lqr and
// input_to_final, plus snr_baseline when any item carries one.
CorrelationReport CorrelateItems(std::vector<ItemScore> items,
                                 const std::vector<std::string>& score_columns,
                                 Aggregation aggregation);

// Scores every entry (concurrently up to cfg.jobs) and correlates. Failing
// items are excluded and logged. Throws TooFewPoints when fewer than three
// items (or systems) survive.
CorrelationReport Evaluate(const Manifest& manifest, const RvqModel& model,
                           const EvalConfig& cfg);

enum class ReportFormat { kCsv, kStructured };

// CSV columns: score_column,metric,n,rho,tau with 6 significant digits.
std::string FormatReportCsv(const CorrelationReport& report);
std::string FormatReportJson(const CorrelationReport& report);
void WriteReport(const CorrelationReport& report,
                 const std::filesystem::path& path, ReportFormat format);

}  // namespace lqrlab

#endif  // LQRLAB_HARNESS_H_
