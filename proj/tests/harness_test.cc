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
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "lqrlab/degrade.h"
#include "lqrlab/random.h"
#include "lqrlab/stats.h"
#include "support/synthetic_speech.h"
#include "support/temp_dir.h"

namespace lqrlab {
namespace {

void ExpectCode(ErrorCode code, auto&& fn) {
  try {
    fn();
    FAIL() << "expected " << ErrorCodeName(code);
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(ManifestTest, ParsesPathsAndScores) {
  const Manifest m =
      ParseManifest("path,MOS_OVRL\na.wav,3.5\nsub/b.wav,4\n/abs/c.ltnt,1.25\n", "/data");
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.score_columns, (std::vector<std::string>{"MOS_OVRL"}));
  EXPECT_EQ(m.entries[0].media_path, "/data/a.wav");
  EXPECT_EQ(m.entries[1].media_path, "/data/sub/b.wav");
  EXPECT_EQ(m.entries[2].media_path, "/abs/c.ltnt");
  EXPECT_EQ(m.entries[1].scores, (std::vector<double>{4.0}));
  EXPECT_EQ(m.entries[0].item_id, "a.wav");
  EXPECT_EQ(m.entries[2].row_number, 3u);
  EXPECT_FALSE(m.entries[0].system_id.has_value());
}

TEST(ManifestTest, ReservedColumnsAndQuoting) {
  const Manifest m = ParseManifest(
      "item,system,path,reference,SIG,BAK\r\n"
      "i1,\"sys, one\",x.wav,ref.wav,1,2\r\n"
      "i2,sys2,\"y \"\"q\"\".wav\",,3,4\r\n",
      "");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.score_columns, (std::vector<std::string>{"SIG", "BAK"}));
  EXPECT_EQ(m.entries[0].item_id, "i1");
  EXPECT_EQ(m.entries[0].system_id, "sys, one");
  EXPECT_EQ(m.entries[0].reference_path, "ref.wav");
  EXPECT_EQ(m.entries[1].media_path, "y \"q\".wav");
  EXPECT_FALSE(m.entries[1].reference_path.has_value());
  EXPECT_EQ(m.entries[1].scores, (std::vector<double>{3.0, 4.0}));
}

TEST(ManifestTest, Errors) {
  ExpectCode(ErrorCode::kMissingPathColumn,
             [] { ParseManifest("file,MOS\na.wav,1\n"); });
  ExpectCode(ErrorCode::kEmptyManifest, [] { ParseManifest(""); });
  ExpectCode(ErrorCode::kEmptyManifest, [] { ParseManifest("path,MOS\n"); });
  ExpectCode(ErrorCode::kEmptyManifest, [] { ParseManifest("path\na.wav\n"); });
  EXPECT_EQ(ParseManifest("path\na.wav\n", "", false).entries.size(), 1u);
  try {
    ParseManifest("path,MOS\na.wav,1\nb.wav,n/a\n");
    FAIL();
  } catch (const LqrError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadRow);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
  ExpectCode(ErrorCode::kBadRow, [] { ParseManifest("path,MOS\na.wav,1,7\n"); });
  ExpectCode(ErrorCode::kIoFailure, [] { LoadManifest("/nonexistent/m.csv"); });
}

TEST(MediaKindTest, RoutesByExtension) {
  EXPECT_EQ(MediaKindFromPath("a/b.wav"), MediaKind::kWav);
  EXPECT_EQ(MediaKindFromPath("B.WAV"), MediaKind::kWav);
  EXPECT_EQ(MediaKindFromPath("x.ltnt"), MediaKind::kLtnt);
  ExpectCode(ErrorCode::kUnsupportedEncoding, [] { MediaKindFromPath("x.flac"); });
}

ItemScore Item(std::string id, std::string system, double lqr, double score) {
  ItemScore item;
  item.item_id = std::move(id);
  item.system_id = std::move(system);
  item.mean_lqr = lqr;
  item.input_to_final = lqr * lqr;
  item.scores = {score};
  return item;
}

const CorrelationCell& Cell(const CorrelationReport& r, const std::string& metric) {
  for (const auto& c : r.cells) {
    if (c.metric == metric) return c;
  }
  throw std::runtime_error("no cell " + metric);
}

TEST(CorrelateItemsTest, PerSystemWithSingletonSystemsEqualsPerItem) {
  SplitMix64 rng(1);
  std::vector<ItemScore> items;
  for (int i = 0; i < 12; ++i) {
    items.push_back(Item("i" + std::to_string(i), "s" + std::to_string(i),
                         rng.Uniform() * 5, rng.Uniform() * 4 + 1));
  }
  const CorrelationReport a = CorrelateItems(items, {"MOS"}, Aggregation::kPerItem);
  const CorrelationReport b = CorrelateItems(items, {"MOS"}, Aggregation::kPerSystem);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].rho, b.cells[i].rho);
    EXPECT_EQ(a.cells[i].tau, b.cells[i].tau);
    EXPECT_EQ(a.cells[i].n, b.cells[i].n);
  }
}

TEST(CorrelateItemsTest, PerSystemAveragesBeforeCorrelating) {
  const std::vector<ItemScore> items = {
      Item("a1", "A", 1.0, 1.0), Item("a2", "A", 3.0, 2.0),
      Item("b1", "B", 2.0, 3.0), Item("b2", "B", 4.0, 3.0),
      Item("c1", "C", 10.0, 4.0), Item("c2", "C", 0.0, 6.0)};
  const CorrelationReport r = CorrelateItems(items, {"MOS"}, Aggregation::kPerSystem);
  const CorrelationCell& cell = Cell(r, "mean_lqr");
  EXPECT_EQ(cell.n, 3u);
  // System means: lqr (2, 3, 5), score (1.5, 3, 5).
  EXPECT_NEAR(cell.rho, Pearson(std::vector<double>{2, 3, 5},
                                std::vector<double>{1.5, 3, 5}), 1e-12);
  EXPECT_EQ(cell.tau, 1.0);
}

// Duplicating every point leaves both correlations unchanged.
TEST(CorrelateItemsTest, DuplicationInvariance) {
  const std::vector<ItemScore> base = {Item("a", "a", 1.0, 2.0), Item("b", "b", 2.0, 1.0),
                                       Item("c", "c", 3.0, 4.0), Item("d", "d", 4.0, 3.5)};
  std::vector<ItemScore> doubled = base;
  for (const ItemScore& item : base) {
    ItemScore copy = item;
    copy.item_id += "_dup";
    copy.system_id += "_dup";
    doubled.push_back(copy);
  }
  const CorrelationReport a = CorrelateItems(base, {"MOS"}, Aggregation::kPerItem);
  const CorrelationReport b = CorrelateItems(doubled, {"MOS"}, Aggregation::kPerItem);
  EXPECT_NEAR(Cell(a, "mean_lqr").rho, Cell(b, "mean_lqr").rho, 1e-12);
  EXPECT_NEAR(Cell(a, "mean_lqr").tau, Cell(b, "mean_lqr").tau, 1e-12);
  // Brute-force check of the 4-point value.
  EXPECT_NEAR(Cell(a, "mean_lqr").rho,
              Pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 1, 4, 3.5}),
              1e-12);
}

TEST(CorrelateItemsTest, InputOrderDoesNotMatter) {
  SplitMix64 rng(2);
  std::vector<ItemScore> items;
  for (int i = 0; i < 9; ++i) {
    items.push_back(Item("i" + std::to_string(i), "s", rng.Gaussian(), rng.Gaussian()));
  }
  const std::string a = FormatReportJson(CorrelateItems(items, {"MOS"}, Aggregation::kPerItem));
  std::reverse(items.begin(), items.end());
  std::swap(items[1], items[5]);
  const std::string b = FormatReportJson(CorrelateItems(items, {"MOS"}, Aggregation::kPerItem));
  EXPECT_EQ(a, b);
}

TEST(CorrelateItemsTest, ConstantScoresSurfaceDegenerateVariance) {
  const std::vector<ItemScore> items = {Item("a", "a", 1.0, 3.0), Item("b", "b", 2.0, 3.0),
                                        Item("c", "c", 3.0, 3.0)};
  const CorrelationReport r = CorrelateItems(items, {"MOS"}, Aggregation::kPerItem);
  EXPECT_EQ(Cell(r, "mean_lqr").error, "DegenerateVariance");
  EXPECT_TRUE(std::isnan(Cell(r, "mean_lqr").rho));
  EXPECT_NE(FormatReportCsv(r).find("nan"), std::string::npos);
}

TEST(ReportFormatTest, CsvLayoutAndRoundTrip) {
  CorrelationReport r;
  r.cells = {{"SIG", "mean_lqr", 10, 0.123456789, -0.5, ""},
             {"SIG", "input_to_final", 10, 0.75, 0.8, ""},
             {"BAK", "mean_lqr", 10, -0.333333333, 1.0, ""},
             {"BAK", "input_to_final", 10, 1e-7, 0.25, ""}};
  const std::string csv = FormatReportCsv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "score_column,metric,n,rho,tau");
  size_t rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    ASSERT_EQ(fields.size(), 5u);
    const CorrelationCell& cell = r.cells[rows];
    EXPECT_EQ(fields[0], cell.score_column);
    EXPECT_EQ(fields[1], cell.metric);
    EXPECT_EQ(std::stoul(fields[2]), cell.n);
    EXPECT_NEAR(std::stod(fields[3]), cell.rho, 1e-6 * std::max(1.0, std::abs(cell.rho)));
    EXPECT_NEAR(std::stod(fields[4]), cell.tau, 1e-6);
    ++rows;
  }
  EXPECT_EQ(rows, 4u);
  EXPECT_EQ(FormatReportCsv(CorrelationReport{}), "score_column,metric,n,rho,tau\n");
  ExpectCode(ErrorCode::kIoFailure,
             [&] { WriteReport(r, "/nonexistent/dir/r.csv", ReportFormat::kCsv); });
}

// End to end: clean clips degraded at known SNRs, subjective score equal to
// the SNR rank, one system per SNR level.
class EvaluateTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir;
    cfg_.encoder.n_bands = 16;
    const std::vector<AudioClip> clean = testing::SyntheticCorpus(4, 2.0, 16000, 21);
    std::vector<LatentSequence> latents;
    for (const AudioClip& c : clean) latents.push_back(EncodeSpectral(c, cfg_.encoder));
    model_ = new RvqModel(TrainCodebooks(
        latents, {.n_stages = 3, .codebook_size = 16, .seed = 3, .max_iters = 20}));
    const std::vector<double> levels = {0.0, 5.0, 10.0, 20.0, INFINITY};
    std::string csv = "item,system,path,reference,MOS\n";
    for (size_t c = 0; c < clean.size(); ++c) {
      const std::string ref = "ref" + std::to_string(c) + ".wav";
      WriteWav(*dir_ / ref, clean[c]);
      for (size_t l = 0; l < levels.size(); ++l) {
        const AudioClip noisy =
            AddNoiseSnr(clean[c], {.snr_db = levels[l], .seed = 100 + c});
        const std::string name = "c" + std::to_string(c) + "_l" + std::to_string(l);
        WriteWav(*dir_ / (name + ".wav"), noisy);
        csv += name + ",snr" + std::to_string(l) + "," + name + ".wav," + ref + "," +
               std::to_string(l + 1) + "\n";
      }
    }
    testing::WriteString(*dir_ / "manifest.csv", csv);
  }
  static void TearDownTestSuite() {
    delete model_;
    delete dir_;
  }

  static testing::TempDir* dir_;
  static RvqModel* model_;
  static EvalConfig cfg_;
};

testing::TempDir* EvaluateTest::dir_ = nullptr;
RvqModel* EvaluateTest::model_ = nullptr;
EvalConfig EvaluateTest::cfg_;

TEST_F(EvaluateTest, MeanLqrRanksSnrLevelsPerfectly) {
  const Manifest manifest = LoadManifest(*dir_ / "manifest.csv");
  EvalConfig cfg = cfg_;
  cfg.aggregation = Aggregation::kPerSystem;
  const CorrelationReport r = Evaluate(manifest, *model_, cfg);
  EXPECT_TRUE(r.exclusions.empty());
  EXPECT_EQ(r.total_items, 20u);
  EXPECT_EQ(Cell(r, "mean_lqr").n, 5u);
  EXPECT_EQ(Cell(r, "mean_lqr").tau, 1.0);
  // Clean items have infinite SNR and drop out of the baseline cell.
  EXPECT_EQ(Cell(r, "snr_baseline").n, 4u);
  EXPECT_EQ(Cell(r, "snr_baseline").tau, 1.0);
}

TEST_F(EvaluateTest, ParallelScoringIsDeterministic) {
  const Manifest manifest = LoadManifest(*dir_ / "manifest.csv");
  EvalConfig one = cfg_, many = cfg_;
  many.jobs = 3;
  EXPECT_EQ(FormatReportJson(Evaluate(manifest, *model_, one)),
            FormatReportJson(Evaluate(manifest, *model_, many)));
}

TEST_F(EvaluateTest, CorruptItemsAreExcluded) {
  Manifest manifest = LoadManifest(*dir_ / "manifest.csv");
  testing::WriteString(*dir_ / "broken.wav", "RIFF....WAVEjunk");
  manifest.entries[0].media_path = (*dir_ / "broken.wav").string();
  manifest.entries[1].media_path = (*dir_ / "missing.wav").string();
  const CorrelationReport r = Evaluate(manifest, *model_, cfg_);
  ASSERT_EQ(r.exclusions.size(), 2u);
  EXPECT_EQ(r.exclusions[0].first, manifest.entries[0].item_id);
  EXPECT_NE(r.exclusions[0].second.find("MalformedHeader"), std::string::npos)
      << r.exclusions[0].second;
  EXPECT_EQ(r.items.size(), 18u);
}

TEST_F(EvaluateTest, TooFewSurvivorsIsAnError) {
  Manifest manifest = LoadManifest(*dir_ / "manifest.csv");
  manifest.entries.resize(2);
  ExpectCode(ErrorCode::kTooFewPoints, [&] { Evaluate(manifest, *model_, cfg_); });
}

TEST_F(EvaluateTest, LtntWithStageOutputsIsReducedDirectly) {
  const AudioClip clip = testing::SyntheticVowels(1.0, 16000, 5);
  const LatentSequence x = EncodeSpectral(clip, cfg_.encoder);
  const QuantizationTrace trace = Quantize(*model_, x);
  LatentBundle bundle;
  bundle.latents = x;
  for (double& v : bundle.latents.frames.data()) v = static_cast<float>(v);
  for (size_t k = 1; k <= trace.num_stages(); ++k) {
    Matrix q = trace.StageOutput(k);
    for (double& v : q.data()) v = static_cast<float>(v);
    bundle.stage_outputs.push_back(q);
  }
  bundle.sample_rate = 16000;
  bundle.hop = 256;
  WriteLtnt(*dir_ / "x.ltnt", bundle);
  const LqrReport direct = ScoreMedia(*dir_ / "x.ltnt", *model_, cfg_.encoder);
  const LqrReport expected = ComputeReport(
      TraceFromStageOutputs(bundle.latents, bundle.stage_outputs, VarianceMode::kVariance));
  EXPECT_EQ(direct, expected);
  EXPECT_EQ(direct.stage_lqr.size(), 3u);
}

}  // namespace
}  // namespace lqrlab
