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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lqrlab/audio_io.h"
#include "lqrlab/cli.h"
#include "lqrlab/common.h"
#include "lqrlab/degrade.h"
#include "lqrlab/encoder.h"
#include "lqrlab/lqr.h"
#include "lqrlab/rvq.h"
#include "lqrlab/stats.h"

namespace py = pybind11;

namespace lqrlab {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix ToMatrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const size_t rows = static_cast<size_t>(a.shape(0));
  const size_t cols = static_cast<size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array FromMatrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::memcpy(out.mutable_data(), m.data().data(), m.data().size() * sizeof(double));
  return out;
}

std::vector<double> ToVector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.size());
}

Array FromVector(const std::vector<double>& v) {
  Array out(v.size());
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

AudioClip MakeClip(const Array& samples, int sample_rate) {
  return AudioClip{ToVector(samples), sample_rate};
}

VarianceMode ParseMode(const std::string& mode) {
  if (mode == "variance") return VarianceMode::kVariance;
  if (mode == "power") return VarianceMode::kPower;
  throw py::value_error("variance_mode must be 'variance' or 'power'");
}

RatioOrder ParseOrder(const std::string& order) {
  if (order == "ratio_of_averages") return RatioOrder::kRatioOfAverages;
  if (order == "average_of_ratios") return RatioOrder::kAverageOfRatios;
  throw py::value_error("ratio_order must be 'ratio_of_averages' or 'average_of_ratios'");
}

py::dict ReportToDict(const LqrReport& r) {
  py::dict d;
  d["stage_lqr"] = r.stage_lqr;
  d["mean_lqr"] = r.mean_lqr;
  d["input_to_final"] = r.input_to_final;
  d["stage_sigma"] = r.stage_sigma;
  d["clamped"] = r.clamped;
  d["variance_mode"] = std::string(VarianceModeName(r.variance_mode));
  return d;
}

EncoderConfig MakeEncoder(size_t frame_len, size_t hop, size_t n_bands, int sample_rate,
                          double log_floor) {
  EncoderConfig cfg{frame_len, hop, n_bands, sample_rate, log_floor};
  ValidateEncoderConfig(cfg);
  return cfg;
}

py::dict TraceToDict(const QuantizationTrace& trace) {
  const size_t k = trace.num_stages();
  const size_t t = trace.num_frames();
  const size_t d = trace.residuals.front().cols();
  Array residuals({k + 1, t, d});
  for (size_t s = 0; s <= k; ++s) {
    std::memcpy(residuals.mutable_data() + s * t * d, trace.residuals[s].data().data(),
                t * d * sizeof(double));
  }
  py::array_t<uint32_t> codes({k, t});
  for (size_t s = 0; s < trace.codes.size(); ++s) {
    std::memcpy(codes.mutable_data() + s * t, trace.codes[s].data(), t * sizeof(uint32_t));
  }
  py::dict out;
  out["residuals"] = residuals;
  out["codes"] = codes;
  out["stage_sigma"] = trace.stage_sigma;
  return out;
}

}  // namespace
}  // namespace lqrlab

PYBIND11_MODULE(_core, m) {
  using namespace lqrlab;
  m.doc() = "LQR speech-quality metrics from residual vector quantization";

  // LqrError carries the error name in `.code`.
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() {
    return py::object(py::exception<LqrError>(m, "LqrError", PyExc_RuntimeError));
  });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const LqrError& e) {
      py::object type = error_type.get_stored();
      py::object exc = type(py::str(e.what()));
      exc.attr("code") = py::str(ErrorCodeName(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  // Audio.
  m.def("load_wav", [](const std::filesystem::path& path) {
    const AudioClip clip = LoadWav(path);
    return py::make_tuple(FromVector(clip.samples), clip.sample_rate);
  }, py::arg("path"), "Returns (mono float64 samples, sample_rate).");
  m.def("write_wav", [](const std::filesystem::path& path, const Array& samples,
                        int sample_rate) { WriteWav(path, MakeClip(samples, sample_rate)); },
        py::arg("path"), py::arg("samples"), py::arg("sample_rate"));
  m.def("resample", [](const Array& samples, int sample_rate, int target_rate) {
    return FromVector(ResampleLinear(MakeClip(samples, sample_rate), target_rate).samples);
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("target_rate"));

  // Encoder and latent containers.
  m.def("encode", [](const Array& samples, int sample_rate, size_t frame_len, size_t hop,
                     size_t n_bands, double log_floor) {
    const EncoderConfig cfg = MakeEncoder(frame_len, hop, n_bands, sample_rate, log_floor);
    return FromMatrix(EncodeSpectral(MakeClip(samples, sample_rate), cfg).frames);
  }, py::arg("samples"), py::arg("sample_rate") = 16000, py::arg("frame_len") = 1024,
     py::arg("hop") = 256, py::arg("n_bands") = 32, py::arg("log_floor") = 1e-10);
  m.def("read_ltnt", [](const std::filesystem::path& path) {
    const LatentBundle b = LoadLatents(path);
    py::list stages;
    for (const Matrix& q : b.stage_outputs) stages.append(FromMatrix(q));
    py::dict d;
    d["latents"] = FromMatrix(b.latents.frames);
    d["stage_outputs"] = stages;
    d["sample_rate"] = b.sample_rate;
    d["hop"] = b.hop;
    d["frame_rate"] = b.latents.frame_rate;
    return d;
  }, py::arg("path"));
  m.def("write_ltnt", [](const std::filesystem::path& path, const Array& latents,
                         const std::vector<Array>& stage_outputs, uint32_t sample_rate,
                         uint32_t hop) {
    LatentBundle b;
    b.latents.frames = ToMatrix(latents);
    for (const Array& q : stage_outputs) b.stage_outputs.push_back(ToMatrix(q));
    b.sample_rate = sample_rate;
    b.hop = hop;
    WriteLtnt(path, b);
  }, py::arg("path"), py::arg("latents"), py::arg("stage_outputs") = std::vector<Array>{},
     py::arg("sample_rate") = 16000, py::arg("hop") = 256);

  // Quantization.
  m.def("kmeans", [](const Array& vectors, size_t n_codewords, uint64_t seed,
                     int max_iters, int n_restarts) {
    KMeansOptions o;
    o.n_codewords = n_codewords;
    o.seed = seed;
    o.max_iters = max_iters;
    o.n_restarts = n_restarts;
    const KMeansResult r = RunKMeans(ToMatrix(vectors), o);
    return py::make_tuple(FromMatrix(r.codebook.codewords), r.distortion,
                          r.distortion_history);
  }, py::arg("vectors"), py::arg("n_codewords"), py::arg("seed") = 0,
     py::arg("max_iters") = 100, py::arg("n_restarts") = 1,
     "Returns (codewords, distortion, distortion_history).");

  py::class_<RvqModel>(m, "Model")
      .def(py::init([](const std::vector<Array>& stages, const std::string& mode,
                       bool zero_codeword, const std::string& trained_on) {
             RvqModel model;
             for (const Array& s : stages) model.stages.push_back(Codebook{ToMatrix(s)});
             model.variance_mode = ParseMode(mode);
             model.zero_codeword = zero_codeword;
             model.trained_on = trained_on;
             ValidateModel(model);
             return model;
           }),
           py::arg("stages"), py::arg("variance_mode") = "variance",
           py::arg("zero_codeword") = false, py::arg("trained_on") = "")
      .def_static("load", &LoadModel, py::arg("path"))
      .def("save", [](const RvqModel& m, const std::filesystem::path& p) { SaveModel(m, p); },
           py::arg("path"))
      .def_property_readonly("stages", [](const RvqModel& m) {
        py::list out;
        for (const Codebook& cb : m.stages) out.append(FromMatrix(cb.codewords));
        return out;
      })
      .def_property_readonly("num_stages", &RvqModel::num_stages)
      .def_property_readonly("codebook_size", &RvqModel::codebook_size)
      .def_property_readonly("dim", &RvqModel::dim)
      .def_property_readonly("variance_mode", [](const RvqModel& m) {
        return std::string(VarianceModeName(m.variance_mode));
      })
      .def_readonly("zero_codeword", &RvqModel::zero_codeword)
      .def_readonly("trained_on", &RvqModel::trained_on);

  m.def("train", [](const std::vector<Array>& corpus, size_t n_stages, size_t codebook_size,
                    uint64_t seed, int max_iters, int n_restarts, const std::string& mode,
                    bool zero_codeword, const std::string& trained_on) {
    std::vector<LatentSequence> seqs;
    for (const Array& a : corpus) seqs.push_back({ToMatrix(a), 0.0});
    TrainOptions o;
    o.n_stages = n_stages;
    o.codebook_size = codebook_size;
    o.seed = seed;
    o.max_iters = max_iters;
    o.n_restarts = n_restarts;
    o.variance_mode = ParseMode(mode);
    o.zero_codeword = zero_codeword;
    o.trained_on = trained_on;
    py::gil_scoped_release release;
    return TrainCodebooks(seqs, o);
  }, py::arg("corpus"), py::arg("n_stages") = 8, py::arg("codebook_size") = 256,
     py::arg("seed") = 0, py::arg("max_iters") = 50, py::arg("n_restarts") = 1,
     py::arg("variance_mode") = "variance", py::arg("zero_codeword") = false,
     py::arg("trained_on") = "");
  m.def("quantize", [](const RvqModel& model, const Array& latents) {
    return TraceToDict(Quantize(model, {ToMatrix(latents), 0.0}));
  }, py::arg("model"), py::arg("latents"),
     "Returns {'residuals': (K+1, T, D), 'codes': (K, T), 'stage_sigma': [...]}.");

  // Metrics.
  m.def("score", [](const RvqModel& model, const Array& latents, const std::string& order) {
    return ReportToDict(ScoreLatents(model, {ToMatrix(latents), 0.0}, {ParseOrder(order)}));
  }, py::arg("model"), py::arg("latents"), py::arg("ratio_order") = "ratio_of_averages");
  m.def("score_clip", [](const RvqModel& model, const Array& samples, int sample_rate,
                         size_t frame_len, size_t hop, double log_floor,
                         const std::string& order) {
    const EncoderConfig cfg =
        MakeEncoder(frame_len, hop, model.dim(), sample_rate, log_floor);
    return ReportToDict(
        ScoreClip(model, cfg, MakeClip(samples, sample_rate), {ParseOrder(order)}));
  }, py::arg("model"), py::arg("samples"), py::arg("sample_rate") = 16000,
     py::arg("frame_len") = 1024, py::arg("hop") = 256, py::arg("log_floor") = 1e-10,
     py::arg("ratio_order") = "ratio_of_averages");
  m.def("report_from_sigmas", [](const std::vector<double>& sigmas, const std::string& mode) {
    return ReportToDict(ReportFromSigmas(sigmas, ParseMode(mode)));
  }, py::arg("sigmas"), py::arg("variance_mode") = "variance");

  // Statistics.
  m.def("pearson", [](const Array& x, const Array& y) {
    return Pearson(ToVector(x), ToVector(y));
  }, py::arg("x"), py::arg("y"));
  m.def("spearman", [](const Array& x, const Array& y) {
    return Spearman(ToVector(x), ToVector(y));
  }, py::arg("x"), py::arg("y"));
  m.def("snr_baseline", [](const Array& reference, const Array& degraded) {
    return SnrBaseline(MakeClip(reference, 1), MakeClip(degraded, 1)).db;
  }, py::arg("reference"), py::arg("degraded"), "SNR in dB; inf for identical signals.");

  // Degradations.
  m.def("degrade", [](const Array& samples, int sample_rate, const std::string& kind,
                      double snr_db, const std::string& noise, double threshold,
                      double cutoff_hz, uint64_t seed) {
    DegradationSpec spec;
    if (kind == "noise") {
      spec.kind = DegradationKind::kAdditiveNoise;
    } else if (kind == "clip") {
      spec.kind = DegradationKind::kPeakClip;
    } else if (kind == "lowpass") {
      spec.kind = DegradationKind::kLowpass;
    } else {
      throw py::value_error("kind must be 'noise', 'clip' or 'lowpass'");
    }
    if (noise != "white" && noise != "pink") {
      throw py::value_error("noise must be 'white' or 'pink'");
    }
    spec.snr_db = snr_db;
    spec.noise_kind = noise == "pink" ? NoiseKind::kPink : NoiseKind::kWhite;
    spec.threshold = threshold;
    spec.cutoff_hz = cutoff_hz;
    spec.seed = seed;
    double gain = 1.0;
    const AudioClip out = ApplyDegradation(MakeClip(samples, sample_rate), spec, &gain);
    return py::make_tuple(FromVector(out.samples), gain);
  }, py::arg("samples"), py::arg("sample_rate"), py::arg("kind") = "noise",
     py::arg("snr_db") = std::numeric_limits<double>::infinity(), py::arg("noise") = "white",
     py::arg("threshold") = 1.0, py::arg("cutoff_hz") = 0.0, py::arg("seed") = 0,
     "Returns (samples, peak_gain).");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> argv = {"lqrlab"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<const char*> ptrs;
    for (const std::string& a : argv) ptrs.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = RunCli(static_cast<int>(ptrs.size()), ptrs.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command line tool in-process; returns (code, stdout, stderr).");
}
