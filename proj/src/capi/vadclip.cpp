// Copyright 2026 The vadclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// extern "C" surface over the core. Every entry point converts exceptions
// into a status code plus thread-local error details.

#include "vadclip/vadclip.h"

#include <cstring>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vad/config.hpp"
#include "vad/error.hpp"
#include "vad/metrics.hpp"
#include "vad/layers.hpp"
#include "vad/pipeline.hpp"
#include "vad/synthetic.hpp"
#include "vad/util.hpp"

struct vad_config {
  vad::Config config;
};

struct vad_pipeline {
  std::unique_ptr<vad::Pipeline> pipeline;
};

struct vad_report {
  vad::EvalReport report;
  std::string markdown_path;
};

namespace {

thread_local std::string g_message;
thread_local std::string g_kind;
thread_local std::string g_category;

vad_status StatusOf(vad::ErrorCategory c) {
  switch (c) {
    case vad::ErrorCategory::kConfig: return VAD_ERR_CONFIG;
    case vad::ErrorCategory::kData: return VAD_ERR_DATA;
    case vad::ErrorCategory::kBackend: return VAD_ERR_BACKEND;
    case vad::ErrorCategory::kInternal: return VAD_ERR_INTERNAL;
  }
  return VAD_ERR_INTERNAL;
}

vad_status Record(const std::string& kind, vad::ErrorCategory category, const std::string& msg) {
  g_kind = kind;
  g_category = std::string(vad::ErrorCategoryName(category));
  g_message = msg;
  return StatusOf(category);
}

template <typename Fn>
vad_status Guard(Fn&& fn) {
  g_message.clear();
  g_kind.clear();
  g_category.clear();
  try {
    fn();
    return VAD_OK;
  } catch (const vad::Error& e) {
    return Record(std::string(vad::ErrorKindName(e.kind())), e.category(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return Record("IoError", vad::ErrorCategory::kData, e.what());
  } catch (const std::bad_alloc&) {
    return Record("Internal", vad::ErrorCategory::kInternal, "out of memory");
  } catch (const std::exception& e) {
    return Record("Internal", vad::ErrorCategory::kInternal, e.what());
  }
}

vad_status NullArgument(const char* what) {
  return Record("InvalidArgument", vad::ErrorCategory::kData, std::string(what) + " is NULL");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Copy(const vad::Counters& c, vad_cache_stats* out) {
  if (!out) return;
  out->segments = c.segments;
  out->visual_encoded = c.visual_encoded;
  out->visual_cached = c.visual_cached;
  out->text_encoded = c.text_encoded;
  out->text_cached = c.text_cached;
  out->vlm_calls = c.vlm_calls;
  out->caption_hits = c.caption_hits;
  out->backend_calls = c.backend_calls;
}

// Logs go to stderr so stdout stays machine-readable.
void ConfigureLogging(const vad::Config& config) {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("vadclip")); });
  const auto level = spdlog::level::from_str(config.GetString("run.log_level"));
  spdlog::set_level(level == spdlog::level::off ? spdlog::level::info : level);
}

vad_status Report(vad_pipeline* p, vad_report** out, const vad::ProtocolResult& result) {
  auto r = std::make_unique<vad_report>();
  r->report = result.report;
  r->markdown_path = p->pipeline->WriteReport(result).markdown.string();
  *out = r.release();
  return VAD_OK;
}

}  // namespace

extern "C" {

const char* vad_last_error_message(void) { return g_message.c_str(); }
const char* vad_last_error_kind(void) { return g_kind.c_str(); }
const char* vad_last_error_category(void) { return g_category.c_str(); }

const char* vad_version(void) {
  static const std::string version = "0.1.0 (" + vad::GitDescribe() + ")";
  return version.c_str();
}

void vad_string_free(char* s) { std::free(s); }

vad_status vad_config_create(vad_config** out) {
  if (!out) return NullArgument("out");
  return Guard([&] { *out = new vad_config(); });
}

vad_status vad_config_load(vad_config* cfg, const char* path) {
  if (!cfg || !path) return NullArgument("cfg or path");
  return Guard([&] { cfg->config.LoadFile(path); });
}

vad_status vad_config_load_text(vad_config* cfg, const char* text) {
  if (!cfg || !text) return NullArgument("cfg or text");
  return Guard([&] { cfg->config.LoadText(text); });
}

vad_status vad_config_set(vad_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return NullArgument("cfg, key or value");
  return Guard([&] { cfg->config.Set(key, value); });
}

vad_status vad_config_apply_env(vad_config* cfg, char** envp) {
  if (!cfg) return NullArgument("cfg");
  return Guard([&] { cfg->config.ApplyEnv(envp); });
}

vad_status vad_config_get(const vad_config* cfg, const char* key, char** out) {
  if (!cfg || !key || !out) return NullArgument("cfg, key or out");
  return Guard([&] {
    if (!cfg->config.Has(key)) vad::Fail(vad::ErrorKind::kConfigError, std::string("unknown key '") + key + "'");
    *out = Dup(cfg->config.GetString(key));
  });
}

vad_status vad_config_dump(const vad_config* cfg, char** out) {
  if (!cfg || !out) return NullArgument("cfg or out");
  return Guard([&] { *out = Dup(cfg->config.Dump()); });
}

vad_status vad_config_hash(const vad_config* cfg, char** out) {
  if (!cfg || !out) return NullArgument("cfg or out");
  return Guard([&] { *out = Dup(cfg->config.Hash()); });
}

void vad_config_destroy(vad_config* cfg) { delete cfg; }

vad_status vad_pipeline_open(const vad_config* cfg, vad_pipeline** out) {
  if (!cfg || !out) return NullArgument("cfg or out");
  return Guard([&] {
    ConfigureLogging(cfg->config);
    auto p = std::make_unique<vad_pipeline>();
    p->pipeline = std::make_unique<vad::Pipeline>(cfg->config);
    *out = p.release();
  });
}

void vad_pipeline_close(vad_pipeline* p) { delete p; }

vad_status vad_pipeline_run_dir(vad_pipeline* p, char** out) {
  if (!p || !out) return NullArgument("pipeline or out");
  return Guard([&] { *out = Dup(p->pipeline->run_dir().string()); });
}

vad_status vad_pipeline_ingest(vad_pipeline* p, vad_ingest_stats* stats) {
  if (!p) return NullArgument("pipeline");
  return Guard([&] {
    const auto r = p->pipeline->Ingest();
    if (stats) *stats = {r.records, r.persons, r.segments, r.padded};
  });
}

vad_status vad_pipeline_embed(vad_pipeline* p, vad_cache_stats* stats) {
  if (!p) return NullArgument("pipeline");
  return Guard([&] { Copy(p->pipeline->Embed(), stats); });
}

vad_status vad_pipeline_caption(vad_pipeline* p, vad_cache_stats* stats) {
  if (!p) return NullArgument("pipeline");
  return Guard([&] { Copy(p->pipeline->Caption(), stats); });
}

vad_status vad_pipeline_train(vad_pipeline* p, const char* holdout, int all_persons,
                              size_t* count) {
  if (!p) return NullArgument("pipeline");
  return Guard([&] {
    std::optional<std::string> h;
    if (holdout) h = holdout;
    const auto r = p->pipeline->Train(h, all_persons != 0);
    if (count) *count = r.checkpoints.size();
  });
}

vad_status vad_pipeline_eval_lopo(vad_pipeline* p, const char* checkpoints_dir,
                                  vad_report** out) {
  if (!p || !out) return NullArgument("pipeline or out");
  return Guard([&] {
    std::optional<std::filesystem::path> dir;
    if (checkpoints_dir) dir = checkpoints_dir;
    Report(p, out, p->pipeline->EvalLopo(dir));
  });
}

vad_status vad_pipeline_eval_cross(vad_pipeline* p, int allow_same, vad_report** out) {
  if (!p || !out) return NullArgument("pipeline or out");
  return Guard([&] { Report(p, out, p->pipeline->EvalCross(allow_same != 0)); });
}

vad_status vad_pipeline_baseline_vlm(vad_pipeline* p, vad_report** out) {
  if (!p || !out) return NullArgument("pipeline or out");
  return Guard([&] { Report(p, out, p->pipeline->BaselineVlm()); });
}

vad_status vad_report_load(const char* path, vad_report** out) {
  if (!path || !out) return NullArgument("path or out");
  return Guard([&] {
    const std::string text = vad::ReadFile(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      vad::Fail(vad::ErrorKind::kMalformedRow, std::string(path) + ": " + e.what());
    }
    auto r = std::make_unique<vad_report>();
    r->report = vad::EvalReport::FromJson(j);
    *out = r.release();
  });
}

vad_status vad_report_render(const vad_report* r, vad_report_format format, char** out) {
  if (!r || !out) return NullArgument("report or out");
  return Guard([&] {
    const auto f = format == VAD_REPORT_CSV ? vad::ReportFormat::kCsv : vad::ReportFormat::kMarkdown;
    *out = Dup(vad::RenderReport(r->report, f));
  });
}

const char* vad_report_path(const vad_report* r) { return r ? r->markdown_path.c_str() : ""; }

size_t vad_report_person_count(const vad_report* r) { return r ? r->report.per_person.size() : 0; }

const char* vad_report_person(const vad_report* r, size_t i) {
  if (!r || i >= r->report.per_person.size()) return nullptr;
  return r->report.per_person[i].person_id.c_str();
}

double vad_report_person_f1(const vad_report* r, size_t i) {
  if (!r || i >= r->report.per_person.size()) return -1.0;
  return r->report.per_person[i].f1;
}

double vad_report_average(const vad_report* r) { return r ? r->report.average : -1.0; }
double vad_report_std(const vad_report* r) { return r ? r->report.std : -1.0; }
void vad_report_destroy(vad_report* r) { delete r; }

vad_status vad_doctor(const vad_config* cfg, char** out, int* problems) {
  if (!out) return NullArgument("out");
  return Guard([&] {
    const vad::Config defaults;
    ConfigureLogging(cfg ? cfg->config : defaults);
    const auto report = vad::RunDoctor(cfg ? cfg->config : defaults);
    *out = Dup(report.text);
    if (problems) *problems = report.problems;
  });
}

vad_status vad_write_fixture(const char* root, int persons, int segments_per_class,
                             uint64_t seed) {
  if (!root) return NullArgument("root");
  return Guard([&] {
    vad::ImageFixtureSpec spec;
    spec.root = root;
    spec.persons = persons;
    spec.segments_per_class = segments_per_class;
    spec.seed = seed;
    vad::WriteImageFixture(spec);
  });
}

vad_status vad_f1_score(const int* truth, const int* predicted, size_t n, double* out) {
  if (!truth || !predicted || !out) return NullArgument("truth, predicted or out");
  return Guard([&] {
    std::vector<vad::PredictionRecord> preds(n);
    for (size_t i = 0; i < n; ++i) {
      preds[i].true_label = truth[i] ? vad::Label::kSpeaking : vad::Label::kNotSpeaking;
      preds[i].predicted_label = predicted[i] ? vad::Label::kSpeaking : vad::Label::kNotSpeaking;
    }
    *out = vad::F1Score(preds);
  });
}

vad_status vad_bce_with_logits(double logit, double label, double* out) {
  if (!out) return NullArgument("out");
  return Guard([&] { *out = vad::BceWithLogits(logit, label); });
}

vad_status vad_zero_shot_score(const float* visual, const float* classes, size_t k, size_t d,
                               double temperature, double* out) {
  if (!visual || !classes || !out) return NullArgument("visual, classes or out");
  return Guard([&] {
    if (!(temperature > 0.0)) vad::Fail(vad::ErrorKind::kInvalidArgument, "temperature must be positive");
    vad::ZeroShotScorer scorer;
    scorer.temperature = temperature;
    for (size_t c = 0; c < k; ++c) {
      scorer.class_embeddings.push_back(
          Eigen::Map<const vad::EmbeddingVector>(classes + c * d, static_cast<Eigen::Index>(d)));
    }
    const auto scores = vad::ZeroShotScore(
        Eigen::Map<const vad::EmbeddingVector>(visual, static_cast<Eigen::Index>(d)), scorer);
    std::copy(scores.begin(), scores.end(), out);
  });
}

}  // extern "C"
