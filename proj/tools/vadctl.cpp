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

// vadctl: command-line front end over the vadclip C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vadclip/vadclip.h"

extern char** environ;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  long long seed = -1;
  int jobs = 0;
  std::string log_level;
  std::string holdout;
  bool all_persons = false;
  std::string checkpoints;
  bool allow_same = false;
  std::string input;
  std::string format = "markdown";
  std::string root;
  int persons = 3;
  int segments = 20;
  unsigned long long fixture_seed = 7;
};

int Die(vad_status status) {
  std::fprintf(stderr, "error category=%s kind=%s message=%s\n", vad_last_error_category(),
               vad_last_error_kind(), vad_last_error_message());
  return static_cast<int>(status);
}

class Session {
 public:
  ~Session() {
    if (pipeline_) vad_pipeline_close(pipeline_);
    if (config_) vad_config_destroy(config_);
  }

  // Defaults < file < environment < --set / --seed / --jobs.
  vad_status LoadConfig(const Options& o, bool require_file) {
    vad_status s = vad_config_create(&config_);
    if (s != VAD_OK) return s;
    if (!o.config.empty()) {
      if ((s = vad_config_load(config_, o.config.c_str())) != VAD_OK) return s;
    } else if (require_file) {
      return vad_config_load(config_, "");
    }
    if ((s = vad_config_apply_env(config_, environ)) != VAD_OK) return s;
    for (const auto& kv : o.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        return vad_config_set(config_, kv.c_str(), "");
      }
      s = vad_config_set(config_, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
      if (s != VAD_OK) return s;
    }
    if (o.seed >= 0) {
      if ((s = vad_config_set(config_, "train.seed", std::to_string(o.seed).c_str())) != VAD_OK) {
        return s;
      }
    }
    if (o.jobs > 0) {
      if ((s = vad_config_set(config_, "run.jobs", std::to_string(o.jobs).c_str())) != VAD_OK) {
        return s;
      }
    }
    if (!o.log_level.empty()) {
      if ((s = vad_config_set(config_, "run.log_level", o.log_level.c_str())) != VAD_OK) return s;
    }
    return VAD_OK;
  }

  vad_status Open() {
    vad_status s = vad_pipeline_open(config_, &pipeline_);
    if (s != VAD_OK) return s;
    char* dir = nullptr;
    if ((s = vad_pipeline_run_dir(pipeline_, &dir)) != VAD_OK) return s;
    std::printf("run_dir=%s\n", dir);
    vad_string_free(dir);
    return VAD_OK;
  }

  vad_config* config() { return config_; }
  vad_pipeline* pipeline() { return pipeline_; }

 private:
  vad_config* config_ = nullptr;
  vad_pipeline* pipeline_ = nullptr;
};

void PrintStats(const vad_cache_stats& s) {
  std::printf(
      "segments=%zu visual_encoded=%zu visual_cached=%zu text_encoded=%zu text_cached=%zu "
      "vlm_calls=%zu caption_hits=%zu backend_calls=%zu\n",
      s.segments, s.visual_encoded, s.visual_cached, s.text_encoded, s.text_cached, s.vlm_calls,
      s.caption_hits, s.backend_calls);
}

int PrintReport(vad_report* report) {
  char* text = nullptr;
  const vad_status s = vad_report_render(report, VAD_REPORT_MARKDOWN, &text);
  if (s != VAD_OK) {
    vad_report_destroy(report);
    return Die(s);
  }
  std::fputs(text, stdout);
  std::printf("report=%s\n", vad_report_path(report));
  vad_string_free(text);
  vad_report_destroy(report);
  return 0;
}

int Run(const std::string& command, const Options& o) {
  if (command == "doctor") {
    Session session;
    vad_status s = session.LoadConfig(o, false);
    if (s != VAD_OK) return Die(s);
    char* text = nullptr;
    int problems = 0;
    if ((s = vad_doctor(session.config(), &text, &problems)) != VAD_OK) return Die(s);
    std::fputs(text, stdout);
    vad_string_free(text);
    return 0;
  }
  if (command == "report") {
    std::filesystem::path input = o.input;
    if (std::filesystem::is_directory(input)) input /= "report.json";
    vad_report* report = nullptr;
    vad_status s = vad_report_load(input.string().c_str(), &report);
    if (s != VAD_OK) return Die(s);
    vad_report_format format = VAD_REPORT_MARKDOWN;
    if (o.format == "csv") {
      format = VAD_REPORT_CSV;
    } else if (o.format != "markdown") {
      vad_report_destroy(report);
      std::fprintf(stderr, "error category=ConfigError kind=ConfigError message=unknown format '%s'\n",
                   o.format.c_str());
      return VAD_ERR_CONFIG;
    }
    char* text = nullptr;
    s = vad_report_render(report, format, &text);
    vad_report_destroy(report);
    if (s != VAD_OK) return Die(s);
    std::fputs(text, stdout);
    vad_string_free(text);
    return 0;
  }
  if (command == "make-fixture") {
    const vad_status s = vad_write_fixture(o.root.c_str(), o.persons, o.segments, o.fixture_seed);
    if (s != VAD_OK) return Die(s);
    std::printf("config=%s\n", (std::filesystem::path(o.root) / "config.toml").string().c_str());
    return 0;
  }

  Session session;
  vad_status s = session.LoadConfig(o, true);
  if (s != VAD_OK) return Die(s);
  if ((s = session.Open()) != VAD_OK) return Die(s);
  vad_pipeline* p = session.pipeline();

  if (command == "ingest") {
    vad_ingest_stats stats{};
    if ((s = vad_pipeline_ingest(p, &stats)) != VAD_OK) return Die(s);
    std::printf("records=%zu persons=%zu segments=%zu padded=%zu\n", stats.records, stats.persons,
                stats.segments, stats.padded);
    return 0;
  }
  if (command == "embed" || command == "caption") {
    vad_cache_stats stats{};
    s = command == "embed" ? vad_pipeline_embed(p, &stats) : vad_pipeline_caption(p, &stats);
    if (s != VAD_OK) return Die(s);
    PrintStats(stats);
    return 0;
  }
  if (command == "train") {
    size_t count = 0;
    s = vad_pipeline_train(p, o.holdout.empty() ? nullptr : o.holdout.c_str(), o.all_persons,
                           &count);
    if (s != VAD_OK) return Die(s);
    std::printf("checkpoints=%zu\n", count);
    return 0;
  }
  vad_report* report = nullptr;
  if (command == "eval-lopo") {
    s = vad_pipeline_eval_lopo(p, o.checkpoints.empty() ? nullptr : o.checkpoints.c_str(), &report);
  } else if (command == "eval-cross") {
    s = vad_pipeline_eval_cross(p, o.allow_same, &report);
  } else if (command == "baseline-vlm") {
    s = vad_pipeline_baseline_vlm(p, &report);
  } else {
    std::fprintf(stderr, "error category=ConfigError kind=ConfigError message=unknown command\n");
    return VAD_ERR_CONFIG;
  }
  if (s != VAD_OK) return Die(s);
  return PrintReport(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vadctl: visual voice activity detection from segment embeddings and captions"};
  app.set_version_flag("--version", std::string(vad_version()));
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("-c,--config", o.config, "TOML-like config file");
    if (config_required) c->required();
    sub->add_option("--set", o.sets, "override, section.key=value (repeatable)");
    sub->add_option("--seed", o.seed, "train.seed override");
    sub->add_option("--jobs", o.jobs, "worker threads for embed and caption");
    sub->add_option("--log-level", o.log_level, "debug | info | warn | error");
  };

  common(app.add_subcommand("ingest", "validate annotations and frames, write the segment manifest"), true);
  common(app.add_subcommand("embed", "encode segment embeddings into the cache"), true);
  common(app.add_subcommand("caption", "generate captions and their embeddings"), true);
  auto* train = app.add_subcommand("train", "train LOPO fold checkpoints");
  common(train, true);
  train->add_option("--holdout", o.holdout, "train only the fold holding out this person");
  train->add_flag("--all-persons", o.all_persons, "one model on every person");
  auto* lopo = app.add_subcommand("eval-lopo", "leave-one-person-out evaluation");
  common(lopo, true);
  lopo->add_option("--checkpoints", o.checkpoints, "reuse fold checkpoints from a train run");
  auto* cross = app.add_subcommand("eval-cross", "train on data.*, test on data.test_*");
  common(cross, true);
  cross->add_flag("--allow-same", o.allow_same, "permit overlapping datasets");
  common(app.add_subcommand("baseline-vlm", "score the yes/no VLM answer directly"), true);
  auto* report = app.add_subcommand("report", "render a saved report");
  report->add_option("-i,--input", o.input, "report.json or a run directory")->required();
  report->add_option("--format", o.format, "markdown | csv");
  common(app.add_subcommand("doctor", "check caches, backends and annotation checksums"), false);
  auto* fixture = app.add_subcommand("make-fixture", "write a synthetic image dataset");
  fixture->add_option("--root", o.root, "output directory")->required();
  fixture->add_option("--persons", o.persons, "pseudo persons");
  fixture->add_option("--segments", o.segments, "segments per class per person");
  fixture->add_option("--seed", o.fixture_seed, "fixture seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error category=ConfigError kind=ConfigError message=%s\n", e.what());
    return VAD_ERR_CONFIG;
  }
  return Run(app.get_subcommands().front()->get_name(), o);
}
