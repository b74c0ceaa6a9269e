// Copyright 2026 The psyeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "psyeval/corpus.hpp"
#include "psyeval/gam.hpp"
#include "psyeval/metrics.hpp"
#include "psyeval/surprisal.hpp"

namespace psyeval::eval {

struct ModelEntry {
  enum class Source { Ngram, Dump };
  std::string model_id;
  Source source = Source::Dump;
  std::string path;        // dump file, or trained n-gram model file
  std::string train_path;  // n-gram only: sentences to train on when path is empty
  int order = 3;
  std::int64_t vocab_size = 0;  // 0: take it from the dump header / model
  surprisal::LogBase log_base = surprisal::LogBase::Nats;
};

struct Config {
  std::string corpus_path;
  std::string norms_path;
  std::string frequency_path;
  std::vector<corpus::Measure> measures{corpus::Measure::FFD, corpus::Measure::GD, corpus::Measure::TD};
  gam::GamConfig gam;
  double log10_lambda_min = -6.0;
  double log10_lambda_max = 6.0;
  double cloze_alpha = metrics::kDefaultClozeAlpha;
  bool pnc_retained_only = false;
  int jobs = 1;
  std::string report_csv;
  std::string report_json;
  std::string report_svg;
  std::vector<ModelEntry> models;
};

// TOML-like key/value file: top-level keys, a [report] table and one
// [model.<id>] table per model. Relative paths resolve against base_dir.
Config parse_config(std::string_view text, const std::string& base_dir = ".",
                    const std::string& origin = "<config>");
Config load_config(const std::string& path);

struct ReportRow {
  std::string model_id;
  std::int64_t vocab_size = 0;
  double ppl = 0.0;
  double ppl_normalized = 0.0;
  double pnc = 0.0;
  std::int64_t pnc_pairs = 0;
  double dll_ffd = 0.0;
  double dll_gd = 0.0;
  double dll_td = 0.0;
  std::int64_t n_ffd = 0;
  std::int64_t n_gd = 0;
  std::int64_t n_td = 0;
  std::string error;  // empty for a complete row

  double dll(corpus::Measure m) const;
  bool operator==(const ReportRow&) const = default;
};

struct Evaluation {
  std::vector<ReportRow> rows;
  std::map<corpus::Measure, gam::FittedGAM> baselines;
  std::vector<std::string> warnings;
};

// Shared inputs loaded once per evaluation.
struct Inputs {
  corpus::EyetrackingData eyetracking;
  corpus::FrequencyTable frequency;
  std::vector<corpus::ClozeNorm> norms;
  std::set<corpus::TokenKey> retained;
  metrics::HumanSurprisalSeries human;
};

Inputs load_inputs(const Config& config);

// Per-model surprisal dump, from a dump file or by scoring with an n-gram model.
surprisal::SurprisalDump model_dump(const ModelEntry& entry, const std::vector<corpus::CorpusToken>& tokens);

// Full pipeline: baselines per measure fit once, then perplexity, PNC and
// delta log-likelihood per model. Model failures are recorded in the row.
Evaluation run(const Config& config);

enum class ReportFormat { Csv, Json, Svg };
ReportFormat parse_report_format(std::string_view name);

std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_json(std::string_view text);
// Two scatter panels per measure (perplexity and PNC against delta logLik).
std::string report_svg(const std::vector<ReportRow>& rows);
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path);

struct SynthModel {
  std::string model_id;
  double rho = 1.0;                  // correlation with the hidden surprisal
  std::int64_t vocab_size = 10000;
  double first_subtoken_offset = 0.0;  // nats added to each word's first subtoken
};

struct SynthParams {
  std::uint64_t seed = 42;
  int n_texts = 24;
  int words_per_text = 120;
  int n_subjects = 10;
  int n_cloze_texts = 12;
  int n_types = 400;
  int n_train_sentences = 2000;
  std::vector<SynthModel> models;

  // Five models at graded correlation; the second and fourth form a
  // large-vocabulary family whose perplexities are inflated.
  static SynthParams defaults(std::uint64_t seed = 42);
};

// Writes eyetracking.tsv, frequency.tsv, cloze.tsv, train.txt,
// dumps/<model>.tsv and config.toml into out_dir. Same seed and params give
// byte-identical files. Returns the written paths.
std::vector<std::string> synth_fixtures(const SynthParams& params, const std::string& out_dir);

}  // namespace psyeval::eval
