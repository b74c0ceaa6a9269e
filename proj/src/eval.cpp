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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "psyeval/error.hpp"
#include "psyeval/eval.hpp"
#include "psyeval/ngram.hpp"

namespace psyeval::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

gam::LambdaPolicy policy_for(const Config& c) {
  gam::LambdaPolicy p = gam::LambdaPolicy::gcv();
  p.log10_min = c.log10_lambda_min;
  p.log10_max = c.log10_lambda_max;
  return p;
}

void set_measure(ReportRow& row, corpus::Measure m, double dll, std::int64_t n) {
  switch (m) {
    case corpus::Measure::FFD:
      row.dll_ffd = dll;
      row.n_ffd = n;
      break;
    case corpus::Measure::GD:
      row.dll_gd = dll;
      row.n_gd = n;
      break;
    case corpus::Measure::TD:
      row.dll_td = dll;
      row.n_td = n;
      break;
  }
}

ReportRow evaluate_model(const ModelEntry& entry, const Config& config, const Inputs& in,
                         const std::map<corpus::Measure, gam::FittedGAM>& baselines) {
  ReportRow row;
  row.model_id = entry.model_id;
  row.dll_ffd = row.dll_gd = row.dll_td = kNaN;
  row.ppl = row.ppl_normalized = row.pnc = kNaN;
  try {
    const surprisal::SurprisalDump dump = model_dump(entry, in.eyetracking.tokens);
    row.vocab_size = entry.vocab_size > 0 ? entry.vocab_size : dump.vocab_size;
    const surprisal::WordSurprisalSeries series = surprisal::align(dump, in.eyetracking.tokens);
    row.ppl = surprisal::perplexity(dump);
    row.ppl_normalized = surprisal::normalized_perplexity(row.ppl, row.vocab_size);
    const metrics::PNCResult p = metrics::pnc(series, in.human, config.pnc_retained_only ? &in.retained : nullptr);
    row.pnc = p.r;
    row.pnc_pairs = static_cast<std::int64_t>(p.n_pairs);
    for (corpus::Measure m : config.measures) {
      auto rows = corpus::build_rows(in.eyetracking.tokens, in.eyetracking.readings, in.retained, series.values,
                                     in.frequency, m);
      const gam::FittedGAM full = gam::fit(gam::assemble_design(rows, true, config.gam), policy_for(config));
      set_measure(row, m, gam::delta_loglik(full, baselines.at(m)), static_cast<std::int64_t>(rows.size()));
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

double ReportRow::dll(corpus::Measure m) const {
  switch (m) {
    case corpus::Measure::FFD: return dll_ffd;
    case corpus::Measure::GD: return dll_gd;
    case corpus::Measure::TD: return dll_td;
  }
  return kNaN;
}

Inputs load_inputs(const Config& config) {
  Inputs in;
  in.eyetracking = corpus::load_eyetracking(config.corpus_path);
  in.frequency = corpus::load_frequency(config.frequency_path);
  in.norms = corpus::load_cloze(config.norms_path);
  in.retained = corpus::preprocess(in.eyetracking.tokens, in.frequency);
  in.human = metrics::cloze_surprisal(in.norms, config.cloze_alpha);
  return in;
}

surprisal::SurprisalDump model_dump(const ModelEntry& entry, const std::vector<corpus::CorpusToken>& tokens) {
  if (entry.source == ModelEntry::Source::Dump) {
    surprisal::SurprisalDump dump = surprisal::load_dump(entry.path, entry.log_base);
    dump.model_id = entry.model_id;
    return dump;
  }
  const ngram::NGramModel model = entry.path.empty()
                                      ? ngram::train(ngram::read_sentences(entry.train_path), entry.order)
                                      : ngram::load(entry.path);
  return surprisal::score_corpus(model, tokens, entry.model_id);
}

Evaluation run(const Config& config) {
  const Inputs in = load_inputs(config);
  Evaluation out;

  // Baseline surprisal values are never read; the map only satisfies
  // build_rows' coverage check so every model sees the same rows.
  std::map<corpus::TokenKey, double> zeros;
  for (const auto& t : in.eyetracking.tokens) zeros.emplace(t.key(), 0.0);
  for (corpus::Measure m : config.measures) {
    auto rows = corpus::build_rows(in.eyetracking.tokens, in.eyetracking.readings, in.retained, zeros,
                                   in.frequency, m);
    const gam::Design design = gam::assemble_design(rows, false, config.gam);
    for (const auto& name : design.dropped)
      out.warnings.push_back(std::string(corpus::measure_name(m)) + ": dropped term " + name);
    out.baselines.emplace(m, gam::fit(design, policy_for(config)));
  }

  out.rows.resize(config.models.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.jobs)),
                                                    std::max<std::size_t>(1, config.models.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < config.models.size(); i = next++)
      out.rows[i] = evaluate_model(config.models[i], config, in, out.baselines);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& r : out.rows)
    if (!r.error.empty()) out.warnings.push_back(r.model_id + ": " + r.error);
  return out;
}

}  // namespace psyeval::eval
