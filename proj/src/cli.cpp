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

#include "psyeval/cli.hpp"

#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "psyeval/corpus.hpp"
#include "psyeval/error.hpp"
#include "psyeval/eval.hpp"
#include "psyeval/gam.hpp"
#include "psyeval/io.hpp"
#include "psyeval/metrics.hpp"
#include "psyeval/ngram.hpp"
#include "psyeval/surprisal.hpp"

namespace psyeval::cli {

namespace {

const std::vector<std::string> kLogBases{"nats", "bits"};

void write_or_print(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-")
    out << contents;
  else
    io::atomic_write(path, contents);
}

std::vector<corpus::Measure> measures_from(const std::string& flag) {
  if (flag == "all") return {corpus::Measure::FFD, corpus::Measure::GD, corpus::Measure::TD};
  return {corpus::parse_measure(flag)};
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluate language models as models of human reading", "psyeval"};
  app.require_subcommand(1);
  app.allow_extras(false);

  // train-ngram
  auto* train_cmd = app.add_subcommand("train-ngram", "Train an interpolated modified Kneser-Ney n-gram model");
  std::string train_text, train_out, train_arpa;
  int train_order = 3;
  train_cmd->add_option("--text", train_text, "Training sentences, one per line, whitespace tokenized")->required();
  train_cmd->add_option("--order", train_order, "Model order (1-5)")->capture_default_str();
  train_cmd->add_option("--out", train_out, "Binary model file to write")->required();
  train_cmd->add_option("--arpa", train_arpa, "Also write an ARPA-style text dump");

  // score
  auto* score_cmd = app.add_subcommand("score", "Score the corpus with an n-gram model and write a surprisal dump");
  std::string score_model, score_corpus, score_out, score_id = "ngram";
  score_cmd->add_option("--model", score_model, "Binary n-gram model")->required();
  score_cmd->add_option("--corpus", score_corpus, "Eyetracking TSV")->required();
  score_cmd->add_option("--out", score_out, "Surprisal dump to write (default: stdout)");
  score_cmd->add_option("--model-id", score_id, "Model id recorded in the dump")->capture_default_str();

  // ppl
  auto* ppl_cmd = app.add_subcommand("ppl", "Perplexity and normalized perplexity of a surprisal dump");
  std::string ppl_dump, ppl_base = "nats";
  std::int64_t ppl_vocab = 0;
  ppl_cmd->add_option("--dump", ppl_dump, "Surprisal dump TSV")->required();
  ppl_cmd->add_option("--log-base", ppl_base, "Log base of the dump")->check(CLI::IsMember(kLogBases))->capture_default_str();
  ppl_cmd->add_option("--vocab-size", ppl_vocab, "Override the vocabulary size from the dump header");

  // pnc
  auto* pnc_cmd = app.add_subcommand("pnc", "Predictability norm correlation against Cloze norms");
  std::string pnc_dump, pnc_corpus, pnc_norms, pnc_freq, pnc_base = "nats";
  double pnc_alpha = metrics::kDefaultClozeAlpha;
  bool pnc_retained = false;
  pnc_cmd->add_option("--dump", pnc_dump, "Surprisal dump TSV")->required();
  pnc_cmd->add_option("--corpus", pnc_corpus, "Eyetracking TSV")->required();
  pnc_cmd->add_option("--norms", pnc_norms, "Cloze norms TSV")->required();
  pnc_cmd->add_option("--alpha", pnc_alpha, "Cloze smoothing pseudo-count")->capture_default_str();
  pnc_cmd->add_option("--log-base", pnc_base, "Log base of the dump")->check(CLI::IsMember(kLogBases))->capture_default_str();
  pnc_cmd->add_flag("--retained-only", pnc_retained, "Correlate only over tokens kept by preprocessing");
  pnc_cmd->add_option("--frequency", pnc_freq, "Frequency TSV (needed with --retained-only)");

  // fit-gamm
  auto* fit_cmd = app.add_subcommand("fit-gamm", "Fit baseline and surprisal GAMMs for one model");
  std::string fit_corpus, fit_freq, fit_dump, fit_base = "nats", fit_measure = "gd", fit_out;
  gam::GamConfig fit_cfg;
  fit_cmd->add_option("--corpus", fit_corpus, "Eyetracking TSV")->required();
  fit_cmd->add_option("--frequency", fit_freq, "Frequency TSV")->required();
  fit_cmd->add_option("--dump", fit_dump, "Surprisal dump TSV (omit for the baseline only)");
  fit_cmd->add_option("--log-base", fit_base, "Log base of the dump")->check(CLI::IsMember(kLogBases))->capture_default_str();
  fit_cmd->add_option("--measure", fit_measure, "ffd, gd, td or all")
      ->check(CLI::IsMember({"ffd", "gd", "td", "all"}))
      ->capture_default_str();
  fit_cmd->add_option("--spline-basis", fit_cfg.spline_basis, "Position spline basis size")->capture_default_str();
  fit_cmd->add_option("--tensor-margin", fit_cfg.tensor_margin, "Tensor margin basis size")->capture_default_str();
  fit_cmd->add_flag("--log-response", fit_cfg.log_response, "Model log reading times");
  fit_cmd->add_option("--out", fit_out, "JSON fit summary (default: stdout)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Run the full evaluation described by a config file");
  std::string eval_config, eval_measure, eval_csv;
  std::optional<double> eval_alpha;
  int eval_jobs = 0;
  eval_cmd->add_option("--config", eval_config, "Config file")->required();
  eval_cmd->add_option("--jobs", eval_jobs, "Concurrent model evaluations (default: from config)");
  eval_cmd->add_option("--measure", eval_measure, "Override measures: ffd, gd, td or all")
      ->check(CLI::IsMember({"ffd", "gd", "td", "all"}));
  eval_cmd->add_option("--alpha", eval_alpha, "Override Cloze smoothing pseudo-count");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic fixture files");
  eval::SynthParams synth = eval::SynthParams::defaults();
  std::string synth_out;
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--texts", synth.n_texts, "Number of texts")->capture_default_str();
  synth_cmd->add_option("--words", synth.words_per_text, "Words per text")->capture_default_str();
  synth_cmd->add_option("--subjects", synth.n_subjects, "Number of readers")->capture_default_str();

  // report
  auto* report_cmd = app.add_subcommand("report", "Re-emit a JSON report as csv, json or svg");
  std::string report_in, report_format = "csv", report_out;
  report_cmd->add_option("--input", report_in, "Report JSON written by eval")->required();
  report_cmd->add_option("--format", report_format, "csv, json or svg")
      ->check(CLI::IsMember({"csv", "json", "svg"}))
      ->capture_default_str();
  report_cmd->add_option("--out", report_out, "Output file (default: stdout)");

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    err << "psyeval: unknown verb '" << argv[1] << "'\n\n" << app.help();
    return kUsageError;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "psyeval: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*train_cmd) {
      const auto model = ngram::train(ngram::read_sentences(train_text), train_order);
      ngram::save(model, train_out);
      if (!train_arpa.empty()) io::atomic_write(train_arpa, ngram::arpa_dump(model));
      err << "trained order-" << train_order << " model, " << model.predictable_size() << " word types\n";
    } else if (*score_cmd) {
      const auto model = ngram::load(score_model);
      const auto tokens = corpus::load_corpus(score_corpus);
      write_or_print(score_out, surprisal::serialize_dump(surprisal::score_corpus(model, tokens, score_id)), out);
    } else if (*ppl_cmd) {
      const auto dump = surprisal::load_dump(ppl_dump, surprisal::parse_log_base(ppl_base));
      const std::int64_t vocab = ppl_vocab > 0 ? ppl_vocab : dump.vocab_size;
      const double ppl = surprisal::perplexity(dump);
      out << "model_id\ttokens\tvocab_size\tppl\tppl_normalized\n"
          << dump.model_id << '\t' << dump.rows.size() << '\t' << vocab << '\t' << io::format_double(ppl) << '\t'
          << io::format_double(surprisal::normalized_perplexity(ppl, vocab)) << '\n';
    } else if (*pnc_cmd) {
      if (pnc_retained && pnc_freq.empty()) throw ArgumentError("--retained-only needs --frequency");
      const auto dump = surprisal::load_dump(pnc_dump, surprisal::parse_log_base(pnc_base));
      const auto tokens = corpus::load_corpus(pnc_corpus);
      const auto series = surprisal::align(dump, tokens);
      const auto human = metrics::cloze_surprisal(corpus::load_cloze(pnc_norms), pnc_alpha);
      std::set<corpus::TokenKey> retained;
      if (pnc_retained) retained = corpus::preprocess(tokens, corpus::load_frequency(pnc_freq));
      const auto r = metrics::pnc(series, human, pnc_retained ? &retained : nullptr);
      out << "model_id\tpnc\tn_pairs\tn_excluded\n"
          << dump.model_id << '\t' << io::format_double(r.r) << '\t' << r.n_pairs << '\t' << r.n_excluded << '\n';
    } else if (*fit_cmd) {
      const auto data = corpus::load_eyetracking(fit_corpus);
      const auto freq = corpus::load_frequency(fit_freq);
      const auto retained = corpus::preprocess(data.tokens, freq);
      std::map<corpus::TokenKey, double> values;
      if (!fit_dump.empty()) {
        values = surprisal::align(surprisal::load_dump(fit_dump, surprisal::parse_log_base(fit_base)), data.tokens)
                     .values;
      } else {
        for (const auto& t : data.tokens) values.emplace(t.key(), 0.0);
      }
      nlohmann::json doc;
      for (auto m : measures_from(fit_measure)) {
        const auto rows = corpus::build_rows(data.tokens, data.readings, retained, values, freq, m);
        const auto baseline = gam::fit(gam::assemble_design(rows, false, fit_cfg));
        nlohmann::json entry;
        entry["baseline"] = nlohmann::json::parse(gam::fit_summary_json(baseline));
        if (!fit_dump.empty()) {
          const auto full = gam::fit(gam::assemble_design(rows, true, fit_cfg));
          entry["full"] = nlohmann::json::parse(gam::fit_summary_json(full));
          entry["delta_loglik"] = gam::delta_loglik(full, baseline);
        }
        doc[std::string(corpus::measure_name(m))] = entry;
      }
      write_or_print(fit_out, doc.dump(2) + "\n", out);
    } else if (*eval_cmd) {
      eval::Config config = eval::load_config(eval_config);
      if (eval_jobs > 0) config.jobs = eval_jobs;
      if (!eval_measure.empty()) config.measures = measures_from(eval_measure);
      if (eval_alpha) config.cloze_alpha = *eval_alpha;
      const eval::Evaluation result = eval::run(config);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      // Render everything before writing anything.
      const std::string csv = eval::report_csv(result.rows);
      const std::string json = eval::report_json(result.rows);
      const std::string svg = !config.report_svg.empty() && !result.rows.empty() ? eval::report_svg(result.rows) : "";
      if (!config.report_csv.empty()) io::atomic_write(config.report_csv, csv);
      if (!config.report_json.empty()) io::atomic_write(config.report_json, json);
      if (!svg.empty()) io::atomic_write(config.report_svg, svg);
      if (config.report_csv.empty() && config.report_json.empty()) out << csv;
    } else if (*synth_cmd) {
      for (const auto& path : eval::synth_fixtures(synth, synth_out)) out << path << '\n';
    } else if (*report_cmd) {
      const auto rows = eval::parse_report_json(io::read_file(report_in));
      std::string rendered;
      switch (eval::parse_report_format(report_format)) {
        case eval::ReportFormat::Csv: rendered = eval::report_csv(rows); break;
        case eval::ReportFormat::Json: rendered = eval::report_json(rows); break;
        case eval::ReportFormat::Svg: rendered = eval::report_svg(rows); break;
      }
      write_or_print(report_out, rendered, out);
    }
  } catch (const ArgumentError& e) {
    err << "psyeval: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "psyeval: numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "psyeval: " << e.what() << '\n';
    return kDataError;
  }
  return kSuccess;
}

}  // namespace psyeval::cli
