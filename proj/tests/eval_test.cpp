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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "psyeval/error.hpp"
#include "psyeval/eval.hpp"
#include "psyeval/io.hpp"

using namespace psyeval;
using namespace psyeval::eval;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("psyeval_eval_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SynthParams small_params(std::uint64_t seed = 7) {
  SynthParams p = SynthParams::defaults(seed);
  p.n_texts = 8;
  p.words_per_text = 60;
  p.n_subjects = 4;
  p.n_cloze_texts = 8;
  p.n_train_sentences = 300;
  return p;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t at = haystack.find(needle); at != std::string::npos; at = haystack.find(needle, at + 1)) ++n;
  return n;
}

// Field-wise equality where unmeasured (NaN) fields match each other.
bool same_row(const ReportRow& a, const ReportRow& b) { return report_json({a}) == report_json({b}); }

ReportRow sample_row(int i) {
  ReportRow r;
  r.model_id = "model-" + std::to_string(i);
  r.vocab_size = 1000 * (i + 1);
  r.ppl = 50.0 + 3.5 * i;
  r.ppl_normalized = r.ppl / static_cast<double>(r.vocab_size);
  r.pnc = 0.1 + 0.05 * i;
  r.pnc_pairs = 500;
  r.dll_ffd = 10.0 * i + 0.125;
  r.dll_gd = 20.0 * i + 0.1;
  r.dll_td = 30.0 * i + 1.0 / 3.0;
  r.n_ffd = r.n_gd = r.n_td = 1234;
  return r;
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse_config(R"(# comment
corpus = "data/et.tsv"
norms = "/abs/cloze.tsv"   # trailing comment
frequency = freq.tsv
measures = ["gd", "td"]
spline_basis = 8
tensor_margin = 4
log_response = true
cloze_alpha = 0.25
jobs = 3

[report]
csv = "out/report.csv"

[model.gpt2]
source = "dump"
path = "dumps/gpt2.tsv"
vocab_size = 50257
log_base = "bits"

[model.tri]
source = "ngram"
train = "train.txt"
order = 3
)",
                                "/base");
  CHECK(c.corpus_path == "/base/data/et.tsv");
  CHECK(c.norms_path == "/abs/cloze.tsv");
  CHECK(c.frequency_path == "/base/freq.tsv");
  CHECK(c.measures == std::vector<corpus::Measure>{corpus::Measure::GD, corpus::Measure::TD});
  CHECK(c.gam.spline_basis == 8);
  CHECK(c.gam.tensor_margin == 4);
  CHECK(c.gam.log_response);
  CHECK(c.cloze_alpha == 0.25);
  CHECK(c.jobs == 3);
  CHECK(c.report_csv == "/base/out/report.csv");
  CHECK(c.report_json.empty());
  REQUIRE(c.models.size() == 2);
  CHECK(c.models[0].model_id == "gpt2");
  CHECK(c.models[0].vocab_size == 50257);
  CHECK(c.models[0].log_base == surprisal::LogBase::Bits);
  CHECK(c.models[1].source == ModelEntry::Source::Ngram);
  CHECK(c.models[1].train_path == "/base/train.txt");
  CHECK(c.models[1].order == 3);
}

TEST_CASE("config errors") {
  const std::string head = "corpus = a\nnorms = b\nfrequency = c\n";
  CHECK_NOTHROW(parse_config(head));
  CHECK_THROWS_AS(parse_config("corpus = a\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config(head + "colour = red\n"), ParseError);
  CHECK_THROWS_AS(parse_config(head + "[plots]\n"), ParseError);
  CHECK_THROWS_AS(parse_config(head + "corpus = again\n"), ParseError);
  CHECK_THROWS_AS(parse_config(head + "measures = [\"rt\"]\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config(head + "jobs = many\n"), ParseError);
  CHECK_THROWS_AS(parse_config(head + "[model.x]\nsource = \"dump\"\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config(head + "[model.x]\nsource = \"oracle\"\npath = p\n"), ArgumentError);
  CHECK_THROWS_AS(parse_config(head + "[model.x]\npath = p\nwidth = 3\n"), ParseError);
  CHECK_THROWS_AS(parse_config(head + "[model.x]\npath = p\n[model.x]\npath = q\n"), ParseError);
  CHECK_THROWS_AS(parse_config(head + "just words\n"), ParseError);
  try {
    parse_config(head + "\n\nbogus = 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), DataError);
}

TEST_CASE("synthetic fixtures are deterministic") {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  const auto files_a = synth_fixtures(small_params(), a.string());
  synth_fixtures(small_params(), b.string());
  REQUIRE(files_a.size() == 5 + 5);
  for (const auto& f : files_a) {
    const fs::path rel = fs::relative(f, a);
    CHECK(io::read_file(f) == io::read_file((b / rel).string()));
  }
  const fs::path c = scratch("synth_c");
  synth_fixtures(small_params(8), c.string());
  CHECK(io::read_file((a / "eyetracking.tsv").string()) != io::read_file((c / "eyetracking.tsv").string()));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("evaluation without models still fits baselines") {
  const fs::path dir = scratch("nomodels");
  synth_fixtures(small_params(), dir.string());
  Config c = load_config((dir / "config.toml").string());
  c.models.clear();
  const Evaluation e = run(c);
  CHECK(e.rows.empty());
  CHECK(e.baselines.size() == 3);
  for (const auto& [m, f] : e.baselines) CHECK(std::isfinite(f.loglik_ml));
  fs::remove_all(dir);
}

TEST_CASE("evaluation of dump and n-gram models") {
  const fs::path dir = scratch("models");
  synth_fixtures(small_params(), dir.string());
  Config c = load_config((dir / "config.toml").string());
  c.measures = {corpus::Measure::GD};
  ModelEntry copy = c.models[0];
  copy.model_id = "m95-copy";
  ModelEntry tri;
  tri.model_id = "tri";
  tri.source = ModelEntry::Source::Ngram;
  tri.train_path = (dir / "train.txt").string();
  tri.order = 3;
  ModelEntry broken;
  broken.model_id = "broken";
  broken.path = (dir / "missing.tsv").string();
  c.models = {c.models[0], copy, tri, broken};
  c.jobs = 2;

  const Evaluation e = run(c);
  REQUIRE(e.rows.size() == 4);
  CHECK(e.rows[0].error.empty());
  ReportRow renamed = e.rows[1];
  renamed.model_id = e.rows[0].model_id;
  CHECK(same_row(renamed, e.rows[0]));

  const ReportRow& t = e.rows[2];
  CHECK(t.error.empty());
  CHECK(std::isfinite(t.ppl));
  CHECK(t.ppl > 1.0);
  CHECK(std::isfinite(t.pnc));
  CHECK(std::isfinite(t.dll_gd));
  CHECK(t.n_gd > 0);
  CHECK(std::isnan(t.dll_ffd));
  CHECK(t.vocab_size > 3);

  CHECK_FALSE(e.rows[3].error.empty());
  CHECK(std::isnan(e.rows[3].ppl));
  CHECK(std::any_of(e.warnings.begin(), e.warnings.end(),
                    [](const std::string& w) { return w.rfind("broken:", 0) == 0; }));

  // Worker count does not change results.
  c.jobs = 1;
  const Evaluation serial = run(c);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same_row(serial.rows[i], e.rows[i]));
  fs::remove_all(dir);
}

TEST_CASE("PNC follows the generating correlation") {
  const fs::path dir = scratch("pnc");
  SynthParams p = SynthParams::defaults(3);
  p.models.push_back({"exact", 1.0, 10000, 0.0});
  synth_fixtures(p, dir.string());
  const Config c = load_config((dir / "config.toml").string());
  const Inputs in = load_inputs(c);
  std::vector<double> pnc;
  for (const auto& m : c.models) {
    const auto series = surprisal::align(model_dump(m, in.eyetracking.tokens), in.eyetracking.tokens);
    pnc.push_back(metrics::pnc(series, in.human).r);
  }
  REQUIRE(pnc.size() == 6);
  CHECK(std::max_element(pnc.begin(), pnc.end()) - pnc.begin() == 5);
  for (std::size_t i = 1; i < 5; ++i) CHECK(pnc[i] < pnc[i - 1]);
  fs::remove_all(dir);
}

TEST_CASE("CSV and JSON reports") {
  std::vector<ReportRow> rows{sample_row(0)};
  const std::string csv = report_csv(rows);
  CHECK(count(csv, "\n") == 2);
  CHECK(csv.rfind("model_id,vocab_size,ppl,ppl_normalized,pnc,", 0) == 0);

  rows.push_back(sample_row(1));
  rows.back().error = "dump: \"quoted\", failure";
  rows.back().dll_td = std::nan("");
  const auto back = parse_report_json(report_json(rows));
  REQUIRE(back.size() == 2);
  CHECK(back[0] == rows[0]);
  CHECK(back[1].error == rows[1].error);
  CHECK(std::isnan(back[1].dll_td));
  CHECK(report_json(back) == report_json(rows));
  CHECK(count(report_csv(rows), "\"dump: \"\"quoted\"\", failure\"") == 1);
  CHECK_THROWS_AS(parse_report_json("{\"rows\": [{}]}"), FormatError);
  CHECK_THROWS_AS(parse_report_json("not json"), FormatError);
  CHECK(parse_report_format("svg-scatter") == ReportFormat::Svg);
  CHECK_THROWS_AS(parse_report_format("pdf"), ArgumentError);
}

TEST_CASE("SVG scatter report") {
  std::vector<ReportRow> rows;
  for (int i = 0; i < 12; ++i) rows.push_back(sample_row(i));
  rows[3].model_id = "a<b>&c";
  const std::string svg = report_svg(rows);
  CHECK(count(svg, "<g class=\"panel\"") == 6);
  CHECK(count(svg, "<circle class=\"mark\"") == 72);
  CHECK(count(svg, "data-metric=\"ppl\"") == 3);
  CHECK(count(svg, "data-measure=\"td\"") == 2);
  CHECK(count(svg, "<title>model-11</title>") == 6);
  CHECK(count(svg, "<title>a&lt;b&gt;&amp;c</title>") == 6);
  CHECK(count(svg, ">Perplexity<") == 3);
  CHECK_THROWS_AS(report_svg({}), ArgumentError);
}
