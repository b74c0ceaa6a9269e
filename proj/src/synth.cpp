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
#include <cctype>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "psyeval/error.hpp"
#include "psyeval/eval.hpp"
#include "psyeval/io.hpp"

namespace psyeval::eval {

namespace {

// Distribution helpers built directly on the engine's output, since the
// standard distributions are not reproducible across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  int binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i) k += uniform() < p ? 1 : 0;
    return k;
  }
  std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform() * n)); }
  // Draw from cumulative weights.
  std::size_t categorical(const std::vector<double>& cumulative) {
    const double u = uniform() * cumulative.back();
    return std::min<std::size_t>(cumulative.size() - 1,
                                 std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::vector<std::string> make_types(int n, Rng& rng) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "tr"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::set<std::string> seen;
  std::vector<std::string> types;
  while (static_cast<int>(types.size()) < n) {
    const int syllables = 1 + static_cast<int>(rng.index(4));
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += kOnsets[rng.index(std::size(kOnsets))];
      w += kVowels[rng.index(std::size(kVowels))];
    }
    if (seen.insert(w).second) types.push_back(w);
  }
  return types;
}

double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

SynthParams SynthParams::defaults(std::uint64_t seed) {
  SynthParams p;
  p.seed = seed;
  const double inflate = std::log(8.0);
  p.models = {{"m95", 0.95, 10000, 0.0},
              {"m80", 0.80, 80000, inflate},
              {"m60", 0.60, 10000, 0.0},
              {"m40", 0.40, 80000, inflate},
              {"m20", 0.20, 10000, 0.0}};
  return p;
}

std::vector<std::string> synth_fixtures(const SynthParams& params, const std::string& out_dir) {
  if (params.n_texts < 1 || params.words_per_text < 4 || params.n_subjects < 1 || params.n_types < 10)
    throw ArgumentError("synth: corpus too small");
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "dumps");
  Rng rng(params.seed);

  const std::vector<std::string> types = make_types(params.n_types, rng);
  std::vector<double> cumulative;
  double acc = 0.0;
  for (int r = 0; r < params.n_types; ++r) cumulative.push_back(acc += 1.0 / (r + 1.0));

  // Corpus: sentences of 6-14 words, commas now and then, a few numerals.
  struct Word {
    int text, index;
    std::string surface;
    double truth;  // hidden surprisal in nats
  };
  std::vector<Word> words;
  for (int t = 1; t <= params.n_texts; ++t) {
    int until_stop = 6 + static_cast<int>(rng.index(9));
    for (int i = 0; i < params.words_per_text; ++i) {
      std::string w;
      if (rng.uniform() < 0.01)
        w = std::to_string(1900 + static_cast<int>(rng.index(120)));
      else
        w = types[rng.categorical(cumulative)];
      if (--until_stop == 0 || i == params.words_per_text - 1) {
        w += '.';
        until_stop = 6 + static_cast<int>(rng.index(9));
      } else if (rng.uniform() < 0.05) {
        w += ',';
      }
      const double u = std::max(rng.uniform(), 1e-6);
      words.push_back({t, i, w, -2.0 * std::log(u)});
    }
  }

  std::string eyetracking = "text_id\tword_index\tword\tsubject_id\tffd_ms\tgd_ms\ttd_ms\n";
  for (int s = 1; s <= params.n_subjects; ++s) {
    const std::string subject = "s" + std::to_string(s);
    const double offset = 25.0 * rng.normal();
    for (std::size_t k = 0; k < words.size(); ++k) {
      const Word& w = words[k];
      const double prev_truth = w.index > 0 ? words[k - 1].truth : 0.0;
      long ffd = 0, gd = 0, td = 0;
      if (rng.uniform() >= 0.12) {
        const double len = static_cast<double>(w.surface.size());
        const double base = 190.0 + offset + 6.0 * w.truth + 4.0 * prev_truth + 3.0 * len + 25.0 * rng.normal();
        ffd = std::lround(std::max(60.0, base));
        gd = ffd + std::lround(10.0 * w.truth + std::abs(20.0 * rng.normal()));
        td = gd;
        if (rng.uniform() < 0.2) td += std::lround(50.0 + 20.0 * w.truth + std::abs(30.0 * rng.normal()));
      }
      eyetracking += std::to_string(w.text) + '\t' + std::to_string(w.index) + '\t' + w.surface + '\t' + subject +
                     '\t' + std::to_string(ffd) + '\t' + std::to_string(gd) + '\t' + std::to_string(td) + '\n';
    }
  }

  // Frequencies follow the Zipf weights; the rarest 3% of types get no entry.
  std::string frequency = "word\tcount\n";
  {
    std::vector<std::pair<std::string, long>> entries;
    const int keep = params.n_types - std::max(1, params.n_types * 3 / 100);
    for (int r = 0; r < keep; ++r)
      entries.emplace_back(types[r], std::max(1L, std::lround(1.0e6 / (r + 1.0))));
    std::sort(entries.begin(), entries.end());
    for (const auto& [w, c] : entries) frequency += w + '\t' + std::to_string(c) + '\n';
  }

  // Cloze norms: 25 responses per token, correct with probability exp(-truth).
  std::string cloze = "text_id\tword_index\tword\tn_responses\tn_correct\n";
  for (const auto& w : words) {
    if (w.text > params.n_cloze_texts) break;
    const int correct = rng.binomial(25, std::exp(-w.truth));
    cloze += std::to_string(w.text) + '\t' + std::to_string(w.index) + '\t' + w.surface + "\t25\t" +
             std::to_string(correct) + '\n';
  }

  std::string train;
  for (int s = 0; s < params.n_train_sentences; ++s) {
    const int len = 6 + static_cast<int>(rng.index(9));
    for (int i = 0; i < len; ++i) {
      if (i) train += ' ';
      train += types[rng.categorical(cumulative)];
    }
    train += " .\n";
  }

  double mean = 0.0, sd = 0.0;
  for (const auto& w : words) mean += w.truth;
  mean /= static_cast<double>(words.size());
  for (const auto& w : words) sd += (w.truth - mean) * (w.truth - mean);
  sd = std::sqrt(sd / static_cast<double>(words.size()));

  std::vector<std::string> written;
  auto write = [&](const fs::path& rel, const std::string& contents) {
    const std::string path = (fs::path(out_dir) / rel).string();
    io::atomic_write(path, contents);
    written.push_back(path);
  };
  write("eyetracking.tsv", eyetracking);
  write("frequency.tsv", frequency);
  write("cloze.tsv", cloze);
  write("train.txt", train);

  std::string config = "# synthetic evaluation fixture (seed " + std::to_string(params.seed) + ")\n" +
                       "corpus = \"eyetracking.tsv\"\nnorms = \"cloze.tsv\"\nfrequency = \"frequency.tsv\"\n"
                       "measures = [\"ffd\", \"gd\", \"td\"]\n\n[report]\ncsv = \"report.csv\"\n"
                       "json = \"report.json\"\nsvg = \"report.svg\"\n";
  for (std::size_t mi = 0; mi < params.models.size(); ++mi) {
    const SynthModel& m = params.models[mi];
    if (m.rho < -1.0 || m.rho > 1.0) throw ArgumentError("synth: rho must lie in [-1, 1]");
    Rng noise(params.seed * 1000003ULL + 7919ULL * (mi + 1));
    const double mix = std::sqrt(std::max(0.0, 1.0 - m.rho * m.rho));
    std::string dump = "# " + m.model_id + '\t' + std::to_string(m.vocab_size) + '\n' +
                       "text_id\tword_index\tsubtoken_index\tsubtoken\tsurprisal\n";
    for (const auto& w : words) {
      const double z = (w.truth - mean) / sd;
      const double v = mean + (1.0 - m.rho) * 0.8 + sd * (m.rho * z + mix * noise.normal());
      double word_s = softplus(v);
      std::vector<std::string> pieces;
      std::string run;
      for (char c : w.surface) {
        if (std::ispunct(static_cast<unsigned char>(c))) {
          if (!run.empty()) pieces.push_back(run);
          run.clear();
          pieces.emplace_back(1, c);
        } else {
          run += c;
        }
      }
      if (!run.empty()) pieces.push_back(run);
      // Long words are split in two by the model's tokenizer half the time.
      std::vector<std::pair<std::string, double>> subtokens;
      for (const auto& piece : pieces) {
        if (std::ispunct(static_cast<unsigned char>(piece[0]))) {
          subtokens.emplace_back(piece, softplus(1.0 + 0.3 * noise.normal()));
        } else if (piece.size() > 6 && noise.uniform() < 0.5) {
          const double share = 0.3 + 0.4 * noise.uniform();
          const std::size_t cut = piece.size() / 2;
          subtokens.emplace_back(piece.substr(0, cut), word_s * share);
          subtokens.emplace_back(piece.substr(cut), word_s * (1.0 - share));
        } else {
          subtokens.emplace_back(piece, word_s);
        }
      }
      subtokens.front().second += m.first_subtoken_offset;
      for (std::size_t k = 0; k < subtokens.size(); ++k)
        dump += std::to_string(w.text) + '\t' + std::to_string(w.index) + '\t' + std::to_string(k) + '\t' +
                subtokens[k].first + '\t' + fmt3(subtokens[k].second) + '\n';
    }
    write(fs::path("dumps") / (m.model_id + ".tsv"), dump);
    config += "\n[model." + m.model_id + "]\nsource = \"dump\"\npath = \"dumps/" + m.model_id +
              ".tsv\"\nvocab_size = " + std::to_string(m.vocab_size) + "\n";
  }
  write("config.toml", config);
  return written;
}

}  // namespace psyeval::eval
