#include "hwstyle/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hwstyle/error.hpp"

namespace hwstyle {
namespace {

std::map<CodeSeq, std::size_t> ngram_counts(const CodeSeq& seq, int n) {
  std::map<CodeSeq, std::size_t> counts;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= seq.size(); ++i) {
    ++counts[CodeSeq(seq.begin() + static_cast<std::ptrdiff_t>(i),
                     seq.begin() + static_cast<std::ptrdiff_t>(i + len))];
  }
  return counts;
}

void check_corpus(std::span<const CodeSeq> references, std::span<const CodeSeq> candidates) {
  if (references.empty() || candidates.empty()) throw InvalidArgument("BLEU: empty corpus");
  if (references.size() != candidates.size()) throw InvalidArgument("BLEU: reference/candidate count mismatch");
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

NgramPrecision bleu(std::span<const CodeSeq> references, std::span<const CodeSeq> candidates, int n) {
  check_corpus(references, candidates);
  if (n < 1) throw InvalidArgument("BLEU: n must be >= 1");
  NgramPrecision p;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto ref = ngram_counts(references[i], n);
    for (const auto& [gram, count] : ngram_counts(candidates[i], n)) {
      p.total += count;
      const auto it = ref.find(gram);
      if (it != ref.end()) p.clipped += std::min(count, it->second);
    }
  }
  if (p.total == 0) {
    p.defined = false;
    p.value = 0.0;
  } else {
    p.value = static_cast<double>(p.clipped) / static_cast<double>(p.total);
  }
  return p;
}

BleuScore bleu_score(std::span<const CodeSeq> references, std::span<const CodeSeq> candidates, int max_n,
                     BleuMean mean) {
  check_corpus(references, candidates);
  if (max_n < 1) throw InvalidArgument("BLEU: max_n must be >= 1");
  BleuScore s;
  for (const auto& r : references) s.reference_length += r.size();
  for (const auto& c : candidates) s.candidate_length += c.size();
  if (s.candidate_length == 0) throw InvalidArgument("BLEU: all candidates are empty");

  s.brevity_penalty = std::min(1.0, std::exp(1.0 - static_cast<double>(s.reference_length) /
                                                        static_cast<double>(s.candidate_length)));
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    s.precisions.push_back(bleu(references, candidates, n));
    if (s.precisions.back().value <= 0.0) {
      zero = true;
    } else {
      log_sum += std::log(s.precisions.back().value);
    }
  }
  if (zero) {
    s.score = 0.0;
  } else {
    const double log_mean = mean == BleuMean::geometric ? log_sum / max_n : log_sum;
    s.score = std::min(1.0, s.brevity_penalty * std::exp(log_mean));
  }
  return s;
}

EosReport eos_report(std::span<const int> generated_lengths, std::span<const int> reference_lengths) {
  if (generated_lengths.empty() || reference_lengths.empty()) throw InvalidArgument("EoS: empty length list");
  auto histogram = [](std::span<const int> lengths) {
    std::vector<double> h(kEosBins, 0.0);
    for (int len : lengths) {
      if (len < 1) throw InvalidArgument("EoS: lengths must be >= 1");
      h[static_cast<std::size_t>(std::min(len, kEosBins) - 1)] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(lengths.size());
    return h;
  };
  EosReport r{histogram(generated_lengths), histogram(reference_lengths), 0.0};

  const double n = kEosBins;
  double mg = 0.0, mr = 0.0;
  for (int i = 0; i < kEosBins; ++i) {
    mg += r.generated[static_cast<std::size_t>(i)];
    mr += r.reference[static_cast<std::size_t>(i)];
  }
  mg /= n;
  mr /= n;
  double cov = 0.0, vg = 0.0, vr = 0.0;
  for (std::size_t i = 0; i < kEosBins; ++i) {
    const double dg = r.generated[i] - mg, dr = r.reference[i] - mr;
    cov += dg * dr;
    vg += dg * dg;
    vr += dr * dr;
  }
  if (vg <= 0.0 || vr <= 0.0) throw NumericError("EoS: zero-variance length histogram, Pearson undefined");
  r.pearson = std::clamp(cov / std::sqrt(vg * vr), -1.0, 1.0);
  return r;
}

double eos_pearson(std::span<const int> generated_lengths, std::span<const int> reference_lengths) {
  return eos_report(generated_lengths, reference_lengths).pearson;
}

nlohmann::json EvalReport::to_json() const {
  auto feature = [](const FeatureBleu& f) {
    return nlohmann::json{{"b1", round1(f.b1)}, {"b2", round1(f.b2)}, {"b3", round1(f.b3)}};
  };
  nlohmann::json j = {{"bleu", {{"dir", feature(dir)}, {"speed", feature(speed)}}},
                      {"eos_pearson", std::isfinite(eos_pearson) ? nlohmann::json(eos_pearson) : nlohmann::json(nullptr)},
                      {"n_pairs", n_pairs}};
  if (!per_letter.empty()) {
    nlohmann::json pl = nlohmann::json::object();
    for (const auto& [letter, rep] : per_letter) pl[std::string(1, letter)] = rep.to_json();
    j["per_letter"] = std::move(pl);
  }
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  auto feature = [](const nlohmann::json& f) {
    return FeatureBleu{f.at("b1").get<double>(), f.at("b2").get<double>(), f.at("b3").get<double>()};
  };
  EvalReport r;
  r.dir = feature(j.at("bleu").at("dir"));
  r.speed = feature(j.at("bleu").at("speed"));
  r.eos_pearson = j.at("eos_pearson").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                : j.at("eos_pearson").get<double>();
  r.n_pairs = j.at("n_pairs").get<std::size_t>();
  if (j.contains("per_letter")) {
    for (const auto& [k, v] : j.at("per_letter").items()) r.per_letter[k.at(0)] = from_json(v);
  }
  return r;
}

std::string EvalReport::table(const std::string& model_name) const {
  char buf[256];
  std::ostringstream os;
  std::snprintf(buf, sizeof buf, "%-20s | %-20s | %-20s\n", "Aspect/Feature", "Speed", "Freeman");
  os << buf;
  std::snprintf(buf, sizeof buf, "%-20s | %6s %6s %6s | %6s %6s %6s\n", "Model / B-score", "B-1", "B-2", "B-3",
                "B-1", "B-2", "B-3");
  os << buf;
  std::snprintf(buf, sizeof buf, "%-20s | %6.1f %6.1f %6.1f | %6.1f %6.1f %6.1f\n", model_name.c_str(), speed.b1,
                speed.b2, speed.b3, dir.b1, dir.b2, dir.b3);
  os << buf;
  std::snprintf(buf, sizeof buf, "EoS Pearson: %.3f   pairs: %zu\n", eos_pearson, n_pairs);
  os << buf;
  return os.str();
}

namespace {

EvalReport evaluate_all(std::span<const FrameSequence> references, std::span<const FrameSequence> generated,
                        bool tolerate_degenerate) {
  if (references.size() != generated.size()) throw InvalidArgument("evaluate: unpaired sequences");
  if (references.empty()) throw InvalidArgument("evaluate: empty corpus");
  std::vector<CodeSeq> rd, rs, gd, gs;
  std::vector<int> rl, gl;
  for (std::size_t i = 0; i < references.size(); ++i) {
    rd.push_back(references[i].dir_codes());
    rs.push_back(references[i].speed_codes());
    gd.push_back(generated[i].dir_codes());
    gs.push_back(generated[i].speed_codes());
    rl.push_back(static_cast<int>(references[i].size()));
    gl.push_back(static_cast<int>(generated[i].size()));
  }
  EvalReport r;
  r.n_pairs = references.size();
  auto fill = [](FeatureBleu& f, const std::vector<CodeSeq>& ref, const std::vector<CodeSeq>& gen) {
    f.b1 = bleu_score(ref, gen, 1).percent();
    f.b2 = bleu_score(ref, gen, 2).percent();
    f.b3 = bleu_score(ref, gen, 3).percent();
  };
  fill(r.dir, rd, gd);
  fill(r.speed, rs, gs);
  try {
    r.eos_pearson = eos_pearson(gl, rl);
  } catch (const NumericError&) {
    if (!tolerate_degenerate) throw;
    r.eos_pearson = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace

EvalReport evaluate(std::span<const FrameSequence> references, std::span<const FrameSequence> generated,
                    bool per_letter) {
  EvalReport r = evaluate_all(references, generated, false);
  if (per_letter) {
    std::map<char, std::pair<std::vector<FrameSequence>, std::vector<FrameSequence>>> groups;
    for (std::size_t i = 0; i < references.size(); ++i) {
      groups[references[i].letter].first.push_back(references[i]);
      groups[references[i].letter].second.push_back(generated[i]);
    }
    for (const auto& [letter, g] : groups) r.per_letter[letter] = evaluate_all(g.first, g.second, true);
  }
  return r;
}

}  // namespace hwstyle
