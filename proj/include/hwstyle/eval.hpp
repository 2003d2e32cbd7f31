#pragma once

#include <map>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hwstyle/codec.hpp"

namespace hwstyle {

using CodeSeq = std::vector<int>;

struct NgramPrecision {
  double value = 0.0;
  std::size_t clipped = 0;  // matched candidate n-grams after clipping
  std::size_t total = 0;    // candidate n-grams
  bool defined = true;      // false when no candidate is n long
};

/// Corpus-level clipped n-gram precision. Throws InvalidArgument on an
/// empty corpus, mismatched list sizes or n < 1.
NgramPrecision bleu(std::span<const CodeSeq> references, std::span<const CodeSeq> candidates, int n);

enum class BleuMean {
  geometric,       // BP * (prod p_n)^(1/N), the usual BLEU
  literal_product  // BP * prod p_n
};

struct BleuScore {
  double score = 0.0;  // in [0, 1]
  double brevity_penalty = 0.0;
  std::vector<NgramPrecision> precisions;
  std::size_t reference_length = 0;
  std::size_t candidate_length = 0;
  double percent() const { return 100.0 * score; }
};

/// BP = min(1, exp(1 - L_R / L_G)) with corpus-total lengths.
BleuScore bleu_score(std::span<const CodeSeq> references, std::span<const CodeSeq> candidates, int max_n,
                     BleuMean mean = BleuMean::geometric);

inline constexpr int kEosBins = 100;

struct EosReport {
  std::vector<double> generated;  // frequency of length 1..kEosBins (last bin also holds longer)
  std::vector<double> reference;
  double pearson = 0.0;
};

/// Pearson correlation of the two normalized length histograms. Throws
/// NumericError when either histogram has zero variance, InvalidArgument
/// on empty input or lengths < 1.
EosReport eos_report(std::span<const int> generated_lengths, std::span<const int> reference_lengths);
double eos_pearson(std::span<const int> generated_lengths, std::span<const int> reference_lengths);

struct FeatureBleu {
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;  // percent
};

struct EvalReport {
  FeatureBleu dir;
  FeatureBleu speed;
  double eos_pearson = 0.0;
  std::size_t n_pairs = 0;
  std::map<char, EvalReport> per_letter;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  /// Table with B-1/B-2/B-3 columns for each feature.
  std::string table(const std::string& model_name = "model") const;
};

/// Scores paired sequences (`generated[i]` against `references[i]`).
/// With per_letter, also fills a breakdown per letter (pearson is NaN
/// there when a letter's histogram is degenerate).
EvalReport evaluate(std::span<const FrameSequence> references, std::span<const FrameSequence> generated,
                    bool per_letter = false);

}  // namespace hwstyle
