#pragma once

#include "thir/index.hpp"
#include "thir/retrieval.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace thir {

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  bool stratify_by_label = true;
};

struct Split {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> test;
};

/// Seeded shuffle per label stratum; each side keeps the input order.
Split split(const std::vector<DatasetRecord>& records, const SplitSpec& spec);

/// Most frequent label among neighbours given nearest first; a tie goes to
/// the tied label that appears first in the ranking.
Label majority_vote(std::span<const Label> ranked);
Label majority_vote(std::span<const RankedResult> ranked);

/// Malignant is the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

struct EvalRow {
  std::string magnification;
  int k = 0;
  double accuracy = 0;
  double recall = 0;
  double precision = 0;
  double f1 = 0;
  double mean_precision_at_k = 0;
  std::size_t queries = 0;
  Confusion confusion;
};

/// Accuracy, precision, recall and F1 from hard predictions. Undefined ratios
/// (no predicted or no actual positives) are reported as 0.
EvalRow score_predictions(std::span<const Label> predicted, std::span<const Label> truth);

struct EvalReport {
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  BettiCurveSpec spec;
  std::string positive_class = "malignant";
  std::vector<EvalRow> rows;
};

struct EvalOptions {
  std::filesystem::path root;  // resolves test record paths
  int workers = 1;
  std::string magnification = "all";
};

/// Fingerprints every test record with the index's settings, retrieves top-K
/// from the training index and scores one row per K. Records without a
/// benign/malignant label are not scored.
EvalReport evaluate(const Index& train, std::span<const DatasetRecord> test, std::span<const int> ks,
                    const BettiCurveSpec& spec, const EvalOptions& options);

/// Same protocol on already-computed query descriptors (row i ↔ truth[i]).
std::vector<EvalRow> evaluate_descriptors(const Index& train, const DescriptorMatrix& queries,
                                          std::span<const Label> truth, std::span<const int> ks,
                                          const std::string& magnification, int workers = 1);

enum class ReportFormat { Csv, Markdown, Json };

std::string render_report(const EvalReport& report, ReportFormat format);

/// Fixed 4-decimal rendering; exact binary ties round to even.
std::string format_metric(double value);

}  // namespace thir
