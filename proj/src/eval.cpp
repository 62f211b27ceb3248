#include "thir/eval.hpp"

#include "thir/error.hpp"
#include "thir/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

namespace thir {

namespace {

// Unbiased draw in [0, bound) from the raw engine output, so splits do not
// depend on the standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

}  // namespace

Split split(const std::vector<DatasetRecord>& records, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "train fraction must lie in (0, 1)");
  }

  std::map<Label, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    strata[spec.stratify_by_label ? records[i].label : Label::Unknown].push_back(i);
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<bool> in_train(records.size(), false);
  for (auto& [label, members] : strata) {
    const auto n = members.size();
    if (n < 2) {
      throw Error(ErrorKind::InsufficientData, "need at least 2 records labelled " + std::string(to_string(label)));
    }
    auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    shuffle(members, rng);
    for (std::size_t i = 0; i < n_train; ++i) in_train[members[i]] = true;
  }

  Split out;
  for (std::size_t i = 0; i < records.size(); ++i) (in_train[i] ? out.train : out.test).push_back(records[i]);
  return out;
}

Label majority_vote(std::span<const Label> ranked) {
  if (ranked.empty()) throw Error(ErrorKind::EmptyNeighborList, "majority vote over no neighbours");
  std::map<Label, std::size_t> votes;
  for (Label l : ranked) ++votes[l];
  std::size_t best = 0;
  for (const auto& [label, n] : votes) best = std::max(best, n);
  for (Label l : ranked) {
    if (votes[l] == best) return l;
  }
  return ranked.front();
}

Label majority_vote(std::span<const RankedResult> ranked) {
  std::vector<Label> labels;
  labels.reserve(ranked.size());
  for (const auto& r : ranked) labels.push_back(r.label);
  return majority_vote(labels);
}

namespace {

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

EvalRow score_predictions(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorKind::InvalidArgument, "prediction/truth length mismatch");
  EvalRow row;
  auto& c = row.confusion;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == Label::Malignant;
    const bool guess = predicted[i] == Label::Malignant;
    if (actual && guess) ++c.tp;
    else if (!actual && guess) ++c.fp;
    else if (actual && !guess) ++c.fn;
    else ++c.tn;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  row.queries = truth.size();
  row.accuracy = ratio(correct, truth.size());
  row.precision = ratio(c.tp, c.tp + c.fp);
  row.recall = ratio(c.tp, c.tp + c.fn);
  row.f1 = row.precision + row.recall > 0 ? 2 * row.precision * row.recall / (row.precision + row.recall) : 0.0;
  return row;
}

std::vector<EvalRow> evaluate_descriptors(const Index& train, const DescriptorMatrix& queries,
                                          std::span<const Label> truth, std::span<const int> ks,
                                          const std::string& magnification, int workers) {
  if (static_cast<std::size_t>(queries.rows()) != truth.size()) {
    throw Error(ErrorKind::InvalidArgument, "query/truth count mismatch");
  }
  if (ks.empty()) throw Error(ErrorKind::InvalidArgument, "no K values");
  const int max_k = *std::max_element(ks.begin(), ks.end());
  if (*std::min_element(ks.begin(), ks.end()) < 1) throw Error(ErrorKind::InvalidArgument, "K must be positive");

  // One retrieval at the largest K serves every smaller K as a prefix.
  std::vector<std::vector<RankedResult>> neighbours(truth.size());
  QuerySpec qs;
  qs.k = max_k;
  parallel_for(truth.size(), workers, [&](std::size_t i) {
    neighbours[i] = top_k(train, queries.row(static_cast<Eigen::Index>(i)).transpose(), qs);
  });

  std::vector<EvalRow> rows;
  for (int k : ks) {
    std::vector<Label> predicted(truth.size());
    double precision_sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), neighbours[i].size());
      std::span<const RankedResult> top(neighbours[i].data(), n);
      predicted[i] = majority_vote(top);
      const auto same = std::count_if(top.begin(), top.end(), [&](const RankedResult& r) { return r.label == truth[i]; });
      precision_sum += static_cast<double>(same) / k;
    }
    EvalRow row = score_predictions(predicted, truth);
    row.magnification = magnification;
    row.k = k;
    row.mean_precision_at_k = truth.empty() ? 0.0 : precision_sum / static_cast<double>(truth.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

EvalReport evaluate(const Index& train, std::span<const DatasetRecord> test, std::span<const int> ks,
                    const BettiCurveSpec& spec, const EvalOptions& options) {
  if (!(spec == train.spec)) {
    throw Error(ErrorKind::DimensionMismatch, "evaluation spec differs from the training index spec");
  }
  std::vector<DatasetRecord> scored;
  for (const auto& rec : test) {
    if (rec.label != Label::Unknown) scored.push_back(rec);
  }

  DescriptorMatrix queries(static_cast<Eigen::Index>(scored.size()), train.dim());
  parallel_for(scored.size(), options.workers, [&](std::size_t i) {
    const auto path = options.root.empty() ? scored[i].path : options.root / scored[i].path;
    queries.row(static_cast<Eigen::Index>(i)) = extract_descriptor(load_image(path), train.spec, train.resize).transpose();
  });
  std::vector<Label> truth;
  for (const auto& rec : scored) truth.push_back(rec.label);

  EvalReport report;
  report.spec = train.spec;
  report.rows = evaluate_descriptors(train, queries, truth, ks, options.magnification, options.workers);
  return report;
}

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

namespace {

constexpr const char* kColumns[] = {"magnification", "K", "accuracy", "recall", "precision", "f1",
                                    "mean_precision_at_k", "queries"};

std::vector<std::string> cells(const EvalRow& r) {
  return {r.magnification,         std::to_string(r.k),       format_metric(r.accuracy),
          format_metric(r.recall), format_metric(r.precision), format_metric(r.f1),
          format_metric(r.mean_precision_at_k), std::to_string(r.queries)};
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Csv: {
      for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
      out << '\n';
      for (const auto& row : report.rows) {
        const auto c = cells(row);
        for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << c[i];
        out << '\n';
      }
      break;
    }
    case ReportFormat::Markdown: {
      out << "Split " << format_metric(report.train_fraction) << " train, seed " << report.seed << ", R = "
          << report.spec.resolution << ", range " << to_string(report.spec.range_policy) << ", positive class "
          << report.positive_class << "\n\n";
      out << '|';
      for (const char* col : kColumns) out << ' ' << col << " |";
      out << "\n|";
      for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i < 2 ? " --- |" : " ---: |");
      out << '\n';
      for (const auto& row : report.rows) {
        out << '|';
        for (const auto& c : cells(row)) out << ' ' << c << " |";
        out << '\n';
      }
      break;
    }
    case ReportFormat::Json: {
      nlohmann::json j;
      j["meta"] = {{"train_fraction", report.train_fraction},
                   {"seed", report.seed},
                   {"resolution", report.spec.resolution},
                   {"range", to_string(report.spec.range_policy)},
                   {"positive_class", report.positive_class}};
      j["rows"] = nlohmann::json::array();
      for (const auto& r : report.rows) {
        j["rows"].push_back({{"magnification", r.magnification},
                             {"K", r.k},
                             {"accuracy", r.accuracy},
                             {"recall", r.recall},
                             {"precision", r.precision},
                             {"f1", r.f1},
                             {"mean_precision_at_k", r.mean_precision_at_k},
                             {"queries", r.queries},
                             {"tp", r.confusion.tp},
                             {"fp", r.confusion.fp},
                             {"tn", r.confusion.tn},
                             {"fn", r.confusion.fn}});
      }
      out << j.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

}  // namespace thir
