#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orars/matrix.hpp"

namespace orars {

struct FoldMetrics {
  std::optional<double> mae;
  double pcc = 0.0;
  double scc = 0.0;
  std::size_t n = 0;
};

struct EvalReport {
  std::optional<double> mae;  // absent when predictions are not on the score scale
  double pcc = 0.0;
  double scc = 0.0;
  std::size_t n = 0;
  std::vector<FoldMetrics> per_fold;
};

double mae(std::span<const double> x, std::span<const double> y);
double pcc(std::span<const double> x, std::span<const double> y);
double scc(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> x);

// All three metrics of predictions against ground truth.
EvalReport evaluate(std::span<const double> predictions, std::span<const double> truth,
                    bool with_mae = true);

enum class InterRaterMethod {
  leave_one_out,  // each rater vs the mean of the others, averaged over raters
  pairwise,       // every rater pair, averaged over pairs
};

// `ratings` is raters x utterances.
EvalReport inter_rater_baseline(const Matrix& ratings,
                                InterRaterMethod method = InterRaterMethod::leave_one_out);

std::string format_report_table(const EvalReport& r, const std::string& title);
// Single-line JSON record with the same fields as the table.
std::string format_report_json(const EvalReport& r);

}  // namespace orars
