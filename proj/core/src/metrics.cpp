#include "orars/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "format_util.hpp"
#include "orars/error.hpp"

namespace orars {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y, std::size_t minimum) {
  if (x.size() != y.size()) {
    throw ShapeError("metric inputs differ in length (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  if (x.size() < minimum) {
    throw ShapeError("metric needs at least " + std::to_string(minimum) + " values");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void append_json_real(std::string& out, const std::optional<double>& v) {
  if (v) {
    detail::append_real(out, *v);
  } else {
    out += "null";
  }
}

}  // namespace

double mae(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

double pcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("correlation undefined for a constant sequence");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1 .. j+1).
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double scc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pcc(rx, ry);
}

EvalReport evaluate(std::span<const double> predictions, std::span<const double> truth,
                    bool with_mae) {
  EvalReport r;
  if (with_mae) r.mae = mae(predictions, truth);
  r.pcc = pcc(predictions, truth);
  r.scc = scc(predictions, truth);
  r.n = predictions.size();
  return r;
}

EvalReport inter_rater_baseline(const Matrix& ratings, InterRaterMethod method) {
  const std::size_t raters = ratings.rows();
  const std::size_t n = ratings.cols();
  if (raters < 2) throw ShapeError("inter-rater baseline needs at least 2 raters");
  if (n < 2) throw ShapeError("inter-rater baseline needs at least 2 utterances");
  for (const double v : ratings.data()) {
    if (!std::isfinite(v)) throw ValidationError("inter-rater baseline: missing rating");
  }

  double mae_sum = 0.0;
  double pcc_sum = 0.0;
  double scc_sum = 0.0;
  std::size_t comparisons = 0;
  auto accumulate = [&](std::span<const double> a, std::span<const double> b) {
    mae_sum += mae(a, b);
    pcc_sum += pcc(a, b);
    scc_sum += scc(a, b);
    ++comparisons;
  };

  if (method == InterRaterMethod::leave_one_out) {
    std::vector<double> others(n);
    for (std::size_t r = 0; r < raters; ++r) {
      for (std::size_t u = 0; u < n; ++u) {
        double s = 0.0;
        for (std::size_t o = 0; o < raters; ++o) {
          if (o != r) s += ratings(o, u);
        }
        others[u] = s / static_cast<double>(raters - 1);
      }
      accumulate(ratings.row(r), others);
    }
  } else {
    for (std::size_t a = 0; a < raters; ++a)
      for (std::size_t b = a + 1; b < raters; ++b) accumulate(ratings.row(a), ratings.row(b));
  }

  const double k = static_cast<double>(comparisons);
  EvalReport r;
  r.mae = mae_sum / k;
  r.pcc = pcc_sum / k;
  r.scc = scc_sum / k;
  r.n = n;
  return r;
}

std::string format_report_table(const EvalReport& r, const std::string& title) {
  std::string out = title + "\n";
  out += "  fold        n      MAE      PCC      SCC\n";
  auto line = [&](const std::string& label, std::size_t n, const std::optional<double>& m,
                  double p, double s) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-6s %6zu %8s %8s %8s\n", label.c_str(), n,
                  m ? fixed(*m).c_str() : "/", fixed(p).c_str(), fixed(s).c_str());
    out += buf;
  };
  for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
    const auto& pf = r.per_fold[f];
    line(std::to_string(f + 1), pf.n, pf.mae, pf.pcc, pf.scc);
  }
  line("all", r.n, r.mae, r.pcc, r.scc);
  return out;
}

std::string format_report_json(const EvalReport& r) {
  std::string out = "{\"mae\":";
  append_json_real(out, r.mae);
  out += ",\"pcc\":";
  detail::append_real(out, r.pcc);
  out += ",\"scc\":";
  detail::append_real(out, r.scc);
  out += ",\"n\":" + std::to_string(r.n) + ",\"per_fold\":[";
  for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
    const auto& pf = r.per_fold[f];
    if (f) out += ',';
    out += "{\"mae\":";
    append_json_real(out, pf.mae);
    out += ",\"pcc\":";
    detail::append_real(out, pf.pcc);
    out += ",\"scc\":";
    detail::append_real(out, pf.scc);
    out += ",\"n\":" + std::to_string(pf.n) + "}";
  }
  out += "]}";
  return out;
}

}  // namespace orars
