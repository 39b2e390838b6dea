#include "sinoplace/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sinoplace/errors.hpp"
#include "sinoplace/sinogram.hpp"

namespace sinoplace {

std::set<std::uint64_t> ground_truth(const Se2Pose& query_pose, const PlaceDatabase& db,
                                     double pos_thresh) {
  if (!(pos_thresh > 0.0)) throw InvalidArgument("pos_thresh must be positive");
  std::set<std::uint64_t> out;
  for (const DatabaseEntry& e : db.entries) {
    if (planar_distance(query_pose, e.pose) <= pos_thresh) out.insert(e.frame_id);
  }
  return out;
}

double recall_at_1(std::span<const QueryOutcome> results) {
  std::size_t n = 0;
  std::size_t hits = 0;
  for (const QueryOutcome& r : results) {
    if (!r.has_truth()) continue;
    ++n;
    if (r.correct()) ++hits;
  }
  if (n == 0) throw EmptyInput("recall_at_1: no query with a true match");
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::vector<ScoredResult> scored_results(std::span<const QueryOutcome> results) {
  std::vector<ScoredResult> out;
  out.reserve(results.size());
  for (const QueryOutcome& r : results) out.push_back({r.score, r.correct(), r.has_truth()});
  return out;
}

PrCurve pr_curve(std::span<const ScoredResult> results) {
  if (results.empty()) throw EmptyInput("pr_curve: no results");
  std::vector<ScoredResult> sorted(results.begin(), results.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredResult& a, const ScoredResult& b) { return a.score > b.score; });

  std::size_t truth_total = 0;
  for (const ScoredResult& r : sorted) truth_total += r.has_truth ? 1 : 0;

  // Walk thresholds from the highest score down, accumulating positives.
  PrCurve curve;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tp_truth = 0;  // positives that have a truth set
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == t; ++i) {
      if (sorted[i].correct) ++tp; else ++fp;
      if (sorted[i].has_truth) ++tp_truth;
    }
    // FN: negatives that had a truth set.
    const std::size_t fn = truth_total - tp_truth;
    PrPoint p;
    p.threshold = t;
    p.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    curve.points.push_back(p);
    const double denom = p.precision + p.recall;
    if (denom > 0.0) curve.max_f1 = std::max(curve.max_f1, 2.0 * p.precision * p.recall / denom);
  }
  // Sweep order (descending threshold) has non-decreasing recall.
  double prev_r = 0.0;
  double prev_p = 1.0;
  for (const PrPoint& p : curve.points) {
    curve.auc += (p.recall - prev_r) * 0.5 * (p.precision + prev_p);
    prev_r = p.recall;
    prev_p = p.precision;
  }
  std::reverse(curve.points.begin(), curve.points.end());
  curve.auc = std::clamp(curve.auc, 0.0, 1.0);
  return curve;
}

void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  out << "threshold,precision,recall\n";
  for (const PrPoint& p : curve.points) out << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::string format_summary(const EvalSummary& s) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "recall_at_1=" << s.recall_at_1 << '\n'
      << "max_f1=" << s.max_f1 << '\n'
      << "auc=" << s.auc << '\n'
      << "queries=" << s.queries << '\n'
      << "queries_with_truth=" << s.with_truth << '\n';
  return out.str();
}

void write_summary(const std::filesystem::path& path, const EvalSummary& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_summary(s);
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

Grid conv_then_dft(const Grid& rows_theta, const ConvKernel& kernel) {
  const FeatureMap f = circular_conv2d(FeatureMap::from_grid(rows_theta), kernel);
  return dft_magnitude_rows(f).data;
}

Grid polar_theta_rows(const PointCloud& pc, const CaseStudyParams& p, double r_max) {
  const PolarGram pg = rasterize_polar(pc, p.n_r, p.n_theta, r_max);
  Grid t(pg.data.cols(), pg.data.rows());
  for (std::size_t r = 0; r < pg.data.rows(); ++r) {
    for (std::size_t c = 0; c < pg.data.cols(); ++c) t(c, r) = pg.data(r, c);
  }
  return t;
}

}  // namespace

CaseStudyReport case_study(const PointCloud& pc, const Se2Pose& t, const ConvKernel& kernel,
                           const CaseStudyParams& params) {
  kernel.validate();
  if (kernel.c_in != 1) throw InvalidArgument("case study kernel must take one input channel");
  const double r_max = params.r_max > 0.0 ? params.r_max : params.grid.extent;
  const PointCloud moved = apply_se2(pc, t);
  const long k = expected_row_shift(t.yaw(), params.n_theta);

  const Grid sg_a = conv_then_dft(radon(rasterize_bev(pc, params.grid), params.n_theta, params.n_tau).data(), kernel);
  const Grid sg_b = conv_then_dft(radon(rasterize_bev(moved, params.grid), params.n_theta, params.n_tau).data(), kernel);
  const Grid pg_a = conv_then_dft(polar_theta_rows(pc, params, r_max), kernel);
  const Grid pg_b = conv_then_dft(polar_theta_rows(moved, params, r_max), kernel);

  CaseStudyReport rep;
  rep.sg_diff = relative_l2(sg_a, shift_rows(sg_b, -k));
  rep.pg_diff = relative_l2(pg_a, shift_rows(pg_b, -k));
  return rep;
}

}  // namespace sinoplace
