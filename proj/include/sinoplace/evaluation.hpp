#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <vector>

#include "sinoplace/bev.hpp"
#include "sinoplace/featnet.hpp"
#include "sinoplace/ingest.hpp"
#include "sinoplace/retrieval.hpp"

namespace sinoplace {

// Frame ids of database entries within pos_thresh of the query position.
std::set<std::uint64_t> ground_truth(const Se2Pose& query_pose, const PlaceDatabase& db,
                                     double pos_thresh = 10.0);

struct QueryOutcome {
  std::uint64_t query_id = 0;
  std::uint64_t top1 = 0;
  double score = 0.0;
  std::set<std::uint64_t> truth;

  bool correct() const { return truth.contains(top1); }
  bool has_truth() const { return !truth.empty(); }
};

// Over queries with a non-empty truth set. Throws EmptyInput if none.
double recall_at_1(std::span<const QueryOutcome> results);

struct ScoredResult {
  double score = 0.0;
  bool correct = false;
  bool has_truth = false;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // ascending threshold
  double auc = 0.0;
  double max_f1 = 0.0;
};

/// Sweeps every distinct score as a threshold (positive iff score >= t).
/// Precision with no positives is taken as 1. AUC is the trapezoid area over
/// the points taken by decreasing threshold (so by non-decreasing recall),
/// anchored at (recall 0, precision 1). When no
/// query has a true match, recall is 0 everywhere.
PrCurve pr_curve(std::span<const ScoredResult> results);

std::vector<ScoredResult> scored_results(std::span<const QueryOutcome> results);

void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve);

struct EvalSummary {
  double recall_at_1 = 0.0;
  double max_f1 = 0.0;
  double auc = 0.0;
  std::size_t queries = 0;
  std::size_t with_truth = 0;
};

std::string format_summary(const EvalSummary& s);
void write_summary(const std::filesystem::path& path, const EvalSummary& s);

struct CaseStudyParams {
  GridSpec grid;
  std::size_t n_theta = 120;
  std::size_t n_tau = 120;
  std::size_t n_r = 60;  // polar gram radius bins
  double r_max = 0.0;    // 0 means grid extent
};

struct CaseStudyReport {
  double sg_diff = 0.0;
  double pg_diff = 0.0;
};

/// Runs pc and apply_se2(pc, t) through two pipelines: sinogram and polar
/// gram (theta along rows), each followed by one circular conv layer and
/// row-wise DFT magnitude. The transformed output is row-shifted back by the
/// known rotation; diffs are ||a - b|| / ||a||.
CaseStudyReport case_study(const PointCloud& pc, const Se2Pose& t, const ConvKernel& kernel,
                           const CaseStudyParams& params = {});

}  // namespace sinoplace
