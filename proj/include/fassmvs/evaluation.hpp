#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "fassmvs/raster.hpp"

namespace fassmvs {

struct L1Result {
    double l1_abs = 0.0;
    double l1_rel = 0.0;
    std::size_t valid_both = 0;
};

// Mean absolute and ground-truth-relative depth error over the pixels valid
// in both maps. An empty intersection is an error.
L1Result l1_metrics(const DepthMap& est, const DepthMap& gt);

struct AccCplF {
    double acc = 0.0, cpl = 0.0, f = 0.0;
    std::size_t valid_both = 0, valid_est = 0, valid_gt = 0;
};

// Ratio test max(est/gt, gt/est) < theta counted over the co-valid pixels,
// normalized by the valid-estimate count (accuracy) and the valid-ground-
// truth count (completeness); f is their harmonic mean (0 when both are 0).
AccCplF acc_cpl_f(const DepthMap& est, const DepthMap& gt, double theta);

struct RocCurve {
    std::vector<double> densities;    // 0.05, 0.10, ..., 1.00
    std::vector<double> error_rates;  // 1 - Acc_theta of the retained subset
};

// Valid estimates ordered by descending confidence (ties in raster order);
// at each 5 % density step the error rate of the retained subset is
// 1 - Acc_theta with the retained set as the estimate set.
RocCurve roc_curve(const DepthMap& est, const DepthMap& gt, const ConfidenceMap& conf,
                   double theta = 1.05);

struct MetricReport {
    L1Result l1;
    std::vector<double> thetas;
    std::vector<AccCplF> scores;  // parallel to thetas
};

MetricReport evaluate(const DepthMap& est, const DepthMap& gt,
                      const std::vector<double>& thetas);

// Line-oriented key=value serialization; see the README for the schema.
void write_report_kv(std::ostream& os, const MetricReport& report,
                     const RocCurve* roc = nullptr);
// Same content as a JSON object.
void write_report_json(std::ostream& os, const MetricReport& report,
                       const RocCurve* roc = nullptr);

}  // namespace fassmvs
