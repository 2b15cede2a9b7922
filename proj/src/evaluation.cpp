#include "fassmvs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "fassmvs/errors.hpp"

namespace fassmvs {

namespace {

void require_same_size(const DepthMap& est, const DepthMap& gt) {
    if (!est.same_size(gt) || est.empty())
        throw InvalidInputError("metrics: maps must be non-empty and equal size");
}

bool ratio_pass(float est, float gt, double theta) {
    const double r = est > gt ? static_cast<double>(est) / gt : static_cast<double>(gt) / est;
    return r < theta;
}

}  // namespace

L1Result l1_metrics(const DepthMap& est, const DepthMap& gt) {
    require_same_size(est, gt);
    L1Result r;
    double sum_abs = 0.0, sum_rel = 0.0;
    for (int y = 0; y < est.height(); ++y) {
        for (int x = 0; x < est.width(); ++x) {
            const float e = est.at(x, y), g = gt.at(x, y);
            if (!depth_valid(e) || !depth_valid(g))
                continue;
            const double diff = std::abs(static_cast<double>(e) - g);
            sum_abs += diff;
            sum_rel += diff / g;
            ++r.valid_both;
        }
    }
    if (r.valid_both == 0)
        throw InvalidInputError("metrics: no pixel is valid in both maps");
    r.l1_abs = sum_abs / r.valid_both;
    r.l1_rel = sum_rel / r.valid_both;
    return r;
}

AccCplF acc_cpl_f(const DepthMap& est, const DepthMap& gt, double theta) {
    require_same_size(est, gt);
    AccCplF r;
    std::size_t pass = 0;
    for (int y = 0; y < est.height(); ++y) {
        for (int x = 0; x < est.width(); ++x) {
            const float e = est.at(x, y), g = gt.at(x, y);
            const bool ev = depth_valid(e), gv = depth_valid(g);
            r.valid_est += ev;
            r.valid_gt += gv;
            if (ev && gv) {
                ++r.valid_both;
                if (ratio_pass(e, g, theta))
                    ++pass;
            }
        }
    }
    r.acc = r.valid_est ? static_cast<double>(pass) / r.valid_est : 0.0;
    r.cpl = r.valid_gt ? static_cast<double>(pass) / r.valid_gt : 0.0;
    r.f = (r.acc + r.cpl) > 0.0 ? 2.0 * r.acc * r.cpl / (r.acc + r.cpl) : 0.0;
    return r;
}

RocCurve roc_curve(const DepthMap& est, const DepthMap& gt, const ConfidenceMap& conf,
                   double theta) {
    require_same_size(est, gt);
    if (!est.same_size(conf))
        throw InvalidInputError("roc: confidence map size differs");

    struct Entry {
        float conf;
        std::size_t index;  // raster order, the tie break
        bool pass;
    };
    std::vector<Entry> entries;
    for (int y = 0; y < est.height(); ++y) {
        for (int x = 0; x < est.width(); ++x) {
            const float e = est.at(x, y), g = gt.at(x, y);
            if (!depth_valid(e))
                continue;
            entries.push_back({conf.at(x, y),
                               static_cast<std::size_t>(y) * est.width() + x,
                               depth_valid(g) && ratio_pass(e, g, theta)});
        }
    }
    if (entries.empty())
        throw InvalidInputError("roc: no valid estimates");
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.conf != b.conf ? a.conf > b.conf : a.index < b.index;
    });

    RocCurve curve;
    std::vector<std::size_t> pass_prefix(entries.size() + 1, 0);
    for (std::size_t i = 0; i < entries.size(); ++i)
        pass_prefix[i + 1] = pass_prefix[i] + entries[i].pass;
    for (int step = 1; step <= 20; ++step) {
        const double density = step * 0.05;
        const std::size_t m = std::min(
            entries.size(),
            static_cast<std::size_t>(std::ceil(density * static_cast<double>(entries.size()))));
        curve.densities.push_back(density);
        curve.error_rates.push_back(1.0 - static_cast<double>(pass_prefix[m]) / m);
    }
    return curve;
}

MetricReport evaluate(const DepthMap& est, const DepthMap& gt,
                      const std::vector<double>& thetas) {
    MetricReport report;
    report.l1 = l1_metrics(est, gt);
    report.thetas = thetas;
    for (const double t : thetas)
        report.scores.push_back(acc_cpl_f(est, gt, t));
    return report;
}

void write_report_kv(std::ostream& os, const MetricReport& report, const RocCurve* roc) {
    char buf[128];
    const auto line = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s=%.9g\n", key, v);
        os << buf;
    };
    line("l1_abs", report.l1.l1_abs);
    line("l1_rel", report.l1.l1_rel);
    os << "valid_both=" << report.l1.valid_both << "\n";
    for (std::size_t i = 0; i < report.thetas.size(); ++i) {
        char key[64];
        std::snprintf(key, sizeof(key), "acc_%g", report.thetas[i]);
        line(key, report.scores[i].acc);
        std::snprintf(key, sizeof(key), "cpl_%g", report.thetas[i]);
        line(key, report.scores[i].cpl);
        std::snprintf(key, sizeof(key), "f_%g", report.thetas[i]);
        line(key, report.scores[i].f);
    }
    if (roc) {
        for (std::size_t i = 0; i < roc->densities.size(); ++i) {
            char key[64];
            std::snprintf(key, sizeof(key), "roc_%g", roc->densities[i]);
            line(key, roc->error_rates[i]);
        }
    }
}

void write_report_json(std::ostream& os, const MetricReport& report, const RocCurve* roc) {
    nlohmann::json j;
    j["l1_abs"] = report.l1.l1_abs;
    j["l1_rel"] = report.l1.l1_rel;
    j["valid_both"] = report.l1.valid_both;
    j["scores"] = nlohmann::json::array();
    for (std::size_t i = 0; i < report.thetas.size(); ++i) {
        j["scores"].push_back({{"theta", report.thetas[i]},
                               {"acc", report.scores[i].acc},
                               {"cpl", report.scores[i].cpl},
                               {"f", report.scores[i].f}});
    }
    if (roc) {
        j["roc"] = nlohmann::json::array();
        for (std::size_t i = 0; i < roc->densities.size(); ++i)
            j["roc"].push_back(
                {{"density", roc->densities[i]}, {"error_rate", roc->error_rates[i]}});
    }
    os << j.dump(2) << "\n";
}

}  // namespace fassmvs
