#pragma once

#include "rgbdseg/frame_io.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace rgbdseg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Quality indicators. A metric whose denominator is zero is nullopt rather
/// than 0.
struct MetricsReport {
  std::optional<double> pwc; // percent
  std::optional<double> fnr;
  std::optional<double> fpr;
  std::optional<double> si;
  ConfusionCounts counts;
};

/// Pixels marked ignore in the ground truth are skipped. Throws DimensionError
/// on size mismatch.
ConfusionCounts compare_masks(const ForegroundMask& result, const GroundTruthMask& gt);

/// PWC = 100 (FN + FP) / (TP + FN + FP + TN), FNR = FN / (TP + FN),
/// FPR = FP / (FP + TN), Si = TP / (TP + FP + FN).
MetricsReport compute_metrics(const ConfusionCounts& counts);

/// Pools the counts of all frames and computes the metrics once.
MetricsReport aggregate_sequence(std::span<const ConfusionCounts> per_frame);

struct ReportRow {
  std::string sequence;
  std::string algorithm;
  std::string mode;
  MetricsReport metrics;
};

void write_report_table(std::ostream& out, std::span<const ReportRow> rows);

/// Header: sequence,algorithm,mode,PWC,FNR,FPR,Si,TP,TN,FP,FN. Undefined
/// metrics are written as empty fields.
void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);

} // namespace rgbdseg
