#include "rgbdseg/evaluation.hpp"

#include <iomanip>
#include <sstream>

namespace rgbdseg {

ConfusionCounts compare_masks(const ForegroundMask& result, const GroundTruthMask& gt) {
  if (result.width != gt.width || result.height != gt.height) {
    throw DimensionError("compare_masks: mask is " + std::to_string(result.width) + "x" +
                         std::to_string(result.height) + ", ground truth is " + std::to_string(gt.width) + "x" +
                         std::to_string(gt.height));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const bool fg = result.is_foreground(i);
    switch (gt.labels[i]) {
    case GtLabel::foreground:
      ++(fg ? c.tp : c.fn);
      break;
    case GtLabel::background:
      ++(fg ? c.fp : c.tn);
      break;
    case GtLabel::ignore:
      break;
    }
  }
  return c;
}

namespace {
std::optional<double> ratio(double num, std::uint64_t den) {
  if (den == 0) {
    return std::nullopt;
  }
  return num / static_cast<double>(den);
}
} // namespace

MetricsReport compute_metrics(const ConfusionCounts& c) {
  MetricsReport r;
  r.counts = c;
  r.pwc = ratio(100.0 * static_cast<double>(c.fn + c.fp), c.tp + c.fn + c.fp + c.tn);
  r.fnr = ratio(static_cast<double>(c.fn), c.tp + c.fn);
  r.fpr = ratio(static_cast<double>(c.fp), c.fp + c.tn);
  r.si = ratio(static_cast<double>(c.tp), c.tp + c.fp + c.fn);
  return r;
}

MetricsReport aggregate_sequence(std::span<const ConfusionCounts> per_frame) {
  ConfusionCounts total;
  for (const auto& c : per_frame) {
    total += c;
  }
  return compute_metrics(total);
}

namespace {

std::string fmt(const std::optional<double>& v, int precision) {
  if (!v) {
    return "n/a";
  }
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << *v;
  return s.str();
}

std::string csv_field(const std::optional<double>& v) {
  if (!v) {
    return {};
  }
  std::ostringstream s;
  s << std::setprecision(10) << *v;
  return s.str();
}

} // namespace

void write_report_table(std::ostream& out, std::span<const ReportRow> rows) {
  out << std::left << std::setw(24) << "sequence" << std::setw(6) << "algo" << std::setw(10) << "mode"
      << std::right << std::setw(9) << "PWC" << std::setw(9) << "FNR" << std::setw(9) << "FPR" << std::setw(7)
      << "Si" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(24) << r.sequence << std::setw(6) << r.algorithm << std::setw(10) << r.mode
        << std::right << std::setw(9) << fmt(r.metrics.pwc, 2) << std::setw(9) << fmt(r.metrics.fnr, 4)
        << std::setw(9) << fmt(r.metrics.fpr, 4) << std::setw(7) << fmt(r.metrics.si, 2) << '\n';
  }
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << "sequence,algorithm,mode,PWC,FNR,FPR,Si,TP,TN,FP,FN\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.sequence << ',' << r.algorithm << ',' << r.mode << ',' << csv_field(m.pwc) << ',' << csv_field(m.fnr)
        << ',' << csv_field(m.fpr) << ',' << csv_field(m.si) << ',' << m.counts.tp << ',' << m.counts.tn << ','
        << m.counts.fp << ',' << m.counts.fn << '\n';
  }
}

} // namespace rgbdseg
