// Metrics export and run-record persistence. CSVs carry floating-point
// values at 12 significant digits and are byte-identical across reruns of
// the same config and seed.
#pragma once

#include <string>
#include <vector>

#include "mlab/pipelines.hpp"

namespace mlab {

// Writes two CSVs:
//  - metrics: columns stage,task,accuracy,reference,cka — one row per
//    (stage, task) accuracy and one per (stage, reference, probe) CKA
//    entry, in stage order;
//  - scatter: columns misalignment,accuracy_delta — one row per stage,
//    measured against the scenario's reference stage on task A, for
//    misalignment-vs-accuracy plots.
// Throws IoError.
void export_metrics(const RunRecord& record, const std::string& metrics_csv_path,
                    const std::string& scatter_csv_path);

// Reads a metrics CSV back into StageMetrics (accuracy and cka values; the
// HSIC components are not part of the CSV and come back as zero).
// Throws IoError, ParseError.
std::vector<StageMetrics> read_metrics_csv(const std::string& path);

// Full run record as JSON (config snapshot, seeds, metrics, wall-clock).
void save_run_record(const RunRecord& record, const std::string& path);
RunRecord load_run_record(const std::string& path);

// 12-significant-digit float formatting used in all CSV output.
std::string format_csv_value(double value);

}  // namespace mlab
