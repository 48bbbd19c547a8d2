#pragma once

#include <string>
#include <vector>

#include "gcn/exact.hpp"
#include "gcn/metrics.hpp"
#include "gcn/trainer.hpp"

namespace gcn {

/// Full read; throws Error naming the path.
std::string read_file(const std::string& path);

/// Write-to-temp-then-rename, so the target is complete or absent.
void atomic_write_file(const std::string& path, const std::string& contents);

/// Round-trip-stable decimal formatting shared by every CSV column.
std::string format_double(double x);

// Fixed, versioned CSV schemas. wall_ms is deliberately not serialized so
// repeated runs with one seed produce byte-identical files.
std::string iters_csv(const std::vector<IterRecord>& records);
std::string exact_dynamics_csv(const ExactDynamics& dynamics);
std::string curves_csv(const std::vector<CurvePoint>& points);

}  // namespace gcn
