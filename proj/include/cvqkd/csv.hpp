#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cvqkd/analysis.hpp"
#include "cvqkd/covariance.hpp"

namespace cvqkd {

/// Scientific notation with 17 significant digits; round-trips exactly.
std::string format_sci(double v);

/// Debug serialization: header row of quadrature names (x_<label>, p_<label>
/// per mode, interleaved), then the matrix row-major.
void write_cm_csv(std::ostream& out, const CovarianceMatrix& gamma);

/// Sweep table: axis,value,variant,<quantity>,status.
void write_sweep_csv(std::ostream& out, SweepAxis axis, SweepQuantity quantity,
                     const std::vector<SweepRow>& rows);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace cvqkd
