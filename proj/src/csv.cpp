#include "cvqkd/csv.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace cvqkd {

std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

void write_cm_csv(std::ostream& out, const CovarianceMatrix& gamma) {
  const auto& labels = gamma.labels();
  for (std::size_t m = 0; m < labels.size(); ++m) {
    if (m) out << ',';
    out << "x_" << labels[m] << ",p_" << labels[m];
  }
  out << '\n';
  const auto& g = gamma.entries();
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (j) out << ',';
      out << format_sci(g(i, j));
    }
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, SweepQuantity quantity,
                     const std::vector<SweepRow>& rows) {
  const char* value_column = "K_R";
  if (quantity == SweepQuantity::TolerableEpsilon) value_column = "eps_star";
  if (quantity == SweepQuantity::MaxDistance) value_column = "d_star";
  out << "axis,value,variant," << value_column << ",status\n";
  for (const auto& row : rows) {
    out << axis_name(axis) << ',' << format_sci(row.axis_value) << ','
        << variant_name(row.variant) << ',' << format_sci(row.value) << ','
        << status_name(row.status) << '\n';
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace cvqkd
