#pragma once

#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

namespace evonet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Mode { classification, regression };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// One prequential fold: rows are samples in arrival order.
struct StreamBatch {
  Matrix X;  // T_b x n
  Matrix Y;  // T_b x m, one-hot for classification
  std::size_t index = 0;
  std::size_t task = 0;  // concept id of the first row, when known

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
};

}  // namespace evonet
