#pragma once

#include <Eigen/Dense>

namespace ltadmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace ltadmm
