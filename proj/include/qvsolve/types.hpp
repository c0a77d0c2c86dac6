#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace qvsolve {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using ComplexRowVector = Eigen::RowVectorXcd;

using MatrixSequence = std::vector<Matrix>;

inline Vector ones(Eigen::Index n) { return Vector::Ones(n); }

}  // namespace qvsolve
