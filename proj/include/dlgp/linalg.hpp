#ifndef DLGP_LINALG_HPP
#define DLGP_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>

namespace dlgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

inline void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace dlgp

#endif
