#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gapscope
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec vec_of(std::initializer_list<double> values)
{
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values)
        v(i++) = x;
    return v;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

} // namespace gapscope
