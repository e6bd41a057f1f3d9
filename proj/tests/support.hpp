#pragma once

#include "gapscope/dynamics.hpp"
#include "gapscope/serialize.hpp"

#include <cmath>
#include <random>
#include <string>

namespace testsupport
{

using gapscope::Mat;
using gapscope::Vec;
namespace dyn = gapscope::dynamics;

inline dyn::SystemSpec system(const std::string& text)
{
    return gapscope::io::system_from_json(gapscope::io::json::parse(text));
}

// dy/ds = w on [0,1], w in [0,5].
inline dyn::SystemSpec sussmann()
{
    return system(R"({"n":1,"m":1,"S":1.0,"channels":[[{"coef":1.0}]],
                      "control_set":{"type":"box","lo":[0],"hi":[5]}})");
}

// dy/ds = y + w on [0,S].
inline dyn::SystemSpec linear_scalar(double S = 1.0)
{
    return system(R"({"n":1,"m":1,"S":)" + std::to_string(S) + R"(,
                      "drift":[{"coef":1.0,"y_pows":[1]}],"channels":[[{"coef":1.0}]],
                      "control_set":{"type":"box","lo":[-5],"hi":[5]}})");
}

// Three states, degree-2 drift and a state-dependent channel.
inline dyn::SystemSpec quadratic3(double S = 1.0)
{
    return system(R"({"n":3,"m":1,"S":)" + std::to_string(S) + R"(,
      "drift":[
        [{"coef":-0.5,"y_pows":[1,0,0]},{"coef":0.3,"y_pows":[0,1,1]}],
        [{"coef":0.4,"y_pows":[2,0,0]},{"coef":-0.2,"y_pows":[0,1,0]},{"coef":0.1,"s_pow":1,"y_pows":[0,0,1]}],
        [{"coef":-0.3,"y_pows":[1,1,0]},{"coef":0.2,"y_pows":[0,0,0]}]],
      "channels":[[
        [{"coef":1.0,"y_pows":[0,0,0]}],
        [{"coef":0.5,"y_pows":[1,0,0]}],
        [{"coef":-0.4,"y_pows":[0,0,1]}]]],
      "control_set":{"type":"box","lo":[-1],"hi":[1]}})");
}

// dy/ds = y^2 + w.
inline dyn::SystemSpec riccati(double S = 1.0)
{
    return system(R"({"n":1,"m":1,"S":)" + std::to_string(S) + R"(,
                      "drift":[{"coef":1.0,"y_pows":[2]}],"channels":[[{"coef":1.0}]],
                      "control_set":{"type":"box","lo":[-1],"hi":[1]}})");
}

// Pendulum-like planar system: y1' = y2, y2' = -y1 - 0.3 y1^2 + (1 + 0.2 y2) w.
inline dyn::SystemSpec oscillator(double S = 1.0)
{
    return system(R"({"n":2,"m":1,"S":)" + std::to_string(S) + R"(,
      "drift":[[{"coef":1.0,"y_pows":[0,1]}],
               [{"coef":-1.0,"y_pows":[1,0]},{"coef":-0.3,"y_pows":[2,0]}]],
      "channels":[[[],[{"coef":1.0,"y_pows":[0,0]},{"coef":0.2,"y_pows":[0,1]}]]],
      "control_set":{"type":"box","lo":[-1],"hi":[1]}})");
}

inline Vec random_vec(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i)
        v(i) = u(rng);
    return v;
}

inline Vec unit_random(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i)
        v(i) = g(rng);
    return v / v.norm();
}

} // namespace testsupport
