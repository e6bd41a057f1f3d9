#include "gapscope/scenario.hpp"

#include <map>

namespace gapscope::scenario
{

namespace
{

// dy/ds = w on [0,1], W = [0,5]; the original family keeps ∫v ≠ 1.
const char* const kSussmann = R"json({
  "name": "sussmann",
  "description": "dy/ds = w on [0,1] with w in [0,5], y(0) = 0, target y(1) = 1, cost h(y) = y; the original family excludes controls with integral 1",
  "system": {
    "n": 1, "m": 1, "S": 1.0,
    "drift": [],
    "channels": [[{"coef": 1.0}]],
    "control_set": {"type": "box", "lo": [0.0], "hi": [5.0], "samples_per_axis": 2},
    "c_bound": 0.0
  },
  "y0": [0.0],
  "grid": 1000,
  "reference": {"constant": [1.0]},
  "target": {"cone": {"dim": 1}, "point": [1.0], "gradient": [1.0]},
  "wset": [[0.0], [5.0]],
  "needles": [
    {"s": 0.5, "width": 0.1, "value": [0.0]},
    {"s": 0.75, "width": 0.1, "value": [5.0]}
  ],
  "delta2": 0.05,
  "abundance": {
    "attested": false,
    "concatenation": true,
    "density_check": {
      "base": {"constant": [0.0]},
      "companions": [{"constant": [2.0]}],
      "K": 256,
      "gamma_points": 11,
      "tolerance": 0.01,
      "forbidden_integral": 1.0
    }
  }
}
)json";

// dy1/ds = w, dy2/ds = 0; the second coordinate is invisible to every needle.
const char* const kLinear2dAbnormal = R"json({
  "name": "linear2d-abnormal",
  "description": "decoupled planar system dy1/ds = w, dy2/ds = 0 with target cone span+{(0,1)}",
  "system": {
    "n": 2, "m": 1, "S": 1.0,
    "drift": [[], []],
    "channels": [[[{"coef": 1.0, "y_pows": [0, 0]}], []]],
    "control_set": {"type": "finite", "values": [[-1.0], [0.0], [1.0]]},
    "c_bound": 0.0
  },
  "y0": [0.0, 0.0],
  "grid": 200,
  "reference": {"constant": [0.0]},
  "target": {"cone": {"dim": 2, "rays": [[0.0, 1.0]]}},
  "needles": [
    {"s": 0.5, "width": 0.05, "value": [1.0]},
    {"s": 0.75, "width": 0.05, "value": [-1.0]}
  ],
  "delta2": 0.05,
  "abundance": {"attested": true, "concatenation": true}
}
)json";

// dx/dt = -0.5 x + 0.2 t + (1 + 0.1 x) u with u in N.
const char* const kImpulseConvex = R"json({
  "name": "impulse-demo-convex",
  "kind": "impulsive",
  "description": "scalar impulsive problem with U = {0,...,10} (co U a cone), space-time convex embedding",
  "problem": {
    "n": 1, "m": 1,
    "drift": [{"coef": -0.5, "y_pows": [1]}, {"coef": 0.2, "s_pow": 1, "y_pows": [0]}],
    "channels": [[{"coef": 1.0}, {"coef": 0.1, "y_pows": [1]}]],
    "U_samples": [[0], [1], [2], [3], [4], [5], [6], [7], [8], [9], [10]],
    "U_tag": "co-cone",
    "t1": 0.0,
    "x0": [0.0],
    "K_bound": "inf",
    "S_hat": 2.0
  },
  "case": "convex",
  "t2": 1.0,
  "grid": 200,
  "reference": {"constant": [1.0]},
  "target": {"cone": {"dim": 3}},
  "needles": [
    {"s": 0.5, "width": 0.05, "value": [1.0, 0.0, 0.0]},
    {"s": 1.0, "width": 0.05, "value": [0.25, 0.75, 0.0]},
    {"s": 1.5, "width": 0.05, "value": [0.5, 0.5, 0.5]}
  ],
  "delta2": 0.1,
  "abundance": {"attested": true, "concatenation": true}
}
)json";

// U = {(n², 0), (0, -m³)}: neither convex nor a cone, but conic-dense.
const char* const kImpulseNonconvex = R"json({
  "name": "impulse-demo-nonconvex",
  "kind": "impulsive",
  "description": "scalar state, two impulsive channels with U = {(n^2,0),(0,-m^3)}, non-convex space-time embedding",
  "problem": {
    "n": 1, "m": 2,
    "drift": [{"coef": -0.3, "y_pows": [1]}],
    "channels": [[{"coef": 1.0}], [{"coef": 0.5, "y_pows": [1]}, {"coef": 0.2}]],
    "U_samples": [[0, 0], [1, 0], [4, 0], [9, 0], [16, 0], [25, 0],
                  [0, -1], [0, -8], [0, -27], [0, -64], [0, -125]],
    "U_tag": "conic-dense",
    "t1": 0.0,
    "x0": [1.0],
    "K_bound": 10.0,
    "S_hat": 2.0
  },
  "case": "nonconvex",
  "t2": 1.0,
  "grid": 200,
  "reference": {"constant": [1.0, 0.0]},
  "target": {"cone": {"dim": 3}},
  "needles": [
    {"s": 0.5, "width": 0.05, "value": [1.0, 0.0, 0.0, 0.0]},
    {"s": 1.0, "width": 0.05, "value": [0.2, 0.8, 0.0, 0.0]},
    {"s": 1.5, "width": 0.05, "value": [0.5, 0.0, -0.5, 0.0]}
  ],
  "delta2": 0.1,
  "abundance": {"attested": true, "concatenation": true}
}
)json";

const std::map<std::string, const char*>& registry()
{
    static const std::map<std::string, const char*> reg{
        {"sussmann", kSussmann},
        {"linear2d-abnormal", kLinear2dAbnormal},
        {"impulse-demo-convex", kImpulseConvex},
        {"impulse-demo-nonconvex", kImpulseNonconvex},
    };
    return reg;
}

} // namespace

std::vector<std::string> registry_names()
{
    return {"sussmann", "linear2d-abnormal", "impulse-demo-convex", "impulse-demo-nonconvex"};
}

std::string registry_text(const std::string& name)
{
    const auto& reg = registry();
    const auto it = reg.find(name);
    return it == reg.end() ? std::string() : std::string(it->second);
}

} // namespace gapscope::scenario
