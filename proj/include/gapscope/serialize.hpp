#pragma once

#include "gapscope/cones.hpp"
#include "gapscope/dynamics.hpp"
#include "gapscope/extremality.hpp"
#include "gapscope/impulsive.hpp"
#include "gapscope/variations.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace gapscope::io
{

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

/// Member lookup that raises a SchemaError carrying the JSON pointer.
const json& member(const json& j, const std::string& key, const std::string& ptr);
double number(const json& j, const std::string& ptr);
int integer(const json& j, const std::string& ptr);

Vec vec_from_json(const json& j, const std::string& ptr);
std::vector<Vec> vecs_from_json(const json& j, const std::string& ptr);
ojson vec_to_json(const Vec& v);

cones::PolyhedralCone cone_from_json(const json& j, const std::string& ptr = "");
ojson cone_to_json(const cones::PolyhedralCone& c);

/// Array of n term lists (a flat term list is accepted when n = 1).
PolyField field_from_json(const json& j, int n, const std::string& ptr);

dynamics::ControlSet control_set_from_json(const json& j, int m, const std::string& ptr);

/// {"n","m","S","drift","channels","table","jump_times","control_set","c_bound"}.
dynamics::SystemSpec system_from_json(const json& j, const std::string& ptr = "");

/// {"constant": v} | {"pieces": [{"until": s, "value": v}…]} | {"values": [v…]}
/// materialized on the grid (pieces by cell midpoint).
dynamics::ControlPath control_from_json(const json& j, const dynamics::Grid& grid, int m, const std::string& ptr);

std::vector<variations::NeedleSpec> needles_from_json(const json& j, const std::string& ptr);

extremality::TargetSpec target_from_json(const json& j, int n, const std::string& ptr);

impulsive::ImpulsiveProblem impulsive_from_json(const json& j, const std::string& ptr = "");

/// Finite doubles as numbers, anything else as null.
ojson number_or_null(double x);

ojson report_to_json(const extremality::ExtremalReport& r);

/// Columns s, y1…yn.
std::string process_csv(const dynamics::Process& p);
/// Columns s_left, s_right, value1…valuem.
std::string control_csv(const dynamics::ControlPath& c);

} // namespace gapscope::io
