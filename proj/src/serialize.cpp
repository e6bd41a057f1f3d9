#include "gapscope/serialize.hpp"

#include "gapscope/error.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace gapscope::io
{

namespace
{

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

const json& array_at(const json& j, const std::string& ptr)
{
    if (!j.is_array())
        throw SchemaError(ptr, "expected an array");
    return j;
}

PolyTerm term_from_json(const json& j, int n, const std::string& ptr)
{
    if (!j.is_object())
        throw SchemaError(ptr, "polynomial term must be an object");
    PolyTerm t;
    t.coef = number(member(j, "coef", ptr), child(ptr, "coef"));
    if (j.contains("s_pow"))
        t.s_pow = integer(j.at("s_pow"), child(ptr, "s_pow"));
    if (j.contains("y_pows"))
    {
        const auto& yp = array_at(j.at("y_pows"), child(ptr, "y_pows"));
        if (static_cast<int>(yp.size()) != n)
            throw SchemaError(child(ptr, "y_pows"), "expected " + std::to_string(n) + " exponents");
        for (std::size_t i = 0; i < yp.size(); ++i)
            t.y_pows.push_back(integer(yp[i], child(child(ptr, "y_pows"), i)));
    }
    else
        t.y_pows.assign(static_cast<std::size_t>(n), 0);
    if (j.contains("s_from"))
        t.s_from = number(j.at("s_from"), child(ptr, "s_from"));
    if (j.contains("s_to"))
        t.s_to = number(j.at("s_to"), child(ptr, "s_to"));
    return t;
}

std::vector<PolyTerm> terms_from_json(const json& j, int n, const std::string& ptr)
{
    std::vector<PolyTerm> out;
    const auto& arr = array_at(j, ptr);
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(term_from_json(arr[i], n, child(ptr, i)));
    return out;
}

template <typename F>
auto wrap(const std::string& ptr, F&& f) -> decltype(f())
{
    try
    {
        return f();
    }
    catch (const SchemaError&)
    {
        throw;
    }
    catch (const Error& e)
    {
        throw SchemaError(ptr, e.what());
    }
}

} // namespace

const json& member(const json& j, const std::string& key, const std::string& ptr)
{
    if (!j.is_object())
        throw SchemaError(ptr, "expected an object");
    if (!j.contains(key))
        throw SchemaError(child(ptr, key), "missing required member '" + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& ptr)
{
    if (j.is_string())
    {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
    }
    if (!j.is_number())
        throw SchemaError(ptr, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& ptr)
{
    if (!j.is_number_integer())
        throw SchemaError(ptr, "expected an integer");
    return j.get<int>();
}

Vec vec_from_json(const json& j, const std::string& ptr)
{
    if (j.is_number())
        return vec_of({j.get<double>()});
    const auto& arr = array_at(j, ptr);
    Vec v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = number(arr[i], child(ptr, i));
    return v;
}

std::vector<Vec> vecs_from_json(const json& j, const std::string& ptr)
{
    std::vector<Vec> out;
    const auto& arr = array_at(j, ptr);
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(vec_from_json(arr[i], child(ptr, i)));
    return out;
}

ojson vec_to_json(const Vec& v)
{
    ojson arr = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(number_or_null(v(i)));
    return arr;
}

ojson number_or_null(double x)
{
    if (std::isfinite(x))
        return x + 0.0; // no "-0.0" in reports
    return nullptr;
}

cones::PolyhedralCone cone_from_json(const json& j, const std::string& ptr)
{
    const int dim = integer(member(j, "dim", ptr), child(ptr, "dim"));
    if (dim < 1)
        throw SchemaError(child(ptr, "dim"), "dimension must be positive");
    std::vector<Vec> rays;
    std::vector<Vec> lin;
    if (j.contains("rays"))
        rays = vecs_from_json(j.at("rays"), child(ptr, "rays"));
    if (j.contains("lineality"))
        lin = vecs_from_json(j.at("lineality"), child(ptr, "lineality"));
    for (std::size_t i = 0; i < rays.size(); ++i)
        if (rays[i].size() != dim)
            throw SchemaError(child(child(ptr, "rays"), i), "ray length differs from dim");
    for (std::size_t i = 0; i < lin.size(); ++i)
        if (lin[i].size() != dim)
            throw SchemaError(child(child(ptr, "lineality"), i), "lineality vector length differs from dim");
    return cones::PolyhedralCone(dim, std::move(rays), std::move(lin));
}

ojson cone_to_json(const cones::PolyhedralCone& c)
{
    ojson j;
    j["dim"] = c.dim();
    j["rays"] = ojson::array();
    for (const auto& r : c.rays())
        j["rays"].push_back(vec_to_json(r));
    j["lineality"] = ojson::array();
    for (const auto& l : c.lineality())
        j["lineality"].push_back(vec_to_json(l));
    return j;
}

PolyField field_from_json(const json& j, int n, const std::string& ptr)
{
    const auto& arr = array_at(j, ptr);
    std::vector<Polynomial> comps;
    const bool flat = n == 1 && (arr.empty() || arr[0].is_object());
    if (flat)
    {
        comps.emplace_back(wrap(ptr, [&] { return Polynomial(1, terms_from_json(arr, 1, ptr)); }));
        return PolyField(std::move(comps));
    }
    if (static_cast<int>(arr.size()) != n)
        throw SchemaError(ptr, "expected " + std::to_string(n) + " component term lists");
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
        const std::string p = child(ptr, i);
        comps.push_back(wrap(p, [&] { return Polynomial(n, terms_from_json(arr[i], n, p)); }));
    }
    return PolyField(std::move(comps));
}

dynamics::ControlSet control_set_from_json(const json& j, int m, const std::string& ptr)
{
    const auto& type = member(j, "type", ptr);
    if (!type.is_string())
        throw SchemaError(child(ptr, "type"), "expected a string");
    const auto t = type.get<std::string>();
    if (t == "box")
    {
        const Vec lo = vec_from_json(member(j, "lo", ptr), child(ptr, "lo"));
        const Vec hi = vec_from_json(member(j, "hi", ptr), child(ptr, "hi"));
        if (lo.size() != m || hi.size() != m)
            throw SchemaError(ptr, "box bounds must have length m");
        const int spa = j.contains("samples_per_axis") ? integer(j.at("samples_per_axis"), child(ptr, "samples_per_axis")) : 2;
        return wrap(ptr, [&] { return dynamics::ControlSet::box(lo, hi, spa); });
    }
    if (t == "finite")
    {
        auto vals = vecs_from_json(member(j, "values", ptr), child(ptr, "values"));
        for (std::size_t i = 0; i < vals.size(); ++i)
            if (vals[i].size() != m)
                throw SchemaError(child(child(ptr, "values"), i), "control value must have length m");
        return wrap(ptr, [&] { return dynamics::ControlSet::finite(std::move(vals)); });
    }
    throw SchemaError(child(ptr, "type"), "control set type must be 'box' or 'finite'");
}

dynamics::SystemSpec system_from_json(const json& j, const std::string& ptr)
{
    const int n = integer(member(j, "n", ptr), child(ptr, "n"));
    const int m = integer(member(j, "m", ptr), child(ptr, "m"));
    if (n < 1)
        throw SchemaError(child(ptr, "n"), "state dimension must be positive");
    if (m < 1)
        throw SchemaError(child(ptr, "m"), "control dimension must be positive");
    const double S = number(member(j, "S", ptr), child(ptr, "S"));
    PolyField drift = j.contains("drift") ? field_from_json(j.at("drift"), n, child(ptr, "drift"))
                                          : PolyField::zero(n, n);
    std::vector<PolyField> channels;
    if (j.contains("channels"))
    {
        const auto& arr = array_at(j.at("channels"), child(ptr, "channels"));
        if (static_cast<int>(arr.size()) != m)
            throw SchemaError(child(ptr, "channels"), "expected one channel per control component");
        for (std::size_t i = 0; i < arr.size(); ++i)
            channels.push_back(field_from_json(arr[i], n, child(child(ptr, "channels"), i)));
    }
    std::vector<dynamics::TableEntry> table;
    if (j.contains("table"))
    {
        const auto& arr = array_at(j.at("table"), child(ptr, "table"));
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            const std::string p = child(child(ptr, "table"), i);
            Vec value = vec_from_json(member(arr[i], "value", p), child(p, "value"));
            if (value.size() != m)
                throw SchemaError(child(p, "value"), "table value must have length m");
            table.push_back({value, field_from_json(member(arr[i], "field", p), n, child(p, "field"))});
        }
    }
    std::vector<double> jumps;
    if (j.contains("jump_times"))
    {
        const Vec jt = vec_from_json(j.at("jump_times"), child(ptr, "jump_times"));
        jumps.assign(jt.data(), jt.data() + jt.size());
    }
    const auto cs = control_set_from_json(member(j, "control_set", ptr), m, child(ptr, "control_set"));
    const double c_bound = j.contains("c_bound") ? number(j.at("c_bound"), child(ptr, "c_bound")) : 1.0;
    return wrap(ptr, [&] {
        return dynamics::SystemSpec(n, m, S, std::move(drift), std::move(channels), cs, std::move(table),
                                    std::move(jumps), c_bound);
    });
}

dynamics::ControlPath control_from_json(const json& j, const dynamics::Grid& grid, int m, const std::string& ptr)
{
    if (!j.is_object())
        throw SchemaError(ptr, "control must be an object");
    auto check_dim = [m](const Vec& v, const std::string& p) {
        if (v.size() != m)
            throw SchemaError(p, "control value must have length " + std::to_string(m));
    };
    if (j.contains("constant"))
    {
        const Vec v = vec_from_json(j.at("constant"), child(ptr, "constant"));
        check_dim(v, child(ptr, "constant"));
        return dynamics::ControlPath::constant(grid, v);
    }
    if (j.contains("values"))
    {
        auto vals = vecs_from_json(j.at("values"), child(ptr, "values"));
        if (vals.size() != grid.cells())
            throw SchemaError(child(ptr, "values"), "expected one value per grid cell (" +
                                                        std::to_string(grid.cells()) + ")");
        for (std::size_t i = 0; i < vals.size(); ++i)
            check_dim(vals[i], child(child(ptr, "values"), i));
        return dynamics::ControlPath(grid, std::move(vals));
    }
    if (j.contains("pieces"))
    {
        const std::string pp = child(ptr, "pieces");
        const auto& arr = array_at(j.at("pieces"), pp);
        if (arr.empty())
            throw SchemaError(pp, "piecewise control needs at least one piece");
        std::vector<double> until;
        std::vector<Vec> vals;
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            const std::string p = child(pp, i);
            until.push_back(arr[i].contains("until") ? number(arr[i].at("until"), child(p, "until"))
                                                     : std::numeric_limits<double>::infinity());
            vals.push_back(vec_from_json(member(arr[i], "value", p), child(p, "value")));
            check_dim(vals.back(), child(p, "value"));
        }
        std::vector<Vec> cells;
        for (std::size_t k = 0; k < grid.cells(); ++k)
        {
            const double mid = grid.node(k) + 0.5 * grid.width(k);
            std::size_t i = 0;
            while (i + 1 < until.size() && mid >= until[i])
                ++i;
            cells.push_back(vals[i]);
        }
        return dynamics::ControlPath(grid, std::move(cells));
    }
    throw SchemaError(ptr, "control needs one of 'constant', 'values' or 'pieces'");
}

std::vector<variations::NeedleSpec> needles_from_json(const json& j, const std::string& ptr)
{
    std::vector<variations::NeedleSpec> out;
    const auto& arr = array_at(j, ptr);
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
        const std::string p = child(ptr, i);
        variations::NeedleSpec nd;
        nd.s = number(member(arr[i], "s", p), child(p, "s"));
        nd.width = arr[i].contains("width") ? number(arr[i].at("width"), child(p, "width")) : 0.0;
        nd.value = vec_from_json(member(arr[i], "value", p), child(p, "value"));
        out.push_back(nd);
    }
    return out;
}

extremality::TargetSpec target_from_json(const json& j, int n, const std::string& ptr)
{
    auto cone = cone_from_json(member(j, "cone", ptr), child(ptr, "cone"));
    if (cone.dim() != n)
        throw SchemaError(child(child(ptr, "cone"), "dim"), "target cone dimension must equal n");
    extremality::TargetSpec t(std::move(cone));
    if (j.contains("point"))
    {
        t.point = vec_from_json(j.at("point"), child(ptr, "point"));
        if (t.point->size() != n)
            throw SchemaError(child(ptr, "point"), "target point must have length n");
    }
    if (j.contains("point_tol"))
        t.point_tol = number(j.at("point_tol"), child(ptr, "point_tol"));
    if (j.contains("gradient"))
    {
        t.gradient = vec_from_json(j.at("gradient"), child(ptr, "gradient"));
        if (t.gradient->size() != n)
            throw SchemaError(child(ptr, "gradient"), "gradient must have length n");
    }
    return t;
}

impulsive::ImpulsiveProblem impulsive_from_json(const json& j, const std::string& ptr)
{
    impulsive::ImpulsiveProblem p;
    p.n = integer(member(j, "n", ptr), child(ptr, "n"));
    p.m = integer(member(j, "m", ptr), child(ptr, "m"));
    if (p.n < 1 || p.m < 1)
        throw SchemaError(ptr, "n and m must be positive");
    p.drift = j.contains("drift") ? field_from_json(j.at("drift"), p.n, child(ptr, "drift"))
                                  : PolyField::zero(p.n, p.n);
    const auto& ch = array_at(member(j, "channels", ptr), child(ptr, "channels"));
    if (static_cast<int>(ch.size()) != p.m)
        throw SchemaError(child(ptr, "channels"), "expected one channel per control component");
    for (std::size_t i = 0; i < ch.size(); ++i)
        p.channels.push_back(field_from_json(ch[i], p.n, child(child(ptr, "channels"), i)));
    p.u_samples = vecs_from_json(member(j, "U_samples", ptr), child(ptr, "U_samples"));
    const auto& tag = member(j, "U_tag", ptr);
    if (!tag.is_string())
        throw SchemaError(child(ptr, "U_tag"), "expected a string");
    p.tag = wrap(child(ptr, "U_tag"), [&] { return impulsive::utag_from_string(tag.get<std::string>()); });
    p.t1 = j.contains("t1") ? number(j.at("t1"), child(ptr, "t1")) : 0.0;
    p.x0 = vec_from_json(member(j, "x0", ptr), child(ptr, "x0"));
    if (j.contains("K_bound"))
        p.k_bound = number(j.at("K_bound"), child(ptr, "K_bound"));
    p.s_hat = number(member(j, "S_hat", ptr), child(ptr, "S_hat"));
    wrap(ptr, [&] {
        p.validate();
        return 0;
    });
    return p;
}

ojson report_to_json(const extremality::ExtremalReport& r)
{
    ojson j;
    j["verdict"] = extremality::to_string(r.verdict);
    j["min_violation"] = number_or_null(r.violation);
    j["witness_xi"] = r.witness_xi ? vec_to_json(*r.witness_xi) : ojson(nullptr);
    j["lambda_c"] = r.lambda_c ? ojson(*r.lambda_c) : ojson(nullptr);
    j["candidates"] = r.candidates;
    return j;
}

std::string process_csv(const dynamics::Process& p)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "s";
    const auto n = p.states.front().size();
    for (Eigen::Index i = 0; i < n; ++i)
        os << ",y" << (i + 1);
    os << "\n";
    for (std::size_t k = 0; k < p.states.size(); ++k)
    {
        os << p.grid().node(k);
        for (Eigen::Index i = 0; i < n; ++i)
            os << "," << p.states[k](i);
        os << "\n";
    }
    return os.str();
}

std::string control_csv(const dynamics::ControlPath& c)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "s_left,s_right";
    for (int i = 0; i < c.dim(); ++i)
        os << ",value" << (i + 1);
    os << "\n";
    for (std::size_t k = 0; k < c.grid.cells(); ++k)
    {
        os << c.grid.node(k) << "," << c.grid.node(k + 1);
        for (int i = 0; i < c.dim(); ++i)
            os << "," << c.values[k](i);
        os << "\n";
    }
    return os.str();
}

} // namespace gapscope::io
