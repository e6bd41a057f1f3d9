#include "gapscope/scenario.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gapscope::scenario
{

namespace
{

using io::json;
using io::ojson;

template <typename F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f())
{
    try
    {
        return f();
    }
    catch (const StageError&)
    {
        throw;
    }
    catch (const SchemaError& e)
    {
        throw StageError(stage, e.kind(), e.detail(), e.pointer());
    }
    catch (const Error& e)
    {
        throw StageError(stage, e.kind(), e.detail());
    }
}

dynamics::Grid t_grid(double t1, double t2, std::size_t cells)
{
    std::vector<double> nodes;
    for (std::size_t k = 0; k <= cells; ++k)
        nodes.push_back(t1 + (t2 - t1) * static_cast<double>(k) / static_cast<double>(cells));
    nodes.back() = t2;
    return dynamics::Grid(std::move(nodes));
}

Vec flat_nc(const Vec& w, double d)
{
    Vec v(w.size() + 1);
    v.head(w.size()) = w;
    v(w.size()) = d;
    return v;
}

Abundance abundance_from_json(const json& j, const std::string& ptr)
{
    Abundance a;
    const auto& att = io::member(j, "attested", ptr);
    if (!att.is_boolean())
        throw SchemaError(ptr + "/attested", "expected a boolean");
    a.attested = att.get<bool>();
    if (j.contains("concatenation"))
    {
        if (!j.at("concatenation").is_boolean())
            throw SchemaError(ptr + "/concatenation", "expected a boolean");
        a.concatenation_declared = j.at("concatenation").get<bool>();
    }
    if (j.contains("density_check"))
    {
        const std::string p = ptr + "/density_check";
        const json& d = j.at("density_check");
        DensityCheck dc;
        dc.base = io::member(d, "base", p);
        const auto& comps = io::member(d, "companions", p);
        if (!comps.is_array() || comps.empty())
            throw SchemaError(p + "/companions", "expected a non-empty array");
        for (const auto& c : comps)
            dc.companions.push_back(c);
        if (d.contains("K"))
            dc.blocks = static_cast<std::size_t>(io::integer(d.at("K"), p + "/K"));
        if (d.contains("gamma_points"))
            dc.gamma_points = static_cast<std::size_t>(io::integer(d.at("gamma_points"), p + "/gamma_points"));
        if (d.contains("tolerance"))
            dc.tolerance = io::number(d.at("tolerance"), p + "/tolerance");
        if (d.contains("forbidden_integral"))
            dc.forbidden_integral = io::number(d.at("forbidden_integral"), p + "/forbidden_integral");
        if (dc.blocks < 1)
            throw SchemaError(p + "/K", "K must be positive");
        if (dc.gamma_points < 2)
            throw SchemaError(p + "/gamma_points", "need at least two gamma points");
        a.density = dc;
    }
    return a;
}

void load_standard(Scenario& sc, const json& j, const RunOptions& opt)
{
    sc.system.emplace(io::system_from_json(io::member(j, "system", ""), "/system"));
    const auto& sys = *sc.system;
    sc.y0 = io::vec_from_json(io::member(j, "y0", ""), "/y0");
    if (sc.y0.size() != sys.n())
        throw SchemaError("/y0", "initial state must have length n");
    std::size_t cells = 1000;
    if (j.contains("grid"))
        cells = static_cast<std::size_t>(io::integer(j.at("grid"), "/grid"));
    if (opt.grid)
        cells = *opt.grid;
    if (cells < 1)
        throw SchemaError("/grid", "grid must have at least one cell");
    const auto grid = dynamics::Grid::uniform(sys.horizon(), cells);
    sc.reference.emplace(io::control_from_json(io::member(j, "reference", ""), grid, sys.m(), "/reference"));
    sc.target.emplace(io::target_from_json(io::member(j, "target", ""), sys.n(), "/target"));
    if (j.contains("wset"))
    {
        sc.wset = io::vecs_from_json(j.at("wset"), "/wset");
        for (std::size_t i = 0; i < sc.wset.size(); ++i)
            if (sc.wset[i].size() != sys.m())
                throw SchemaError("/wset/" + std::to_string(i), "control sample must have length m");
    }
    else if (sys.control_set().type() == dynamics::ControlSet::Type::Finite)
        sc.wset = sys.control_set().values();
    else
        sc.wset = sys.control_set().samples();
    sc.delta2 = 0.05 * sys.horizon();
}

void load_impulsive(Scenario& sc, const json& j, const RunOptions& opt)
{
    ImpulsiveData data{io::impulsive_from_json(io::member(j, "problem", ""), "/problem"),
                       impulsive::Case::NonConvex,
                       1.0,
                       dynamics::ControlPath(dynamics::Grid({0.0, 1.0}), {Vec::Zero(1)}),
                       {dynamics::ControlPath(dynamics::Grid({0.0, 1.0}), {Vec::Zero(1)}), {}, {}}};
    auto& prob = data.problem;
    const auto& kind = io::member(j, "case", "");
    if (!kind.is_string() || (kind != "convex" && kind != "nonconvex"))
        throw SchemaError("/case", "case must be 'convex' or 'nonconvex'");
    data.kind = kind == "convex" ? impulsive::Case::Convex : impulsive::Case::NonConvex;
    data.t2 = io::number(io::member(j, "t2", ""), "/t2");
    if (!(data.t2 > prob.t1))
        throw SchemaError("/t2", "t2 must exceed t1");
    std::size_t cells = 200;
    if (j.contains("grid"))
        cells = static_cast<std::size_t>(io::integer(j.at("grid"), "/grid"));
    if (opt.grid)
        cells = *opt.grid;
    if (cells < 1)
        throw SchemaError("/grid", "grid must have at least one cell");
    data.u = io::control_from_json(io::member(j, "reference", ""), t_grid(prob.t1, data.t2, cells), prob.m,
                                   "/reference");
    for (std::size_t k = 0; k < data.u.values.size(); ++k)
    {
        const Vec& u = data.u.values[k];
        const bool ok = std::any_of(prob.u_samples.begin(), prob.u_samples.end(),
                                    [&](const Vec& s) { return (s - u).cwiseAbs().maxCoeff() <= 1e-9; });
        if (!ok)
            throw SchemaError("/reference", "reference control leaves the U sample on cell " + std::to_string(k));
    }

    const auto stp = in_stage("embed", [&] {
        data.original = impulsive::integrate_original(prob, data.u);
        return impulsive::embed(prob, data.original, impulsive::Case::NonConvex);
    });

    std::vector<Vec> ref_values;
    for (std::size_t k = 0; k < stp.grid.cells(); ++k)
        ref_values.push_back(flat_nc(stp.copies[k].front(), stp.d[k]));
    if (j.contains("wset"))
        sc.wset = io::vecs_from_json(j.at("wset"), "/wset");
    else
        for (const auto& w : impulsive::normalized_samples(prob.u_samples))
            for (double d : {-0.5, 0.0, 0.5})
                sc.wset.push_back(flat_nc(w, d));
    for (std::size_t i = 0; i < sc.wset.size(); ++i)
        if (sc.wset[i].size() != prob.m + 2)
            throw SchemaError("/wset/" + std::to_string(i), "space-time sample must be (w0, w, d)");
    std::vector<Vec> table = sc.wset;
    table.insert(table.end(), ref_values.begin(), ref_values.end());
    sc.system.emplace(in_stage("embed", [&] { return impulsive::nonconvex_system(prob, table); }));
    sc.reference.emplace(stp.grid, std::move(ref_values));
    sc.y0 = stp.states.front();
    sc.target.emplace(io::target_from_json(io::member(j, "target", ""), prob.n + 2, "/target"));
    sc.delta2 = 0.05 * prob.s_hat;
    sc.impulsive = std::move(data);
}

ojson timing(double ms) { return std::round(ms * 1000.0) / 1000.0; }

} // namespace

StageError::StageError(std::string stage, ErrorKind kind, const std::string& message, std::string pointer)
    : Error(kind, message), stage_(std::move(stage)), pointer_(std::move(pointer))
{
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Input, "SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string read_spec(const std::string& name_or_path)
{
    const std::string text = registry_text(name_or_path);
    if (!text.empty())
        return text;
    std::ifstream in(name_or_path, std::ios::binary);
    if (!in)
        throw StageError("parse", ErrorKind::Input,
                         "'" + name_or_path + "' is neither a bundled scenario nor a readable file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Scenario load_scenario(const json& j, const RunOptions& opt)
{
    return in_stage("parse", [&] {
        if (!j.is_object())
            throw SchemaError("", "scenario must be a JSON object");
        Scenario sc;
        if (j.contains("name"))
        {
            if (!j.at("name").is_string())
                throw SchemaError("/name", "expected a string");
            sc.name = j.at("name").get<std::string>();
        }
        if (j.contains("description") && j.at("description").is_string())
            sc.description = j.at("description").get<std::string>();
        std::string kind = "standard";
        if (j.contains("kind"))
        {
            if (!j.at("kind").is_string())
                throw SchemaError("/kind", "expected a string");
            kind = j.at("kind").get<std::string>();
        }
        if (kind == "standard")
            load_standard(sc, j, opt);
        else if (kind == "impulsive")
            load_impulsive(sc, j, opt);
        else
            throw SchemaError("/kind", "kind must be 'standard' or 'impulsive'");

        if (j.contains("needles"))
            sc.needles = io::needles_from_json(j.at("needles"), "/needles");
        for (std::size_t i = 0; i < sc.needles.size(); ++i)
            if (sc.needles[i].value.size() != sc.sys().m())
                throw SchemaError("/needles/" + std::to_string(i) + "/value", "needle value must have length m");
        if (j.contains("delta2"))
            sc.delta2 = io::number(j.at("delta2"), "/delta2");
        if (j.contains("abundance"))
            sc.abundance = abundance_from_json(j.at("abundance"), "/abundance");
        if (sc.wset.empty())
            throw SchemaError("/wset", "control sample is empty");
        return sc;
    });
}

Scenario load_scenario_text(const std::string& text, const RunOptions& opt)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw StageError("parse", ErrorKind::Schema, std::string("invalid JSON: ") + e.what(), "");
    }
    return load_scenario(j, opt);
}

std::vector<DensityRow> density_sweep(const Scenario& sc, const DensityCheck& dc)
{
    const auto& sys = sc.sys();
    const std::size_t base_cells = sc.reference->grid.cells();
    const std::size_t mult = std::max<std::size_t>(1, (base_cells + dc.blocks - 1) / dc.blocks);
    const auto grid = dynamics::Grid::uniform(sys.horizon(), dc.blocks * mult);
    const auto base = io::control_from_json(dc.base, grid, sys.m(), "/abundance/density_check/base");
    std::vector<dynamics::ControlPath> comps;
    for (std::size_t i = 0; i < dc.companions.size(); ++i)
        comps.push_back(io::control_from_json(dc.companions[i], grid, sys.m(),
                                              "/abundance/density_check/companions/" + std::to_string(i)));
    const double N = static_cast<double>(comps.size());
    std::vector<DensityRow> rows;
    for (std::size_t p = 0; p < dc.gamma_points; ++p)
    {
        const double t = static_cast<double>(p) / static_cast<double>(dc.gamma_points - 1);
        const Vec gamma = Vec::Constant(static_cast<Eigen::Index>(comps.size()), t / N);
        const auto chat = variations::chattering(base, comps, gamma, dc.blocks);
        const auto relaxed = variations::relaxed_integrate(sys, {base, comps, gamma}, sc.y0);
        const auto actual = dynamics::integrate(sys, chat, sc.y0);
        DensityRow row;
        row.gamma = t;
        row.integral = chat.integral()(0);
        row.endpoint_gap = (relaxed.terminal() - actual.terminal()).norm();
        if (dc.forbidden_integral)
            row.in_family = std::abs(row.integral - *dc.forbidden_integral) > 1e-9;
        rows.push_back(row);
    }
    return rows;
}

Outcome run_scenario(const std::string& spec_text, const RunOptions& opt)
{
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    ojson stages_ms;
    auto lap = [&](const char* stage, clock::time_point t0) {
        stages_ms[stage] = timing(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    };

    auto t0 = clock::now();
    const Scenario sc = load_scenario_text(spec_text, opt);
    lap("parse", t0);
    const auto& sys = sc.sys();
    const auto& tgt = *sc.target;
    extremality::SearchOptions sopt;
    if (opt.candidates)
        sopt.candidates = *opt.candidates;
    sopt.seed = opt.seed;
    if (opt.tol)
        sopt.tol_viol = *opt.tol;
    spdlog::info("scenario '{}': {} cells, {} needles, {} control samples", sc.name, sc.reference->grid.cells(),
                 sc.needles.size(), sc.wset.size());

    Outcome out;
    ojson rep;
    rep["tool"] = kToolName;
    rep["version"] = kVersion;
    rep["scenario"] = sc.name;
    rep["input_sha256"] = sha256_hex(spec_text);
    rep["options"] = {{"grid", sc.reference->grid.cells()},
                      {"candidates", sopt.candidates},
                      {"seed", sopt.seed},
                      {"tol_viol", sopt.tol_viol > 0.0 ? sopt.tol_viol : 1e-6 * sys.horizon()}};

    t0 = clock::now();
    const auto proc = in_stage("integrate", [&] { return dynamics::integrate(sys, *sc.reference, sc.y0); });
    lap("integrate", t0);
    rep["trajectory"] = {{"cells", proc.grid().cells()},
                         {"horizon", sys.horizon()},
                         {"y0", io::vec_to_json(sc.y0)},
                         {"terminal", io::vec_to_json(proc.terminal())},
                         {"target_feasible", tgt.feasible(proc.terminal())}};

    t0 = clock::now();
    if (!sc.needles.empty())
    {
        const auto sep = in_stage("separation", [&] {
            return extremality::separation_diagnostic(sys, proc, tgt, sc.needles);
        });
        ojson gens = ojson::array();
        for (const auto& g : sep.cone.generators)
            gens.push_back(io::vec_to_json(g));
        rep["variational_cone"] = {{"generators", gens}, {"cone", io::cone_to_json(sep.cone.cone)}};
        if (sep.witness)
            rep["separation"] = {{"separable", true},
                                 {"witness_xi", io::vec_to_json(sep.witness->xi)},
                                 {"margin", io::number_or_null(sep.witness->margin)},
                                 {"bridge_max", io::number_or_null(sep.bridge_max)}};
        else
            rep["separation"] = {{"separable", false}, {"witness_xi", nullptr}};
    }
    else
    {
        rep["variational_cone"] = nullptr;
        rep["separation"] = nullptr;
    }
    lap("separation", t0);

    t0 = clock::now();
    const auto abn = in_stage("abnormality", [&] {
        return extremality::abnormality_search(sys, proc, tgt, sc.wset, sopt);
    });
    lap("abnormality", t0);
    rep["extremal"] = io::report_to_json(abn);

    extremality::Verdict verdict = abn.verdict;
    if (tgt.gradient)
    {
        t0 = clock::now();
        const auto hrep = in_stage("h_classify", [&] { return extremality::h_classify(sys, proc, tgt, sc.wset, sopt); });
        lap("h_classify", t0);
        auto hj = io::report_to_json(hrep);
        if (hrep.witness)
        {
            double lam_max = 0.0;
            for (const auto& l : hrep.witness->covectors)
                lam_max = std::max(lam_max, l.lpNorm<Eigen::Infinity>());
            hj["lambda_sup"] = lam_max;
        }
        rep["h_extremal"] = hj;
        verdict = hrep.verdict;
    }
    else
        rep["h_extremal"] = nullptr;

    t0 = clock::now();
    const auto ctl = in_stage("controllability", [&] {
        return extremality::needle_controllability(sys, proc, tgt, sc.wset, sc.delta2, sopt);
    });
    lap("controllability", t0);
    rep["controllability"] = {{"margin", io::number_or_null(ctl.margin)},
                              {"vacuous", ctl.vacuous},
                              {"delta2", sc.delta2},
                              {"certifies_normality", ctl.margin > 1e-3},
                              {"candidates", ctl.candidates}};

    ojson ab = {{"attested", sc.abundance.attested}, {"concatenation_declared", sc.abundance.concatenation_declared}};
    if (sc.abundance.density)
    {
        t0 = clock::now();
        const auto& dc = *sc.abundance.density;
        const auto rows = in_stage("abundance", [&] { return density_sweep(sc, dc); });
        lap("abundance", t0);
        ojson arr = ojson::array();
        double worst = 0.0;
        bool leaves = false;
        for (const auto& r : rows)
        {
            arr.push_back({{"gamma", r.gamma},
                           {"integral", r.integral},
                           {"endpoint_gap", r.endpoint_gap},
                           {"in_family", r.in_family}});
            worst = std::max(worst, r.endpoint_gap);
            leaves = leaves || !r.in_family;
        }
        ab["density_check"] = {{"K", dc.blocks},
                               {"max_endpoint_gap", worst},
                               {"within_tolerance", worst < dc.tolerance},
                               {"selection_leaves_family", leaves},
                               {"rows", arr}};
    }
    rep["abundance"] = ab;

    const auto gap = extremality::gap_verdict(sc.abundance.attested, verdict);
    rep["gap"] = {{"verdict", extremality::to_string(gap.verdict)}, {"note", gap.note}};

    if (sc.impulsive)
    {
        t0 = clock::now();
        rep["impulsive"] = in_stage("impulsive", [&] {
            const auto& data = *sc.impulsive;
            const auto& prob = data.problem;
            const auto emb = impulsive::embed(prob, data.original, data.kind);
            const auto re = impulsive::spacetime_integrate(prob, emb);
            const auto back = impulsive::invert_embedding(re);
            const double x_err = (back.x.back() - data.original.x.back()).norm();
            const double eta_err = std::abs(back.eta.back() - data.original.eta.back());
            const auto st = impulsive::structure_check(prob.u_samples, prob.tag);
            ojson ij = {{"case", data.kind == impulsive::Case::Convex ? "convex" : "nonconvex"},
                        {"copies", emb.copies.front().size()},
                        {"d", emb.d.front()},
                        {"normalization_defect", emb.normalization_defect()},
                        {"roundtrip_x_error", x_err},
                        {"roundtrip_eta_error", eta_err},
                        {"structure", {{"tag", impulsive::to_string(st.tag)},
                                       {"passed", st.passed},
                                       {"detail", st.detail}}}};
            const int nn = prob.n + 2;
            if (abn.witness && abn.witness_xi && (*abn.witness_xi)(nn - 1) <= 0.0)
            {
                const auto nc = impulsive::embed(prob, data.original, impulsive::Case::NonConvex);
                const auto res = impulsive::gap_nc_residuals(prob, nc, abn.witness->covectors,
                                                             (*abn.witness_xi)(nn - 1), tgt.cone,
                                                             impulsive::normalized_samples(prob.u_samples));
                ij["gap_nc"] = {{"nontriviality", res.nontriviality},
                                {"adjoint_defect", res.adjoint_defect},
                                {"maximality", res.maximality},
                                {"cone_distance", res.cone_distance}};
            }
            else
                ij["gap_nc"] = nullptr;
            return ij;
        });
        lap("impulsive", t0);
    }

    rep["verdict"] = extremality::to_string(verdict);
    rep["min_violation"] = io::number_or_null(abn.violation);
    rep["witness_xi"] = abn.witness_xi ? io::vec_to_json(*abn.witness_xi) : ojson(nullptr);
    rep["margin"] = io::number_or_null(ctl.margin);
    rep["candidates"] = abn.candidates;
    rep["abundance_attested"] = sc.abundance.attested;

    if (opt.timings)
    {
        stages_ms["total"] = timing(std::chrono::duration<double, std::milli>(clock::now() - start).count());
        rep["runtime_ms"] = stages_ms;
    }
    spdlog::info("scenario '{}' verdict {} gap {}", sc.name, extremality::to_string(verdict),
                 extremality::to_string(gap.verdict));

    out.report = std::move(rep);
    out.gap = gap.verdict;
    out.exit_code = gap.verdict == extremality::GapVerdict::GapPossible ? 2 : 0;
    out.process = proc;
    return out;
}

} // namespace gapscope::scenario
