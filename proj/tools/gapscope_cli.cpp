#include "gapscope/cones.hpp"
#include "gapscope/dynamics.hpp"
#include "gapscope/extremality.hpp"
#include "gapscope/impulsive.hpp"
#include "gapscope/open_mapping.hpp"
#include "gapscope/scenario.hpp"
#include "gapscope/serialize.hpp"
#include "gapscope/variations.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace gapscope;
using io::json;
using io::ojson;

namespace
{

struct Common
{
    std::string scenario;
    std::optional<std::size_t> grid;
    std::optional<double> tol;
    std::optional<std::size_t> candidates;
    std::size_t seed{0};
    std::string out;
    std::string format{"json"};
    bool timings{false};

    scenario::RunOptions run_options() const { return {grid, tol, candidates, seed, timings}; }
};

void add_common(CLI::App* cmd, Common& c, bool needs_scenario)
{
    auto* opt = cmd->add_option("--scenario,--spec", c.scenario, "bundled scenario name or path to a JSON spec");
    if (needs_scenario)
        opt->required();
    cmd->add_option("--grid", c.grid, "override the number of grid cells G");
    cmd->add_option("--tol", c.tol, "absolute maximality-violation tolerance (default 1e-6*S)");
    cmd->add_option("--candidates", c.candidates, "number of sampled covector candidates (default 64)");
    cmd->add_option("--seed", c.seed, "offset into the Halton candidate sequence (default 0)");
    cmd->add_option("--out", c.out, "write the result to this path instead of stdout");
    cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}));
}

void emit(const Common& c, const std::string& text)
{
    if (c.out.empty())
    {
        std::cout << text;
        if (!text.empty() && text.back() != '\n')
            std::cout << '\n';
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f)
        throw scenario::StageError("output", ErrorKind::Input, "cannot write '" + c.out + "'");
    f << text;
    if (!text.empty() && text.back() != '\n')
        f << '\n';
}

void emit_json(const Common& c, const ojson& j) { emit(c, j.dump(2)); }

scenario::Scenario load(const Common& c)
{
    return scenario::load_scenario_text(scenario::read_spec(c.scenario), c.run_options());
}

extremality::SearchOptions search_options(const Common& c)
{
    extremality::SearchOptions s;
    if (c.candidates)
        s.candidates = *c.candidates;
    s.seed = c.seed;
    if (c.tol)
        s.tol_viol = *c.tol;
    return s;
}

json parse_json_arg(const std::string& arg, const std::string& what)
{
    std::string text = arg;
    if (!arg.empty() && arg.front() == '@')
    {
        std::ifstream f(arg.substr(1));
        if (!f)
            throw scenario::StageError("parse", ErrorKind::Input, "cannot read " + what + " file '" + arg.substr(1) + "'");
        std::ostringstream os;
        os << f.rdbuf();
        text = os.str();
    }
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw scenario::StageError("parse", ErrorKind::Schema, "invalid JSON for " + what + ": " + e.what());
    }
}

ojson matrix_json(const Mat& m)
{
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(io::vec_to_json(m.row(i).transpose()));
    return rows;
}

dynamics::Process reference_process(const scenario::Scenario& sc)
{
    return dynamics::integrate(sc.sys(), *sc.reference, sc.y0);
}

int cmd_simulate(const Common& c)
{
    const auto sc = load(c);
    const auto proc = reference_process(sc);
    if (c.format == "csv")
    {
        emit(c, io::process_csv(proc));
        return 0;
    }
    emit_json(c, {{"scenario", sc.name},
                  {"cells", proc.grid().cells()},
                  {"horizon", sc.sys().horizon()},
                  {"y0", io::vec_to_json(sc.y0)},
                  {"terminal", io::vec_to_json(proc.terminal())}});
    return 0;
}

int cmd_flow(const Common& c, double from, bool check_fd, double fd_eps)
{
    const auto sc = load(c);
    const auto& sys = sc.sys();
    const auto proc = reference_process(sc);
    const auto node = proc.grid().find_node(from);
    if (!node)
        throw scenario::StageError("flow", ErrorKind::Grid, "--from is not a grid node");
    const auto flow = dynamics::variational_flow(sys, proc, *node);
    const Mat& M = flow.matrices.back();
    ojson out = {{"scenario", sc.name}, {"from", from}, {"M", matrix_json(M)}};
    if (check_fd)
    {
        if (*node != 0)
            throw scenario::StageError("flow", ErrorKind::Input, "--check-fd needs --from 0");
        double worst = 0.0;
        for (int i = 0; i < sys.n(); ++i)
        {
            Vec y0 = sc.y0;
            y0(i) += fd_eps;
            const auto pert = dynamics::integrate(sys, *sc.reference, y0);
            const Vec col = (pert.terminal() - proc.terminal()) / fd_eps;
            const double scale = std::max(M.col(i).norm(), 1e-12);
            worst = std::max(worst, (col - M.col(i)).norm() / scale);
        }
        out["fd_eps"] = fd_eps;
        out["fd_max_rel_error"] = worst;
    }
    emit_json(c, out);
    return 0;
}

int cmd_cone(const Common& c, const std::string& cone_arg, const std::string& contains_arg, double tol)
{
    const auto cone = io::cone_from_json(parse_json_arg(cone_arg, "cone"));
    ojson out = {{"cone", io::cone_to_json(cone)}};
    if (cone.dim() <= cones::kMaxPolarDim)
        out["polar"] = io::cone_to_json(cones::polar(cone));
    else
        out["polar"] = nullptr;
    if (!contains_arg.empty())
    {
        const Vec v = io::vec_from_json(parse_json_arg(contains_arg, "vector"), "");
        if (v.size() != cone.dim())
            throw scenario::StageError("cone", ErrorKind::Dimension, "vector length differs from the cone dimension");
        out["vector"] = io::vec_to_json(v);
        out["contains"] = cones::cone_contains(cone, v, tol);
        out["distance"] = cones::distance(cone, v);
    }
    emit_json(c, out);
    return 0;
}

int cmd_separate(const Common& c, const std::string& k1_arg, const std::string& k2_arg)
{
    if (!c.scenario.empty())
    {
        const auto sc = load(c);
        const auto proc = reference_process(sc);
        const auto sep = extremality::separation_diagnostic(sc.sys(), proc, *sc.target, sc.needles);
        ojson out = {{"scenario", sc.name}, {"variational_cone", io::cone_to_json(sep.cone.cone)}};
        if (sep.witness)
        {
            out["separable"] = true;
            out["witness_xi"] = io::vec_to_json(sep.witness->xi);
            out["bridge_max"] = sep.bridge_max;
            out["message"] = "witness found: the variational cone and the target cone are linearly separable";
        }
        else
        {
            out["separable"] = false;
            out["witness_xi"] = nullptr;
            out["message"] = "no witness: the variational cone and the target cone are not linearly separable";
        }
        emit_json(c, out);
        return 0;
    }
    if (k1_arg.empty() || k2_arg.empty())
        throw scenario::StageError("separate", ErrorKind::Input, "give --scenario or both --k1 and --k2");
    const auto k1 = io::cone_from_json(parse_json_arg(k1_arg, "k1"), "");
    const auto k2 = io::cone_from_json(parse_json_arg(k2_arg, "k2"), "");
    const auto w = cones::linear_separation(k1, k2);
    ojson out = {{"transversality", cones::to_string(cones::classify_transversality(k1, k2))}};
    if (w)
    {
        out["witness_xi"] = io::vec_to_json(w->xi);
        out["margin"] = w->margin;
        out["message"] = "witness found";
    }
    else
    {
        out["witness_xi"] = nullptr;
        out["message"] = "no witness";
    }
    emit_json(c, out);
    return 0;
}

int cmd_extremal(const Common& c)
{
    const auto sc = load(c);
    const auto proc = reference_process(sc);
    const auto s = search_options(c);
    const auto abn = extremality::abnormality_search(sc.sys(), proc, *sc.target, sc.wset, s);
    ojson out = {{"scenario", sc.name}, {"abnormality", io::report_to_json(abn)}};
    if (sc.target->gradient)
        out["h_extremal"] = io::report_to_json(extremality::h_classify(sc.sys(), proc, *sc.target, sc.wset, s));
    else
        out["h_extremal"] = nullptr;
    emit_json(c, out);
    return 0;
}

int cmd_controllability(const Common& c, std::optional<double> delta2)
{
    const auto sc = load(c);
    const auto proc = reference_process(sc);
    const double d2 = delta2 ? *delta2 : sc.delta2;
    const auto r = extremality::needle_controllability(sc.sys(), proc, *sc.target, sc.wset, d2, search_options(c));
    emit_json(c, {{"scenario", sc.name},
                  {"delta2", d2},
                  {"margin", io::number_or_null(r.margin)},
                  {"vacuous", r.vacuous},
                  {"certifies_normality", r.margin > 1e-3},
                  {"worst_xi", r.worst_xi ? io::vec_to_json(*r.worst_xi) : ojson(nullptr)},
                  {"candidates", r.candidates}});
    return 0;
}

int cmd_chatter(const Common& c, std::vector<double> gamma_in, std::size_t blocks)
{
    const auto sc = load(c);
    if (!sc.abundance.density)
        throw scenario::StageError("chatter", ErrorKind::Input,
                                   "scenario has no abundance density_check block naming base and companions");
    const auto& dc = *sc.abundance.density;
    const auto& sys = sc.sys();
    const std::size_t mult = std::max<std::size_t>(1, (sc.reference->grid.cells() + blocks - 1) / blocks);
    const auto grid = dynamics::Grid::uniform(sys.horizon(), blocks * mult);
    const auto base = io::control_from_json(dc.base, grid, sys.m(), "/abundance/density_check/base");
    std::vector<dynamics::ControlPath> comps;
    for (const auto& cj : dc.companions)
        comps.push_back(io::control_from_json(cj, grid, sys.m(), "/abundance/density_check/companions"));
    if (gamma_in.size() == 1 && comps.size() > 1)
        gamma_in.assign(comps.size(), gamma_in.front() / static_cast<double>(comps.size()));
    if (gamma_in.size() != comps.size())
        throw scenario::StageError("chatter", ErrorKind::Dimension, "--gamma needs one entry per companion");
    const Vec gamma = Eigen::Map<const Vec>(gamma_in.data(), static_cast<Eigen::Index>(gamma_in.size()));
    const auto chat = variations::chattering(base, comps, gamma, blocks);
    if (c.format == "csv")
    {
        emit(c, io::control_csv(chat));
        return 0;
    }
    const auto relaxed = variations::relaxed_integrate(sys, {base, comps, gamma}, sc.y0);
    const auto actual = dynamics::integrate(sys, chat, sc.y0);
    emit_json(c, {{"scenario", sc.name},
                  {"gamma", io::vec_to_json(gamma)},
                  {"K", blocks},
                  {"integral", io::vec_to_json(chat.integral())},
                  {"relaxed_endpoint", io::vec_to_json(relaxed.terminal())},
                  {"chattering_endpoint", io::vec_to_json(actual.terminal())},
                  {"endpoint_error", (relaxed.terminal() - actual.terminal()).norm()}});
    return 0;
}

int cmd_openmap(const Common& c)
{
    ojson inst = ojson::array();
    for (const auto& q : open_mapping::bundled_instances())
    {
        open_mapping::check_instance(q);
        const double damping = q.name == "identity-exact" ? 1.0 : 0.5;
        ojson row = {{"name", q.name}};
        try
        {
            const auto r = open_mapping::solve_fixed_point(q, 200, damping);
            row["converged"] = true;
            row["gamma"] = io::vec_to_json(r.gamma);
            row["residual"] = r.residual;
            row["iterations"] = r.iterations;
            row["flat_steps"] = r.flat_steps;
        }
        catch (const NonConvergenceError& e)
        {
            row["converged"] = false;
            row["residual"] = e.best_residual();
        }
        inst.push_back(row);
    }
    ojson sweep = ojson::array();
    bool all_ok = true;
    for (const auto& r : open_mapping::shifted_target_sweep())
    {
        sweep.push_back({{"direction", io::vec_to_json(r.direction)},
                         {"ok", r.ok},
                         {"residual", r.residual},
                         {"gamma_norm", r.gamma_norm}});
        all_ok = all_ok && r.ok;
    }
    emit_json(c, {{"instances", inst}, {"sweep", sweep}, {"sweep_all_ok", all_ok}});
    return 0;
}

const scenario::ImpulsiveData& impulsive_data(const scenario::Scenario& sc)
{
    if (!sc.impulsive)
        throw scenario::StageError("impulse", ErrorKind::Input, "scenario '" + sc.name + "' is not impulsive");
    return *sc.impulsive;
}

int cmd_impulse(const Common& c, const std::string& action)
{
    const auto sc = load(c);
    const auto& data = impulsive_data(sc);
    const auto& prob = data.problem;
    const auto emb = impulsive::embed(prob, data.original, data.kind);
    if (action == "embed")
    {
        if (c.format == "csv")
        {
            std::ostringstream os;
            os << std::setprecision(17) << "s,z0";
            for (int i = 0; i < prob.n; ++i)
                os << ",z" << (i + 1);
            os << ",nu\n";
            for (std::size_t k = 0; k < emb.states.size(); ++k)
            {
                os << emb.grid.node(k);
                for (Eigen::Index i = 0; i < emb.states[k].size(); ++i)
                    os << "," << emb.states[k](i);
                os << "\n";
            }
            emit(c, os.str());
            return 0;
        }
        emit_json(c, {{"scenario", sc.name},
                      {"case", data.kind == impulsive::Case::Convex ? "convex" : "nonconvex"},
                      {"copies", emb.copies.front().size()},
                      {"d", emb.d.front()},
                      {"S_hat", prob.s_hat},
                      {"normalization_defect", emb.normalization_defect()},
                      {"terminal", io::vec_to_json(emb.states.back())}});
        return 0;
    }
    if (action == "invert")
    {
        const auto re = impulsive::spacetime_integrate(prob, emb);
        const auto back = impulsive::invert_embedding(re);
        double u_err = 0.0;
        const std::size_t cells = std::min(back.u.values.size(), data.original.u.values.size());
        for (std::size_t k = 0; k < cells; ++k)
            u_err = std::max(u_err, (back.u.values[k] - data.original.u.values[k]).lpNorm<Eigen::Infinity>());
        emit_json(c, {{"scenario", sc.name},
                      {"t2", back.grid().end()},
                      {"x_terminal", io::vec_to_json(back.x.back())},
                      {"eta_terminal", back.eta.back()},
                      {"x_error", (back.x.back() - data.original.x.back()).norm()},
                      {"eta_error", std::abs(back.eta.back() - data.original.eta.back())},
                      {"u_max_error", u_err}});
        return 0;
    }
    const auto st = impulsive::structure_check(prob.u_samples, prob.tag);
    ojson out = {{"scenario", sc.name},
                 {"structure", {{"tag", impulsive::to_string(st.tag)}, {"passed", st.passed}, {"detail", st.detail}}}};
    const auto proc = reference_process(sc);
    const auto abn = extremality::abnormality_search(sc.sys(), proc, *sc.target, sc.wset, search_options(c));
    out["verdict"] = extremality::to_string(abn.verdict);
    const int nn = prob.n + 2;
    if (abn.witness && (*abn.witness_xi)(nn - 1) <= 0.0)
    {
        try
        {
            const auto nc = impulsive::embed(prob, data.original, impulsive::Case::NonConvex);
            const auto r =
                impulsive::gap_nc_residuals(prob, nc, abn.witness->covectors, (*abn.witness_xi)(nn - 1),
                                            sc.target->cone, impulsive::normalized_samples(prob.u_samples));
            out["gap_nc"] = {{"nontriviality", r.nontriviality},
                             {"adjoint_defect", r.adjoint_defect},
                             {"maximality", r.maximality},
                             {"cone_distance", r.cone_distance}};
        }
        catch (const Error& e)
        {
            out["gap_nc"] = {{"skipped", e.what()}};
        }
    }
    else
        out["gap_nc"] = nullptr;
    emit_json(c, out);
    return 0;
}

int cmd_scenario_run(const Common& c, const std::string& name)
{
    const auto outcome = scenario::run_scenario(scenario::read_spec(name), c.run_options());
    if (c.format == "csv")
        emit(c, io::process_csv(*outcome.process));
    else
        emit_json(c, outcome.report);
    return outcome.exit_code;
}

int cmd_scenario_list(const Common& c)
{
    if (c.format == "csv")
    {
        std::string s = "name\n";
        for (const auto& n : scenario::registry_names())
            s += n + "\n";
        emit(c, s);
        return 0;
    }
    ojson arr = ojson::array();
    for (const auto& n : scenario::registry_names())
    {
        const auto j = json::parse(scenario::registry_text(n));
        arr.push_back({{"name", n}, {"description", j.value("description", "")}});
    }
    emit_json(c, arr);
    return 0;
}

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("gapscope");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("GAPSCOPE_LOG"))
        spdlog::set_level(spdlog::level::from_str(env));
}

int report_error(const std::string& stage, const std::string& message, const std::string& pointer)
{
    ojson env = {{"error", {{"stage", stage}, {"message", message}, {"pointer", pointer}}}};
    std::cerr << env.dump(2) << std::endl;
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    CLI::App app{"gapscope: numerical diagnostics for infimum gaps in extended optimal control problems.\n"
                 "Environment: GAPSCOPE_LOG=trace|debug|info|warn|error|off sets the log level (default warn)."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(scenario::kVersion));

    Common c;
    std::string subcmd;

    auto* sim = app.add_subcommand("simulate", "integrate the reference control of a scenario");
    add_common(sim, c, true);

    double flow_from = 0.0;
    bool check_fd = false;
    double fd_eps = 1e-5;
    auto* flow = app.add_subcommand("flow", "variational flow M(S, s) along the reference process");
    add_common(flow, c, true);
    flow->add_option("--from", flow_from, "base time s (a grid node, default 0)");
    flow->add_flag("--check-fd", check_fd, "compare M(S,0) with finite-difference sensitivities");
    flow->add_option("--fd-eps", fd_eps, "finite-difference step (default 1e-5)");

    std::string cone_arg, contains_arg;
    double cone_tol = 1e-9;
    auto* cone = app.add_subcommand("cone", "polar cone and membership for a polyhedral cone");
    add_common(cone, c, false);
    cone->add_option("--cone", cone_arg, "cone JSON {dim, rays, lineality} or @file")->required();
    cone->add_option("--contains", contains_arg, "vector JSON to test for membership");
    cone->add_option("--membership-tol", cone_tol, "Euclidean membership tolerance (default 1e-9)");

    std::string k1_arg, k2_arg;
    auto* sep = app.add_subcommand("separate", "linear separation of two cones or of a scenario's cones");
    add_common(sep, c, false);
    sep->add_option("--k1", k1_arg, "first cone JSON or @file");
    sep->add_option("--k2", k2_arg, "second cone JSON or @file");

    auto* ext = app.add_subcommand("extremal", "abnormal-multiplier search and h-extremal classification");
    add_common(ext, c, true);

    std::optional<double> delta2;
    auto* ctl = app.add_subcommand("controllability", "needle-controllability margin near the final time");
    add_common(ctl, c, true);
    ctl->add_option("--delta2", delta2, "window length at the end of the horizon (default from the scenario)");

    std::vector<double> gamma{0.5};
    std::size_t blocks = 256;
    auto* chat = app.add_subcommand("chatter", "block chattering of the scenario's density-check controls");
    add_common(chat, c, true);
    chat->add_option("--gamma", gamma, "simplex point, one entry per companion (default 0.5)");
    chat->add_option("--K", blocks, "number of chattering blocks (default 256)");

    auto* om = app.add_subcommand("openmap-demo", "fixed-point solves on the bundled open-mapping instances");
    add_common(om, c, false);

    std::string impulse_action;
    auto* imp = app.add_subcommand("impulse", "space-time embedding tools for impulsive scenarios");
    add_common(imp, c, true);
    imp->add_option("action", impulse_action, "embed | invert | check")
        ->required()
        ->check(CLI::IsMember({"embed", "invert", "check"}));

    std::string scenario_action, scenario_name;
    auto* scn = app.add_subcommand("scenario", "run a scenario pipeline or list the bundled scenarios");
    add_common(scn, c, false);
    scn->add_option("action", scenario_action, "run | list")->required()->check(CLI::IsMember({"run", "list"}));
    scn->add_option("name", scenario_name, "bundled scenario name or path to a JSON spec");
    scn->add_flag("--timings", c.timings, "include per-stage runtimes in the report");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? 0 : 1;
    }

    std::string stage = "cli";
    try
    {
        const std::pair<CLI::App*, std::function<int()>> table[] = {
            {sim, [&] { return cmd_simulate(c); }},
            {flow, [&] { return cmd_flow(c, flow_from, check_fd, fd_eps); }},
            {cone, [&] { return cmd_cone(c, cone_arg, contains_arg, cone_tol); }},
            {sep, [&] { return cmd_separate(c, k1_arg, k2_arg); }},
            {ext, [&] { return cmd_extremal(c); }},
            {ctl, [&] { return cmd_controllability(c, delta2); }},
            {chat, [&] { return cmd_chatter(c, gamma, blocks); }},
            {om, [&] { return cmd_openmap(c); }},
            {imp, [&] { return cmd_impulse(c, impulse_action); }},
        };
        for (const auto& [cmd, run] : table)
        {
            if (*cmd)
            {
                stage = cmd->get_name();
                return run();
            }
        }
        if (*scn)
        {
            stage = "scenario";
            if (scenario_action == "list")
                return cmd_scenario_list(c);
            const std::string target = scenario_name.empty() ? c.scenario : scenario_name;
            if (target.empty())
                throw scenario::StageError("scenario", ErrorKind::Input, "scenario run needs a name or path");
            return cmd_scenario_run(c, target);
        }
    }
    catch (const scenario::StageError& e)
    {
        return report_error(e.stage(), e.what(), e.pointer());
    }
    catch (const SchemaError& e)
    {
        return report_error(stage, e.what(), e.pointer());
    }
    catch (const std::exception& e)
    {
        return report_error(stage, e.what(), "");
    }
    return 1;
}
