#include "mti/cli.hpp"

#include "mti/figures.hpp"
#include "mti/io.hpp"
#include "mti/posdef.hpp"
#include "mti/properties.hpp"
#include "mti/simulate.hpp"
#include "mti/solver.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <ostream>

namespace mti {

using nlohmann::json;

namespace {

json strategyJson(const Strategy& s) {
    return {{"times", s.grid.times()}, {"trades", matrixToJson(s.trades)}};
}

json solveJson(const SolveResult& r) {
    return {{"solver", r.method},     {"lambda", vectorToJson(r.lambda)}, {"cost", r.cost},
            {"unique", r.unique},     {"residual", r.residual},           {"strategy", strategyJson(r.strategy)}};
}

json shapeJson(const PropertyVerdict& v) {
    json j{{"verdict", std::string(toString(v.verdict))}, {"method", std::string(toString(v.method))}};
    if (v.witness)
        j["witness"] = {{"t", v.witness->t},
                        {"step", v.witness->step},
                        {"samples", v.witness->samples},
                        {"direction", vectorToJson(v.witness->direction)}};
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

json pdWitnessJson(const PdWitness& w) {
    return {{"grid", w.grid.times()},
            {"N", w.grid.size()},
            {"xi", matrixToJson(w.xi.trades)},
            {"quadratic_form", w.quadraticForm},
            {"gram_norm", w.gramNorm}};
}

void flatten(const json& j, const std::string& prefix, std::ostream& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        for (size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else if (j.is_string()) {
        out << prefix << "," << j.get<std::string>() << "\n";
    } else if (j.is_number_float()) {
        out << prefix << "," << formatDouble(j.get<double>()) << "\n";
    } else {
        out << prefix << "," << j.dump() << "\n";
    }
}

void emit(const json& j, const std::string& format, std::ostream& out) {
    if (format == "csv") {
        out << "key,value\n";
        flatten(j, "", out);
    } else {
        out << j.dump(2) << "\n";
    }
}

struct Options {
    std::string config;
    std::string out;
    std::string format = "json-like";
    std::string strategy;
    std::uint64_t seed = 0;
    bool seedGiven = false;
    Index paths = 0;
    Index levels = 6;
    double relTol = 0.0;
    double tMax = 20.0;
    Index samples = 400;
};

int cmdSolve(const Options& o, std::ostream& out) {
    ModelConfig cfg = loadConfig(o.config);
    AutoSolveResult r = solveAuto(cfg.kernel, cfg.grid, cfg.x0);
    json j = solveJson(r.primary);
    j["command"] = "solve";
    if (r.secondary)
        j["cross_check"] = {{"solver", r.secondary->method}, {"max_abs_diff", r.crossCheckDiff}};
    else
        j["cross_check"] = nullptr;
    if (!o.out.empty()) writeFile(o.out, strategyToCsv(r.primary.strategy));
    emit(j, o.format, out);
    return kExitOk;
}

int cmdCheck(const Options& o, std::ostream& out) {
    ModelConfig cfg = loadConfig(o.config);
    StructureReport st = checkStructure(cfg.kernel, defaultStructureTimes(cfg.kernel));
    PropertyReport pr = checkShapeProperties(cfg.kernel, o.tMax, o.samples, 16, o.seed);
    PosDefReport pd = classifyPD(cfg.kernel, ClassifyOptions{o.seed});
    json props{{"symmetric", pr.symmetric},
               {"commuting", pr.commuting},
               {"nonnegative", shapeJson(pr.nonnegative)},
               {"nonincreasing", shapeJson(pr.nonincreasing)},
               {"convex", shapeJson(pr.convex)},
               {"nonconstant_forms", shapeJson(pr.nonconstantForms)}};
    json posdef{{"verdict", std::string(toString(pd.verdict))},
                {"method", std::string(toString(pd.method))},
                {"min_eigenvalue", pd.minEig},
                {"note", pd.note}};
    posdef["witness"] = pd.witness ? pdWitnessJson(*pd.witness) : json(nullptr);
    json ev = json::array();
    for (const SpectralSample& s : pd.evidence)
        ev.push_back({{"N", s.n}, {"span", s.span}, {"min_eigenvalue", s.minEig}, {"gram_norm", s.gramNorm}});
    posdef["evidence"] = ev;
    json j{{"command", "check"},
           {"kernel", kernelToJson(cfg.kernel)},
           {"structure",
            {{"symmetric", st.symmetric},
             {"commuting", st.commuting},
             {"symmetric_method", st.symmetricAnalytic ? "analytic" : "sampled"},
             {"commuting_method", st.commutingAnalytic ? "analytic" : "sampled"}}},
           {"properties", props},
           {"posdef", posdef}};
    emit(j, o.format, out);
    return kExitOk;
}

int cmdGram(const Options& o, std::ostream& out) {
    ModelConfig cfg = loadConfig(o.config);
    GramMatrix g = assembleGram(cfg.kernel, cfg.grid);
    SymmetricEigen e = symmetricEigen(g.blocks, false);
    GridPDResult pd = checkGridPD(g);
    json j{{"command", "gram"},
           {"N", g.size()},
           {"dimension", g.dimension},
           {"gram_norm", g.infNorm()},
           {"eigenvalues", vectorToJson(e.values)},
           {"min_eigenvalue", pd.minEig},
           {"psd", pd.psd},
           {"strict", pd.strict}};
    emit(j, o.format, out);
    return kExitOk;
}

int cmdRefine(const Options& o, std::ostream& out) {
    ModelConfig cfg = loadConfig(o.config);
    if (cfg.grid.size() < 2) throw ConfigError("field 'grid': refine needs a grid with a positive horizon");
    RefineResult r = refine(cfg.kernel, cfg.grid.horizon(), cfg.x0, o.levels, o.relTol);
    json levels = json::array();
    for (const RefineLevel& l : r.levels) levels.push_back({{"N", l.n}, {"cost", l.cost}});
    json j{{"command", "refine"},
           {"horizon", cfg.grid.horizon()},
           {"levels", levels},
           {"monotone", r.monotone},
           {"converged", r.converged},
           {"finest", solveJson(r.finest)}};
    if (!o.out.empty()) writeFile(o.out, strategyToCsv(r.finest.strategy));
    emit(j, o.format, out);
    return kExitOk;
}

int cmdSimulate(const Options& o, std::ostream& out) {
    ModelConfig cfg = loadConfig(o.config);
    if (!cfg.simulation) throw ConfigError("field 'simulation': missing");
    const SimulationSpec& spec = *cfg.simulation;
    Strategy s;
    std::string source;
    if (!o.strategy.empty()) {
        s = loadStrategyCsv(o.strategy);
        if (s.dimension() != cfg.kernel.dimension())
            throw ConfigError("strategy CSV has " + std::to_string(s.dimension()) + " assets, kernel has " +
                              std::to_string(cfg.kernel.dimension()));
        source = o.strategy;
    } else {
        s = solveAuto(cfg.kernel, cfg.grid, cfg.x0).primary.strategy;
        source = "optimal";
    }
    MartingaleModel model(spec.s0, spec.covariance, s.grid.horizon());
    const Index paths = o.paths > 0 ? o.paths : spec.paths;
    const std::uint64_t seed = o.seedGiven ? o.seed : spec.seed;
    SimulationReport r = estimateExpectedCost(cfg.kernel, s.grid, s, cfg.x0, model, paths, seed);
    json j{{"command", "simulate"},   {"strategy", source},        {"mean_shortfall", r.meanShortfall},
           {"stderr", r.stdError},    {"n_paths", r.nPaths},       {"seed", r.seed},
           {"analytic_cost", r.analyticCost}};
    emit(j, o.format, out);
    return kExitOk;
}

int cmdFigures(const Options& o, std::ostream& out) {
    const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out);
    std::filesystem::create_directories(dir);

    std::vector<OscillationRow> rows = oscillationSweep();
    std::string sweep = "rho,T,max_abs_trade,ratio,certified\n";
    const OscillationRow* best = nullptr;
    for (const OscillationRow& r : rows) {
        sweep += formatDouble(r.rho) + "," + formatDouble(r.horizon) + "," + formatDouble(r.maxAbsTrade) + "," +
                 formatDouble(r.ratio) + "," + (r.certified ? "1" : "0") + "\n";
        if (r.certified && (!best || r.ratio > best->ratio)) best = &r;
    }
    writeFile((dir / "fig1_sweep.csv").string(), sweep);
    json fig1{{"configurations", rows.size()}};
    if (best) {
        SolveResult s = oscillationSolve(best->rho, best->horizon);
        writeFile((dir / "fig1_best_strategy.csv").string(), strategyToCsv(s.strategy));
        fig1["best"] = {{"rho", best->rho}, {"T", best->horizon}, {"ratio", best->ratio}};
    }

    SolveResult rt = solveKKT(roundTripKernel(), roundTripGrid(), roundTripPortfolio());
    writeFile((dir / "fig2_strategy.csv").string(), strategyToCsv(rt.strategy));
    Index signChanges = 0;
    for (Index k = 1; k < rt.strategy.size(); ++k)
        if (rt.strategy.trades(k, 1) * rt.strategy.trades(k - 1, 1) < 0) ++signChanges;
    json fig2{{"asset1_sum", rt.strategy.trades.col(0).sum()},
              {"asset2_sum", rt.strategy.trades.col(1).sum()},
              {"asset2_sign_changes", signChanges},
              {"cost", rt.cost}};
    emit({{"command", "figures"}, {"figure1", fig1}, {"figure2", fig2}}, o.format, out);
    return kExitOk;
}

}  // namespace

int runCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal liquidation under multivariate transient price impact", "mti"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::string> formats{"csv", "json-like"};

    auto common = [&](CLI::App* sub, bool config) {
        if (config) sub->add_option("--config", o.config, "Model configuration (JSON)")->required();
        sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember(formats));
    };
    CLI::App* solve = app.add_subcommand("solve", "Optimal strategy with solver cross-check");
    common(solve, true);
    solve->add_option("--out", o.out, "Strategy CSV output");

    CLI::App* check = app.add_subcommand("check", "Shape properties and positive definiteness");
    common(check, true);
    check->add_option("--tmax", o.tMax, "Sampling horizon for shape checks")->check(CLI::PositiveNumber);
    check->add_option("--samples", o.samples, "Sample count for shape checks")->check(CLI::Range(3, 1000000));
    check->add_option("--seed", o.seed, "Seed for randomized checks");

    CLI::App* gram = app.add_subcommand("gram", "Gram spectrum on the configured grid");
    common(gram, true);

    CLI::App* ref = app.add_subcommand("refine", "Dyadic grid refinement");
    common(ref, true);
    ref->add_option("--levels", o.levels, "Maximum refinement level")->check(CLI::Range(1, 14));
    ref->add_option("--rel-tol", o.relTol, "Stop when the relative cost drop falls below this")->check(CLI::NonNegativeNumber);
    ref->add_option("--out", o.out, "Finest strategy CSV output");

    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo expected shortfall");
    common(sim, true);
    sim->add_option("--paths", o.paths, "Number of paths")->check(CLI::PositiveNumber);
    CLI::Option* seedOpt = sim->add_option("--seed", o.seed, "Master seed");
    sim->add_option("--strategy", o.strategy, "Strategy CSV to evaluate instead of the optimum");

    CLI::App* fig = app.add_subcommand("figures", "Tables behind the oscillation and round-trip figures");
    common(fig, false);
    fig->add_option("--out", o.out, "Output directory");

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    o.seedGiven = seedOpt->count() > 0;

    try {
        if (solve->parsed()) return cmdSolve(o, out);
        if (check->parsed()) return cmdCheck(o, out);
        if (gram->parsed()) return cmdGram(o, out);
        if (ref->parsed()) return cmdRefine(o, out);
        if (sim->parsed()) return cmdSimulate(o, out);
        if (fig->parsed()) return cmdFigures(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "invalid model: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NotPositiveDefiniteError& e) {
        json j{{"error", e.what()},
               {"eigenvalue", e.eigenvalue()},
               {"direction", strategyJson(e.direction())}};
        err << j.dump(2) << "\n";
        return kExitNotPd;
    } catch (const PreconditionError& e) {
        err << "model rejected: " << e.what() << "\n";
        return kExitNotPd;
    } catch (const SolverDisagreementError& e) {
        json j{{"error", e.what()}, {"first", solveJson(e.first)}, {"second", solveJson(e.second)}};
        err << j.dump(2) << "\n";
        return kExitNumeric;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}

}  // namespace mti
