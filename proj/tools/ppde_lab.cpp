// Command-line front end: config-driven experiments over the tree
// laboratory, emitting CSV value tables and JSON reports. Exit code 0
// only when every assertion in the selected report passes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ppde/decomp.hpp"
#include "ppde/nlexp.hpp"
#include "ppde/parallel.hpp"
#include "ppde/pathspace.hpp"
#include "ppde/registry.hpp"
#include "ppde/regularize.hpp"
#include "ppde/snell.hpp"
#include "ppde/solver.hpp"
#include "ppde/viscosity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppde;

namespace {

std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    int threads = default_threads();
};

json load_config(const Options& opt) {
    std::ifstream in(opt.config_path);
    if (!in) {
        throw std::invalid_argument("cannot open config: " + opt.config_path);
    }
    json cfg = json::parse(in);
    if (opt.seed) {
        for (const char* block : {"terminal", "obstacle"}) {
            if (cfg.contains(block)) {
                cfg[block]["params"]["seed"] = static_cast<double>(*opt.seed);
            }
        }
    }
    return cfg;
}

PathTree tree_of(const json& cfg) {
    return PathTree::from_json(cfg.at("tree"));
}

Generator generator_of(const json& cfg) {
    const json& g = cfg.at("generator");
    return make_generator(g.at("name").get<std::string>(), g.value("params", json::object()));
}

TerminalCondition terminal_of(const json& cfg, const PathTree& tree) {
    const json& t = cfg.at("terminal");
    return make_terminal(t.at("name").get<std::string>(), t.value("params", json::object()),
                         tree);
}

TreeProcess obstacle_of(const json& cfg, const PathTree& tree) {
    const json& o = cfg.at("obstacle");
    return make_obstacle(o.at("name").get<std::string>(), o.value("params", json::object()),
                         tree);
}

DriftBound bound_of(const json& cfg) {
    return DriftBound{cfg.value("drift_bound", 1.0)};
}

double scale_of(const TreeProcess& x) { return x.sup_norm(); }

double tolerance_of(const Options& opt, const json& cfg, const PathTree& tree,
                    DriftBound bound, double scale) {
    if (opt.tol) return *opt.tol;
    if (cfg.contains("tol")) return cfg.at("tol").get<double>();
    return default_tolerance(tree, bound, scale);
}

JetSamplingSpec sampling_of(const json& cfg) {
    JetSamplingSpec spec;
    if (!cfg.contains("check")) return spec;
    const json& c = cfg.at("check");
    spec.beta_points = c.value("beta_points", spec.beta_points);
    spec.beta_halfwidth = c.value("beta_halfwidth", spec.beta_halfwidth);
    if (c.contains("hitting")) {
        spec.hitting.clear();
        for (const auto& h : c.at("hitting")) {
            spec.hitting.push_back({h.at(0).get<double>(), h.at(1).get<double>()});
        }
    }
    return spec;
}

std::ofstream open_artifact(const Options& opt, const std::string& name) {
    fs::create_directories(opt.out_dir);
    std::ofstream out(fs::path(opt.out_dir) / name);
    if (!out) {
        throw std::runtime_error("cannot write artifact: " + name);
    }
    return out;
}

void write_node_table(std::ofstream& out, const PathTree& tree,
                      const std::vector<std::pair<std::string, const TreeProcess*>>& cols) {
    out << "node,level,time";
    for (const auto& [name, _] : cols) out << "," << name;
    out << "\n";
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        out << tree.format_point(n) << "," << n.level << "," << fmt12(tree.time_of(n));
        for (const auto& [_, p] : cols) out << "," << fmt12((*p)[i]);
        out << "\n";
    }
}

void write_json(std::ofstream& out, const json& j) { out << j.dump(2) << "\n"; }

json check_report_json(const CheckReport& report, const PathTree& tree) {
    json violations = json::array();
    for (const auto& v : report.violations) {
        violations.push_back({{"node", tree.format_point(v.node)},
                              {"beta", v.beta},
                              {"margin", v.margin},
                              {"horizon", v.horizon}});
    }
    return {{"passed", report.passed},
            {"tol", report.tol},
            {"max_margin", report.max_margin},
            {"checks", report.checks},
            {"violations", violations}};
}

json comparison_report_json(const ComparisonReport& report, const PathTree& tree) {
    auto list = [&](const std::vector<OrderingViolation>& vs) {
        json arr = json::array();
        for (const auto& v : vs) {
            arr.push_back({{"node", tree.format_point(v.node)}, {"excess", v.excess}});
        }
        return arr;
    };
    return {{"passed", report.passed},
            {"terminal_ordered", report.terminal_ordered},
            {"tol", report.tol},
            {"max_excess", report.max_excess},
            {"violations", list(report.violations)},
            {"terminal_violations", list(report.terminal_violations)}};
}

// Oracle process with the fixture modifiers used by check/compare configs.
TreeProcess modified_oracle(const json& block, const TreeProcess& oracle) {
    const PathTree& tree = oracle.tree();
    double shift = block.value("shift", 0.0);        // subtracts shift*(T - t)
    double time_slack = block.value("time_slack", 0.0);  // adds time_slack*t
    double offset = block.value("offset", 0.0);
    TreeProcess out(tree);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        out[i] = oracle[i] - shift * (tree.horizon() - tree.time_of(n)) +
                 time_slack * tree.time_of(n) + offset;
    }
    return out;
}

int run_solve(const Options& opt) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    Generator gen = generator_of(cfg);
    TreeProcess u = ppde_solve(gen, terminal_of(cfg, tree), tree);
    auto out = open_artifact(opt, "solution.csv");
    write_node_table(out, tree, {{"u", &u}});
    std::cout << "u(root) = " << fmt12(u.root()) << "\n";
    return 0;
}

int run_expect(const Options& opt) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    DriftBound bound = bound_of(cfg);
    TreeProcess x = obstacle_of(cfg, tree);
    StoppingRegion leaves = StoppingRegion::leaves(tree);
    TreeProcess upper = conditional_sup(x, leaves, bound);
    TreeProcess lower = conditional_inf(x, leaves, bound);
    DriftControl control = worst_drift(x, leaves, bound);
    auto table = open_artifact(opt, "expectation.csv");
    write_node_table(table, tree, {{"payoff", &x}, {"upper", &upper}, {"lower", &lower}});
    auto drift = open_artifact(opt, "drift.json");
    write_json(drift, control.to_json());
    std::cout << "upper(root) = " << fmt12(upper.root()) << "\n"
              << "lower(root) = " << fmt12(lower.root()) << "\n";
    return 0;
}

int run_snell(const Options& opt) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    DriftBound bound = bound_of(cfg);
    TreeProcess x = obstacle_of(cfg, tree);
    SnellResult result = snell_envelope(x, StoppingRegion::leaves(tree), bound);
    auto table = open_artifact(opt, "envelope.csv");
    write_node_table(table, tree, {{"obstacle", &x}, {"envelope", &result.envelope}});
    auto stops = open_artifact(opt, "stopping.csv");
    stops << "node,level,time,stop\n";
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        stops << tree.format_point(n) << "," << n.level << ","
              << fmt12(tree.time_of(n)) << ","
              << (result.optimal_region.marked(n) ? 1 : 0) << "\n";
    }
    std::cout << "Y(root) = " << fmt12(result.value) << "\n";
    return 0;
}

int run_decompose(const Options& opt) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    DriftBound bound = bound_of(cfg);
    TreeProcess x = obstacle_of(cfg, tree);
    SnellResult snell = snell_envelope(x, StoppingRegion::leaves(tree), bound);
    DriftControl mu = envelope_worst_drift(snell.envelope, bound);
    ReflectionReport report = backward_reflection(x, snell, mu);

    auto table = open_artifact(opt, "decomposition.csv");
    write_node_table(table, tree,
                     {{"envelope", &snell.envelope},
                      {"martingale", &report.decomposition.martingale},
                      {"compensator", &report.decomposition.compensator}});
    auto paths = open_artifact(opt, "reflection.csv");
    paths << "leaf,step,kappa_bar,compensator_gap\n";
    double a_total = 0.0;
    for (std::uint32_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        const SkorokhodPair& pair = report.reversed_pairs[leaf];
        int stop = static_cast<int>(pair.kappa.size()) - 1;
        NodeId end{stop, leaf >> (tree.depth() - stop)};
        a_total = report.decomposition.compensator.at(end);
        for (int j = 0; j <= stop; ++j) {
            NodeId n{j, leaf >> (tree.depth() - j)};
            double gap = a_total - report.decomposition.compensator.at(n);
            paths << leaf << "," << j << ","
                  << fmt12(pair.kappa[static_cast<std::size_t>(stop - j)]) << ","
                  << fmt12(gap) << "\n";
        }
    }
    auto rep = open_artifact(opt, "identity.json");
    bool exact = report.max_deviation == 0.0;
    write_json(rep, json{{"max_deviation", report.max_deviation}, {"exact", exact}});
    std::cout << "reflection identity max deviation = "
              << fmt12(report.max_deviation) << "\n";
    return exact ? 0 : 1;
}

int run_regularize(const Options& opt, double weight, const std::string& mode) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    TreeProcess x = obstacle_of(cfg, tree);
    ConvolutionResult result =
        mode == "inf" ? inf_convolution(x, weight) : sup_convolution(x, weight);
    auto table = open_artifact(opt, "regularized.csv");
    write_node_table(table, tree,
                     {{"original", &x}, {"regularized", &result.regularized}});
    std::cout << "sup-norm bound M = " << fmt12(result.bound) << "\n";
    return 0;
}

int run_check(const Options& opt, const std::string& role,
              const std::string& generator_override) {
    json cfg = load_config(opt);
    if (!generator_override.empty()) {
        cfg["generator"] = {{"name", generator_override}, {"params", json::object()}};
    }
    PathTree tree = tree_of(cfg);
    Generator gen = generator_of(cfg);
    TreeProcess oracle = ppde_solve(gen, terminal_of(cfg, tree), tree);
    TreeProcess u = modified_oracle(cfg.value("process", json::object()), oracle);
    double tol = tolerance_of(opt, cfg, tree, gen.bound, scale_of(u));
    JetSamplingSpec spec = sampling_of(cfg);
    CheckReport report = role == "super"
                             ? check_supersolution(u, gen, spec, tol, opt.threads)
                             : check_subsolution(u, gen, spec, tol, opt.threads);
    auto rep = open_artifact(opt, "check.json");
    write_json(rep, check_report_json(report, tree));
    std::cout << (report.passed ? "PASS" : "FAIL") << ": " << report.violations.size()
              << " violation(s) over " << report.checks
              << " sampled jets, max margin " << fmt12(report.max_margin)
              << " (tol " << fmt12(report.tol) << ")\n";
    return report.passed ? 0 : 1;
}

int run_compare(const Options& opt) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    Generator gen = generator_of(cfg);
    TreeProcess oracle = ppde_solve(gen, terminal_of(cfg, tree), tree);
    json block = cfg.value("compare", json::object());
    TreeProcess u = modified_oracle(block.value("lower", json::object({{"shift", 0.1}})),
                                    oracle);
    TreeProcess v = modified_oracle(block.value("upper", json::object({{"shift", -0.1}})),
                                    oracle);
    double tol = tolerance_of(opt, cfg, tree, gen.bound, scale_of(oracle));
    JetSamplingSpec spec = sampling_of(cfg);
    CheckReport sub = check_subsolution(u, gen, spec, tol, opt.threads);
    CheckReport super = check_supersolution(v, gen, spec, tol, opt.threads);
    ComparisonReport comparison = comparison_check(u, v, tol);
    auto rep = open_artifact(opt, "comparison.json");
    write_json(rep, json{{"subsolution", check_report_json(sub, tree)},
                         {"supersolution", check_report_json(super, tree)},
                         {"comparison", comparison_report_json(comparison, tree)}});
    bool ok = sub.passed && super.passed && comparison.passed;
    std::cout << (ok ? "PASS" : "FAIL") << ": max excess "
              << fmt12(comparison.max_excess) << " (tol " << fmt12(tol) << ")\n";
    return ok ? 0 : 1;
}

int run_perron(const Options& opt) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    Generator gen = generator_of(cfg);
    TerminalCondition xi = terminal_of(cfg, tree);
    TreeProcess oracle = ppde_solve(gen, xi, tree);
    double tol = tolerance_of(opt, cfg, tree, gen.bound,
                              scale_of(oracle));
    FamilySpec family_spec;
    if (cfg.contains("family_spec")) {
        const json& f = cfg.at("family_spec");
        for (const auto& s : f.value("shifts", json::array())) {
            family_spec.shifts.push_back(s.get<double>());
        }
        for (const auto& e : f.value("etas", json::array())) {
            family_spec.etas.push_back({e.at("alpha").get<double>(),
                                        e.at("beta").get<double>(),
                                        {e.value("time_steps", 2.0),
                                         e.value("space_steps", 1.5)}});
        }
    }
    JetSamplingSpec spec = sampling_of(cfg);
    SubsolutionFamily family = build_subsolution_family(gen, xi, tree, family_spec,
                                                        spec, tol, opt.threads);
    if (family.members.empty()) {
        std::cout << "FAIL: empty family (" << family.dropped.size()
                  << " dropped)\n";
        return 1;
    }
    PerronResult perron = perron_construct(gen, family);
    CheckReport self = check_subsolution(perron.value, gen, spec, tol, opt.threads);
    double gap = oracle.root() - perron.value.root();

    auto table = open_artifact(opt, "perron.csv");
    table << "node,level,time,value,member,provenance\n";
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        NodeId n = tree.node_at(i);
        table << tree.format_point(n) << "," << n.level << ","
              << fmt12(tree.time_of(n)) << "," << fmt12(perron.value[i]) << ","
              << perron.argmax[i] << ","
              << family.members[static_cast<std::size_t>(perron.argmax[i])].provenance
              << "\n";
    }
    json members = json::array();
    for (const auto& m : family.members) members.push_back(m.provenance);
    auto rep = open_artifact(opt, "perron.json");
    bool ok = self.passed && gap >= 0.0;
    write_json(rep, json{{"passed", ok},
                         {"root_gap", gap},
                         {"members", members},
                         {"dropped", family.dropped},
                         {"self_check", check_report_json(self, tree)}});
    std::cout << (ok ? "PASS" : "FAIL") << ": root gap to the oracle "
              << fmt12(gap) << " over " << family.members.size() << " member(s)\n";
    return ok ? 0 : 1;
}

int run_maxprinciple(const Options& opt) {
    json cfg = load_config(opt);
    PathTree tree = tree_of(cfg);
    DriftBound bound = bound_of(cfg);
    Generator extremal = make_generator("pucci_plus", {{"L", bound.L}});
    TreeProcess u = ppde_solve(extremal, terminal_of(cfg, tree), tree);
    double tol = tolerance_of(opt, cfg, tree, bound, scale_of(u));
    json block = cfg.value("maxprinciple", json::object());
    MaxPrincipleReport report = pucci_max_principle(
        u, bound, block.value("n", 64.0), block.value("m", 32.0), sampling_of(cfg),
        tol, opt.threads);
    auto rep = open_artifact(opt, "maxprinciple.json");
    write_json(rep, json{{"passed", report.passed},
                         {"terminal_ok", report.terminal_ok},
                         {"dominated", report.dominated},
                         {"max_over_comparator", report.max_over_comparator},
                         {"nonpositive", report.nonpositive},
                         {"max_value", report.max_value},
                         {"subsolution", check_report_json(report.subsolution, tree)}});
    std::cout << (report.passed ? "PASS" : "FAIL") << ": max value "
              << fmt12(report.max_value) << " (tol " << fmt12(tol) << ")\n";
    return report.passed ? 0 : 1;
}

int run_registry() {
    auto print = [](const char* title, const std::vector<RegistryEntry>& entries) {
        std::cout << title << "\n";
        for (const auto& e : entries) {
            std::cout << "  " << e.name << " " << e.params << "  -- " << e.notes
                      << "\n";
        }
    };
    print("generators:", generator_registry());
    print("terminals:", terminal_registry());
    print("obstacles:", obstacle_registry());
    return 0;
}

}  // namespace

int run_app(int argc, char** argv) {
    CLI::App app{"path-dependent PDE laboratory on binary scenario trees"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--config", opt.config_path, "experiment config (JSON)");
    app.add_option("--out", opt.out_dir, "artifact output directory");
    double tol_flag = 0.0;
    auto* tol_opt = app.add_option("--tol", tol_flag, "tolerance override");
    std::uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "seed override");
    app.add_option("--threads", opt.threads, "worker threads");

    auto* solve = app.add_subcommand("solve", "backward-induction solution");
    auto* perron = app.add_subcommand("perron", "subsolution-supremum construction");
    auto* compare = app.add_subcommand("compare", "sandwich comparison harness");
    auto* maxprinciple =
        app.add_subcommand("maxprinciple", "extremal-operator maximum principle");
    auto* snell = app.add_subcommand("snell", "optimal stopping envelope");
    auto* decompose =
        app.add_subcommand("decompose", "envelope decomposition and reflection");
    auto* regularize = app.add_subcommand("regularize", "convolution regularization");
    double weight = 4.0;
    std::string mode = "sup";
    regularize->add_option("--n", weight, "penalty weight");
    regularize->add_option("--mode", mode, "sup or inf")
        ->check(CLI::IsMember({"sup", "inf"}));
    auto* check = app.add_subcommand("check", "viscosity property check");
    std::string role = "sub";
    std::string generator_override;
    check->add_option("--role", role, "sub or super")
        ->check(CLI::IsMember({"sub", "super"}));
    check->add_option("--generator", generator_override,
                      "registry generator overriding the config");
    auto* registry = app.add_subcommand("registry", "list named fixtures");
    auto* expect = app.add_subcommand("expect", "nonlinear expectations of a payoff");

    CLI11_PARSE(app, argc, argv);
    if (*tol_opt) opt.tol = tol_flag;
    if (*seed_opt) opt.seed = seed_flag;

    try {
        if (*registry) return run_registry();
        if (opt.config_path.empty()) {
            std::cerr << "error: --config is required for this subcommand\n";
            return 2;
        }
        if (*solve) return run_solve(opt);
        if (*expect) return run_expect(opt);
        if (*snell) return run_snell(opt);
        if (*decompose) return run_decompose(opt);
        if (*regularize) return run_regularize(opt, weight, mode);
        if (*check) return run_check(opt, role, generator_override);
        if (*compare) return run_compare(opt);
        if (*perron) return run_perron(opt);
        if (*maxprinciple) return run_maxprinciple(opt);
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 2;
    }
}
