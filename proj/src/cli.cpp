#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "htnsat/cli.hpp"
#include "htnsat/ground_format.hpp"
#include "htnsat/hddl.hpp"
#include "htnsat/inference.hpp"
#include "htnsat/planner.hpp"

namespace htnsat {

namespace {

using Clock = std::chrono::steady_clock;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out << text;
}

/// A single .ground file, or an HDDL domain + problem pair.
Problem load_input(const std::string& domain, const std::string& problem) {
    if (problem.empty() || problem == "-") return read_ground(read_file(domain), domain);
    return hddl::load(read_file(domain), read_file(problem), domain, problem);
}

struct Options {
    std::string domain;
    std::string problem;
    std::string mode = "greedy";
    std::string amo = "pairwise";
    bool no_mutex = false;
    std::string mandpre = "on";
    double timeout = 600;
    std::uint64_t seed = 0;
    int max_rounds = 0;
    std::string plan_path;
    std::string stats_path;
    std::string dot_path;
    std::string cnf_path;
    bool dump_profiles = false;
    std::string validate_path;
};

PlannerConfig make_config(const Options& o) {
    PlannerConfig cfg;
    cfg.mode = o.mode == "bfs" ? Mode::Bfs : Mode::Greedy;
    cfg.amo = sat::AmoConfig::parse(o.amo);
    cfg.mutex = !o.no_mutex;
    cfg.mandpre_prune = o.mandpre == "on";
    cfg.timeout_seconds = o.timeout;
    cfg.seed = o.seed;
    cfg.max_rounds = o.max_rounds;
    return cfg;
}

int exit_code(PlanStatus s) {
    switch (s) {
        case PlanStatus::Solved: return kSolved;
        case PlanStatus::Unsolvable: return kUnsolvable;
        case PlanStatus::Timeout:
        case PlanStatus::RoundLimit: return kTimeout;
    }
    return kInternalError;
}

void add_planner_options(CLI::App& app, Options& o) {
    app.add_option("--mode", o.mode, "Search mode")->check(CLI::IsMember({"greedy", "bfs"}))->capture_default_str();
    app.add_option("--amo", o.amo, "At-most-one encoding")
        ->check(CLI::IsMember({"pairwise", "binary", "bimander-half", "bimander-sqrt"}))
        ->capture_default_str();
    app.add_flag("--no-mutex", o.no_mutex, "Disable mutex-group clauses");
    app.add_option("--mandpre-prune", o.mandpre, "Mandatory preconditions also constrain the solution query")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    app.add_option("--timeout", o.timeout, "Wall-clock limit in seconds")->capture_default_str();
    app.add_option("--seed", o.seed, "Solver seed (0 = index tie-breaking only)")->capture_default_str();
    app.add_option("--max-rounds", o.max_rounds, "Round bound, 0 = unbounded")->capture_default_str();
}

int solve_one(const Options& o) {
    const auto start = Clock::now();
    Problem p = load_input(o.domain, o.problem);
    const double ground_seconds = std::chrono::duration<double>(Clock::now() - start).count();

    if (!o.validate_path.empty()) {
        DecompositionTree dt = parse_plan(p, read_file(o.validate_path), o.validate_path);
        auto violations = verify(p, dt);
        if (violations.empty()) {
            std::cout << "plan valid\n";
            return kSolved;
        }
        for (const Violation& v : violations) std::cout << "violation [" << v.rule << "] " << v.message << '\n';
        return kUnsolvable;
    }

    PlannerConfig cfg = make_config(o);
    if (o.dump_profiles) std::cerr << dump_profiles(p, infer(p, cfg.mutex));
    if (!o.cnf_path.empty()) {
        cfg.cnf_sink = [&](const sat::SatSession& s) {
            std::ofstream out(o.cnf_path);
            s.write_dimacs(out);
        };
    }
    cfg.want_dot = !o.dot_path.empty();
    PlanResult r = plan(p, cfg);
    const double total = std::chrono::duration<double>(Clock::now() - start).count();

    std::optional<std::size_t> length;
    if (r.status == PlanStatus::Solved) {
        auto violations = verify(p, *r.tree);
        if (!violations.empty()) throw InternalError("emitted plan fails validation: " + violations.front().message);
        std::size_t n = 0;
        for (ActionId a : r.plan) n += !p.actions[a].is_guard;
        length = n;
        std::string text = write_plan(p, *r.tree);
        std::cout << text;
        if (!o.plan_path.empty()) write_file(o.plan_path, text);
    }
    std::cerr << "status " << to_string(r.status) << " rounds " << r.stats.rounds << " methods_developed "
              << r.stats.methods_developed << " time " << std::fixed << std::setprecision(3) << total << "s\n";
    if (!o.stats_path.empty()) write_file(o.stats_path, stats_json(r.stats, r.status, ground_seconds, total, length) + "\n");
    if (!o.dot_path.empty()) write_file(o.dot_path, r.dot);
    return exit_code(r.status);
}

struct BenchRow {
    std::string group;
    std::string instance;
    PlanStatus status = PlanStatus::Unsolvable;
    double seconds = 0;
    std::size_t length = 0;
    std::optional<std::size_t> c_ref;
    std::size_t methods = 0;
};

int bench(const std::string& manifest, const std::string& out_path, const Options& o) {
    if (!(o.timeout > 1)) throw UsageError("bench needs --timeout above 1 second");
    const std::filesystem::path base = std::filesystem::path(manifest).parent_path();
    std::istringstream in(read_file(manifest));
    std::vector<BenchRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok.size() < 4 || tok.size() > 5)
            throw ParseError(manifest, lineno, tok[0], "expected: GROUP INSTANCE DOMAIN PROBLEM|- [C_REF]");
        BenchRow row;
        row.group = tok[0];
        row.instance = tok[1];
        if (tok.size() == 5) row.c_ref = std::stoul(tok[4]);
        std::string domain = (base / tok[2]).string();
        std::string problem = tok[3] == "-" ? "" : (base / tok[3]).string();

        const auto start = Clock::now();
        try {
            Problem p = load_input(domain, problem);
            PlanResult r = plan(p, make_config(o));
            row.status = r.status;
            row.methods = r.stats.methods_developed;
            if (r.status == PlanStatus::Solved) {
                if (!verify(p, *r.tree).empty()) throw InternalError(row.instance + ": plan fails validation");
                for (ActionId a : r.plan) row.length += !p.actions[a].is_guard;
            }
        } catch (const ParseError& e) {
            std::cerr << e.what() << '\n';
            row.status = PlanStatus::Unsolvable;
        } catch (const hddl::GroundingError& e) {
            std::cerr << row.instance << ": " << e.what() << '\n';
            row.status = PlanStatus::Unsolvable;
        }
        row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        rows.push_back(row);
    }

    std::ostringstream csv;
    csv << "group,instance,status,time,plan_length,c_ref,ipc_score,quality_score,methods_developed\n";
    struct Sum {
        int count = 0;
        double ipc = 0, quality = 0;
    };
    std::map<std::string, Sum> groups;
    Sum total;
    for (const BenchRow& r : rows) {
        const bool solved = r.status == PlanStatus::Solved;
        const std::size_t c_ref = r.c_ref.value_or(r.length);
        const double ipc = ipc_score(r.seconds, o.timeout, solved);
        const double quality = solved && r.length >= c_ref ? quality_score(r.length, c_ref, true) : 0.0;
        csv << r.group << ',' << r.instance << ',' << to_string(r.status) << ',' << std::setprecision(6) << r.seconds
            << ',' << (solved ? std::to_string(r.length) : "") << ',' << (solved || r.c_ref ? std::to_string(c_ref) : "")
            << ',' << ipc << ',' << quality << ',' << r.methods << '\n';
        Sum& g = groups[r.group];
        ++g.count;
        g.ipc += ipc;
        g.quality += quality;
        ++total.count;
        total.ipc += ipc;
        total.quality += quality;
    }
    if (out_path.empty()) std::cout << csv.str();
    else write_file(out_path, csv.str());

    std::cout << "group,instances,ipc_sum,quality_sum,ipc_normalized,quality_normalized\n";
    for (const auto& [name, g] : groups)
        std::cout << name << ',' << g.count << ',' << g.ipc << ',' << g.quality << ',' << g.ipc / g.count << ','
                  << g.quality / g.count << '\n';
    std::cout << "total," << total.count << ',' << total.ipc << ',' << total.quality << ",,\n";
    return kSolved;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Totally-ordered HTN planner: greedy SAT search over path decomposition trees"};
    Options o;
    app.add_option("domain", o.domain, "HDDL domain file, or a .ground problem file");
    app.add_option("problem", o.problem, "HDDL problem file (omit for .ground input)");
    add_planner_options(app, o);
    app.add_option("--plan", o.plan_path, "Also write the plan to PATH");
    app.add_option("--stats", o.stats_path, "Write run statistics as JSON to PATH");
    app.add_option("--emit-dot", o.dot_path, "Write the final PDT in DOT format to PATH");
    app.add_option("--dump-cnf", o.cnf_path, "Write the clause store in DIMACS to PATH after each round");
    app.add_flag("--dump-profiles", o.dump_profiles, "Print inferred task profiles and mutex groups to stderr");
    app.add_option("--validate-only", o.validate_path, "Validate PLANFILE instead of planning");

    Options bo;
    std::string manifest, out_path;
    CLI::App* bench_cmd = app.add_subcommand("bench", "Run a manifest of instances and write a score CSV");
    bench_cmd->add_option("manifest", manifest, "Lines: GROUP INSTANCE DOMAIN PROBLEM|- [C_REF]")->required();
    bench_cmd->add_option("--out", out_path, "CSV output path (default: stdout)");
    add_planner_options(*bench_cmd, bo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    try {
        if (*bench_cmd) return bench(manifest, out_path, bo);
        if (o.domain.empty()) {
            std::cerr << "missing DOMAIN argument\n" << app.help();
            return kInputError;
        }
        return solve_one(o);
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const hddl::GroundingError& e) {
        std::cerr << "grounding error: " << e.what() << '\n';
        return kInputError;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kInputError;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

}  // namespace htnsat
