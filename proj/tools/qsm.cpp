// qsm: command-line front end. JSON report on stdout, summary on stderr.
#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qsm/corpus.hpp"
#include "qsm/report.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { ok = 0, validation = 2, verification = 3, usage = 64 };

struct Options {
    bool quiet = false;
    std::string state, candidate, dump, name, out;
    std::string mode = "noncatalytic";
    double delta = 1e-6, epsilon = 0.1;
    bool verify = false, qubit_optimal = false;
    long long kmax = 64, lmax = 64;
    int heuristic = 0, d = 2;
    std::uint64_t seed = 7;
};

struct Run {
    nlohmann::json report;
    int code = ok;
};

nlohmann::json state_inputs(const qsm::TripartiteState& s, const std::string& path) {
    return {{"path", path}, {"name", s.name}, {"dims", {{"R", s.dR()}, {"A", s.dA()}, {"B", s.dB()}}}};
}

void say(const Options& o, const std::string& msg) {
    if (!o.quiet) std::cerr << msg << '\n';
}

Run cmd_ki(const Options& o) {
    auto s = qsm::load_state(o.state);
    auto d = qsm::ki_decompose(s);
    say(o, "J = " + std::to_string(d.J()) + ", refinement index " + std::to_string(d.r));
    return {{{"inputs", state_inputs(s, o.state)}, {"results", qsm::ki_json(d)}}};
}

Run cmd_merge(const Options& o) {
    auto s = qsm::load_state(o.state);
    Run run;
    nlohmann::json res;
    qsm::MergeProtocol m;
    if (o.qubit_optimal) {
        auto q = qsm::qubit_optimal_merge(qsm::max_entangled_counterpart(s));
        res["qubit_optimal"] = {{"cost_bits", q.cost_bits}, {"mixture_weights", q.mixture.p}};
        m = q.protocol;
        if (o.verify) {
            auto r = qsm::verify_merge(qsm::max_entangled_counterpart(s), m);
            res["verification"] = qsm::verification_json(r);
            if (!r.pass) run.code = verification;
        }
        say(o, "qubit-optimal cost " + qsm::corpus::fmt(q.cost_bits) + " ebits");
    } else {
        auto d = qsm::ki_decompose(s);
        auto cost = qsm::achievable_cost(d, qsm::parse_mode(o.mode), o.delta);
        res["cost"] = qsm::cost_json(cost);
        say(o, o.mode + " cost " + qsm::corpus::fmt(cost.cost_bits) + " ebits (K=" + std::to_string(cost.K) +
                   ", L=" + std::to_string(cost.L) + ")");
        if (o.verify || !o.dump.empty()) m = qsm::build_merge_protocol(s, d, cost);
        if (o.verify) {
            auto r = qsm::verify_merge(s, m);
            res["verification"] = qsm::verification_json(r);
            say(o, std::string("verification ") + (r.pass ? "passed" : "FAILED") + ", min fidelity " +
                       qsm::corpus::fmt(r.min_fidelity));
            if (!r.pass) run.code = verification;
        }
    }
    if (!o.dump.empty()) {
        std::ofstream f(o.dump);
        if (!f) throw qsm::ValidationError("cannot write " + o.dump);
        f << qsm::protocol_json(m.protocol).dump(1) << '\n';
        res["protocol_file"] = o.dump;
    }
    run.report = {{"inputs", state_inputs(s, o.state)}, {"results", res}};
    return run;
}

Run cmd_split(const Options& o) {
    auto s = qsm::load_state(o.state);
    Run run;
    auto c = qsm::split_cost(s);
    nlohmann::json res{{"cost", qsm::split_json(c)}};
    say(o, "split cost " + qsm::corpus::fmt(c.cost_bits) + " ebits, rank " + std::to_string(c.rank));
    if (o.verify) {
        auto p = qsm::build_split_protocol(s);
        auto r = qsm::verify_split(s, p);
        const bool mono = qsm::split_rank_monotone(s, p);
        res["verification"] = qsm::verification_json(r);
        res["rank_monotone"] = mono;
        if (!r.pass || !mono) run.code = verification;
    }
    run.report = {{"inputs", state_inputs(s, o.state)}, {"results", res}};
    return run;
}

Run cmd_bounds(const Options& o) {
    auto s = qsm::load_state(o.state);
    auto c = qsm::compare_bounds(s, o.kmax, o.lmax);
    say(o, "converse " + qsm::corpus::fmt(c.simple_catalytic) + " (catalytic), H_max(A|B) <= " + qsm::corpus::fmt(c.h_max));
    if (!c.applicable) say(o, "note: bounds computed on the maximally entangled counterpart");
    return {{{"inputs", state_inputs(s, o.state)}, {"results", qsm::converse_json(c)}}};
}

Run cmd_approx(const Options& o) {
    auto s = qsm::load_state(o.state);
    const auto mode = qsm::parse_mode(o.mode);
    Run run;
    nlohmann::json res;
    if (!o.candidate.empty()) {
        auto c = qsm::verify_approximate_merge(s, qsm::load_state(o.candidate), o.epsilon, mode, o.delta);
        res["certificate"] = qsm::smoothing_json(c);
        say(o, std::string("candidate ") + (c.pass ? "certified" : "FAILED") + ", cost " + qsm::corpus::fmt(c.cost.cost_bits));
        if (!c.pass) run.code = verification;
    }
    if (o.heuristic > 0) {
        auto h = qsm::approx_heuristic(s, o.epsilon, mode, o.heuristic, o.seed, o.delta);
        res["heuristic"] = {{"best", qsm::smoothing_json(h.best)},
                            {"candidates_tried", h.candidates_tried},
                            {"note", h.note}};
        say(o, "heuristic best cost " + qsm::corpus::fmt(h.best.cost.cost_bits) + " (" + h.note + ")");
    }
    if (o.candidate.empty() && o.heuristic <= 0) throw qsm::ValidationError("approx needs --candidate or --heuristic");
    run.report = {{"inputs", state_inputs(s, o.state)}, {"results", res}};
    return run;
}

Run cmd_catalog(const Options& o) {
    auto s = qsm::catalog(o.name, {{"d", o.d}});
    if (!o.out.empty()) {
        qsm::save_state(s, o.out);
        say(o, "wrote " + o.out);
        return {{{"inputs", {{"name", o.name}, {"d", o.d}}}, {"results", {{"path", o.out}}}}};
    }
    return {{{"inputs", {{"name", o.name}, {"d", o.d}}}, {"results", qsm::to_json(s)}}};
}

Run cmd_verify_corpus(const Options& o) {
    Run run;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : qsm::run_acceptance(o.seed)) {
        checks.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        say(o, std::to_string(c.id) + (c.pass ? " PASS " : " FAIL ") + c.name);
        if (!c.pass) run.code = verification;
    }
    run.report = {{"inputs", {{"seed", o.seed}}}, {"results", checks}};
    return run;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"One-shot exact state merging and splitting toolkit"};
    app.set_version_flag("--version", kVersion);
    app.add_flag("-q,--quiet", o.quiet, "Suppress the stderr summary");
    app.require_subcommand(1);

    auto* ki = app.add_subcommand("ki", "Koashi-Imoto decomposition of a state file");
    ki->add_option("state", o.state, "State file")->required();

    auto* merge = app.add_subcommand("merge", "Achievable merging cost and protocol");
    merge->add_option("state", o.state, "State file")->required();
    merge->add_option("--mode", o.mode, "catalytic | noncatalytic")
        ->check(CLI::IsMember({"catalytic", "noncatalytic"}));
    merge->add_option("--delta", o.delta, "Catalytic rational-approximation slack")->check(CLI::NonNegativeNumber);
    merge->add_flag("--verify", o.verify, "Simulate the protocol branch by branch");
    merge->add_option("--dump-protocol", o.dump, "Write the protocol operators as JSON");
    merge->add_flag("--qubit-optimal", o.qubit_optimal, "Optimal non-catalytic merge for three qubits");

    auto* split = app.add_subcommand("split", "Splitting cost and protocol");
    split->add_option("state", o.state, "State file")->required();
    split->add_flag("--verify", o.verify, "Simulate the protocol branch by branch");

    auto* bounds = app.add_subcommand("bounds", "Converse bounds and conditional max-entropy");
    bounds->add_option("state", o.state, "State file")->required();
    bounds->add_option("--kmax", o.kmax, "Largest K searched")->check(CLI::PositiveNumber);
    bounds->add_option("--lmax", o.lmax, "Largest L searched")->check(CLI::PositiveNumber);

    auto* approx = app.add_subcommand("approx", "Approximate merging via a nearby exact state");
    approx->add_option("state", o.state, "State file")->required();
    approx->add_option("--epsilon", o.epsilon, "Error tolerance")->check(CLI::NonNegativeNumber);
    approx->add_option("--candidate", o.candidate, "Candidate state file");
    approx->add_option("--heuristic", o.heuristic, "Number of random candidates")->check(CLI::NonNegativeNumber);
    approx->add_option("--mode", o.mode, "catalytic | noncatalytic")
        ->check(CLI::IsMember({"catalytic", "noncatalytic"}));
    approx->add_option("--delta", o.delta, "Catalytic rational-approximation slack")->check(CLI::NonNegativeNumber);
    approx->add_option("--seed", o.seed, "Heuristic seed");

    auto* catalog = app.add_subcommand("catalog", "Emit a built-in example state");
    catalog->add_option("name", o.name, "State name")->required()->check(CLI::IsMember(qsm::catalog_names()));
    catalog->add_option("--d", o.d, "Dimension for ghz")->check(CLI::Range(2, 64));
    catalog->add_option("-o,--output", o.out, "Write the state file here");

    auto* corpus = app.add_subcommand("verify-corpus", "Run the golden and property checks");
    corpus->add_option("--seed", o.seed, "Corpus seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Run run;
    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "ki") run = cmd_ki(o);
        else if (command == "merge") run = cmd_merge(o);
        else if (command == "split") run = cmd_split(o);
        else if (command == "bounds") run = cmd_bounds(o);
        else if (command == "approx") run = cmd_approx(o);
        else if (command == "catalog") run = cmd_catalog(o);
        else run = cmd_verify_corpus(o);
    } catch (const qsm::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    } catch (const qsm::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return verification;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json report{{"command", command}, {"tool_version", kVersion}, {"seed", o.seed}, {"wall_time_s", wall}};
    report.update(run.report);
    std::cout << report.dump(2) << '\n';
    return run.code;
}
