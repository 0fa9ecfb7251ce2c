// qbc — protocol runs, attacks, parameter sweeps, formula tables, Boolean
// function tools and the two-process transport, from one binary.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qbc/qbc.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;

struct GlobalOpts {
    std::uint64_t seed = 1;
    std::uint64_t trials = 100000;
    std::string out;
    std::string format = "csv";
};

std::uint64_t effective_seed(std::uint64_t flag_seed) {
    // QBC_SEED overrides the flag when present.
    if (const char* env = std::getenv("QBC_SEED")) return std::strtoull(env, nullptr, 0);
    return flag_seed;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << content)) {
        std::cerr << "error: cannot write " << path << "\n";
        std::exit(kExitIo);
    }
}

qbc::mc::Params parse_params(const std::vector<std::string>& kvs) {
    qbc::mc::Params p;
    for (const std::string& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--param expects key=value: " + kv);
        p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return p;
}

std::string stats_text(const qbc::mc::RunResult& r, const std::string& format) {
    if (format == "json") return r.summary.dump(2) + "\n";
    return qbc::mc::kCsvHeader + r.csv_row;
}

qbc::SessionConfig config_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config file: " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    qbc::SessionConfig cfg{
        qbc::scheme_from_name(j.at("scheme").get<std::string>()),
        j.at("n").get<int>(),
        j.at("m").get<int>(),
        j.at("n0").get<int>(),
        j.value("cosA", 0.8),
        j.value("delta", 0.1),
        j.contains("F_hex") ? qbc::BoolFn::from_hex(j.at("n").get<int>(), j.at("F_hex").get<std::string>())
                            : qbc::make_ci_function(j.at("n").get<int>(), j.at("n0").get<int>(),
                                                    qbc::CiKind::linear_mask),
        j.value("seed", std::uint64_t{1}),
    };
    qbc::validate_config(cfg);
    return cfg;
}

void print_formula_list() {
    std::cout << "formulas:\n"
              << "  usd            --cosA             identification rate 1 - cosA\n"
              << "  binding-m      --alpha --cosA     minimum string count, both escape exponents\n"
              << "  probe-failure  --m --cos2A        steering-attack failure probability\n"
              << "  concealing     --n --n0 --pA      exact / normal-approx / tail-readings table\n"
              << "  cheat-prob     --n --n0 --pA --m  receiver cheat bound\n"
              << "  min-n          --beta --m --pA --gap   smallest string length meeting the bound\n"
              << "  blob-distance  --n --m --cosA     per-qubit trace distance of one-position lies\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum bit-commitment laboratory"};
    app.require_subcommand(1);
    GlobalOpts g;
    app.add_option("--seed", g.seed, "master seed (env QBC_SEED overrides)");
    app.add_option("--trials", g.trials, "Monte Carlo trial count");
    app.add_option("--out", g.out, "output file (default: stdout)");
    app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    // ---- run-protocol ----
    auto* run = app.add_subcommand("run-protocol", "run one honest session and print its transcript");
    std::string run_scheme = "b92bc";
    int run_n = 6, run_m = 5, run_b = 1;
    int run_n0 = -1;
    double run_cosA = 0.8, run_delta = 0.1;
    run->add_option("--scheme", run_scheme)->check(CLI::IsMember({"b92bc", "bb84bc", "otbc"}));
    run->add_option("--n", run_n);
    run->add_option("--m", run_m);
    run->add_option("--n0", run_n0, "defaults to n - 2");
    run->add_option("--cosA", run_cosA);
    run->add_option("--delta", run_delta);
    run->add_option("--b", run_b)->check(CLI::Range(0, 1));

    // ---- attack ----
    auto* attack = app.add_subcommand("attack", "run a named attack strategy");
    std::string attack_strategy;
    std::vector<std::string> attack_params;
    int attack_workers = 1;
    bool attack_list = false;
    attack->add_option("--strategy", attack_strategy);
    attack->add_option("--param", attack_params, "key=value, repeatable");
    attack->add_option("--workers", attack_workers);
    attack->add_flag("--list", attack_list, "list registered strategies and defaults");

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "grid a strategy over one or two parameters");
    std::string sweep_experiment;
    std::vector<std::string> sweep_params;
    std::vector<std::string> sweep_grids;
    int sweep_workers = 1;
    sweep->add_option("--experiment", sweep_experiment)->required();
    sweep->add_option("--param", sweep_params, "fixed key=value, repeatable");
    sweep->add_option("--grid", sweep_grids, "key=start:stop:step (1 or 2 axes)")->expected(1, 2);
    sweep->add_option("--workers", sweep_workers);

    // ---- formulas ----
    auto* formulas = app.add_subcommand("formulas", "closed-form security quantities");
    std::string formula_id;
    double f_cosA = 0.8, f_cos2A = 0.75, f_pA = 0.2, f_alpha = 10, f_beta = 10;
    int f_n = 40, f_n0 = 30, f_m = 8, f_gap = 2;
    std::string formula_table;
    formulas->add_option("id", formula_id, "formula id (omit to list)");
    formulas->add_option("--cosA", f_cosA);
    formulas->add_option("--cos2A", f_cos2A);
    formulas->add_option("--pA", f_pA);
    formulas->add_option("--alpha", f_alpha);
    formulas->add_option("--beta", f_beta);
    formulas->add_option("--n", f_n);
    formulas->add_option("--n0", f_n0);
    formulas->add_option("--m", f_m);
    formulas->add_option("--gap", f_gap);
    formulas->add_option("--table", formula_table,
                         "n=start:stop:step sweep; emits CSV rows value vs exact oracle");

    // ---- ci ----
    auto* ci = app.add_subcommand("ci", "Boolean function toolkit");
    ci->require_subcommand(1);
    std::string ci_hex;
    int ci_n = 4, ci_n0 = 1, ci_b = 0, ci_count = 8;
    bool ci_balanced = false;
    std::string ci_kind = "linear";
    auto* ci_spectrum = ci->add_subcommand("spectrum", "signed spectrum of a truth table");
    ci_spectrum->add_option("--hex", ci_hex)->required();
    ci_spectrum->add_option("--n", ci_n)->required();
    auto* ci_order_cmd = ci->add_subcommand("order", "correlation-immunity order");
    ci_order_cmd->add_option("--hex", ci_hex)->required();
    ci_order_cmd->add_option("--n", ci_n)->required();
    auto* ci_search = ci->add_subcommand("search", "exhaustive search, n <= 4");
    ci_search->add_option("--n", ci_n)->required();
    ci_search->add_option("--n0", ci_n0)->required();
    ci_search->add_flag("--balanced", ci_balanced);
    auto* ci_make = ci->add_subcommand("make", "construct a function of given order");
    ci_make->add_option("--n", ci_n)->required();
    ci_make->add_option("--n0", ci_n0)->required();
    ci_make->add_option("--kind", ci_kind)->check(CLI::IsMember({"linear", "recursive"}));
    auto* ci_sample = ci->add_subcommand("sample", "draw uniform preimages");
    ci_sample->add_option("--hex", ci_hex)->required();
    ci_sample->add_option("--n", ci_n)->required();
    ci_sample->add_option("--b", ci_b)->check(CLI::Range(0, 1));
    ci_sample->add_option("--count", ci_count);

    // ---- serve / connect ----
    auto* serve = app.add_subcommand("serve", "receiver endpoint of the socket transport");
    std::string serve_addr = "127.0.0.1:7788", serve_config;
    int serve_sessions = 1;
    serve->add_option("--addr", serve_addr);
    serve->add_option("--config", serve_config)->required();
    serve->add_option("--sessions", serve_sessions, "number of sessions to serve before exiting");
    auto* connect = app.add_subcommand("connect", "committer endpoint of the socket transport");
    std::string connect_addr = "127.0.0.1:7788", connect_config;
    int connect_b = 1;
    bool connect_debug = false;
    connect->add_option("--addr", connect_addr);
    connect->add_option("--config", connect_config)->required();
    connect->add_option("--b", connect_b)->check(CLI::Range(0, 1));
    connect->add_flag("--debug", connect_debug, "serialize amplitudes in the prepare record");

    // global flags are accepted on either side of the subcommand name
    for (CLI::App* sub : app.get_subcommands(nullptr)) {
        sub->fallthrough();
        for (CLI::App* nested : sub->get_subcommands(nullptr)) nested->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitUsage : 0;
    }

    try {
        const std::uint64_t seed = effective_seed(g.seed);

        if (*run) {
            if (run_n0 < 0) run_n0 = run_n - 2;
            qbc::SessionConfig cfg = qbc::make_session_config(
                qbc::scheme_from_name(run_scheme), run_n, run_m, run_n0, run_cosA, run_delta, seed);
            const qbc::Transcript t = qbc::run_honest_session(cfg, run_b);
            std::ostringstream os;
            os << t.canonical_text() << "\n";
            os << (t.verdict->accepted ? "Accept(" + std::to_string(t.verdict->bit) + ")" : "Reject") << "\n";
            write_output(g.out, os.str());
            return 0;
        }

        if (*attack) {
            if (attack_list) {
                std::ostringstream os;
                for (const auto& [id, def] : qbc::mc::experiment_registry()) {
                    os << id << ": " << def.description;
                    if (!def.defaults.empty()) os << " [" << qbc::mc::params_string(def.defaults) << "]";
                    os << "\n";
                }
                write_output(g.out, os.str());
                return 0;
            }
            if (attack_strategy.empty()) {
                std::cerr << "error: --strategy required (or --list)\n";
                return kExitUsage;
            }
            qbc::mc::ExperimentConfig cfg;
            cfg.experiment = attack_strategy;
            cfg.params = parse_params(attack_params);
            cfg.trials = g.trials;
            cfg.master_seed = seed;
            cfg.workers = attack_workers;
            const auto r = qbc::mc::run_experiment(cfg);
            write_output(g.out, stats_text(r, g.format));
            return 0;
        }

        if (*sweep) {
            struct Axis {
                std::string key;
                double start, stop, step;
            };
            std::vector<Axis> axes;
            for (const std::string& axis_spec : sweep_grids) {
                const auto eq = axis_spec.find('=');
                if (eq == std::string::npos) throw CLI::ValidationError("--grid expects key=a:b:c");
                Axis ax;
                ax.key = axis_spec.substr(0, eq);
                if (std::sscanf(axis_spec.c_str() + eq + 1, "%lf:%lf:%lf", &ax.start, &ax.stop, &ax.step) != 3 ||
                    ax.step <= 0)
                    throw CLI::ValidationError("--grid expects key=start:stop:step with step > 0");
                axes.push_back(ax);
            }
            if (axes.empty()) throw CLI::ValidationError("sweep needs at least one --grid axis");
            std::string csv = qbc::mc::kCsvHeader;
            std::vector<double> a_values, b_values{0.0};
            for (double v = axes[0].start; v <= axes[0].stop + 1e-12; v += axes[0].step) a_values.push_back(v);
            if (axes.size() > 1) {
                b_values.clear();
                for (double v = axes[1].start; v <= axes[1].stop + 1e-12; v += axes[1].step) b_values.push_back(v);
            }
            for (double av : a_values)
                for (double bv : b_values) {
                    qbc::mc::ExperimentConfig cfg;
                    cfg.experiment = sweep_experiment;
                    cfg.params = parse_params(sweep_params);
                    cfg.params[axes[0].key] = av;
                    if (axes.size() > 1) cfg.params[axes[1].key] = bv;
                    cfg.trials = g.trials;
                    cfg.master_seed = seed;
                    cfg.workers = sweep_workers;
                    csv += qbc::mc::run_experiment(cfg).csv_row;
                }
            write_output(g.out, csv);
            return 0;
        }

        if (*formulas) {
            namespace an = qbc::analysis;
            std::ostringstream os;
            os.precision(12);
            if (formula_id.empty() && formula_table.empty()) {
                print_formula_list();
                return 0;
            }
            if (!formula_table.empty()) {
                // sweep n at the given n0/n shape; the exact tail is the oracle
                int n_start = 0, n_stop = 0, n_step = 0;
                if (std::sscanf(formula_table.c_str(), "n=%d:%d:%d", &n_start, &n_stop, &n_step) != 3 ||
                    n_step <= 0)
                    throw CLI::ValidationError("--table expects n=start:stop:step");
                const double shape = static_cast<double>(f_n0) / f_n;
                os << "formula,params,value,oracle,abs_diff\n";
                for (int n = n_start; n <= n_stop; n += n_step) {
                    const int n0 = std::max(0, std::min(n - 1, static_cast<int>(std::llround(shape * n))));
                    const double exact = an::concealing_exact(n, n0, f_pA);
                    char params[96];
                    std::snprintf(params, sizeof params, "n=%d;n0=%d;pA=%g", n, n0, f_pA);
                    auto row = [&os, &params, exact](const char* id, double value) {
                        os << id << "," << params << "," << value << "," << exact << ","
                           << std::abs(value - exact) << "\n";
                    };
                    row("concealing-dml", an::concealing_dml(n, n0, f_pA));
                    if (an::dml_params(n, n0, f_pA).lambda2 > 0.0) {
                        const an::TailReadings tails = an::concealing_asymptotic(n, n0, f_pA);
                        row("tail-as-printed", tails.as_printed);
                        row("tail-complement", tails.complement);
                    }
                }
                write_output(g.out, os.str());
                return 0;
            }
            if (formula_id == "usd") {
                os << an::p_usd(f_cosA) << "\n";
            } else if (formula_id == "binding-m") {
                const auto bm = an::binding_min_m(f_alpha, f_cosA);
                os << "m_sin2=" << bm.m_sin2 << " m_cos2=" << bm.m_cos2 << "\n";
            } else if (formula_id == "probe-failure") {
                const double cosA = std::sqrt(f_cos2A);
                os << an::probe_failure_prob(f_m, cosA) << "\n";
            } else if (formula_id == "concealing") {
                const double exact = an::concealing_exact(f_n, f_n0, f_pA);
                const double dml = an::concealing_dml(f_n, f_n0, f_pA);
                os << "exact=" << exact << " dml=" << dml << " |diff|=" << std::abs(exact - dml) << "\n";
                const auto d = an::dml_params(f_n, f_n0, f_pA);
                if (d.lambda2 > 0.0) {
                    const auto tails = an::concealing_asymptotic(f_n, f_n0, f_pA);
                    const bool printed_closer =
                        std::abs(tails.as_printed - exact) < std::abs(tails.complement - exact);
                    os << "tail_as_printed=" << tails.as_printed
                       << " tail_complement=" << tails.complement
                       << " closer_to_exact=" << (printed_closer ? "as_printed" : "complement") << "\n";
                } else {
                    os << "tail readings need lambda2 > 0 (n0 > n*pA)\n";
                }
            } else if (formula_id == "cheat-prob") {
                os << an::bob_cheat_prob(f_n, f_n0, f_pA, f_m) << "\n";
            } else if (formula_id == "min-n") {
                const auto n = an::min_n_for_beta(f_beta, f_m, f_pA, f_gap);
                if (n) os << *n << "\n";
                else os << "unattainable\n";
            } else if (formula_id == "blob-distance") {
                const qbc::StatePair pair = qbc::pair_from_overlap(f_cosA);
                std::vector<int> pos(static_cast<std::size_t>(f_m), 0);
                std::vector<std::uint8_t> dir(static_cast<std::size_t>(f_m), 0);
                os << an::blob_trace_distance(pair, f_n, f_m, pos, dir) << "\n";
            } else {
                std::cerr << "unknown formula id: " << formula_id << "\n";
                print_formula_list();
                return kExitUsage;
            }
            write_output(g.out, os.str());
            return 0;
        }

        if (*ci) {
            std::ostringstream os;
            if (*ci_spectrum) {
                const qbc::BoolFn f = qbc::BoolFn::from_hex(ci_n, ci_hex);
                const auto& w = f.walsh().w;
                os << "mask,weight,coefficient\n";
                for (std::uint32_t u = 0; u < w.size(); ++u)
                    os << u << "," << std::popcount(u) << "," << w[u] << "\n";
            } else if (*ci_order_cmd) {
                os << qbc::BoolFn::from_hex(ci_n, ci_hex).ci_order() << "\n";
            } else if (*ci_search) {
                const auto found = qbc::search_ci(ci_n, ci_n0, ci_balanced);
                os << "count=" << found.size() << "\n";
                for (const auto& f : found) os << f.to_hex() << " ci=" << f.ci_order() << "\n";
            } else if (*ci_make) {
                const qbc::BoolFn f = qbc::make_ci_function(
                    ci_n, ci_n0, ci_kind == "linear" ? qbc::CiKind::linear_mask : qbc::CiKind::recursive);
                os << f.to_hex() << " ci=" << f.ci_order() << " balanced=" << (f.balanced() ? 1 : 0) << "\n";
            } else if (*ci_sample) {
                const qbc::BoolFn f = qbc::BoolFn::from_hex(ci_n, ci_hex);
                qbc::Rng rng(seed);
                for (int i = 0; i < ci_count; ++i)
                    os << qbc::bits_to_hex(qbc::sample_preimage(f, ci_b, rng)) << "\n";
            }
            write_output(g.out, os.str());
            return 0;
        }

        if (*serve) {
            const qbc::SessionConfig cfg = config_from_file(serve_config);
            auto [host, port] = qbc::net::parse_addr(serve_addr);
            std::uint16_t bound = 0;
            qbc::net::Socket listener = qbc::net::listen_on(host, port, &bound);
            std::cerr << "listening on " << host << ":" << bound << "\n";
            std::ostringstream os;
            for (int s = 0; s < serve_sessions; ++s) {
                qbc::net::Socket conn = qbc::net::accept_one(listener);
                const qbc::Transcript t = qbc::net::bob_serve_session(conn.fd(), cfg);
                os << t.canonical_text() << "\n";
            }
            write_output(g.out, os.str());
            return 0;
        }

        if (*connect) {
            const qbc::SessionConfig cfg = config_from_file(connect_config);
            auto [host, port] = qbc::net::parse_addr(connect_addr);
            qbc::net::Socket conn = qbc::net::connect_to(host, port);
            const qbc::Transcript t = qbc::net::alice_run(conn.fd(), cfg, connect_b, connect_debug);
            std::ostringstream os;
            os << t.canonical_text() << "\n";
            os << (t.verdict->accepted ? "Accept(" + std::to_string(t.verdict->bit) + ")" : "Reject") << "\n";
            write_output(g.out, os.str());
            return 0;
        }
    } catch (const qbc::net::WireError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
