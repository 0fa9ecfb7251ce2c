#include <catch2/catch_amalgamated.hpp>

#include <thread>

#include "qbc/experiment.hpp"
#include "qbc/wire.hpp"
#include "oracles.hpp"

using namespace qbc;
using Catch::Approx;

TEST_CASE("seed derivation is stable and collision-averse") {
    REQUIRE(derive_seed(1, 0) != derive_seed(1, 1));
    REQUIRE(derive_seed(1, 0) != derive_seed(2, 0));
    REQUIRE(derive_seed(1, 0) == derive_seed(1, 0));
    // documented mixing: splitmix64 over master + (i+1) * golden
    REQUIRE(derive_seed(42, 7) == splitmix64(42 + 8 * 0x9E3779B97F4A7C15ULL));
}

TEST_CASE("experiment runner") {
    SECTION("identical configs give byte-identical rows") {
        mc::ExperimentConfig cfg;
        cfg.experiment = "usd-rate";
        cfg.trials = 20000;
        cfg.master_seed = 99;
        const auto a = mc::run_experiment(cfg);
        const auto b = mc::run_experiment(cfg);
        REQUIRE(a.csv_row == b.csv_row);
        REQUIRE(oracle::within_band(a.stats.successes, a.stats.units, 0.2));
    }

    SECTION("worker count never changes the aggregate") {
        for (const char* id : {"usd-rate", "ot-known-rate", "bb84-false-probe"}) {
            mc::ExperimentConfig cfg;
            cfg.experiment = id;
            cfg.trials = 4000;
            cfg.master_seed = 7;
            cfg.workers = 1;
            const auto one = mc::run_experiment(cfg);
            cfg.workers = 8;
            const auto eight = mc::run_experiment(cfg);
            REQUIRE(one.csv_row == eight.csv_row);
        }
    }

    SECTION("unknown experiment and bad parameters fail loudly") {
        mc::ExperimentConfig cfg;
        cfg.experiment = "no-such-thing";
        REQUIRE_THROWS_AS(mc::run_experiment(cfg), std::invalid_argument);
        cfg.experiment = "usd-rate";
        cfg.trials = 0;
        REQUIRE_THROWS_AS(mc::run_experiment(cfg), std::invalid_argument);
    }

    SECTION("golden row for a pinned config") {
        mc::ExperimentConfig cfg;
        cfg.experiment = "breidbart-rate";
        cfg.trials = 10000;
        cfg.master_seed = 123;
        const auto r = mc::run_experiment(cfg);
        REQUIRE(mc::kCsvHeader == "experiment,params,trials,units,successes,mean,stderr,predicted,z\n");
        // frozen once from a reference run; schema or stream changes must show up here
        REQUIRE(r.csv_row ==
                "breidbart-rate,,10000,10000,8495,0.8495,0.00357560833985,0.853553390593,-1.14647199012\n");
    }

    SECTION("summary carries timing, the CSV does not") {
        mc::ExperimentConfig cfg;
        cfg.experiment = "breidbart-rate";
        cfg.trials = 1000;
        const auto r = mc::run_experiment(cfg);
        REQUIRE(r.summary.contains("wall_seconds"));
        REQUIRE(r.csv_row.find("wall") == std::string::npos);
    }
}

TEST_CASE("z-score edge cases") {
    REQUIRE(mc::z_score(0.5, 0.5, 1000) == 0.0);
    REQUIRE(mc::z_score(1.0, 1.0, 1000) == 0.0);
    REQUIRE(std::isinf(mc::z_score(0.99, 1.0, 1000)));
    REQUIRE(mc::z_score(0.2, std::numeric_limits<double>::quiet_NaN(), 1000) == 0.0);
}

namespace {

struct ServedSession {
    Transcript transcript;
    std::string error;
};

// serve `count` sessions on an ephemeral port, one connection each
std::uint16_t start_server(const SessionConfig& cfg, int count, std::vector<ServedSession>& out,
                           std::thread& thread) {
    auto listener = std::make_shared<net::Socket>();
    std::uint16_t port = 0;
    *listener = net::listen_on("127.0.0.1", 0, &port);
    out.resize(static_cast<std::size_t>(count));
    thread = std::thread([listener, cfg, count, &out] {
        for (int s = 0; s < count; ++s) {
            try {
                net::Socket conn = net::accept_one(*listener);
                out[static_cast<std::size_t>(s)].transcript = net::bob_serve_session(conn.fd(), cfg);
            } catch (const std::exception& e) {
                out[static_cast<std::size_t>(s)].error = e.what();
            }
        }
    });
    return port;
}

}  // namespace

TEST_CASE("socket transport") {
    SECTION("loopback sessions reproduce the in-process transcript byte for byte") {
        for (Scheme scheme : {Scheme::b92bc, Scheme::bb84bc, Scheme::otbc}) {
            const SessionConfig cfg = make_session_config(scheme, 6, 4, 4, 0.8, 0.1, 0xAB5EED);
            const Transcript reference = run_honest_session(cfg, 1);

            std::vector<ServedSession> served;
            std::thread server;
            const std::uint16_t port = start_server(cfg, 1, served, server);
            net::Socket conn = net::connect_to("127.0.0.1", port);
            const Transcript alice = net::alice_run(conn.fd(), cfg, 1);
            server.join();

            REQUIRE(served[0].error.empty());
            REQUIRE(alice.canonical_text() == reference.canonical_text());
            REQUIRE(served[0].transcript.canonical_text() == reference.canonical_text());
            REQUIRE(alice.verdict->accepted);
        }
    }

    SECTION("concurrent sessions with distinct ids do not cross-talk") {
        const SessionConfig base = make_session_config(Scheme::b92bc, 6, 4, 4, 0.8, 0.1, 111);
        SessionConfig cfg_a = base, cfg_b = base;
        cfg_a.seed = 1001;
        cfg_b.seed = 2002;

        auto listener = std::make_shared<net::Socket>();
        std::uint16_t port = 0;
        *listener = net::listen_on("127.0.0.1", 0, &port);
        std::vector<Transcript> bob_transcripts(2);
        std::vector<std::string> bob_errors(2);
        std::thread server([&] {
            std::vector<std::shared_ptr<net::Socket>> conns;
            for (int s = 0; s < 2; ++s)
                conns.push_back(std::make_shared<net::Socket>(net::accept_one(*listener)));
            std::vector<std::thread> handlers;
            for (int s = 0; s < 2; ++s)
                handlers.emplace_back([&, s] {
                    try {
                        bob_transcripts[static_cast<std::size_t>(s)] =
                            net::bob_serve_session(conns[static_cast<std::size_t>(s)]->fd(), base);
                    } catch (const std::exception& e) {
                        bob_errors[static_cast<std::size_t>(s)] = e.what();
                    }
                });
            for (auto& h : handlers) h.join();
        });

        net::Socket c1 = net::connect_to("127.0.0.1", port);
        net::Socket c2 = net::connect_to("127.0.0.1", port);
        Transcript a1, a2;
        std::thread alice1([&] { a1 = net::alice_run(c1.fd(), cfg_a, 0); });
        std::thread alice2([&] { a2 = net::alice_run(c2.fd(), cfg_b, 1); });
        alice1.join();
        alice2.join();
        server.join();

        REQUIRE(bob_errors[0].empty());
        REQUIRE(bob_errors[1].empty());
        REQUIRE(a1.session != a2.session);
        REQUIRE(a1.verdict->accepted);
        REQUIRE(a2.verdict->accepted);
        REQUIRE(a1.verdict->bit == 0);
        REQUIRE(a2.verdict->bit == 1);
        // the served transcripts match the committer-side ones, paired by id
        for (const Transcript& bob : bob_transcripts) {
            const Transcript& expect = bob.session == a1.session ? a1 : a2;
            REQUIRE(bob.canonical_text() == expect.canonical_text());
        }
    }

    SECTION("truncated frames abort the session") {
        const SessionConfig cfg = make_session_config(Scheme::b92bc, 6, 4, 4, 0.8, 0.1, 5);
        std::vector<ServedSession> served;
        std::thread server;
        const std::uint16_t port = start_server(cfg, 1, served, server);
        {
            net::Socket conn = net::connect_to("127.0.0.1", port);
            const std::uint32_t len = htonl(500);  // promise 500 bytes, send 3
            net::write_all(conn.fd(), &len, 4);
            net::write_all(conn.fd(), "abc", 3);
        }  // close early
        server.join();
        REQUIRE_FALSE(served[0].error.empty());
    }

    SECTION("phase violations are protocol errors") {
        const SessionConfig cfg = make_session_config(Scheme::b92bc, 6, 4, 4, 0.8, 0.1, 6);
        std::vector<ServedSession> served;
        std::thread server;
        const std::uint16_t port = start_server(cfg, 1, served, server);
        {
            net::Socket conn = net::connect_to("127.0.0.1", port);
            // open before hello/prepare
            net::send_msg(conn.fd(), net::make_msg("s", "open", "open", ordered_json::object()));
        }
        server.join();
        REQUIRE_THAT(served[0].error, Catch::Matchers::ContainsSubstring("expected hello"));
    }

    SECTION("malformed frame bodies are rejected") {
        const SessionConfig cfg = make_session_config(Scheme::b92bc, 6, 4, 4, 0.8, 0.1, 7);
        std::vector<ServedSession> served;
        std::thread server;
        const std::uint16_t port = start_server(cfg, 1, served, server);
        {
            net::Socket conn = net::connect_to("127.0.0.1", port);
            const std::string garbage = "{not json";
            const std::uint32_t len = htonl(static_cast<std::uint32_t>(garbage.size()));
            net::write_all(conn.fd(), &len, 4);
            net::write_all(conn.fd(), garbage.data(), garbage.size());
        }
        server.join();
        REQUIRE_THAT(served[0].error, Catch::Matchers::ContainsSubstring("malformed"));
    }
}
