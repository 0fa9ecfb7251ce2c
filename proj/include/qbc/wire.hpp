#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qbc/protocol.hpp"

namespace qbc::net {

using qbc::ordered_json;

struct WireError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// RAII socket handle.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            close_fd();
            fd_ = other.fd_;
            other.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close_fd(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

private:
    void close_fd() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }
    int fd_ = -1;
};

inline void write_all(int fd, const void* data, std::size_t len) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        const ssize_t n = ::send(fd, p, len, 0);
        if (n <= 0) throw WireError("send failed");
        p += n;
        len -= static_cast<std::size_t>(n);
    }
}

inline bool read_all(int fd, void* data, std::size_t len) {
    char* p = static_cast<char*>(data);
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, p + got, len - got, 0);
        if (n == 0) {
            if (got == 0) return false;  // clean EOF on a frame boundary
            throw WireError("truncated frame");
        }
        if (n < 0) throw WireError("recv failed");
        got += static_cast<std::size_t>(n);
    }
    return true;
}

// Frame: 4-byte big-endian body length, then a UTF-8 JSON body with
// fields {session, phase, kind, payload}.
inline void send_msg(int fd, const ordered_json& msg) {
    const std::string body = msg.dump();
    const std::uint32_t len = htonl(static_cast<std::uint32_t>(body.size()));
    write_all(fd, &len, 4);
    write_all(fd, body.data(), body.size());
}

inline ordered_json recv_msg(int fd) {
    std::uint32_t len_be = 0;
    if (!read_all(fd, &len_be, 4)) throw WireError("connection closed");
    const std::uint32_t len = ntohl(len_be);
    if (len > (1u << 24)) throw WireError("oversized frame");
    std::string body(len, '\0');
    if (!read_all(fd, body.data(), len) && len > 0) throw WireError("truncated frame");
    ordered_json msg = ordered_json::parse(body, nullptr, false);
    if (msg.is_discarded()) throw WireError("malformed frame body");
    for (const char* field : {"session", "phase", "kind"})
        if (!msg.contains(field) || !msg[field].is_string())
            throw WireError(std::string("frame missing field: ") + field);
    if (!msg.contains("payload")) throw WireError("frame missing field: payload");
    return msg;
}

inline ordered_json make_msg(const std::string& session, const std::string& phase,
                             const std::string& kind, ordered_json payload) {
    ordered_json m;
    m["session"] = session;
    m["phase"] = phase;
    m["kind"] = kind;
    m["payload"] = std::move(payload);
    return m;
}

inline std::pair<std::string, std::uint16_t> parse_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("address must be host:port");
    const std::string host = addr.substr(0, colon);
    const int port = std::stoi(addr.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
    return {host, static_cast<std::uint16_t>(port)};
}

inline Socket listen_on(const std::string& host, std::uint16_t port, std::uint16_t* bound_port = nullptr) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw WireError("socket() failed");
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) throw WireError("bad listen address");
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) throw WireError("bind failed");
    if (::listen(s.fd(), 16) != 0) throw WireError("listen failed");
    if (bound_port) {
        sockaddr_in actual{};
        socklen_t len = sizeof actual;
        ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&actual), &len);
        *bound_port = ntohs(actual.sin_port);
    }
    return s;
}

inline Socket accept_one(const Socket& listener) {
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd < 0) throw WireError("accept failed");
    return Socket(fd);
}

inline Socket connect_to(const std::string& host, std::uint16_t port) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw WireError("socket() failed");
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) throw WireError("bad connect address");
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) throw WireError("connect failed");
    return s;
}

// ---------------------------------------------------------------------------
// Session over the wire.
//
// The bob-side process hosts the simulator kernel: quantum registers live
// there and the committer drives their preparation with a "prepare"
// message. In normal mode the prepare payload carries the kernel record
// (key material consumed by the kernel constructor, not by the verifier
// logic); amplitudes are serialized only in debug mode. This is an
// honest-but-limited fidelity boundary: a modified receiver binary could
// read the kernel record, so the transport preserves statistics for
// honest strategy code rather than enforcing cryptographic secrecy.
// ---------------------------------------------------------------------------

inline std::uint64_t config_digest(const SessionConfig& cfg) {
    Bits blob;
    auto push32 = [&blob](std::uint32_t v) {
        for (int k = 0; k < 32; ++k) blob.push_back(static_cast<std::uint8_t>((v >> k) & 1));
    };
    push32(static_cast<std::uint32_t>(cfg.scheme));
    push32(static_cast<std::uint32_t>(cfg.n));
    push32(static_cast<std::uint32_t>(cfg.m));
    push32(static_cast<std::uint32_t>(cfg.n0));
    push32(static_cast<std::uint32_t>(cfg.cos_a * 1e9));
    push32(static_cast<std::uint32_t>(cfg.delta * 1e9));
    for (std::uint8_t v : cfg.f.table()) blob.push_back(v);
    return fnv1a(blob);
}

// Debug-mode only: amplitudes never cross the wire in normal runs.
inline ordered_json blob_amplitudes_json(const Blob& blob) {
    ordered_json arr = ordered_json::array();
    for (const auto& reg : blob.slots) {
        const PureState& s = std::get<PureState>(reg);
        arr.push_back(ordered_json::array(
            {s.a[0].real(), s.a[0].imag(), s.a[1].real(), s.a[1].imag()}));
    }
    return arr;
}

// The committer's half of a session. Returns the transcript (descriptor,
// open, verdict) -- identical to the in-process run for the same config.
inline Transcript alice_run(int fd, const SessionConfig& cfg, int b, bool debug_amplitudes = false) {
    validate_config(cfg);
    Rng rng(derive_seed(cfg.seed, kAliceStream));
    const std::string session = session_id_for(cfg.seed);
    Transcript t;
    t.session = session;
    t.scheme = scheme_name(cfg.scheme);

    ordered_json hello_payload;
    hello_payload["scheme"] = scheme_name(cfg.scheme);
    hello_payload["config_digest"] = hex_u64(config_digest(cfg));
    // the seed is announced so the receiver can serve many concurrent
    // sessions off one out-of-band config; it is simulation state, not a
    // secret, and the digest still pins every protocol parameter
    hello_payload["seed"] = cfg.seed;
    send_msg(fd, make_msg(session, "commit", "hello", std::move(hello_payload)));

    ordered_json descriptor, kernel;
    OpenMsg open;
    if (cfg.scheme == Scheme::b92bc) {
        auto [alice, blob] = b92_commit(b, cfg, rng);
        descriptor = blob_descriptor(blob.meta);
        kernel["keys"] = ordered_json::array();
        for (const Bits& s : alice.keys) kernel["keys"].push_back(bits_to_hex(s));
        if (debug_amplitudes) kernel["amplitudes"] = blob_amplitudes_json(blob);
        open = b92_open(alice);
    } else if (cfg.scheme == Scheme::bb84bc) {
        auto [alice, blob] = bb84_commit(b, cfg, rng);
        descriptor = blob_descriptor(blob.meta);
        kernel["keys"] = ordered_json::array();
        kernel["bases"] = ordered_json::array();
        for (const Bits& s : alice.key.a_strings) kernel["keys"].push_back(bits_to_hex(s));
        for (const Bits& s : alice.key.basis_strings) kernel["bases"].push_back(bits_to_hex(s));
        if (debug_amplitudes) kernel["amplitudes"] = blob_amplitudes_json(blob);
        open = bb84_open(alice);
    } else {
        // storage-free scheme: strings go through the transfer encoder
        AliceOtbc alice{cfg, b, {}};
        for (int i = 0; i < cfg.m; ++i) alice.keys.push_back(sample_preimage(cfg.f, b, rng));
        descriptor["encoder"] = "ot";
        descriptor["m"] = cfg.m;
        descriptor["n"] = cfg.n;
        descriptor["cosA"] = cfg.cos_a;
        descriptor["key_hash"] = hex_u64(fnv1a_strings(alice.keys));
        descriptor["basis_hash"] = hex_u64(0);
        kernel["keys"] = ordered_json::array();
        for (const Bits& s : alice.keys) kernel["keys"].push_back(bits_to_hex(s));
        open = otbc_open(alice);
    }
    kernel["debug"] = debug_amplitudes;

    ordered_json prepare_payload;
    prepare_payload["descriptor"] = descriptor;
    prepare_payload["kernel"] = kernel;
    send_msg(fd, make_msg(session, "commit", "prepare", std::move(prepare_payload)));
    t.add("commit", "prepare", descriptor);

    const ordered_json ack = recv_msg(fd);
    if (ack["kind"] != "committed") throw WireError("expected committed ack, got " + ack["kind"].dump());

    const ordered_json open_payload = strings_payload(open.claimed_bit, open.strings);
    send_msg(fd, make_msg(session, "open", "open", open_payload));
    t.add("open", "open", open_payload);

    const ordered_json verdict_msg = recv_msg(fd);
    if (verdict_msg["kind"] != "verdict") throw WireError("expected verdict, got " + verdict_msg["kind"].dump());
    t.add("open", "verdict", verdict_msg["payload"]);
    Verdict v;
    v.accepted = verdict_msg["payload"]["accepted"].get<bool>();
    v.bit = verdict_msg["payload"]["bit"].get<int>();
    v.reason = verdict_msg["payload"]["reason"].get<std::string>();
    for (const auto& ok : verdict_msg["payload"]["per_string"]) v.per_string.push_back(ok.get<bool>());
    t.verdict = v;
    return t;
}

// Kernel reconstruction of the committed registers from a prepare record.
inline Blob kernel_build_blob(const SessionConfig& cfg, const ordered_json& kernel) {
    std::vector<Bits> keys;
    for (const auto& h : kernel.at("keys")) keys.push_back(hex_to_bits(h.get<std::string>(), cfg.n));
    if (cfg.scheme == Scheme::b92bc) return blob2_encode_with(keys, cfg.pair());
    if (cfg.scheme == Scheme::bb84bc) {
        CommitKey key;
        key.a_strings = std::move(keys);
        for (const auto& h : kernel.at("bases")) key.basis_strings.push_back(hex_to_bits(h.get<std::string>(), cfg.n));
        return blob4_encode_with(key);
    }
    throw WireError("kernel_build_blob: scheme has no quantum storage");
}

// The receiver's half of one session on an accepted connection. The
// committer's hello may name a session seed; every other parameter must
// match the out-of-band config (digest check).
inline Transcript bob_serve_session(int fd, const SessionConfig& base_cfg) {
    validate_config(base_cfg);
    Transcript t;
    t.scheme = scheme_name(base_cfg.scheme);

    const ordered_json hello = recv_msg(fd);
    if (hello["kind"] != "hello" || hello["phase"] != "commit")
        throw WireError("protocol error: expected hello");
    if (hello["payload"]["config_digest"] != hex_u64(config_digest(base_cfg)))
        throw WireError("protocol error: configuration digest mismatch");
    SessionConfig cfg = base_cfg;
    if (hello["payload"].contains("seed")) cfg.seed = hello["payload"]["seed"].get<std::uint64_t>();
    Rng rng(derive_seed(cfg.seed, kBobStream));
    const std::string session = hello["session"].get<std::string>();
    if (session != session_id_for(cfg.seed)) throw WireError("protocol error: session id mismatch");
    t.session = session;

    const ordered_json prepare = recv_msg(fd);
    if (prepare["kind"] != "prepare" || prepare["phase"] != "commit")
        throw WireError("protocol error: expected prepare in commit phase");
    if (prepare["session"] != session) throw WireError("protocol error: session id changed");
    t.add("commit", "prepare", prepare["payload"]["descriptor"]);

    // kernel space: registers (or transfer receipts) live bob-side
    Blob blob;
    BobOtbc receipts;
    if (cfg.scheme == Scheme::otbc) {
        const StatePair pair = cfg.pair();
        for (const auto& h : prepare["payload"]["kernel"]["keys"]) {
            Blob one = ot_send(hex_to_bits(h.get<std::string>(), cfg.n), pair);
            receipts.receipts.push_back(ot_receive(one, pair, rng));
        }
    } else {
        blob = kernel_build_blob(cfg, prepare["payload"]["kernel"]);
    }
    send_msg(fd, make_msg(session, "commit", "committed", ordered_json::object()));

    const ordered_json open_msg = recv_msg(fd);
    if (open_msg["kind"] != "open" || open_msg["phase"] != "open")
        throw WireError("protocol error: expected open in open phase");
    if (open_msg["session"] != session) throw WireError("protocol error: session id changed");
    t.add("open", "open", open_msg["payload"]);

    OpenMsg open;
    open.claimed_bit = open_msg["payload"]["bit"].get<int>();
    for (const auto& h : open_msg["payload"]["strings"])
        open.strings.push_back(hex_to_bits(h.get<std::string>(), cfg.n));

    Verdict v;
    if (cfg.scheme == Scheme::b92bc) v = b92_verify(blob, open, cfg.f, rng);
    else if (cfg.scheme == Scheme::bb84bc) v = bb84_verify(blob, open, cfg.f, rng);
    else v = otbc_verify(receipts, open, cfg.f);

    const ordered_json vp = verdict_payload(v);
    send_msg(fd, make_msg(session, "open", "verdict", vp));
    t.add("open", "verdict", vp);
    t.verdict = v;
    return t;
}

// ---------------------------------------------------------------------------
// Honest-session batches as CSV, one row per session. The transport choice
// must not show in the bytes: rows come from the canonical transcripts,
// which both paths reproduce for a given master seed.
// ---------------------------------------------------------------------------

enum class Transport { in_process, socket_loopback };

inline const char* kSessionCsvHeader = "session,scheme,accepted,bit\n";

inline std::string session_csv_row(const Transcript& t) {
    return t.session + "," + t.scheme + "," + (t.verdict->accepted ? "1" : "0") + "," +
           std::to_string(t.verdict->bit) + "\n";
}

inline std::string honest_sessions_csv(const SessionConfig& base, int b, int count,
                                       std::uint64_t master_seed, Transport transport) {
    std::string csv = kSessionCsvHeader;
    if (transport == Transport::in_process) {
        for (int i = 0; i < count; ++i) {
            SessionConfig cfg = base;
            cfg.seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
            csv += session_csv_row(run_honest_session(cfg, b));
        }
        return csv;
    }
    std::uint16_t port = 0;
    Socket listener = listen_on("127.0.0.1", 0, &port);
    std::string server_error;
    std::thread server([&] {
        try {
            for (int i = 0; i < count; ++i) {
                Socket conn = accept_one(listener);
                (void)bob_serve_session(conn.fd(), base);
            }
        } catch (const std::exception& e) {
            server_error = e.what();
        }
    });
    try {
        for (int i = 0; i < count; ++i) {
            SessionConfig cfg = base;
            cfg.seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
            Socket conn = connect_to("127.0.0.1", port);
            csv += session_csv_row(alice_run(conn.fd(), cfg, b));
        }
    } catch (...) {
        server.join();
        throw;
    }
    server.join();
    if (!server_error.empty()) throw WireError("server failed: " + server_error);
    return csv;
}

}  // namespace qbc::net
