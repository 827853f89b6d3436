#pragma once

// TCP runtime: a single-threaded poll() server loop around one replica, a client driver
// over persistent connections, JSON deployment configs and an in-process loopback cluster.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mwmr/protocols.hpp"
#include "mwmr/quorums.hpp"
#include "mwmr/simnet.hpp"

namespace mwmr {

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// "host:port"; throws std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

struct DeploymentConfig {
    Algorithm algorithm = Algorithm::Simple;
    std::vector<Endpoint> endpoints;  // by server index
    std::filesystem::path quorum_file;
    ProcessId role;
    std::uint32_t ops = 20;
    double r_int = 10.0;
    double w_int = 10.0;
    std::uint64_t seed = 1;
    std::filesystem::path history;  // client output
    double op_timeout = 120.0;

    /// Throws std::invalid_argument when the endpoints do not cover the quorum system.
    void validate(const QuorumSystem& qs) const;
};

/// JSON object with keys algorithm, endpoints (array of "host:port"), quorum_file, role
/// ("server"|"reader"|"writer"), index, and optionally ops, r_int, w_int, seed, history,
/// op_timeout. A relative quorum_file or history path is resolved against the config's directory.
DeploymentConfig load_deployment(const std::filesystem::path& path);
DeploymentConfig parse_deployment(const std::string& json_text, const std::filesystem::path& base_dir = {});

/// One replica served over TCP by a single poll() loop. Requests are applied one at a time in
/// arrival order; a slow reader only grows its own output buffer.
class Server {
public:
    /// Binds and listens immediately; port 0 picks an ephemeral port. Throws std::system_error.
    Server(Algorithm algorithm, std::uint32_t index, const std::string& host, std::uint16_t port);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const { return port_; }

    /// Serves until stop() or `*interrupt` becomes true.
    void run(const std::atomic<bool>* interrupt = nullptr);
    /// Thread-safe; wakes the loop. A stopped server does not run again.
    void stop();

    /// Snapshot of the replica, safe only when the loop is not running.
    TaggedValue local() const;
    std::size_t connection_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint16_t port_ = 0;
};

/// Bind address from MWMR_BIND when set, else `fallback`.
std::string bind_host(const std::string& fallback);

/// Runs the server named by cfg.role. Returns when `interrupt` is set.
void run_server(const DeploymentConfig& cfg, const std::atomic<bool>* interrupt = nullptr);

struct ClientOptions {
    Algorithm algorithm = Algorithm::Simple;
    ProcessId self;
    std::shared_ptr<const QuorumSystem> qs;
    std::vector<Endpoint> endpoints;
    std::uint32_t ops = 20;
    double interval = 10.0;  // seconds; next op drawn from U[0, interval]
    std::uint64_t seed = 1;
    int connect_attempts = 3;
    std::chrono::milliseconds retry_delay{1000};
    std::chrono::seconds unreachable_for{30};
    std::chrono::milliseconds op_timeout{120'000};
};

struct ClientRun {
    std::vector<HistoryEvent> history;  // steady_clock timestamps
    std::vector<OpRecord> ops;
    bool interrupted = false;
};

/// Drives one reader or writer. Throws std::runtime_error when no full quorum is reachable
/// or an operation exceeds op_timeout.
ClientRun run_client(const ClientOptions& options, const std::atomic<bool>* interrupt = nullptr);
/// Config form; writes cfg.history when set.
ClientRun run_client(const DeploymentConfig& cfg, const std::atomic<bool>* interrupt = nullptr);

struct LoopbackOptions {
    Algorithm algorithm = Algorithm::Simple;
    std::uint32_t readers = 2;
    std::uint32_t writers = 2;
    std::uint32_t servers = 5;
    std::uint32_t f = 1;
    std::uint32_t ops = 20;
    double r_int = 0.02;
    double w_int = 0.02;
    std::uint64_t seed = 1;
};

/// Servers and clients on separate threads over 127.0.0.1 sockets, sharing no state.
/// The merged history uses one steady clock.
RunResult run_loopback(const LoopbackOptions& options);

}  // namespace mwmr
