#include "mwmr/netio.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <thread>

#include <json.hpp>

#include "mwmr/checker.hpp"
#include "mwmr/wire.hpp"

namespace mwmr {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kReadChunk = 64 * 1024;
constexpr std::size_t kMaxPendingOutput = 64u << 20;

[[noreturn]] void throw_errno(const std::string& what) {
    throw std::system_error(errno, std::generic_category(), what);
}

void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) throw_errno("fcntl");
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

using AddrInfo = std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)>;

AddrInfo resolve(const std::string& host, std::uint16_t port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* head = nullptr;
    const auto service = std::to_string(port);
    const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &head);
    if (rc != 0) throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
    return AddrInfo(head, &::freeaddrinfo);
}

int open_listener(const std::string& host, std::uint16_t port, std::uint16_t& bound_port) {
    auto ai = resolve(host, port, true);
    for (auto* a = ai.get(); a; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 128) == 0) {
            sockaddr_storage ss{};
            socklen_t len = sizeof ss;
            ::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len);
            bound_port = ntohs(ss.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port
                                                         : reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
            set_nonblocking(fd);
            return fd;
        }
        const int saved = errno;
        ::close(fd);
        errno = saved;
    }
    throw_errno("cannot listen on " + host + ":" + std::to_string(port));
}

/// Connected non-blocking socket, or -1.
int try_connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
    AddrInfo ai(nullptr, &::freeaddrinfo);
    try {
        ai = resolve(ep.host, ep.port, false);
    } catch (const std::runtime_error&) {
        return -1;
    }
    for (auto* a = ai.get(); a; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        set_nonblocking(fd);
        int rc = ::connect(fd, a->ai_addr, a->ai_addrlen);
        if (rc < 0 && errno == EINPROGRESS) {
            pollfd p{fd, POLLOUT, 0};
            rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
            int err = 0;
            socklen_t len = sizeof err;
            if (rc == 1 && ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) == 0 && err == 0) rc = 0;
            else rc = -1;
        }
        if (rc == 0) {
            set_nodelay(fd);
            return fd;
        }
        ::close(fd);
    }
    return -1;
}

/// Writes as much pending output as the socket takes. False when the peer is gone.
bool flush(int fd, std::vector<std::uint8_t>& out, std::size_t& offset) {
    while (offset < out.size()) {
        const auto n = ::send(fd, out.data() + offset, out.size() - offset, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
            if (errno == EINTR) continue;
            return false;
        }
        offset += static_cast<std::size_t>(n);
    }
    out.clear();
    offset = 0;
    return true;
}

/// Reads what is available into `reader`. False on EOF or error.
bool drain(int fd, FrameReader& reader) {
    std::uint8_t buf[kReadChunk];
    while (true) {
        const auto n = ::recv(fd, buf, sizeof buf, 0);
        if (n > 0) {
            reader.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
            if (static_cast<std::size_t>(n) < sizeof buf) return true;
            continue;
        }
        if (n == 0) return false;
        if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
        if (errno == EINTR) continue;
        return false;
    }
}

Nanos clock_now() { return std::chrono::duration_cast<Nanos>(Clock::now().time_since_epoch()); }

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument("endpoint must be host:port, got '" + text + "'");
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    if (ep.host.size() > 2 && ep.host.front() == '[' && ep.host.back() == ']') ep.host = ep.host.substr(1, ep.host.size() - 2);
    const auto port = std::stoul(text.substr(colon + 1));
    if (port == 0 || port > 65535) throw std::invalid_argument("bad port in '" + text + "'");
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

void DeploymentConfig::validate(const QuorumSystem& qs) const {
    if (endpoints.size() != qs.server_count()) {
        throw std::invalid_argument("config lists " + std::to_string(endpoints.size()) + " endpoints for " +
                                    std::to_string(qs.server_count()) + " servers");
    }
    if (role.role == Role::Server && role.index >= qs.server_count()) {
        throw std::invalid_argument("server index out of range");
    }
}

DeploymentConfig parse_deployment(const std::string& json_text, const std::filesystem::path& base_dir) {
    DeploymentConfig cfg;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
        cfg.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
        for (const auto& e : j.at("endpoints")) cfg.endpoints.push_back(parse_endpoint(e.get<std::string>()));
        cfg.quorum_file = j.at("quorum_file").get<std::string>();
        cfg.role = {role_from_string(j.at("role").get<std::string>()), j.at("index").get<std::uint32_t>()};
        cfg.ops = j.value("ops", cfg.ops);
        cfg.r_int = j.value("r_int", cfg.r_int);
        cfg.w_int = j.value("w_int", cfg.w_int);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.op_timeout = j.value("op_timeout", cfg.op_timeout);
        if (j.contains("history")) cfg.history = j.at("history").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad deployment config: ") + e.what());
    }
    if (cfg.quorum_file.is_relative()) cfg.quorum_file = base_dir / cfg.quorum_file;
    if (!cfg.history.empty() && cfg.history.is_relative()) cfg.history = base_dir / cfg.history;
    return cfg;
}

DeploymentConfig load_deployment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_deployment(ss.str(), path.parent_path());
}

std::string bind_host(const std::string& fallback) {
    const char* env = std::getenv("MWMR_BIND");
    return env && *env ? std::string(env) : fallback;
}

// ---------------------------------------------------------------------------------------------

struct Server::Impl {
    struct Connection {
        int fd = -1;
        FrameReader in;
        std::vector<std::uint8_t> out;
        std::size_t out_offset = 0;
    };

    Algorithm algorithm;
    ProcessId self;
    int listener = -1;
    int wake[2] = {-1, -1};
    std::atomic<bool> stopping{false};
    SimpleReplica simple;
    SfwReplica sfw;
    std::vector<Connection> connections;

    ~Impl() {
        for (auto& c : connections) ::close(c.fd);
        if (listener >= 0) ::close(listener);
        for (int fd : wake) {
            if (fd >= 0) ::close(fd);
        }
    }

    void accept_all() {
        while (true) {
            const int fd = ::accept(listener, nullptr, nullptr);
            if (fd < 0) return;
            set_nonblocking(fd);
            set_nodelay(fd);
            connections.push_back(Connection{fd, {}, {}, 0});
        }
    }

    /// False when the connection should be dropped.
    bool service(Connection& c, short revents) {
        if (revents & POLLIN) {
            const bool open = drain(c.fd, c.in);
            try {
                while (auto msg = c.in.next()) {
                    const auto reply = uses_sso(algorithm) ? sfw_server_apply(sfw, *msg, self)
                                                           : simple_server_apply(simple, *msg, self);
                    if (reply) append_frame(c.out, *reply);
                }
            } catch (const FrameError&) {
                return false;
            }
            if (!open) return false;
        } else if (revents & (POLLHUP | POLLERR | POLLNVAL)) {
            return false;
        }
        if (!flush(c.fd, c.out, c.out_offset)) return false;
        return c.out.size() - c.out_offset <= kMaxPendingOutput;
    }

    void run(const std::atomic<bool>* interrupt) {
        std::vector<pollfd> fds;
        while (!stopping && !(interrupt && *interrupt)) {
            fds.clear();
            fds.push_back({listener, POLLIN, 0});
            fds.push_back({wake[0], POLLIN, 0});
            for (const auto& c : connections) {
                fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.size() > c.out_offset ? POLLOUT : 0)), 0});
            }
            const int rc = ::poll(fds.data(), fds.size(), 100);
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw_errno("poll");
            }
            if (fds[1].revents & POLLIN) {
                char buf[64];
                while (::read(wake[0], buf, sizeof buf) > 0) {
                }
            }
            // Existing connections first, in a fixed order; new ones join the next round.
            std::vector<Connection> kept;
            kept.reserve(connections.size());
            for (std::size_t i = 0; i < connections.size(); ++i) {
                auto& c = connections[i];
                if (service(c, fds[i + 2].revents)) {
                    kept.push_back(std::move(c));
                } else {
                    ::close(c.fd);
                }
            }
            connections = std::move(kept);
            if (fds[0].revents & POLLIN) accept_all();
        }
    }
};

Server::Server(Algorithm algorithm, std::uint32_t index, const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>()) {
    impl_->algorithm = algorithm;
    impl_->self = server(index);
    impl_->listener = open_listener(host, port, port_);
    if (::pipe(impl_->wake) != 0) throw_errno("pipe");
    set_nonblocking(impl_->wake[0]);
    set_nonblocking(impl_->wake[1]);
}

Server::~Server() = default;

void Server::run(const std::atomic<bool>* interrupt) {
    impl_->run(interrupt);
}

void Server::stop() {
    impl_->stopping = true;
    const char b = 1;
    [[maybe_unused]] auto n = ::write(impl_->wake[1], &b, 1);
}

TaggedValue Server::local() const { return uses_sso(impl_->algorithm) ? impl_->sfw.local : impl_->simple.local; }

std::size_t Server::connection_count() const { return impl_->connections.size(); }

void run_server(const DeploymentConfig& cfg, const std::atomic<bool>* interrupt) {
    if (cfg.role.role != Role::Server) throw std::invalid_argument("config role is not a server");
    const auto qs = load_quorum_file(cfg.quorum_file);
    cfg.validate(qs);
    const auto& ep = cfg.endpoints.at(cfg.role.index);
    Server server(cfg.algorithm, cfg.role.index, bind_host(ep.host), ep.port);
    server.run(interrupt);
}

// ---------------------------------------------------------------------------------------------

namespace {

class ClientDriver {
public:
    ClientDriver(const ClientOptions& options, const std::atomic<bool>* interrupt)
        : opt_(options),
          interrupt_(interrupt),
          session_(options.algorithm, options.self, options.qs),
          schedule_(make_stream(options.seed, Stream::Schedule, options.self)) {
        if (opt_.endpoints.size() != opt_.qs->server_count()) {
            throw std::invalid_argument("client needs one endpoint per server");
        }
        links_.resize(opt_.endpoints.size());
    }

    ~ClientDriver() {
        for (auto& l : links_) {
            if (l.fd >= 0) ::close(l.fd);
        }
    }

    ClientRun run() {
        connect_initial();
        auto next_invoke = Clock::now() + draw_gap();
        Clock::time_point op_started{};
        while (issued_ < opt_.ops || session_.active()) {
            if (interrupt_ && *interrupt_) {
                result_.interrupted = true;
                break;
            }
            auto now = Clock::now();
            if (!session_.active() && now >= next_invoke) {
                invoke();
                op_started = now;
                continue;
            }
            if (session_.active() && now - op_started > opt_.op_timeout) {
                throw std::runtime_error("operation " + std::to_string(session_.op_seq()) + " of " +
                                         std::string(to_string(opt_.self.role)) + " " +
                                         std::to_string(opt_.self.index) + " timed out");
            }
            reconnect(now);
            auto wait = std::chrono::milliseconds(100);
            if (!session_.active()) {
                wait = std::min(wait, std::chrono::ceil<std::chrono::milliseconds>(next_invoke - now));
            }
            pump(std::max(wait, std::chrono::milliseconds(0)));
            if (!session_.active() && last_completion_) {
                next_invoke = *last_completion_ + draw_gap();
                last_completion_.reset();
            }
        }
        return std::move(result_);
    }

private:
    struct Link {
        int fd = -1;
        FrameReader in;
        std::vector<std::uint8_t> out;
        std::size_t out_offset = 0;
        Clock::time_point retry_at{};
    };

    Clock::duration draw_gap() {
        const double interval = opt_.interval;
        return std::chrono::duration_cast<Clock::duration>(uniform_nanos(schedule_, seconds(interval)));
    }

    void connect_initial() {
        for (int attempt = 0; attempt < opt_.connect_attempts; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(opt_.retry_delay);
            bool all = true;
            for (std::size_t s = 0; s < links_.size(); ++s) {
                if (links_[s].fd < 0) links_[s].fd = try_connect(opt_.endpoints[s], opt_.retry_delay);
                all = all && links_[s].fd >= 0;
            }
            if (all) break;
        }
        ServerSet reachable;
        for (std::size_t s = 0; s < links_.size(); ++s) {
            if (links_[s].fd >= 0) {
                reachable.insert(static_cast<std::uint32_t>(s));
            } else {
                links_[s].retry_at = Clock::now() + opt_.unreachable_for;
            }
        }
        if (!reply_complete(*opt_.qs, reachable)) {
            throw std::runtime_error("only servers " + to_string(reachable) + " are reachable; no quorum is available");
        }
    }

    void reconnect(Clock::time_point now) {
        for (std::size_t s = 0; s < links_.size(); ++s) {
            auto& l = links_[s];
            if (l.fd >= 0 || now < l.retry_at) continue;
            l.fd = try_connect(opt_.endpoints[s], std::chrono::milliseconds(200));
            l.in = {};
            l.out.clear();
            l.out_offset = 0;
            if (l.fd < 0) l.retry_at = now + opt_.unreachable_for;
        }
    }

    void drop(std::size_t s) {
        auto& l = links_[s];
        ::close(l.fd);
        l.fd = -1;
        l.retry_at = Clock::now() + opt_.unreachable_for;
    }

    void invoke() {
        ++issued_;
        OpRecord rec;
        rec.process = opt_.self;
        rec.op_seq = session_.op_seq() + 1;
        rec.is_read = opt_.self.role == Role::Reader;
        rec.invoked = clock_now();
        result_.ops.push_back(rec);
        const auto kind = rec.is_read ? EventKind::ReadInvoke : EventKind::WriteInvoke;
        result_.history.push_back(HistoryEvent{opt_.self, rec.op_seq, kind, rec.invoked, {}, 0});
        if (rec.is_read) {
            handle(session_.step(InvokeRead{}));
        } else {
            handle(session_.step(InvokeWrite{"w" + std::to_string(opt_.self.index) + "." + std::to_string(rec.op_seq)}));
        }
    }

    void handle(const StepOutput& out) {
        if (out.broadcast) {
            for (std::size_t s = 0; s < links_.size(); ++s) {
                auto& l = links_[s];
                if (l.fd < 0) continue;
                append_frame(l.out, *out.broadcast);
                if (!flush(l.fd, l.out, l.out_offset)) drop(s);
            }
        }
        if (out.completion) {
            auto& rec = result_.ops.back();
            rec.responded = clock_now();
            rec.complete = true;
            rec.rounds = out.completion->rounds;
            rec.tag = out.completion->result.tag;
            const auto kind = rec.is_read ? EventKind::ReadRespond : EventKind::WriteRespond;
            result_.history.push_back(HistoryEvent{opt_.self, rec.op_seq, kind, rec.responded, rec.tag, rec.rounds});
            last_completion_ = Clock::now();
        }
    }

    void pump(std::chrono::milliseconds wait) {
        std::vector<pollfd> fds;
        std::vector<std::size_t> index;
        for (std::size_t s = 0; s < links_.size(); ++s) {
            const auto& l = links_[s];
            if (l.fd < 0) continue;
            fds.push_back({l.fd, static_cast<short>(POLLIN | (l.out.size() > l.out_offset ? POLLOUT : 0)), 0});
            index.push_back(s);
        }
        if (fds.empty()) {
            std::this_thread::sleep_for(wait);
            return;
        }
        const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(wait.count()));
        if (rc <= 0) return;
        for (std::size_t i = 0; i < fds.size(); ++i) {
            const auto s = index[i];
            auto& l = links_[s];
            if (l.fd < 0) continue;
            const auto revents = fds[i].revents;
            if (revents & POLLIN) {
                const bool open = drain(l.fd, l.in);
                try {
                    while (auto msg = l.in.next()) {
                        handle(session_.step(Reply{static_cast<std::uint32_t>(s), std::move(*msg)}));
                    }
                } catch (const FrameError&) {
                    drop(s);
                    continue;
                }
                if (!open) {
                    drop(s);
                    continue;
                }
            } else if (revents & (POLLHUP | POLLERR | POLLNVAL)) {
                drop(s);
                continue;
            }
            if (l.fd >= 0 && !flush(l.fd, l.out, l.out_offset)) drop(s);
        }
    }

    ClientOptions opt_;
    const std::atomic<bool>* interrupt_;
    ClientSession session_;
    std::mt19937_64 schedule_;
    std::vector<Link> links_;
    std::uint32_t issued_ = 0;
    std::optional<Clock::time_point> last_completion_;
    ClientRun result_;
};

}  // namespace

ClientRun run_client(const ClientOptions& options, const std::atomic<bool>* interrupt) {
    if (!options.qs) throw std::invalid_argument("client needs a quorum system");
    return ClientDriver(options, interrupt).run();
}

ClientRun run_client(const DeploymentConfig& cfg, const std::atomic<bool>* interrupt) {
    if (cfg.role.role == Role::Server) throw std::invalid_argument("config role is not a client");
    auto qs = std::make_shared<const QuorumSystem>(load_quorum_file(cfg.quorum_file));
    cfg.validate(*qs);
    ClientOptions opt;
    opt.algorithm = cfg.algorithm;
    opt.self = cfg.role;
    opt.qs = qs;
    opt.endpoints = cfg.endpoints;
    opt.ops = cfg.ops;
    opt.interval = cfg.role.role == Role::Reader ? cfg.r_int : cfg.w_int;
    opt.seed = cfg.seed;
    opt.op_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(cfg.op_timeout * 1000));
    auto run = run_client(opt, interrupt);
    if (!cfg.history.empty()) save_history(cfg.history, run.history);
    return run;
}

RunResult run_loopback(const LoopbackOptions& o) {
    auto qs = std::make_shared<const QuorumSystem>(build_majority_system(o.servers, o.f));
    std::vector<std::unique_ptr<Server>> servers;
    std::vector<Endpoint> endpoints;
    for (std::uint32_t s = 0; s < o.servers; ++s) {
        servers.push_back(std::make_unique<Server>(o.algorithm, s, "127.0.0.1", 0));
        endpoints.push_back({"127.0.0.1", servers.back()->port()});
    }
    std::vector<std::thread> server_threads;
    std::vector<std::exception_ptr> server_errors(o.servers);
    for (std::uint32_t s = 0; s < o.servers; ++s) {
        server_threads.emplace_back([&, s] {
            try {
                servers[s]->run();
            } catch (...) {
                server_errors[s] = std::current_exception();
            }
        });
    }

    std::vector<ProcessId> clients;
    for (std::uint32_t i = 0; i < o.writers; ++i) clients.push_back(writer(i));
    for (std::uint32_t i = 0; i < o.readers; ++i) clients.push_back(reader(i));
    std::vector<ClientRun> runs(clients.size());
    std::vector<std::exception_ptr> client_errors(clients.size());
    std::vector<std::thread> client_threads;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        client_threads.emplace_back([&, i] {
            ClientOptions opt;
            opt.algorithm = o.algorithm;
            opt.self = clients[i];
            opt.qs = qs;
            opt.endpoints = endpoints;
            opt.ops = o.ops;
            opt.interval = clients[i].role == Role::Reader ? o.r_int : o.w_int;
            opt.seed = o.seed;
            try {
                runs[i] = run_client(opt);
            } catch (...) {
                client_errors[i] = std::current_exception();
            }
        });
    }
    for (auto& t : client_threads) t.join();
    for (auto& s : servers) s->stop();
    for (auto& t : server_threads) t.join();
    for (const auto& e : client_errors) {
        if (e) std::rethrow_exception(e);
    }
    for (const auto& e : server_errors) {
        if (e) std::rethrow_exception(e);
    }

    RunResult result;
    Nanos epoch = Nanos::max();
    for (const auto& r : runs) {
        for (const auto& e : r.history) epoch = std::min(epoch, e.time);
    }
    if (epoch == Nanos::max()) epoch = Nanos{0};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (auto e : runs[i].history) {
            e.time -= epoch;
            result.history.push_back(e);
        }
        for (auto op : runs[i].ops) {
            op.invoked -= epoch;
            op.responded = op.complete ? op.responded - epoch : Nanos{0};
            if (op.complete) ++(op.is_read ? result.completed_reads : result.completed_writes);
            if (!op.complete) {
                result.incomplete = true;
                result.unfinished.push_back(op.process);
            }
            result.ops.push_back(op);
        }
    }
    std::stable_sort(result.history.begin(), result.history.end(),
                     [](const HistoryEvent& a, const HistoryEvent& b) { return a.time < b.time; });
    std::stable_sort(result.ops.begin(), result.ops.end(),
                     [](const OpRecord& a, const OpRecord& b) { return a.invoked < b.invoked; });
    for (const auto& e : result.history) result.end_time = std::max(result.end_time, e.time);
    return result;
}

}  // namespace mwmr
