#include "arena/external.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <unordered_map>

#include <json.hpp>

namespace arena {

namespace {

using json = nlohmann::json;

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

// Shared poll-driven line framing over raw fds.
class FdLineIo {
public:
    FdLineIo(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

    bool send_line(const std::string& line) {
        std::string framed = line;
        framed.push_back('\n');
        std::size_t off = 0;
        while (off < framed.size()) {
            const ssize_t n = ::write(write_fd_, framed.data() + off, framed.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    bool recv_line(std::string& out, int timeout_ms) {
        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                out.assign(buffer_, 0, nl);
                buffer_.erase(0, nl + 1);
                if (!out.empty() && out.back() == '\r') out.pop_back();
                return true;
            }
            if (eof_) return false;
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  deadline - std::chrono::steady_clock::now())
                                  .count();
            if (left <= 0) return false;
            pollfd pfd{read_fd_, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, static_cast<int>(left));
            if (rc < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            if (rc == 0) return false;  // timeout
            char chunk[65536];
            const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            if (n == 0) {
                eof_ = true;
                continue;  // flush any final buffered line first
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int read_fd_;
    int write_fd_;
    std::string buffer_;
    bool eof_ = false;
};

class ChildProcessTransport : public LineTransport {
public:
    ChildProcessTransport(pid_t pid, int read_fd, int write_fd)
        : pid_(pid), read_fd_(read_fd), write_fd_(write_fd), io_(read_fd, write_fd) {}

    ~ChildProcessTransport() override {
        ::close(write_fd_);  // peer sees EOF and should exit
        for (int i = 0; i < 50; ++i) {
            int status = 0;
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                break;
            }
            ::usleep(10 * 1000);
        }
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
        ::close(read_fd_);
    }

    bool send_line(const std::string& line) override { return io_.send_line(line); }
    bool recv_line(std::string& out, int timeout_ms) override {
        return io_.recv_line(out, timeout_ms);
    }

private:
    pid_t pid_;
    int read_fd_;
    int write_fd_;
    FdLineIo io_;
};

class TcpTransport : public LineTransport {
public:
    explicit TcpTransport(int fd) : fd_(fd), io_(fd, fd) {}
    ~TcpTransport() override { ::close(fd_); }

    bool send_line(const std::string& line) override { return io_.send_line(line); }
    bool recv_line(std::string& out, int timeout_ms) override {
        return io_.recv_line(out, timeout_ms);
    }

private:
    int fd_;
    FdLineIo io_;
};

}  // namespace

std::unique_ptr<LineTransport> spawn_child_transport(const std::vector<std::string>& argv) {
    if (argv.empty()) throw ConfigError("external: empty command");
    ignore_sigpipe_once();

    int to_child[2];    // parent writes -> child stdin
    int from_child[2];  // child stdout -> parent reads
    int exec_status[2]; // CLOEXEC self-pipe carrying execvp's errno
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0 ||
        ::pipe2(exec_status, O_CLOEXEC) != 0) {
        throw ConfigError("external: pipe() failed: " + std::string(std::strerror(errno)));
    }

    const pid_t pid = ::fork();
    if (pid < 0) throw ConfigError("external: fork() failed");

    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::close(exec_status[0]);

        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        ::execvp(args[0], args.data());

        const int err = errno;
        ssize_t ignored = ::write(exec_status[1], &err, sizeof err);
        (void)ignored;
        ::_exit(127);
    }

    ::close(to_child[0]);
    ::close(from_child[1]);
    ::close(exec_status[1]);

    int exec_errno = 0;
    const ssize_t n = ::read(exec_status[0], &exec_errno, sizeof exec_errno);
    ::close(exec_status[0]);
    if (n > 0) {
        ::close(to_child[1]);
        ::close(from_child[0]);
        int status = 0;
        ::waitpid(pid, &status, 0);
        throw ConfigError("external: cannot start '" + argv[0] +
                          "': " + std::string(std::strerror(exec_errno)));
    }

    return std::make_unique<ChildProcessTransport>(pid, from_child[0], to_child[1]);
}

std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, int port) {
    ignore_sigpipe_once();
    if (port <= 0 || port > 65535) throw ConfigError("external: invalid tcp port");

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    const std::string port_str = std::to_string(port);
    if (::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &result) != 0) {
        throw ConfigError("external: cannot resolve host '" + host + "'");
    }

    int fd = -1;
    for (addrinfo* rp = result; rp != nullptr; rp = rp->ai_next) {
        fd = ::socket(rp->ai_family, rp->ai_socktype, rp->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, rp->ai_addr, rp->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) {
        throw ConfigError("external: cannot connect to " + host + ":" + port_str);
    }
    return std::make_unique<TcpTransport>(fd);
}

namespace {

class ExternalBidder : public Bidder {
public:
    ExternalBidder(std::unique_ptr<LineTransport> transport, int seller_id, int timeout_ms)
        : transport_(std::move(transport)), seller_id_(seller_id), timeout_ms_(timeout_ms) {}

    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        const auto& quotes = *req.auctions;
        out.assign(quotes.size(), 0.0);
        if (dead_) {
            ++incidents_;
            return;
        }

        json message = {
            {"type", "request"},
            {"timestep", req.timestep},
            {"total_timesteps", req.total_timesteps},
            {"seller_id", seller_id_},
            {"budget_left", req.budget_left},
            {"cpc_bound", req.cpc_bound},
            {"cpa_bound", req.cpa_bound},
        };
        json auctions = json::array();
        for (const auto& q : quotes) {
            auctions.push_back(
                {{"auction_id", q.auction_id}, {"ctr", q.ctr}, {"cvr", q.cvr}});
        }
        message["auctions"] = std::move(auctions);

        if (!transport_->send_line(message.dump())) {
            dead_ = true;
            ++incidents_;
            return;
        }

        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
        for (;;) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  deadline - std::chrono::steady_clock::now())
                                  .count();
            std::string line;
            if (left <= 0 || !transport_->recv_line(line, static_cast<int>(left))) {
                ++incidents_;  // timeout or EOF
                return;
            }
            const json reply = json::parse(line, nullptr, false);
            if (!reply.is_object() || reply.value("type", "") != "bids" ||
                !reply.contains("timestep") || !reply["timestep"].is_number_integer() ||
                !reply.contains("bids") || !reply["bids"].is_array()) {
                ++incidents_;
                return;
            }
            const int reply_t = reply["timestep"].get<int>();
            if (reply_t < req.timestep) continue;  // stale answer, drop and resync
            if (reply_t != req.timestep) {
                ++incidents_;
                return;
            }

            std::unordered_map<std::int64_t, double> by_id;
            by_id.reserve(reply["bids"].size());
            for (const auto& entry : reply["bids"]) {
                if (!entry.is_object() || !entry.contains("auction_id") ||
                    !entry["auction_id"].is_number_integer() || !entry.contains("bid") ||
                    !entry["bid"].is_number()) {
                    ++incidents_;
                    return;
                }
                by_id[entry["auction_id"].get<std::int64_t>()] = entry["bid"].get<double>();
            }
            for (std::size_t i = 0; i < quotes.size(); ++i) {
                const auto it = by_id.find(quotes[i].auction_id);
                if (it != by_id.end()) out[i] = it->second;
            }
            return;
        }
    }

    void observe(const TimestepOutcomeSummary& summary) override {
        if (dead_) return;
        const json message = {
            {"type", "outcome"},       {"timestep", summary.timestep},
            {"wins", summary.wins},    {"cost", summary.cost},
            {"clicks", summary.clicks}, {"conversions", summary.conversions},
        };
        if (!transport_->send_line(message.dump())) dead_ = true;
    }

    std::uint64_t protocol_incidents() const override { return incidents_; }

private:
    std::unique_ptr<LineTransport> transport_;
    int seller_id_;
    int timeout_ms_;
    bool dead_ = false;
    std::uint64_t incidents_ = 0;
};

}  // namespace

std::unique_ptr<Bidder> make_external_bidder(const AlgorithmSpec& spec, const SellerContext& ctx) {
    const ExternalEndpoint& ep = *spec.external;
    if (ep.timeout_ms <= 0) throw ConfigError("external: timeout_ms must be positive");
    std::unique_ptr<LineTransport> transport;
    if (ep.is_tcp()) {
        transport = connect_tcp_transport(ep.tcp_host, ep.tcp_port);
    } else {
        transport = spawn_child_transport(ep.command);
    }
    return make_external_bidder(std::move(transport), ctx.seller_id, ep.timeout_ms);
}

std::unique_ptr<Bidder> make_external_bidder(std::unique_ptr<LineTransport> transport,
                                             int seller_id, int timeout_ms) {
    if (timeout_ms <= 0) throw ConfigError("external: timeout_ms must be positive");
    return std::make_unique<ExternalBidder>(std::move(transport), seller_id, timeout_ms);
}

}  // namespace arena
