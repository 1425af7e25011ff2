#pragma once

#include <memory>
#include <string>
#include <vector>

#include "arena/algorithms.hpp"

namespace arena {

// Line-oriented transport with a receive timeout. Implementations: child
// process over stdio pipes, TCP client socket.
class LineTransport {
public:
    virtual ~LineTransport() = default;

    // false once the peer is gone (EPIPE / closed socket)
    virtual bool send_line(const std::string& line) = 0;

    // false on timeout or EOF; strips the trailing newline (and CR)
    virtual bool recv_line(std::string& out, int timeout_ms) = 0;
};

// Spawns `argv` with stdin/stdout wired to the returned transport. Throws
// ConfigError when the program cannot be executed.
std::unique_ptr<LineTransport> spawn_child_transport(const std::vector<std::string>& argv);

// Connects to a listening bidder. Throws ConfigError when unreachable.
std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, int port);

// Bridges the Bidder interface onto the newline-delimited JSON protocol:
//   -> {"type":"request","timestep":..,"total_timesteps":..,"seller_id":..,
//       "budget_left":..,"cpc_bound":..,"cpa_bound":..,
//       "auctions":[{"auction_id":..,"ctr":..,"cvr":..},..]}
//   <- {"type":"bids","timestep":..,"bids":[{"auction_id":..,"bid":..},..]}
//   -> {"type":"outcome","timestep":..,"wins":..,"cost":..,"clicks":..,
//       "conversions":..}
// A timeout or malformed reply yields zero bids for that timestep and bumps
// the incident counter; a dead peer degrades the rest of the episode to zero
// bids instead of aborting it.
std::unique_ptr<Bidder> make_external_bidder(const AlgorithmSpec& spec, const SellerContext& ctx);

// Same bridge over an already-open transport. Lets callers (and protocol
// tests) supply their own peer wiring.
std::unique_ptr<Bidder> make_external_bidder(std::unique_ptr<LineTransport> transport,
                                             int seller_id, int timeout_ms);

}  // namespace arena
