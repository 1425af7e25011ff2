// Reference external bidder: speaks the newline-delimited JSON protocol on
// stdin/stdout and answers every request with one constant bid per auction.
// Usage: ndjson_constant_bidder [bid]

#include <cstdlib>
#include <iostream>
#include <string>

#include <json.hpp>

using json = nlohmann::json;

int main(int argc, char** argv) {
    const double bid = argc > 1 ? std::strtod(argv[1], nullptr) : 0.0;

    std::string line;
    while (std::getline(std::cin, line)) {
        const json msg = json::parse(line, nullptr, false);
        if (msg.is_discarded() || !msg.is_object()) continue;
        if (msg.value("type", "") != "request") continue;  // outcome messages need no reply

        json bids = json::array();
        if (msg.contains("auctions") && msg["auctions"].is_array()) {
            for (const auto& auction : msg["auctions"]) {
                bids.push_back({{"auction_id", auction["auction_id"]}, {"bid", bid}});
            }
        }
        const json reply = {{"type", "bids"}, {"timestep", msg["timestep"]}, {"bids", bids}};
        std::cout << reply.dump() << '\n' << std::flush;
    }
    return 0;
}
