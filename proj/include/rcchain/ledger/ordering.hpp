// Ordering service: one logical sequencer, available while a majority of
// orderers is up. Blocks are cut at batch_size or on batch timeout.

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>

#include "rcchain/crypto.hpp"
#include "rcchain/ledger/chain.hpp"

namespace rcchain::ledger {

struct OrderingConfig {
    std::size_t batch_size = 10;
    double batch_timeout = 2.0; // seconds
    unsigned orderer_count = 3;
    std::set<unsigned> crashed;

    void validate() const;
    bool operator==(const OrderingConfig&) const = default;
};

// How many of the queued items to cut now: batch_size when full, everything
// once the oldest has waited batch_timeout, otherwise 0.
std::size_t batch_cut_count(std::size_t pending, double oldest_arrival, std::size_t batch_size,
                            double batch_timeout, double now);

class OrderingService {
public:
    explicit OrderingService(OrderingConfig cfg,
                             std::uint64_t next_number = 1,
                             crypto::Digest prev_hash = genesis_hash());

    void submit(EndorsedTransaction tx, double now);
    std::optional<Block> order_batch(double now);

    void crash(unsigned orderer);
    void recover(unsigned orderer);
    bool available() const;

    std::size_t pending() const { return pending_.size(); }
    // Time at which the oldest pending transaction reaches the timeout.
    std::optional<double> next_timeout() const;
    const OrderingConfig& config() const { return cfg_; }

private:
    struct Pending {
        EndorsedTransaction tx;
        double arrived;
    };

    OrderingConfig cfg_;
    std::deque<Pending> pending_;
    std::uint64_t next_number_;
    crypto::Digest prev_hash_;
};

} // namespace rcchain::ledger
