#include "rcchain/ledger/ordering.hpp"

#include <stdexcept>

namespace rcchain::ledger {

void OrderingConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("ordering: batch_size must be positive");
    if (!(batch_timeout > 0.0)) throw std::invalid_argument("ordering: batch_timeout must be positive");
    if (orderer_count == 0) throw std::invalid_argument("ordering: orderer_count must be positive");
    for (unsigned id : crashed)
        if (id >= orderer_count) throw std::invalid_argument("ordering: crashed id out of range");
}

std::size_t batch_cut_count(std::size_t pending, double oldest_arrival, std::size_t batch_size,
                            double batch_timeout, double now) {
    if (pending >= batch_size) return batch_size;
    if (pending > 0 && now >= oldest_arrival + batch_timeout) return pending;
    return 0;
}

OrderingService::OrderingService(OrderingConfig cfg, std::uint64_t next_number,
                                 crypto::Digest prev_hash)
    : cfg_(std::move(cfg)), next_number_(next_number), prev_hash_(prev_hash) {
    cfg_.validate();
}

void OrderingService::submit(EndorsedTransaction tx, double now) {
    pending_.push_back({std::move(tx), now});
}

bool OrderingService::available() const {
    return 2 * (cfg_.orderer_count - cfg_.crashed.size()) > cfg_.orderer_count;
}

void OrderingService::crash(unsigned orderer) {
    if (orderer >= cfg_.orderer_count) throw std::out_of_range("orderer id out of range");
    cfg_.crashed.insert(orderer);
}

void OrderingService::recover(unsigned orderer) { cfg_.crashed.erase(orderer); }

std::optional<double> OrderingService::next_timeout() const {
    if (pending_.empty()) return std::nullopt;
    return pending_.front().arrived + cfg_.batch_timeout;
}

std::optional<Block> OrderingService::order_batch(double now) {
    if (!available() || pending_.empty()) return std::nullopt;
    const std::size_t n = batch_cut_count(pending_.size(), pending_.front().arrived,
                                          cfg_.batch_size, cfg_.batch_timeout, now);
    if (n == 0) return std::nullopt;

    std::vector<EndorsedTransaction> txs;
    txs.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        txs.push_back(std::move(pending_.front().tx));
        pending_.pop_front();
    }
    Block b = make_block(next_number_++, prev_hash_, std::move(txs));
    prev_hash_ = header_hash(b);
    return b;
}

} // namespace rcchain::ledger
