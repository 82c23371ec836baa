// Discrete-event simulation of the endorse -> order -> commit pipeline used
// to cross-check the closed forms.
//
// Node 0 and node 2 are FIFO single servers with exponential service. The
// ordering service sequences each endorsed transaction on arrival and hands
// it to validation; in parallel it cuts blocks at batch_size or on timeout,
// and each block takes an exponential delivery time at rate 2*Lambda1/M. A
// transaction is confirmed once it is both validated and delivered in a block.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rcchain/queueing.hpp"

namespace rcchain::des {

struct DesConfig {
    queueing::QueueNetworkConfig net;
    std::size_t transactions = 1'000'000; // arrivals generated
    std::size_t warmup = 10'000;          // leading arrivals excluded from statistics
    unsigned clients = 3;                 // superposed Poisson streams of rate lambda0/clients
    double batch_timeout = 2.0;           // seconds
    std::size_t batch_count = 50;         // batch-means groups for the standard error
    std::uint64_t seed = 1;
    bool record_samples = false;

    void validate() const;
};

struct PerfSample {
    std::uint64_t tx = 0;
    double t_arrive = 0.0;
    double t_endorsed = 0.0;
    double t_ordered = 0.0;   // block delivered
    double t_committed = 0.0; // validated and delivered
    bool valid = false;
};

struct DesStats {
    std::size_t arrived = 0;
    std::size_t endorsed = 0; // passed endorsement routing (q01)
    std::size_t committed = 0;
    std::size_t committed_valid = 0;
    std::size_t blocks = 0;
    std::size_t timeout_blocks = 0;

    double window = 0.0; // measured span of simulated time, seconds
    double d0 = 0.0;     // mean sojourn at the endorsing node
    double d1 = 0.0;     // mean endorsed -> block delivered
    double d2 = 0.0;     // mean sojourn at the committing node
    double n0 = 0.0;     // time-averaged counts
    double n2 = 0.0;
    double confirmation = 0.0; // mean arrival -> confirmed
    double confirmation_se = 0.0;
    double throughput_valid = 0.0; // committed valid tx per second in the window

    std::vector<PerfSample> samples; // confirmed transactions, when recorded
};

// Throws queueing::InstabilityError for unstable parameters (block granularity).
DesStats run_pipeline(const DesConfig& cfg);

// Standard error of the mean by non-overlapping batch means.
double batch_means_se(const std::vector<double>& xs, std::size_t batches);

} // namespace rcchain::des
