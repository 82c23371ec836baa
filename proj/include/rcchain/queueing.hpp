// Closed forms for the three-node open network endorse -> order -> commit
// with Poisson arrivals and exponential servers.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rcchain::queueing {

// block_granularity: the orderer serves whole blocks arriving at Lambda1/M
// with rate 2*Lambda1/M. literal_eq19: the same rate is applied per
// transaction, which forces R1 = M/2.
enum class OrdererMode { block_granularity, literal_eq19 };

const char* to_string(OrdererMode m);
std::optional<OrdererMode> parse_orderer_mode(std::string_view s);

struct QueueNetworkConfig {
    double lambda0 = 100.0;
    double q01 = 0.9;
    double q23 = 0.95;
    double mu0 = 150.0;
    double mu2 = 150.0;
    std::size_t batch_size = 10;
    OrdererMode orderer_mode = OrdererMode::block_granularity;

    void validate() const; // std::invalid_argument
};

class InstabilityError : public std::runtime_error {
public:
    InstabilityError(int node, double utilization);
    int node() const { return node_; }
    double utilization() const { return utilization_; }

private:
    int node_;
    double utilization_;
};

struct Traffic {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct Utilizations {
    double r0 = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    bool stable = true;

    // First node with R >= 1, or -1.
    int unstable_node() const;
};

struct PerfMetrics {
    Traffic arrivals;
    Utilizations util;
    double mu1 = 0.0;
    double n0 = 0.0, n1 = 0.0, n2 = 0.0, n = 0.0;
    double d0 = 0.0, d1 = 0.0, d2 = 0.0, d = 0.0;
    double throughput_eq31 = 0.0;
    double throughput_flow = 0.0;
};

Traffic solve_traffic(const QueueNetworkConfig& cfg);

// mu1 = 2 * Lambda1 / M. Throws std::domain_error when Lambda1 = 0.
double orderer_service_rate(const QueueNetworkConfig& cfg);

// With no traffic reaching the orderer R1 is reported as 0.
Utilizations utilizations(const QueueNetworkConfig& cfg);

// Product form prod (1 - R_i) R_i^k_i. Throws InstabilityError if any R_i >= 1.
double state_probability(std::size_t k0, std::size_t k1, std::size_t k2, const Utilizations& u);
double marginal_probability(std::size_t k, double r);

// Grid bound ceil(60 / (1 - R)); geometric tail beyond it is below 1e-9.
std::size_t truncation_bound(double r);

// Throws InstabilityError naming the offending node, std::domain_error with
// no orderer traffic.
PerfMetrics performance(const QueueNetworkConfig& cfg);

struct SweepRow {
    double lambda0 = 0.0;
    std::size_t batch_size = 0;
    OrdererMode mode = OrdererMode::block_granularity;
    Utilizations util;
    std::optional<PerfMetrics> metrics; // empty for unstable rows
};

std::vector<SweepRow> sweep(const QueueNetworkConfig& base, const std::vector<double>& lambdas,
                            const std::vector<std::size_t>& batch_sizes);

} // namespace rcchain::queueing
