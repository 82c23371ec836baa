#include "rcchain/queueing.hpp"

#include <cmath>

namespace rcchain::queueing {

const char* to_string(OrdererMode m) {
    return m == OrdererMode::block_granularity ? "block_granularity" : "literal_eq19";
}

std::optional<OrdererMode> parse_orderer_mode(std::string_view s) {
    if (s == "block_granularity") return OrdererMode::block_granularity;
    if (s == "literal_eq19") return OrdererMode::literal_eq19;
    return std::nullopt;
}

void QueueNetworkConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(lambda0 >= 0.0) || !std::isfinite(lambda0))
        throw std::invalid_argument("lambda0 must be a finite nonnegative rate");
    if (!(mu0 > 0.0) || !(mu2 > 0.0)) throw std::invalid_argument("service rates must be positive");
    if (!prob(q01) || !prob(q23)) throw std::invalid_argument("q01 and q23 must lie in [0, 1]");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
}

InstabilityError::InstabilityError(int node, double utilization)
    : std::runtime_error("node " + std::to_string(node) + " unstable: utilization " +
                         std::to_string(utilization) + " >= 1"),
      node_(node), utilization_(utilization) {}

int Utilizations::unstable_node() const {
    if (r0 >= 1.0) return 0;
    if (r1 >= 1.0) return 1;
    if (r2 >= 1.0) return 2;
    return -1;
}

Traffic solve_traffic(const QueueNetworkConfig& cfg) {
    cfg.validate();
    const double l1 = cfg.q01 * cfg.lambda0;
    return {cfg.lambda0, l1, l1};
}

double orderer_service_rate(const QueueNetworkConfig& cfg) {
    const Traffic t = solve_traffic(cfg);
    if (!(t.lambda1 > 0.0)) throw std::domain_error("orderer service rate undefined: no traffic");
    return 2.0 * t.lambda1 / static_cast<double>(cfg.batch_size);
}

Utilizations utilizations(const QueueNetworkConfig& cfg) {
    const Traffic t = solve_traffic(cfg);
    Utilizations u;
    u.r0 = t.lambda0 / cfg.mu0;
    u.r2 = t.lambda2 / cfg.mu2;
    if (t.lambda1 > 0.0) {
        const double mu1 = orderer_service_rate(cfg);
        const double m = static_cast<double>(cfg.batch_size);
        u.r1 = cfg.orderer_mode == OrdererMode::block_granularity ? (t.lambda1 / m) / mu1
                                                                 : t.lambda1 / mu1;
    }
    u.stable = u.unstable_node() < 0;
    return u;
}

double marginal_probability(std::size_t k, double r) {
    if (r >= 1.0 || r < 0.0) throw InstabilityError(-1, r);
    return (1.0 - r) * std::pow(r, static_cast<double>(k));
}

double state_probability(std::size_t k0, std::size_t k1, std::size_t k2, const Utilizations& u) {
    if (int node = u.unstable_node(); node >= 0)
        throw InstabilityError(node, node == 0 ? u.r0 : node == 1 ? u.r1 : u.r2);
    return marginal_probability(k0, u.r0) * marginal_probability(k1, u.r1) *
           marginal_probability(k2, u.r2);
}

std::size_t truncation_bound(double r) {
    if (r >= 1.0) throw InstabilityError(-1, r);
    return static_cast<std::size_t>(std::ceil(60.0 / (1.0 - r)));
}

PerfMetrics performance(const QueueNetworkConfig& cfg) {
    PerfMetrics p;
    p.arrivals = solve_traffic(cfg);
    p.util = utilizations(cfg);
    if (int node = p.util.unstable_node(); node >= 0)
        throw InstabilityError(node, node == 0 ? p.util.r0 : node == 1 ? p.util.r1 : p.util.r2);
    p.mu1 = orderer_service_rate(cfg);

    const auto mean_count = [](double r) { return r / (1.0 - r); };
    p.n0 = mean_count(p.util.r0);
    p.n1 = mean_count(p.util.r1);
    p.n2 = mean_count(p.util.r2);
    p.n = p.n0 + p.n1 + p.n2;

    const double m = static_cast<double>(cfg.batch_size);
    p.d0 = p.n0 / p.arrivals.lambda0;
    // Little's law at the granularity the orderer is modeled at.
    p.d1 = cfg.orderer_mode == OrdererMode::block_granularity ? p.n1 / (p.arrivals.lambda1 / m)
                                                              : p.n1 / p.arrivals.lambda1;
    p.d2 = p.n2 / p.arrivals.lambda2;
    p.d = p.d0 + p.d1 + p.d2;

    p.throughput_eq31 = p.n2 * cfg.q23 / p.d;
    p.throughput_flow = cfg.q23 * p.arrivals.lambda2;
    return p;
}

std::vector<SweepRow> sweep(const QueueNetworkConfig& base, const std::vector<double>& lambdas,
                            const std::vector<std::size_t>& batch_sizes) {
    std::vector<SweepRow> rows;
    rows.reserve(lambdas.size() * batch_sizes.size());
    for (std::size_t m : batch_sizes) {
        for (double l : lambdas) {
            QueueNetworkConfig cfg = base;
            cfg.lambda0 = l;
            cfg.batch_size = m;
            SweepRow row{l, m, cfg.orderer_mode, utilizations(cfg), std::nullopt};
            if (row.util.stable && cfg.q01 * l > 0.0) row.metrics = performance(cfg);
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace rcchain::queueing
