#include "rcchain/pipeline_des.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "rcchain/ledger/ordering.hpp"
#include "rcchain/random.hpp"
#include "rcchain/scheduler.hpp"

namespace rcchain::des {

namespace {

enum class Ev { arrival, done0, done1, done2, timeout };

struct Event {
    Ev type;
    std::uint64_t arg; // client index for arrivals, generation for timeouts
};

constexpr double unset = -1.0;

// Integrates a queue length over the measurement window.
class LevelIntegral {
public:
    void advance(double t, double lo, double hi) {
        const double a = std::max(last_, lo);
        const double b = std::min(t, hi);
        if (b > a) area_ += static_cast<double>(level_) * (b - a);
        last_ = t;
    }
    void add(long d) { level_ += d; }
    double area() const { return area_; }

private:
    long level_ = 0;
    double last_ = 0.0;
    double area_ = 0.0;
};

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

} // namespace

void DesConfig::validate() const {
    net.validate();
    if (transactions == 0) throw std::invalid_argument("des: transactions must be positive");
    if (warmup >= transactions) throw std::invalid_argument("des: warmup must be below transactions");
    if (clients == 0) throw std::invalid_argument("des: clients must be positive");
    if (!(batch_timeout > 0.0)) throw std::invalid_argument("des: batch_timeout must be positive");
    if (batch_count < 2) throw std::invalid_argument("des: batch_count must be at least 2");
    if (!(net.lambda0 * net.q01 > 0.0))
        throw std::invalid_argument("des: no traffic reaches the orderer");
}

double batch_means_se(const std::vector<double>& xs, std::size_t batches) {
    if (batches < 2 || xs.size() < batches) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t len = xs.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t k = b * len; k < (b + 1) * len; ++k) s += xs[k];
        means[b] = s / static_cast<double>(len);
    }
    const double m = mean(means);
    double ss = 0.0;
    for (double x : means) ss += (x - m) * (x - m);
    const double var = ss / static_cast<double>(batches - 1);
    return std::sqrt(var / static_cast<double>(batches));
}

DesStats run_pipeline(const DesConfig& cfg) {
    cfg.validate();
    const auto util = queueing::utilizations(cfg.net);
    if (int node = util.unstable_node(); node >= 0)
        throw queueing::InstabilityError(node, node == 0 ? util.r0 : node == 1 ? util.r1 : util.r2);
    // A full block takes 1/mu1 on average; timeout-cut blocks scale down with
    // their size so the orderer stays at half load whatever the cut pattern.
    const double mu1 = queueing::orderer_service_rate(cfg.net);
    const double full = static_cast<double>(cfg.net.batch_size);

    const std::size_t n = cfg.transactions;
    const double client_rate = cfg.net.lambda0 / cfg.clients;

    std::vector<Rng> client_rng;
    for (unsigned c = 0; c < cfg.clients; ++c) client_rng.emplace_back(mix_seed(cfg.seed, 100 + c));
    Rng svc0(mix_seed(cfg.seed, 1));
    Rng route(mix_seed(cfg.seed, 2));
    Rng svc1(mix_seed(cfg.seed, 3));
    auto block_service = [&](std::size_t size) {
        return svc1.exponential(mu1 * full / static_cast<double>(size));
    };
    Rng svc2(mix_seed(cfg.seed, 4));
    Rng validity(mix_seed(cfg.seed, 5));

    std::vector<double> arrive(n, unset), endorsed(n, unset), validated(n, unset),
        delivered(n, unset), confirmed(n, unset);
    std::vector<char> valid(n, 0);

    EventQueue<Event> q;
    for (unsigned c = 0; c < cfg.clients; ++c)
        q.push(client_rng[c].exponential(client_rate), {Ev::arrival, c});

    std::deque<std::uint64_t> queue0, queue2;
    std::deque<std::uint64_t> pending; // sequenced, waiting for a block cut
    std::deque<std::vector<std::uint64_t>> blocks;
    std::uint64_t timeout_gen = 0;

    DesStats st;
    double t_warm = std::numeric_limits<double>::infinity();
    double t_end = std::numeric_limits<double>::infinity();
    LevelIntegral level0, level2;

    auto cut = [&](std::size_t count, bool by_timeout, double now) {
        std::vector<std::uint64_t> blk(pending.begin(), pending.begin() + count);
        pending.erase(pending.begin(), pending.begin() + count);
        ++st.blocks;
        if (by_timeout) ++st.timeout_blocks;
        blocks.push_back(std::move(blk));
        if (blocks.size() == 1) q.push(now + block_service(blocks.front().size()), {Ev::done1, 0});
        ++timeout_gen;
        if (!pending.empty())
            q.push(endorsed[pending.front()] + cfg.batch_timeout, {Ev::timeout, timeout_gen});
    };

    auto confirm = [&](std::uint64_t tx, double now) {
        confirmed[tx] = now;
        valid[tx] = validity.bernoulli(cfg.net.q23) ? 1 : 0;
        ++st.committed;
        if (valid[tx]) {
            ++st.committed_valid;
        }
    };

    std::size_t window_valid = 0;

    while (!q.empty()) {
        auto [now, ev] = q.pop();
        level0.advance(now, t_warm, t_end);
        level2.advance(now, t_warm, t_end);

        switch (ev.type) {
        case Ev::arrival: {
            if (st.arrived == n) break; // other clients' streams are closed
            const std::uint64_t id = st.arrived++;
            arrive[id] = now;
            if (id == cfg.warmup) t_warm = now;
            if (id + 1 == n) t_end = now;
            else q.push(now + client_rng[ev.arg].exponential(client_rate), {Ev::arrival, ev.arg});
            queue0.push_back(id);
            level0.add(1);
            if (queue0.size() == 1) q.push(now + svc0.exponential(cfg.net.mu0), {Ev::done0, 0});
            break;
        }
        case Ev::done0: {
            const std::uint64_t id = queue0.front();
            queue0.pop_front();
            level0.add(-1);
            endorsed[id] = now;
            if (!queue0.empty()) q.push(now + svc0.exponential(cfg.net.mu0), {Ev::done0, 0});
            if (!route.bernoulli(cfg.net.q01)) break; // rejected at endorsement
            ++st.endorsed;

            queue2.push_back(id);
            level2.add(1);
            if (queue2.size() == 1) q.push(now + svc2.exponential(cfg.net.mu2), {Ev::done2, 0});

            pending.push_back(id);
            if (pending.size() == 1) {
                ++timeout_gen;
                q.push(now + cfg.batch_timeout, {Ev::timeout, timeout_gen});
            }
            if (std::size_t c = ledger::batch_cut_count(pending.size(), endorsed[pending.front()],
                                                        cfg.net.batch_size, cfg.batch_timeout, now);
                c > 0)
                cut(c, c < cfg.net.batch_size, now);
            break;
        }
        case Ev::timeout: {
            if (ev.arg != timeout_gen || pending.empty()) break;
            if (std::size_t c = ledger::batch_cut_count(pending.size(), endorsed[pending.front()],
                                                        cfg.net.batch_size, cfg.batch_timeout, now);
                c > 0)
                cut(c, true, now);
            break;
        }
        case Ev::done1: {
            std::vector<std::uint64_t> blk = std::move(blocks.front());
            blocks.pop_front();
            if (!blocks.empty()) q.push(now + block_service(blocks.front().size()), {Ev::done1, 0});
            for (std::uint64_t id : blk) {
                delivered[id] = now;
                if (validated[id] != unset) {
                    confirm(id, now);
                    if (valid[id] && now >= t_warm && now <= t_end) ++window_valid;
                }
            }
            break;
        }
        case Ev::done2: {
            const std::uint64_t id = queue2.front();
            queue2.pop_front();
            level2.add(-1);
            validated[id] = now;
            if (!queue2.empty()) q.push(now + svc2.exponential(cfg.net.mu2), {Ev::done2, 0});
            if (delivered[id] != unset) {
                confirm(id, now);
                if (valid[id] && now >= t_warm && now <= t_end) ++window_valid;
            }
            break;
        }
        }
    }

    st.window = t_end - t_warm;
    st.n0 = level0.area() / st.window;
    st.n2 = level2.area() / st.window;
    st.throughput_valid = static_cast<double>(window_valid) / st.window;

    std::vector<double> s0, s1, s2, conf;
    for (std::size_t id = cfg.warmup; id < n; ++id) {
        s0.push_back(endorsed[id] - arrive[id]);
        if (confirmed[id] == unset) continue;
        s1.push_back(delivered[id] - endorsed[id]);
        s2.push_back(validated[id] - endorsed[id]);
        conf.push_back(confirmed[id] - arrive[id]);
    }
    st.d0 = mean(s0);
    st.d1 = mean(s1);
    st.d2 = mean(s2);
    st.confirmation = mean(conf);
    st.confirmation_se = batch_means_se(conf, cfg.batch_count);

    if (cfg.record_samples) {
        for (std::size_t id = 0; id < n; ++id) {
            if (confirmed[id] == unset) continue;
            st.samples.push_back(
                {id, arrive[id], endorsed[id], delivered[id], confirmed[id], valid[id] != 0});
        }
    }
    return st;
}

} // namespace rcchain::des
