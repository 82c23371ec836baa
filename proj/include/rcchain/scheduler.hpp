// Discrete-event queue over simulated time. Events at equal times fire in
// insertion order, so runs never depend on heap layout.

#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rcchain {

template <class Payload>
class EventQueue {
public:
    void push(double time, Payload payload) {
        if (time < now_) throw std::logic_error("EventQueue: event scheduled in the past");
        heap_.push(Entry{time, seq_++, std::move(payload)});
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    double now() const { return now_; }
    double next_time() const { return heap_.top().time; }

    std::pair<double, Payload> pop() {
        Entry e = heap_.top();
        heap_.pop();
        now_ = e.time;
        return {e.time, std::move(e.payload)};
    }

private:
    struct Entry {
        double time;
        std::uint64_t seq;
        Payload payload;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t seq_ = 0;
    double now_ = 0.0;
};

} // namespace rcchain
