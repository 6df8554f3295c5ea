#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

namespace ctphish::pipeline {

/// Multi-producer multi-consumer FIFO with a fixed capacity. push() blocks
/// while the queue is full; pop() blocks while it is empty and returns
/// nullopt once the queue is closed and drained.
template <class T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

    /// false if the queue was closed (the item is discarded).
    bool push(T item) {
        std::unique_lock lock(mu_);
        if (items_.size() >= capacity_ && !closed_) ++full_waits_;
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(item));
        if (items_.size() > high_water_) high_water_ = items_.size();
        not_empty_.notify_one();
        return true;
    }

    std::optional<T> pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    /// Wakes every waiter; pending items can still be popped.
    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const {
        std::lock_guard lock(mu_);
        return items_.size();
    }
    std::size_t high_water() const {
        std::lock_guard lock(mu_);
        return high_water_;
    }
    /// Number of push() calls that found the queue full.
    std::uint64_t full_waits() const {
        std::lock_guard lock(mu_);
        return full_waits_;
    }

private:
    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<T> items_;
    bool closed_ = false;
    std::size_t high_water_ = 0;
    std::uint64_t full_waits_ = 0;
};

}  // namespace ctphish::pipeline
