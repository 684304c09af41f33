#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "straem/common.hpp"

namespace straem {

/// Bounded FIFO, oldest item first. Counts appends since the last mark_reset()
/// so callers can tell what fraction of the window has been replaced.
template <typename T>
class SlidingWindow {
public:
    using value_type = T;

    explicit SlidingWindow(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("sliding window capacity must be positive");
    }

    void append(T item) {
        if (items_.size() == capacity_) items_.pop_front();
        items_.push_back(std::move(item));
        ++appended_since_mark_;
    }

    /// appended_since_mark / capacity; exceeds 1 once more than a full window has arrived.
    [[nodiscard]] double replaced_fraction() const noexcept {
        return static_cast<double>(appended_since_mark_) / static_cast<double>(capacity_);
    }

    void mark_reset() noexcept { appended_since_mark_ = 0; }

    void clear() noexcept {
        items_.clear();
        appended_since_mark_ = 0;
    }

    [[nodiscard]] bool is_full() const noexcept { return items_.size() == capacity_; }
    [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t appended_since_mark() const noexcept { return appended_since_mark_; }

    [[nodiscard]] const T& operator[](std::size_t i) const { return items_[i]; }
    [[nodiscard]] const T& front() const { return items_.front(); }
    [[nodiscard]] const T& back() const { return items_.back(); }
    [[nodiscard]] auto begin() const noexcept { return items_.begin(); }
    [[nodiscard]] auto end() const noexcept { return items_.end(); }

    /// Contiguous copy, oldest first.
    [[nodiscard]] std::vector<T> snapshot() const { return {items_.begin(), items_.end()}; }

private:
    std::size_t capacity_;
    std::deque<T> items_;
    std::size_t appended_since_mark_ = 0;
};

}  // namespace straem
