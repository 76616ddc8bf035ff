#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace telescale {

/// Fixed-length FIFO: step(x[n]) returns x[n - delay]. Until the line has
/// been filled it returns the first sample ever pushed.
template <typename T>
class DelayLine {
public:
    explicit DelayLine(std::size_t delay = 0) : delay_(delay) {}

    T step(const T& sample) {
        if (delay_ == 0) {
            return sample;
        }
        if (buffer_.empty()) {
            buffer_.assign(delay_, sample);
        }
        T out = buffer_[head_];
        buffer_[head_] = sample;
        head_ = (head_ + 1) % delay_;
        ++pushed_;
        return out;
    }

    std::size_t delay() const { return delay_; }
    std::size_t pushed() const { return pushed_; }
    bool warm() const { return pushed_ > delay_; }

    void reset() {
        buffer_.clear();
        head_ = 0;
        pushed_ = 0;
    }

private:
    std::size_t delay_;
    std::vector<T> buffer_;
    std::size_t head_ = 0;
    std::size_t pushed_ = 0;
};

}  // namespace telescale
