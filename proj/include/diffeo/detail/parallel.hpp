#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "diffeo/grid.hpp"

namespace diffeo::detail {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double v) noexcept
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    void add(const CompensatedSum& other) noexcept
    {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline unsigned resolve_threads(unsigned requested) noexcept
{
    if (requested != 0) {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Chunks of whole x-rows. Boundaries depend only on the grid shape, never on
// the thread count, so per-chunk partial results are schedule independent.
struct RowChunking {
    std::size_t rows = 0;
    std::size_t rows_per_chunk = 1;

    explicit RowChunking(const GridDims& dims, std::size_t target_points = 1u << 15)
    {
        const auto nx = static_cast<std::size_t>(dims.extent(0));
        rows = dims.num_points() / nx;
        rows_per_chunk = std::max<std::size_t>(1, target_points / nx);
    }

    std::size_t count() const noexcept { return (rows + rows_per_chunk - 1) / rows_per_chunk; }
    std::size_t first_row(std::size_t chunk) const noexcept { return chunk * rows_per_chunk; }
    std::size_t end_row(std::size_t chunk) const noexcept { return std::min(rows, (chunk + 1) * rows_per_chunk); }
};

// Runs body(chunk) for every chunk in [0, n_chunks) on up to `threads`
// workers. The first exception thrown by any body is rethrown.
template <class Body>
void for_each_chunk(std::size_t n_chunks, unsigned threads, Body&& body)
{
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n_chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            body(c);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t c = next++; c < n_chunks; c = next++) {
            try {
                body(c);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = n_chunks;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (unsigned w = 1; w < workers; ++w) {
            pool.emplace_back(work);
        }
        work();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace diffeo::detail
