#pragma once

#include <cstddef>
#include <functional>

namespace apkit {

/// Runs body(chunk) for chunk in [0, chunks) on a pool of worker threads.
/// Chunks are independent; callers write into per-chunk slots and reduce in
/// chunk order afterwards, so the result never depends on scheduling.
void parallel_for_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

/// Worker count used by parallel_for_chunks (APKIT_THREADS overrides).
std::size_t worker_count() noexcept;

}  // namespace apkit
