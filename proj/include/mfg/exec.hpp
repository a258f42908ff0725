#pragma once

namespace mfg {

// Execution policy for the per-time-step spatial kernels. Both policies produce bitwise
// identical results; `serial` is the reference path.
enum class Exec { serial, parallel };

int max_threads() noexcept;

}  // namespace mfg
