#pragma once

namespace mkv {

// Which kernel family runs the per-particle loops. Both families produce
// bit-identical results; the serial one is the reference.
enum class Backend { serial, parallel };

struct Exec {
    Backend backend = Backend::serial;
    int threads = 0;  // parallel only; 0 = OpenMP default
};

}  // namespace mkv
