// The four call-overhead microbenchmarks and the bits of report arithmetic
// shared by the CLI and the acceptance suite.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "wenort/bench_fixtures.hpp"

namespace wenort::bench {

struct Workload {
    std::string_view name;
    std::string_view function; // the native function the loop calls
    std::string_view fixture;  // assembly source; local 0 = iteration count
};

inline constexpr std::array<Workload, 4> kWorkloads{{
    {"ffibench", "inc", fixtures::ffibench},
    {"objbench", "add_long_fast", fixtures::objbench},
    {"idbench", "id_obj", fixtures::idbench},
    {"idbench_exc", "id_obj_exc", fixtures::idbench_exc},
}};

inline constexpr uint64_t kDefaultIterations = 10'000'000;
inline constexpr uint64_t kDefaultRepeats = 3;

struct BenchSpec {
    const Workload* workload = nullptr;
    uint64_t iterations = kDefaultIterations;
    uint64_t repeats = kDefaultRepeats;
};

inline const Workload* find_workload(std::string_view name) {
    for (const auto& w : kWorkloads)
        if (w.name == name) return &w;
    return nullptr;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t mid = xs.size() / 2;
    return xs.size() % 2 ? xs[mid] : (xs[mid - 1] + xs[mid]) / 2.0;
}

inline constexpr std::string_view kCsvHeader =
    "bench,mode,repeat,iterations,seconds,boxes_allocated,arg_arrays_allocated,error_checks";

} // namespace wenort::bench
