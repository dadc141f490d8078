// Helpers shared by the unit tests and the acceptance suite.
#pragma once

#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wenort/context.hpp"
#include "wenort/dispatch.hpp"
#include "wenort/ext_abi.h"
#include "wenort/loader.hpp"
#include "wenort/typed_metadata.hpp"
#include "wenort/value.hpp"

namespace support {

inline std::string ext_path(const std::string& file) { return std::string(WENORT_TEST_EXT_DIR) + "/" + file; }

inline std::string fixture_path(const std::string& file) {
    return std::string(WENORT_TEST_FIXTURE_DIR) + "/" + file;
}

// Loads a built extension; aborts the test binary if it is missing, since
// nothing downstream can run without it.
inline wenort::ModulePtr load_or_die(const std::string& file) {
    auto m = wenort::load_extension(ext_path(file));
    if (!m) {
        std::fprintf(stderr, "cannot load %s: %s\n", file.c_str(), m.error().message.c_str());
        std::abort();
    }
    return std::move(m).value();
}

struct CallOutcome {
    wenort::Result<wenort::HostValue> result;
    wenort::CallStats stats;
};

inline CallOutcome call(wenort::Context& ctx, const wenort::FunctionObject& f, std::vector<wenort::HostValue> args,
                        wenort::DispatchMode mode = wenort::DispatchMode::Auto) {
    wenort::CallStats stats;
    wenort::ContextScope bound(ctx);
    auto r = wenort::call_function(ctx, f, args, mode, stats);
    return {std::move(r), stats};
}

inline CallOutcome call_typed(wenort::Context& ctx, const wenort::FunctionObject& f,
                              std::vector<wenort::HostValue> args) {
    wenort::CallStats stats;
    wenort::ContextScope bound(ctx);
    auto r = wenort::call_typed(ctx, f, args, stats);
    return {std::move(r), stats};
}

inline CallOutcome call_generic(wenort::Context& ctx, const wenort::FunctionObject& f,
                                std::vector<wenort::HostValue> args) {
    wenort::CallStats stats;
    wenort::ContextScope bound(ctx);
    auto r = f.convention == wenort::Convention::MethO ? wenort::call_generic_meth_o(ctx, f, args.at(0), stats)
                                                       : wenort::call_generic_fastcall(ctx, f, args, stats);
    return {std::move(r), stats};
}

// Same value, or same error kind and message.
inline bool same_outcome(const wenort::Result<wenort::HostValue>& a, const wenort::Result<wenort::HostValue>& b) {
    if (a.ok() != b.ok()) return false;
    if (a.ok()) return a.value() == b.value();
    return a.error() == b.error();
}

inline std::string describe(const wenort::Result<wenort::HostValue>& r) {
    if (r.ok()) return r.value().repr();
    return std::string(wenort::to_string(r.error().kind)) + ": " + r.error().message;
}

// Metadata built at run time. The struct's name buffer is const, so it is
// filled through raw storage.
struct MetadataDeleter {
    void operator()(abi_typed_method_metadata* m) const { std::free(m); }
};
using MetadataPtr = std::unique_ptr<abi_typed_method_metadata, MetadataDeleter>;

inline MetadataPtr make_metadata(int* arg_types, int ret_type, void* underlying, const std::string& name) {
    void* raw = std::calloc(1, sizeof(abi_typed_method_metadata));
    auto* m = static_cast<abi_typed_method_metadata*>(raw);
    m->arg_types = arg_types;
    m->ret_type = ret_type;
    m->underlying_func = underlying;
    std::memcpy(static_cast<char*>(raw) + offsetof(abi_typed_method_metadata, ml_name), name.data(),
                std::min<std::size_t>(name.size(), ABI_TYPED_NAME_SIZE));
    return MetadataPtr(m);
}

// Random guest values biased toward the interesting corners.
class ValueGen {
public:
    explicit ValueGen(uint64_t seed) : rng_(seed) {}

    int64_t any_int() {
        static constexpr int64_t corners[] = {0, 1, -1, -2, 2, 41, std::numeric_limits<int64_t>::max(),
                                              std::numeric_limits<int64_t>::min(),
                                              std::numeric_limits<int64_t>::max() - 1,
                                              std::numeric_limits<int64_t>::min() + 1};
        switch (pick(4)) {
        case 0: return corners[pick(std::size(corners))];
        case 1: return static_cast<int64_t>(pick(2000)) - 1000;
        default: return static_cast<int64_t>(rng_());
        }
    }

    std::string any_str() {
        std::string s(pick(9), '\0');
        for (auto& c : s) c = static_cast<char>('a' + pick(26));
        return s;
    }

    // Mostly ints, so typed-compatible vectors dominate.
    wenort::HostValue any_value() {
        switch (pick(8)) {
        case 0: return wenort::HostValue::string(any_str());
        case 1: return wenort::HostValue::none();
        default: return wenort::make_int(any_int());
        }
    }

    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Argument vector for a function, using its typed signature (if any) for the
// arity and occasionally swapping in an incompatible value.
inline std::vector<wenort::HostValue> random_args(ValueGen& gen, const wenort::FunctionObject& f) {
    std::vector<wenort::HostValue> args;
    const std::size_t n = f.declared_arity().value_or(2);
    for (std::size_t i = 0; i < n; ++i) {
        const bool wants_long = f.typed_signature && f.typed_signature->arg_types[i] == wenort::TypeCode::CLong;
        args.push_back(wants_long && gen.pick(10) != 0 ? wenort::make_int(gen.any_int()) : gen.any_value());
    }
    return args;
}

inline bool typed_compatible(const wenort::FunctionObject& f, std::span<const wenort::HostValue> args) {
    if (!f.typed_signature || args.size() != f.typed_signature->arg_types.size()) return false;
    for (std::size_t i = 0; i < args.size(); ++i)
        if (!wenort::is_compatible(args[i], f.typed_signature->arg_types[i])) return false;
    return true;
}

} // namespace support
