#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "wenort/context.hpp"
#include "wenort/value.hpp"

namespace wenort {

enum class DispatchMode { Auto, ForceGeneric, ForceTyped };

/// Per-run instrumentation. fast_path_taken + generic_path_taken == calls.
struct CallStats {
    uint64_t calls = 0;
    uint64_t boxes_allocated = 0;
    uint64_t arg_arrays_allocated = 0;
    uint64_t error_checks = 0;    // error-slot consultations made by the dispatcher
    uint64_t sentinel_checks = 0; // in-band sentinel comparisons on the typed path
    uint64_t fast_path_taken = 0;
    uint64_t generic_path_taken = 0;

    CallStats& operator+=(const CallStats& o) noexcept;
    friend bool operator==(const CallStats&, const CallStats&) = default;
};

/// Rejects ForceTyped on a function without typed metadata. Callers that run
/// loops should check once up front.
std::optional<GuestError> check_mode(const FunctionObject& f, DispatchMode mode);

/// Entry point for every native call. Routes to call_typed when the mode
/// allows it, the function is typed and every argument is compatible with
/// its declared type; otherwise to the generic path for f's convention.
/// Requires `ctx` to be bound to this thread (ContextScope).
Result<HostValue> call_function(Context& ctx, const FunctionObject& f,
                                std::span<const HostValue> args, DispatchMode mode,
                                CallStats& stats);

/// Generic METH_O: box, call the wrapper, consult the error slot, unbox.
Result<HostValue> call_generic_meth_o(Context& ctx, const FunctionObject& f, const HostValue& arg,
                                      CallStats& stats);

/// Generic METH_FASTCALL: box every argument into a freshly allocated
/// handle array, call the wrapper, consult the error slot, unbox.
Result<HostValue> call_generic_fastcall(Context& ctx, const FunctionObject& f,
                                        std::span<const HostValue> args, CallStats& stats);

/// Typed fast path: T_C_LONG arguments travel as raw words, T_OBJECT
/// arguments as boundary boxes; the unwrapped entry is called directly and
/// the error slot is only read when the return sentinel shows up.
/// Arguments must already be compatible with the signature.
Result<HostValue> call_typed(Context& ctx, const FunctionObject& f, std::span<const HostValue> args,
                             CallStats& stats);

/// How a callee reports failure through its return value.
struct ReturnProtocol {
    TypeCode ret_type = TypeCode::Object;
    bool can_raise = true;
    bool generic = true; // generic calls always consult the slot

    static ReturnProtocol generic_object() { return {TypeCode::Object, true, true}; }
    static ReturnProtocol typed(TypeCode ret, bool can_raise) { return {ret, can_raise, false}; }
};

/// Classifies a raw native result. nullopt means the raw value is the
/// result; otherwise the error to raise. Consumes the slot on error.
std::optional<GuestError> check_callee_error(Context& ctx, ReturnProtocol protocol, uint64_t raw,
                                             CallStats& stats);

/// Picks the invoker matching the signature's exact C prototype.
/// Returns nullptr for arities above kMaxTypedArity.
TypedInvoker select_typed_invoker(const TypedSignature& sig) noexcept;

uint32_t object_mask(const TypedSignature& sig) noexcept;
TypedShape typed_shape(const TypedSignature& sig) noexcept;

inline constexpr const char* kNullWithoutError = "native function returned null without setting an error";
inline constexpr const char* kResultWithError = "native function returned a result with an error set";

} // namespace wenort
