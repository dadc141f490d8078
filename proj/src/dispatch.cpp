#include "wenort/dispatch.hpp"

#include <array>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>

namespace wenort {

CallStats& CallStats::operator+=(const CallStats& o) noexcept {
    calls += o.calls;
    boxes_allocated += o.boxes_allocated;
    arg_arrays_allocated += o.arg_arrays_allocated;
    error_checks += o.error_checks;
    sentinel_checks += o.sentinel_checks;
    fast_path_taken += o.fast_path_taken;
    generic_path_taken += o.generic_path_taken;
    return *this;
}

namespace {

// ---------------------------------------------------------------------------
// Typed invokers: one instantiation per (arity, object-argument mask, return
// kind), so every underlying function is called through its exact prototype.

template <bool IsObject>
using RawWord = std::conditional_t<IsObject, abi_object*, abi_long>;

template <bool IsObject>
RawWord<IsObject> from_raw(uint64_t w) noexcept {
    if constexpr (IsObject)
        return reinterpret_cast<abi_object*>(static_cast<uintptr_t>(w));
    else
        return static_cast<abi_long>(w);
}

template <typename T>
uint64_t to_raw(T v) noexcept {
    if constexpr (std::is_pointer_v<T>)
        return static_cast<uint64_t>(reinterpret_cast<uintptr_t>(v));
    else
        return static_cast<uint64_t>(v);
}

template <std::size_t Arity, unsigned Mask, bool RetObject>
uint64_t invoke_typed(void* entry, const uint64_t* args) {
    return [&]<std::size_t... I>(std::index_sequence<I...>) {
        using Fn = RawWord<RetObject> (*)(RawWord<((Mask >> I) & 1u) != 0>...);
        return to_raw(reinterpret_cast<Fn>(entry)(from_raw<((Mask >> I) & 1u) != 0>(args[I])...));
    }(std::make_index_sequence<Arity>{});
}

template <std::size_t Arity, bool RetObject, unsigned... Masks>
constexpr auto invoker_row(std::integer_sequence<unsigned, Masks...>) {
    return std::array<TypedInvoker, sizeof...(Masks)>{&invoke_typed<Arity, Masks, RetObject>...};
}

template <std::size_t Arity>
TypedInvoker pick_invoker(unsigned mask, bool ret_object) {
    static constexpr auto objects =
        invoker_row<Arity, true>(std::make_integer_sequence<unsigned, (1u << Arity)>{});
    static constexpr auto longs =
        invoker_row<Arity, false>(std::make_integer_sequence<unsigned, (1u << Arity)>{});
    return ret_object ? objects[mask] : longs[mask];
}

uintptr_t as_word(abi_object* h) noexcept { return reinterpret_cast<uintptr_t>(h); }

// Releases the dispatcher's boundary references on scope exit.
class BoundaryRefs {
public:
    explicit BoundaryRefs(Context& ctx) noexcept : ctx_(ctx) {}
    ~BoundaryRefs() {
        for (std::size_t i = 0; i < count_; ++i) ctx_.adjust_refcount(handles_[i], -1);
    }
    BoundaryRefs(const BoundaryRefs&) = delete;
    BoundaryRefs& operator=(const BoundaryRefs&) = delete;

    abi_object* hold(abi_object* h) noexcept {
        handles_[count_++] = h;
        return h;
    }

private:
    Context& ctx_;
    std::array<abi_object*, kMaxTypedArity> handles_{};
    std::size_t count_ = 0;
};

// Converts an owned result handle to a host value and drops the reference.
Result<HostValue> take_result(Context& ctx, abi_object* r) {
    Result<HostValue> out = ctx.unbox(r);
    if (r != nullptr) ctx.adjust_refcount(r, -1);
    return out;
}

Result<HostValue> finish(Context& ctx, Result<HostValue> out, uint64_t boxes_before, CallStats& stats) {
    stats.boxes_allocated += ctx.counters().boxes_allocated - boxes_before;
    if (ctx.has_fault()) [[unlikely]]
        return *ctx.take_fault();
    return out;
}

} // namespace

uint32_t object_mask(const TypedSignature& sig) noexcept {
    uint32_t mask = 0;
    for (std::size_t i = 0; i < sig.arg_types.size() && i < 32; ++i)
        if (sig.arg_types[i] == TypeCode::Object) mask |= 1u << i;
    return mask;
}

TypedShape typed_shape(const TypedSignature& sig) noexcept {
    if (sig.arg_types.size() != 1) return TypedShape::Other;
    if (sig.arg_types[0] == TypeCode::CLong && sig.ret_type == TypeCode::CLong) return TypedShape::LongToLong;
    if (sig.arg_types[0] == TypeCode::Object && sig.ret_type == TypeCode::Object) return TypedShape::ObjectToObject;
    return TypedShape::Other;
}

TypedInvoker select_typed_invoker(const TypedSignature& sig) noexcept {
    const unsigned mask = object_mask(sig);
    bool ret_object = sig.ret_type == TypeCode::Object;
    switch (sig.arg_types.size()) {
    case 0: return pick_invoker<0>(mask, ret_object);
    case 1: return pick_invoker<1>(mask, ret_object);
    case 2: return pick_invoker<2>(mask, ret_object);
    case 3: return pick_invoker<3>(mask, ret_object);
    case 4: return pick_invoker<4>(mask, ret_object);
    default: return nullptr;
    }
}
static_assert(kMaxTypedArity == 4, "select_typed_invoker covers arities 0..4");

std::optional<GuestError> check_mode(const FunctionObject& f, DispatchMode mode) {
    if (mode == DispatchMode::ForceTyped && !f.is_typed())
        return GuestError(ErrorKind::VmError,
                          "typed mode requested but '" + f.name + "' has no typed signature");
    return std::nullopt;
}

std::optional<GuestError> check_callee_error(Context& ctx, ReturnProtocol protocol, uint64_t raw,
                                             CallStats& stats) {
    if (protocol.generic) {
        // The full check: the slot is always consulted, through the exported
        // ABI entry point like any other caller of the C API would.
        ++stats.error_checks;
        bool pending = abi_err_occurred() != 0;
        if (raw == 0) {
            if (pending) return ctx.take_error();
            return GuestError(ErrorKind::NativeError, kNullWithoutError);
        }
        if (pending) {
            GuestError e = ctx.take_error();
            return GuestError(ErrorKind::NativeError, std::string(kResultWithError) + ": " + e.message);
        }
        return std::nullopt;
    }

    if (protocol.ret_type == TypeCode::CLong) {
        if (!protocol.can_raise) return std::nullopt;
        ++stats.sentinel_checks;
        if (static_cast<abi_long>(raw) != -1) return std::nullopt;
        ++stats.error_checks;
        if (ctx.err_occurred()) return ctx.take_error();
        return std::nullopt; // -1 is a legitimate result
    }

    if (protocol.can_raise) {
        ++stats.sentinel_checks;
        if (raw != 0) return std::nullopt;
        ++stats.error_checks;
        if (ctx.err_occurred()) return ctx.take_error();
        return GuestError(ErrorKind::NativeError, kNullWithoutError);
    }
    // Declared unable to raise: the slot is never read. A null here is a
    // broken extension, not an exception.
    if (raw == 0) return GuestError(ErrorKind::NativeError, kNullWithoutError);
    return std::nullopt;
}

Result<HostValue> call_generic_meth_o(Context& ctx, const FunctionObject& f, const HostValue& arg,
                                      CallStats& stats) {
    ++stats.calls;
    ++stats.generic_path_taken;
    const uint64_t boxes_before = ctx.counters().boxes_allocated;

    BoundaryRefs refs(ctx);
    abi_object* h = refs.hold(ctx.box(arg));
    auto wrapper = reinterpret_cast<abi_meth_o_func>(f.wrapper_entry);
    abi_object* r = wrapper(f.module_self, h);

    if (auto err = check_callee_error(ctx, ReturnProtocol::generic_object(), as_word(r), stats)) {
        if (r != nullptr) ctx.adjust_refcount(r, -1);
        return finish(ctx, std::move(*err), boxes_before, stats);
    }
    return finish(ctx, take_result(ctx, r), boxes_before, stats);
}

Result<HostValue> call_generic_fastcall(Context& ctx, const FunctionObject& f,
                                        std::span<const HostValue> args, CallStats& stats) {
    ++stats.calls;
    ++stats.generic_path_taken;
    const uint64_t boxes_before = ctx.counters().boxes_allocated;

    const std::size_t n = args.size();
    std::unique_ptr<abi_object*[]> array(new abi_object*[n == 0 ? 1 : n]);
    ++stats.arg_arrays_allocated;
    for (std::size_t i = 0; i < n; ++i) array[i] = ctx.box(args[i]);

    auto wrapper = reinterpret_cast<abi_fastcall_func>(f.wrapper_entry);
    abi_object* r = wrapper(f.module_self, array.get(), static_cast<intptr_t>(n));

    Result<HostValue> out = HostValue::none();
    if (auto err = check_callee_error(ctx, ReturnProtocol::generic_object(), as_word(r), stats)) {
        if (r != nullptr) ctx.adjust_refcount(r, -1);
        out = std::move(*err);
    } else {
        out = take_result(ctx, r);
    }
    for (std::size_t i = 0; i < n; ++i) ctx.adjust_refcount(array[i], -1);
    return finish(ctx, std::move(out), boxes_before, stats);
}

Result<HostValue> call_typed(Context& ctx, const FunctionObject& f, std::span<const HostValue> args,
                             CallStats& stats) {
    ++stats.calls;
    ++stats.fast_path_taken;
    const TypedSignature& sig = *f.typed_signature;
    const uint64_t boxes_before = ctx.counters().boxes_allocated;

    BoundaryRefs refs(ctx);
    uint64_t r;
    switch (f.typed_shape) {
    case TypedShape::LongToLong:
        r = static_cast<uint64_t>(reinterpret_cast<abi_long (*)(abi_long)>(sig.underlying_entry)(args[0].as_int()));
        break;
    case TypedShape::ObjectToObject:
        r = as_word(reinterpret_cast<abi_object* (*)(abi_object*)>(sig.underlying_entry)(
            refs.hold(ctx.box(args[0]))));
        break;
    default: {
        std::array<uint64_t, kMaxTypedArity> raw{};
        for (std::size_t i = 0; i < args.size(); ++i) {
            if ((f.object_arg_mask >> i) & 1u)
                raw[i] = as_word(refs.hold(ctx.box(args[i])));
            else
                raw[i] = static_cast<uint64_t>(args[i].as_int());
        }
        r = f.typed_invoker(sig.underlying_entry, raw.data());
    }
    }

    const auto protocol = ReturnProtocol::typed(sig.ret_type, sig.can_raise);
    if (auto err = check_callee_error(ctx, protocol, r, stats)) [[unlikely]] {
        if (sig.ret_type == TypeCode::Object && r != 0)
            ctx.adjust_refcount(reinterpret_cast<abi_object*>(static_cast<uintptr_t>(r)), -1);
        return finish(ctx, std::move(*err), boxes_before, stats);
    }
    if (sig.ret_type == TypeCode::CLong)
        return finish(ctx, make_int(static_cast<abi_long>(r)), boxes_before, stats);
    return finish(ctx, take_result(ctx, reinterpret_cast<abi_object*>(static_cast<uintptr_t>(r))),
                  boxes_before, stats);
}

Result<HostValue> call_function(Context& ctx, const FunctionObject& f,
                                std::span<const HostValue> args, DispatchMode mode,
                                CallStats& stats) {
    if (auto arity = f.declared_arity(); arity && args.size() != *arity) {
        return GuestError(ErrorKind::ArityError, f.name + "() takes " + std::to_string(*arity) +
                                                     " argument(s) (" + std::to_string(args.size()) +
                                                     " given)");
    }

    if (f.typed_signature && mode != DispatchMode::ForceGeneric) {
        std::size_t bad = args.size();
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (!((f.object_arg_mask >> i) & 1u) && !args[i].is_int()) {
                bad = i;
                break;
            }
        }
        if (bad == args.size()) return call_typed(ctx, f, args, stats);
        if (mode == DispatchMode::ForceTyped) {
            return GuestError(ErrorKind::TypeError, f.name + "() argument " + std::to_string(bad + 1) +
                                                        ": an integer is required");
        }
    } else if (mode == DispatchMode::ForceTyped) {
        return *check_mode(f, mode);
    }

    if (f.convention == Convention::MethO) return call_generic_meth_o(ctx, f, args[0], stats);
    return call_generic_fastcall(ctx, f, args, stats);
}

} // namespace wenort
