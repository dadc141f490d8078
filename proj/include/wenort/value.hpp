#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "wenort/ext_abi.h"

namespace wenort {

struct FunctionObject;
struct Module;

enum class ErrorKind { TypeError, ArityError, NativeError, LoadError, VmError };

std::string_view to_string(ErrorKind kind);

/// A guest-level exception. Errors travel as values through dispatch and the
/// VM; nothing in the call path throws.
struct GuestError {
    ErrorKind kind;
    std::string message;

    GuestError(ErrorKind k, std::string msg);

    friend bool operator==(const GuestError&, const GuestError&) = default;
};

/// Value-or-GuestError. A small stand-in for std::expected.
template <typename T>
class [[nodiscard]] Result {
public:
    Result(T value) : state_(std::in_place_index<0>, std::move(value)) {}
    Result(GuestError error) : state_(std::in_place_index<1>, std::move(error)) {}

    bool ok() const noexcept { return state_.index() == 0; }
    explicit operator bool() const noexcept { return ok(); }

    T& value() & { return std::get<0>(state_); }
    const T& value() const& { return std::get<0>(state_); }
    T&& value() && { return std::get<0>(std::move(state_)); }

    const GuestError& error() const& { return std::get<1>(state_); }
    GuestError&& error() && { return std::get<1>(std::move(state_)); }

    T& operator*() & { return value(); }
    const T& operator*() const& { return value(); }
    T* operator->() { return &value(); }
    const T* operator->() const { return &value(); }

private:
    std::variant<T, GuestError> state_;
};

using Status = Result<std::monostate>;

inline Status success() { return Status(std::monostate{}); }

/// Type codes as they appear in typed metadata.
enum class TypeCode : int32_t {
    CLong = T_C_LONG,
    Object = T_OBJECT,
};

std::string_view to_string(TypeCode code);

/// The guest language's value: a 64-bit integer, an immutable byte string,
/// None, or a reference to a loaded native function.
///
/// Sixteen bytes; only strings own heap storage (shared, atomically
/// refcounted, never mutated), so values are safe to share across threads.
class HostValue {
public:
    enum class Tag : uint8_t { Int, Str, None, NativeFunction };

    HostValue() noexcept = default;
    HostValue(const HostValue& o) noexcept : tag_(o.tag_), bits_(o.bits_) { retain(); }
    HostValue(HostValue&& o) noexcept : tag_(o.tag_), bits_(o.bits_) { o.tag_ = Tag::None; }
    HostValue& operator=(const HostValue& o) noexcept {
        if (this != &o) {
            o.retain();
            release();
            tag_ = o.tag_;
            bits_ = o.bits_;
        }
        return *this;
    }
    HostValue& operator=(HostValue&& o) noexcept {
        if (this != &o) {
            release();
            tag_ = o.tag_;
            bits_ = o.bits_;
            o.tag_ = Tag::None;
        }
        return *this;
    }
    ~HostValue() { release(); }

    static HostValue integer(int64_t v) noexcept {
        HostValue h;
        h.tag_ = Tag::Int;
        h.bits_.i = v;
        return h;
    }
    static HostValue string(std::string s);
    static HostValue none() noexcept { return HostValue(); }
    static HostValue function(const FunctionObject& f) noexcept {
        HostValue h;
        h.tag_ = Tag::NativeFunction;
        h.bits_.fn = &f;
        return h;
    }

    Tag tag() const noexcept { return tag_; }

    bool is_int() const noexcept { return tag_ == Tag::Int; }
    bool is_str() const noexcept { return tag_ == Tag::Str; }
    bool is_none() const noexcept { return tag_ == Tag::None; }
    bool is_function() const noexcept { return tag_ == Tag::NativeFunction; }

    int64_t as_int() const noexcept { return bits_.i; }
    const std::string& as_str() const noexcept { return bits_.str->bytes; }
    const FunctionObject& as_function() const noexcept { return *bits_.fn; }

    /// Identity of the host-side string object; copies of one Str value
    /// share it, separately constructed equal strings do not.
    const void* str_identity() const noexcept { return bits_.str; }

    std::string repr() const;

    /// Per-string link to an ABI box. The first context to box a string
    /// claims the slot for good; only the claimant touches `box`.
    struct LinkSlot {
        std::atomic<const void*> claimant{nullptr};
        void* box = nullptr;
    };
    LinkSlot* link_slot() const noexcept { return &bits_.str->link; }

    friend bool operator==(const HostValue& a, const HostValue& b);

private:
    struct StrObject {
        std::atomic<uint32_t> refs;
        LinkSlot link;
        std::string bytes;
    };

    void retain() const noexcept {
        if (tag_ == Tag::Str) bits_.str->refs.fetch_add(1, std::memory_order_relaxed);
    }
    void release() noexcept {
        if (tag_ == Tag::Str && bits_.str->refs.fetch_sub(1, std::memory_order_acq_rel) == 1) delete bits_.str;
    }

    Tag tag_ = Tag::None;
    union Bits {
        int64_t i;
        StrObject* str;
        const FunctionObject* fn;
    } bits_{0};
};

inline HostValue make_int(int64_t v) { return HostValue::integer(v); }

/// Most specific type code for a value. Everything is T_OBJECT-compatible;
/// only Int is additionally T_C_LONG-compatible.
TypeCode host_type_code(const HostValue& v) noexcept;

inline bool is_compatible(const HostValue& v, TypeCode code) noexcept {
    return code == TypeCode::Object || (code == TypeCode::CLong && v.is_int());
}

enum class Convention { MethO, FastCall };

std::string_view to_string(Convention c);

/// Decoded METH_TYPED metadata: the terminator is stripped and the sign of
/// the return code split out into can_raise.
struct TypedSignature {
    std::vector<TypeCode> arg_types;
    TypeCode ret_type;
    bool can_raise = false;
    void* underlying_entry = nullptr;
    const char* name = nullptr; // address of the metadata's inline name buffer

    friend bool operator==(const TypedSignature&, const TypedSignature&) = default;
};

/// Calls an unwrapped entry point. Arguments and result are raw 64-bit
/// words: either an abi_long or an abi_object*, per the signature.
using TypedInvoker = uint64_t (*)(void* entry, const uint64_t* args);

inline constexpr std::size_t kMaxTypedArity = 4;

/// Signatures the typed path calls directly instead of through an invoker.
enum class TypedShape : uint8_t { Other, LongToLong, ObjectToObject };

/// A loaded native callable. Immutable after load.
struct FunctionObject {
    std::string name;
    std::string doc;
    Convention convention = Convention::MethO;
    void* wrapper_entry = nullptr;
    std::optional<TypedSignature> typed_signature;

    // Precomputed from typed_signature at load time.
    TypedInvoker typed_invoker = nullptr;
    uint32_t object_arg_mask = 0; // bit i set: argument i is T_OBJECT
    TypedShape typed_shape = TypedShape::Other;

    const Module* defining_module = nullptr;
    abi_object* module_self = nullptr;

    bool is_typed() const noexcept { return typed_signature.has_value(); }

    /// Declared argument count, if known (METH_O always 1; FASTCALL only
    /// when a typed signature says so).
    std::optional<std::size_t> declared_arity() const noexcept {
        if (convention == Convention::MethO) return 1;
        if (typed_signature) return typed_signature->arg_types.size();
        return std::nullopt;
    }
};

} // namespace wenort
