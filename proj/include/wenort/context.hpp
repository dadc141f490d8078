#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "wenort/ext_abi.h"
#include "wenort/value.hpp"

namespace wenort {

class Context;

/// ABI-side box. `head` must stay the first member: extensions only ever
/// see `abi_object*`, which the runtime converts back with a cast.
struct Box {
    abi_object head;
    Context* owner; // null for immortal boxes (module self handles)
    HostValue value;
    uint32_t slot_index; // position in the owner's slot-linked list, or kNotSlotLinked
};

inline constexpr uint32_t kNotSlotLinked = UINT32_MAX;


inline Box* box_of(abi_object* h) noexcept { return reinterpret_cast<Box*>(h); }

/// Creates an immortal box with the given ob_type; used for module self
/// handles that live as long as the module and belong to no context.
Box make_immortal_box(int32_t ob_type);

struct ErrorSlot {
    bool active = false;
    ErrorKind kind = ErrorKind::NativeError;
    std::string message;
};

struct AbiCounters {
    uint64_t boxes_allocated = 0;
    uint64_t boxes_freed = 0;
    uint64_t error_checks = 0; // every abi_err_occurred() call
};

/// One execution context: owns the error slot, the live host<->ABI link
/// tables and the ABI counters. Single-threaded; handles never cross
/// contexts.
class Context {
public:
    Context();
    ~Context();

    Context(const Context&) = delete;
    Context& operator=(const Context&) = delete;

    /// Returns a new reference to the box linked to `v`, creating the box
    /// if no live one exists. None always maps to the context's singleton.
    abi_object* box(const HostValue& v);

    /// Host value behind a live handle. A null or non-value handle is an
    /// internal fault, reported as NativeError.
    Result<HostValue> unbox(abi_object* h) const;

    /// delta must be +1 or -1. Reaching zero frees the box and dissolves
    /// its link. Misuse is recorded as a pending fault.
    void adjust_refcount(abi_object* h, int delta);

    abi_long long_as_long(abi_object* h);
    abi_object* long_from_long(abi_long v);

    void err_set(ErrorKind kind, std::string message);
    bool err_occurred() noexcept {
        ++counters_.error_checks;
        return slot_.active;
    }
    void err_clear() noexcept;
    /// Moves the pending error out of the slot, leaving it clear.
    GuestError take_error();
    const ErrorSlot& error_slot() const noexcept { return slot_; }

    bool has_fault() const noexcept { return !fault_.empty(); }
    std::optional<GuestError> take_fault();

    const AbiCounters& counters() const noexcept { return counters_; }
    std::size_t live_boxes() const noexcept;

    abi_object* none_handle() noexcept { return &none_box_.head; }

private:
    Box* allocate(const HostValue& v, int32_t ob_type);
    abi_object* box_str(const HostValue& v);
    void release(Box* b);
    void record_fault(std::string message);

    Box none_box_;
    absl::flat_hash_map<int64_t, Box*> int_links_;
    absl::flat_hash_map<const void*, Box*> object_links_;
    std::vector<Box*> slot_linked_; // Str boxes linked through the string itself
    std::vector<Box*> spare_;       // freed boxes kept for reuse
    ErrorSlot slot_;
    AbiCounters counters_;
    std::string fault_;
};

/// Context bound to the calling thread; exported ABI functions act on it.
Context* current_context() noexcept;

/// Binds a context to the calling thread for the lifetime of the scope.
class ContextScope {
public:
    explicit ContextScope(Context& ctx) noexcept;
    ~ContextScope();

    ContextScope(const ContextScope&) = delete;
    ContextScope& operator=(const ContextScope&) = delete;

private:
    Context* previous_;
};

} // namespace wenort
