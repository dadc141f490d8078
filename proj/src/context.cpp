#include "wenort/context.hpp"

#include <cstdio>
#include <cstdlib>
#include <limits>

namespace wenort {

namespace {

thread_local Context* tls_current = nullptr;

constexpr std::size_t kMaxSpareBoxes = 256;

constexpr intptr_t kImmortalRefcount = std::numeric_limits<intptr_t>::max() / 2;

int32_t ob_type_for(const HostValue& v) noexcept {
    switch (v.tag()) {
    case HostValue::Tag::Int: return ABI_TYPE_INT;
    case HostValue::Tag::Str: return ABI_TYPE_STR;
    case HostValue::Tag::None: return ABI_TYPE_NONE;
    case HostValue::Tag::NativeFunction: return ABI_TYPE_FUNCTION;
    }
    return 0;
}

const void* object_key(const HostValue& v) noexcept {
    return v.is_str() ? v.str_identity() : static_cast<const void*>(&v.as_function());
}

[[noreturn]] void no_context(const char* fn) {
    std::fprintf(stderr, "wenort: %s called with no execution context bound to this thread\n", fn);
    std::abort();
}

} // namespace

Box make_immortal_box(int32_t ob_type) {
    return Box{abi_object{kImmortalRefcount, ob_type}, nullptr, HostValue::none(), kNotSlotLinked};
}

Context::Context() : none_box_{abi_object{1, ABI_TYPE_NONE}, this, HostValue::none(), kNotSlotLinked} {}

Context::~Context() {
    for (auto& [_, b] : int_links_) delete b;
    for (auto& [_, b] : object_links_) delete b;
    for (Box* b : slot_linked_) {
        b->value.link_slot()->box = nullptr;
        delete b;
    }
    for (Box* b : spare_) delete b;
}

Box* Context::allocate(const HostValue& v, int32_t ob_type) {
    ++counters_.boxes_allocated;
    if (spare_.empty()) return new Box{abi_object{1, ob_type}, this, v, kNotSlotLinked};
    Box* b = spare_.back();
    spare_.pop_back();
    b->head = abi_object{1, ob_type};
    b->value = v;
    b->slot_index = kNotSlotLinked;
    return b;
}

abi_object* Context::box_str(const HostValue& v) {
    HostValue::LinkSlot* slot = v.link_slot();
    const void* claimant = slot->claimant.load(std::memory_order_acquire);
    if (claimant == nullptr && slot->claimant.compare_exchange_strong(claimant, this, std::memory_order_acq_rel))
        claimant = this;
    if (claimant == this) {
        if (slot->box != nullptr) {
            Box* b = static_cast<Box*>(slot->box);
            ++b->head.ob_refcnt;
            return &b->head;
        }
        Box* b = allocate(v, ABI_TYPE_STR);
        b->slot_index = static_cast<uint32_t>(slot_linked_.size());
        slot_linked_.push_back(b);
        slot->box = b;
        return &b->head;
    }
    // Claimed by another context: fall back to this context's table.
    auto [it, inserted] = object_links_.try_emplace(v.str_identity(), nullptr);
    if (!inserted) {
        ++it->second->head.ob_refcnt;
        return &it->second->head;
    }
    it->second = allocate(v, ABI_TYPE_STR);
    return &it->second->head;
}

abi_object* Context::box(const HostValue& v) {
    switch (v.tag()) {
    case HostValue::Tag::None:
        ++none_box_.head.ob_refcnt;
        return &none_box_.head;
    case HostValue::Tag::Int: {
        auto [it, inserted] = int_links_.try_emplace(v.as_int(), nullptr);
        if (!inserted) {
            ++it->second->head.ob_refcnt;
            return &it->second->head;
        }
        it->second = allocate(v, ABI_TYPE_INT);
        return &it->second->head;
    }
    case HostValue::Tag::Str: return box_str(v);
    case HostValue::Tag::NativeFunction: {
        auto [it, inserted] = object_links_.try_emplace(object_key(v), nullptr);
        if (!inserted) {
            ++it->second->head.ob_refcnt;
            return &it->second->head;
        }
        it->second = allocate(v, ob_type_for(v));
        return &it->second->head;
    }
    }
    return nullptr;
}

Result<HostValue> Context::unbox(abi_object* h) const {
    if (h == nullptr) return GuestError(ErrorKind::NativeError, "internal fault: unboxing a null handle");
    if (h->ob_type == ABI_TYPE_MODULE)
        return GuestError(ErrorKind::NativeError, "internal fault: module object has no guest value");
    return box_of(h)->value;
}

void Context::release(Box* b) {
    ++counters_.boxes_freed;
    if (b->value.is_int()) {
        int_links_.erase(b->value.as_int());
    } else if (b->slot_index != kNotSlotLinked) {
        Box* last = slot_linked_.back();
        slot_linked_[b->slot_index] = last;
        last->slot_index = b->slot_index;
        slot_linked_.pop_back();
        b->value.link_slot()->box = nullptr;
    } else {
        object_links_.erase(object_key(b->value));
    }
    if (spare_.size() < kMaxSpareBoxes) {
        b->value = HostValue::none();
        spare_.push_back(b);
    } else {
        delete b;
    }
}

void Context::record_fault(std::string message) {
    if (fault_.empty()) fault_ = std::move(message);
}

void Context::adjust_refcount(abi_object* h, int delta) {
    if (h == nullptr) {
        record_fault("internal fault: refcount adjustment on a null handle");
        return;
    }
    if (delta != 1 && delta != -1) {
        record_fault("internal fault: refcount delta must be +1 or -1");
        return;
    }
    Box* b = box_of(h);
    if (b->owner == nullptr) { // immortal
        h->ob_refcnt += delta;
        return;
    }
    if (h->ob_refcnt + delta < 0 || (b == &none_box_ && h->ob_refcnt + delta == 0)) {
        record_fault("internal fault: reference count decremented below zero");
        return;
    }
    h->ob_refcnt += delta;
    if (h->ob_refcnt == 0) b->owner->release(b);
}

abi_long Context::long_as_long(abi_object* h) {
    if (h == nullptr) {
        err_set(ErrorKind::NativeError, "bad internal call: null object");
        return -1;
    }
    if (h->ob_type != ABI_TYPE_INT) {
        const char* got = h->ob_type == ABI_TYPE_STR    ? "str"
                          : h->ob_type == ABI_TYPE_NONE ? "NoneType"
                                                        : "object";
        err_set(ErrorKind::TypeError, std::string("an integer is required (got type ") + got + ")");
        return -1;
    }
    return box_of(h)->value.as_int();
}

abi_object* Context::long_from_long(abi_long v) { return box(HostValue::integer(v)); }

void Context::err_set(ErrorKind kind, std::string message) {
    slot_.active = true;
    slot_.kind = kind;
    slot_.message = message.empty() ? std::string("error with empty message") : std::move(message);
}

void Context::err_clear() noexcept {
    slot_.active = false;
    slot_.kind = ErrorKind::NativeError;
    slot_.message.clear();
}

GuestError Context::take_error() {
    GuestError e(slot_.kind, std::move(slot_.message));
    err_clear();
    return e;
}

std::optional<GuestError> Context::take_fault() {
    if (fault_.empty()) return std::nullopt;
    GuestError e(ErrorKind::NativeError, std::move(fault_));
    fault_.clear();
    return e;
}

std::size_t Context::live_boxes() const noexcept {
    return int_links_.size() + object_links_.size() + slot_linked_.size();
}

Context* current_context() noexcept { return tls_current; }

ContextScope::ContextScope(Context& ctx) noexcept : previous_(tls_current) { tls_current = &ctx; }

ContextScope::~ContextScope() { tls_current = previous_; }

} // namespace wenort

using wenort::tls_current;

extern "C" {

abi_long abi_long_as_long(abi_object* obj) {
    if (tls_current == nullptr) wenort::no_context(__func__);
    return tls_current->long_as_long(obj);
}

abi_object* abi_long_from_long(abi_long value) {
    if (tls_current == nullptr) wenort::no_context(__func__);
    return tls_current->long_from_long(value);
}

void abi_err_set(const char* message) {
    if (tls_current == nullptr) wenort::no_context(__func__);
    tls_current->err_set(wenort::ErrorKind::NativeError, message ? message : "");
}

int abi_err_occurred(void) {
    if (tls_current == nullptr) wenort::no_context(__func__);
    return tls_current->err_occurred() ? 1 : 0;
}

void abi_err_clear(void) {
    if (tls_current == nullptr) wenort::no_context(__func__);
    tls_current->err_clear();
}

void abi_adjust_refcount(abi_object* obj, int delta) {
    // Boxes carry their owner, so refcounting needs no thread binding.
    if (obj != nullptr && wenort::box_of(obj)->owner != nullptr) {
        wenort::box_of(obj)->owner->adjust_refcount(obj, delta);
    } else if (tls_current != nullptr) {
        tls_current->adjust_refcount(obj, delta);
    } else if (obj != nullptr) {
        obj->ob_refcnt += delta; // immortal, no context needed
    }
}

} // extern "C"
