#include "wenort/typed_metadata.hpp"

#include <cstring>
#include <string>

namespace wenort {

Result<DecodedReturn> decode_ret_type(int32_t encoded) {
    if (encoded == 0) return GuestError(ErrorKind::LoadError, "zero return type code");
    // INT32_MIN has no positive counterpart; it cannot name a type anyway.
    if (encoded == INT32_MIN) return GuestError(ErrorKind::LoadError, "unsupported return type");
    return DecodedReturn{static_cast<TypeCode>(encoded < 0 ? -encoded : encoded), encoded < 0};
}

Result<std::optional<TypedSignature>> typed_metadata_of(const abi_method_def& def) {
    if ((def.ml_flags & METH_TYPED) == 0) return std::optional<TypedSignature>{};

    auto fail = [&](const std::string& what) {
        std::string name = def.ml_name ? std::string(def.ml_name, strnlen(def.ml_name, ABI_TYPED_NAME_SIZE))
                                       : std::string("<null>");
        return GuestError(ErrorKind::LoadError, "method '" + name + "': " + what);
    };

    if (def.ml_name == nullptr) return fail("METH_TYPED row has a null name");
    if (std::memchr(def.ml_name, '\0', ABI_TYPED_NAME_SIZE) == nullptr)
        return fail("name too long for typed metadata (limit 99 characters)");

    const abi_typed_method_metadata* meta = metadata_from_name(def.ml_name);

    TypedSignature sig;
    if (meta->arg_types == nullptr) return fail("null argument type list");
    for (std::size_t i = 0;; ++i) {
        if (i == kMaxDecodedArgs) return fail("argument type list is not terminated");
        int code = meta->arg_types[i];
        if (code == T_END_OF_ARGS) break;
        sig.arg_types.push_back(static_cast<TypeCode>(code));
    }

    auto ret = decode_ret_type(meta->ret_type);
    if (!ret) return fail(ret.error().message);
    sig.ret_type = ret->type;
    sig.can_raise = ret->can_raise;
    sig.underlying_entry = meta->underlying_func;
    sig.name = meta->ml_name;
    return std::optional<TypedSignature>{std::move(sig)};
}

} // namespace wenort
