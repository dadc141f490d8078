#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "wenort/ext_abi.h"
#include "wenort/value.hpp"

namespace wenort {

/// Longest argument list the decoder will scan before declaring the list
/// unterminated.
inline constexpr std::size_t kMaxDecodedArgs = 64;

struct DecodedReturn {
    TypeCode type;
    bool can_raise;

    friend bool operator==(const DecodedReturn&, const DecodedReturn&) = default;
};

/// Splits an encoded return code into its type and the can-raise bit
/// (negative means the function may raise). Zero is rejected.
Result<DecodedReturn> decode_ret_type(int32_t encoded);

/// Recovers the metadata struct from the address of its inline name buffer.
inline const abi_typed_method_metadata* metadata_from_name(const char* ml_name) noexcept {
    return reinterpret_cast<const abi_typed_method_metadata*>(
        ml_name - offsetof(abi_typed_method_metadata, ml_name));
}

/// Typed signature attached to a method-table row, or nullopt if the row
/// does not carry METH_TYPED. Only decodes; semantic checks are done by
/// validate_signature at load time.
Result<std::optional<TypedSignature>> typed_metadata_of(const abi_method_def& def);

} // namespace wenort
