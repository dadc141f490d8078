#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "wenort/context.hpp"
#include "wenort/ext_abi.h"
#include "wenort/value.hpp"

namespace wenort {

/// A loaded extension module. Immutable after load; the backing library is
/// never unloaded, so function entry points stay valid for the process.
struct Module {
    std::string name;
    std::string doc;
    std::map<std::string, FunctionObject, std::less<>> functions;
    void* library_handle = nullptr;
    Box self_box = make_immortal_box(ABI_TYPE_MODULE);

    Module() = default;
    Module(const Module&) = delete;
    Module& operator=(const Module&) = delete;

    const FunctionObject* find(std::string_view fn) const {
        auto it = functions.find(fn);
        return it == functions.end() ? nullptr : &it->second;
    }
};

using ModulePtr = std::shared_ptr<const Module>;

/// Prefix of the one init symbol every extension exports.
inline constexpr std::string_view kInitSymbolPrefix = "rtext_init_";

/// Checks a decoded signature against the row it came from. Each violated
/// clause produces its own message.
Status validate_signature(const TypedSignature& sig, Convention convention, const char* row_name);

/// Builds a module by walking a method table. Used by load_extension and
/// directly by tests with hand-built tables.
Result<ModulePtr> module_from_def(const abi_module_def* def, void* library_handle = nullptr);

/// Defined `rtext_init_*` function symbols in a shared library's dynamic
/// symbol table, read from the ELF file on disk.
Result<std::vector<std::string>> find_init_symbols(const std::filesystem::path& path);

/// dlopen()s the library, calls its single init symbol and walks the table.
Result<ModulePtr> load_extension(const std::filesystem::path& path);

} // namespace wenort
