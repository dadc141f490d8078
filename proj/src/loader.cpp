#include "wenort/loader.hpp"

#include <dlfcn.h>
#include <elf.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>

#include "wenort/dispatch.hpp"
#include "wenort/typed_metadata.hpp"

namespace wenort {

namespace {

constexpr std::size_t kMaxTableRows = 1u << 16;

GuestError load_error(std::string msg) { return GuestError(ErrorKind::LoadError, std::move(msg)); }

std::string hex(int v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%04x", static_cast<unsigned>(v));
    return buf;
}

bool is_terminator(const abi_method_def& row) {
    return row.ml_name == nullptr && row.ml_meth == nullptr && row.ml_flags == 0 && row.ml_doc == nullptr;
}

bool known_type(TypeCode t) { return t == TypeCode::CLong || t == TypeCode::Object; }

} // namespace

Status validate_signature(const TypedSignature& sig, Convention convention, const char* row_name) {
    const std::string name = row_name ? row_name : "<null>";
    auto fail = [&](const std::string& what) { return load_error("method '" + name + "': " + what); };

    const std::size_t arity = sig.arg_types.size();
    if (convention == Convention::MethO && arity != 1)
        return fail("arity mismatch: METH_O takes exactly 1 argument, signature declares " +
                    std::to_string(arity));
    if (convention == Convention::FastCall && arity > kMaxTypedArity)
        return fail("arity mismatch: typed METH_FASTCALL supports at most " +
                    std::to_string(kMaxTypedArity) + " arguments, signature declares " +
                    std::to_string(arity));

    for (std::size_t i = 0; i < arity; ++i) {
        if (!known_type(sig.arg_types[i]))
            return fail("unsupported argument type code " +
                        std::to_string(static_cast<int32_t>(sig.arg_types[i])) + " at position " +
                        std::to_string(i));
    }
    if (!known_type(sig.ret_type))
        return fail("unsupported return type code " + std::to_string(static_cast<int32_t>(sig.ret_type)));
    if (sig.underlying_entry == nullptr) return fail("null underlying entry");

    // The intended layout points ml_name straight into the metadata buffer.
    const bool same_storage = sig.name == row_name;
    if (!same_storage &&
        (sig.name == nullptr || row_name == nullptr ||
         std::strncmp(sig.name, row_name, ABI_TYPED_NAME_SIZE) != 0)) {
        return fail(std::string("name mismatch: metadata names '") + (sig.name ? sig.name : "<null>") + "'");
    }
    return success();
}

Result<ModulePtr> module_from_def(const abi_module_def* def, void* library_handle) {
    if (def == nullptr) return load_error("init function returned a null module definition");
    if (def->m_methods == nullptr) return load_error("module definition has no method table");

    auto module = std::make_shared<Module>();
    module->name = def->m_name ? def->m_name : "";
    module->doc = def->m_doc ? def->m_doc : "";
    module->library_handle = library_handle;

    for (std::size_t i = 0;; ++i) {
        if (i == kMaxTableRows) return load_error("method table is not terminated");
        const abi_method_def& row = def->m_methods[i];
        if (is_terminator(row)) break;
        if (row.ml_name == nullptr) return load_error("method table row " + std::to_string(i) + " has a null name");

        const std::string name(row.ml_name);
        if (row.ml_meth == nullptr) return load_error("method '" + name + "': null entry point");

        const int convention_bits = row.ml_flags & ~METH_TYPED;
        FunctionObject fn;
        if (convention_bits == METH_O)
            fn.convention = Convention::MethO;
        else if (convention_bits == METH_FASTCALL)
            fn.convention = Convention::FastCall;
        else
            return load_error("method '" + name + "': unsupported calling convention flags " + hex(row.ml_flags));

        auto sig = typed_metadata_of(row);
        if (!sig) return std::move(sig).error();
        if (sig.value()) {
            if (auto st = validate_signature(*sig.value(), fn.convention, row.ml_name); !st)
                return st.error();
            fn.typed_invoker = select_typed_invoker(*sig.value());
            fn.object_arg_mask = object_mask(*sig.value());
            fn.typed_shape = typed_shape(*sig.value());
            fn.typed_signature = std::move(sig.value());
        }

        fn.name = name;
        fn.doc = row.ml_doc ? row.ml_doc : "";
        fn.wrapper_entry = row.ml_meth;
        fn.defining_module = module.get();
        fn.module_self = &module->self_box.head;
        if (!module->functions.emplace(name, std::move(fn)).second)
            return load_error("duplicate method name '" + name + "'");
    }
    return ModulePtr(std::move(module));
}

Result<std::vector<std::string>> find_init_symbols(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return load_error("cannot open '" + path.string() + "'");
    const std::vector<char> image((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    auto bad = [&](const char* why) { return load_error("'" + path.string() + "' is not a loadable shared library: " + why); };
    auto in_bounds = [&](uint64_t off, uint64_t len) { return off <= image.size() && len <= image.size() - off; };

    if (image.size() < sizeof(Elf64_Ehdr) || std::memcmp(image.data(), ELFMAG, SELFMAG) != 0)
        return bad("missing ELF header");
    if (image[EI_CLASS] != ELFCLASS64) return bad("only 64-bit ELF objects are supported");

    Elf64_Ehdr eh;
    std::memcpy(&eh, image.data(), sizeof eh);
    if (eh.e_type != ET_DYN) return bad("not a shared object");
    if (eh.e_shentsize != sizeof(Elf64_Shdr) || !in_bounds(eh.e_shoff, uint64_t(eh.e_shnum) * sizeof(Elf64_Shdr)))
        return bad("corrupt section header table");

    auto section = [&](std::size_t idx) {
        Elf64_Shdr sh;
        std::memcpy(&sh, image.data() + eh.e_shoff + idx * sizeof(Elf64_Shdr), sizeof sh);
        return sh;
    };

    std::vector<std::string> found;
    for (std::size_t s = 0; s < eh.e_shnum; ++s) {
        const Elf64_Shdr symtab = section(s);
        if (symtab.sh_type != SHT_DYNSYM) continue;
        if (symtab.sh_link >= eh.e_shnum) return bad("corrupt dynamic symbol table");
        const Elf64_Shdr strtab = section(symtab.sh_link);
        if (!in_bounds(symtab.sh_offset, symtab.sh_size) || !in_bounds(strtab.sh_offset, strtab.sh_size))
            return bad("corrupt dynamic symbol table");

        const std::size_t count = symtab.sh_size / sizeof(Elf64_Sym);
        for (std::size_t k = 0; k < count; ++k) {
            Elf64_Sym sym;
            std::memcpy(&sym, image.data() + symtab.sh_offset + k * sizeof(Elf64_Sym), sizeof sym);
            if (sym.st_shndx == SHN_UNDEF || ELF64_ST_TYPE(sym.st_info) != STT_FUNC) continue;
            const int bind = ELF64_ST_BIND(sym.st_info);
            if (bind != STB_GLOBAL && bind != STB_WEAK) continue;
            if (sym.st_name >= strtab.sh_size) continue;
            const char* str = image.data() + strtab.sh_offset + sym.st_name;
            const std::string_view name(str, strnlen(str, strtab.sh_size - sym.st_name));
            if (name.starts_with(kInitSymbolPrefix) && name.size() > kInitSymbolPrefix.size())
                found.emplace_back(name);
        }
    }
    return found;
}

Result<ModulePtr> load_extension(const std::filesystem::path& path) {
    static std::mutex load_mutex;
    std::lock_guard lock(load_mutex);

    auto symbols = find_init_symbols(path);
    if (!symbols) return std::move(symbols).error();
    if (symbols->empty())
        return load_error("'" + path.string() + "' exports no " + std::string(kInitSymbolPrefix) + "* symbol");
    if (symbols->size() > 1) {
        std::string names;
        for (const auto& s : *symbols) names += (names.empty() ? "" : ", ") + s;
        return load_error("'" + path.string() + "' exports more than one init symbol: " + names);
    }

    // Libraries are never dlclose()d; entry points must outlive every module.
    void* handle = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (handle == nullptr) {
        const char* why = dlerror();
        return load_error("cannot load '" + path.string() + "': " + (why ? why : "unknown error"));
    }
    dlerror();
    void* sym = dlsym(handle, symbols->front().c_str());
    if (sym == nullptr) return load_error("'" + path.string() + "': cannot resolve " + symbols->front());

    using InitFn = const abi_module_def* (*)();
    const abi_module_def* def = reinterpret_cast<InitFn>(sym)();
    return module_from_def(def, handle);
}

} // namespace wenort
