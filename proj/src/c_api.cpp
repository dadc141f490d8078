#include "wenort/wenort.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "wenort/context.hpp"
#include "wenort/dispatch.hpp"
#include "wenort/loader.hpp"
#include "wenort/vm.hpp"

struct wenort_context {
    wenort::Context ctx;
};

struct wenort_module {
    wenort::ModulePtr module;
    wenort::Bindings bindings;
    std::vector<const char*> names;
};

struct wenort_program {
    wenort::Program program;
};

struct wenort_value {
    wenort::HostValue value;
};

namespace {

thread_local std::string last_error;

wenort_status status_for(wenort::ErrorKind kind) {
    switch (kind) {
    case wenort::ErrorKind::TypeError: return WENORT_TYPE_ERROR;
    case wenort::ErrorKind::ArityError: return WENORT_ARITY_ERROR;
    case wenort::ErrorKind::NativeError: return WENORT_NATIVE_ERROR;
    case wenort::ErrorKind::LoadError: return WENORT_LOAD_ERROR;
    case wenort::ErrorKind::VmError: return WENORT_VM_ERROR;
    }
    return WENORT_INVALID_ARGUMENT;
}

wenort_status fail(const wenort::GuestError& e) {
    last_error = std::string(wenort::to_string(e.kind)) + ": " + e.message;
    return status_for(e.kind);
}

wenort_status invalid(const char* what) {
    last_error = what;
    return WENORT_INVALID_ARGUMENT;
}

// Keeps C++ exceptions (allocation failure, mostly) from crossing the C ABI.
template <typename F>
wenort_status guarded(F&& f) noexcept {
    try {
        return f();
    } catch (const std::exception& e) {
        last_error = std::string("internal error: ") + e.what();
    } catch (...) {
        last_error = "internal error";
    }
    return WENORT_INVALID_ARGUMENT;
}

wenort::DispatchMode to_mode(wenort_mode m) {
    switch (m) {
    case WENORT_MODE_GENERIC: return wenort::DispatchMode::ForceGeneric;
    case WENORT_MODE_TYPED: return wenort::DispatchMode::ForceTyped;
    default: return wenort::DispatchMode::Auto;
    }
}

void add_stats(wenort_call_stats* out, const wenort::CallStats& s) {
    if (out == nullptr) return;
    out->calls += s.calls;
    out->boxes_allocated += s.boxes_allocated;
    out->arg_arrays_allocated += s.arg_arrays_allocated;
    out->error_checks += s.error_checks;
    out->sentinel_checks += s.sentinel_checks;
    out->fast_path_taken += s.fast_path_taken;
    out->generic_path_taken += s.generic_path_taken;
}

bool collect(const wenort_value* const* values, size_t n, std::vector<wenort::HostValue>& out) {
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (values == nullptr || values[i] == nullptr) return false;
        out.push_back(values[i]->value);
    }
    return true;
}

} // namespace

extern "C" {

const char* wenort_last_error(void) { return last_error.c_str(); }

const char* wenort_status_name(wenort_status status) {
    switch (status) {
    case WENORT_OK: return "ok";
    case WENORT_TYPE_ERROR: return "TypeError";
    case WENORT_ARITY_ERROR: return "ArityError";
    case WENORT_NATIVE_ERROR: return "NativeError";
    case WENORT_LOAD_ERROR: return "LoadError";
    case WENORT_VM_ERROR: return "VmError";
    case WENORT_INVALID_ARGUMENT: return "InvalidArgument";
    }
    return "unknown";
}

wenort_context* wenort_context_new(void) {
    try {
        return new wenort_context{};
    } catch (...) {
        return nullptr;
    }
}

void wenort_context_free(wenort_context* ctx) { delete ctx; }

wenort_status wenort_module_load(const char* path, wenort_module** out) {
    if (path == nullptr || out == nullptr) return invalid("null argument");
    return guarded([&] {
        auto loaded = wenort::load_extension(path);
        if (!loaded) return fail(loaded.error());
        auto* m = new wenort_module{std::move(loaded.value()), {}, {}};
        m->bindings = wenort::bindings_for(*m->module);
        for (const auto& [name, _] : m->module->functions) m->names.push_back(name.c_str());
        *out = m;
        return WENORT_OK;
    });
}

void wenort_module_free(wenort_module* module) { delete module; }

const char* wenort_module_name(const wenort_module* module) {
    return module ? module->module->name.c_str() : nullptr;
}

size_t wenort_module_function_count(const wenort_module* module) { return module ? module->names.size() : 0; }

const char* wenort_module_function_name(const wenort_module* module, size_t index) {
    if (module == nullptr || index >= module->names.size()) return nullptr;
    return module->names[index];
}

int wenort_module_function_is_typed(const wenort_module* module, const char* name) {
    if (module == nullptr || name == nullptr) return -1;
    const auto* f = module->module->find(name);
    return f == nullptr ? -1 : f->is_typed() ? 1 : 0;
}

int wenort_module_function_flags(const wenort_module* module, const char* name) {
    if (module == nullptr || name == nullptr) return -1;
    const auto* f = module->module->find(name);
    if (f == nullptr) return -1;
    int flags = f->convention == wenort::Convention::MethO ? METH_O : METH_FASTCALL;
    return f->is_typed() ? flags | METH_TYPED : flags;
}

wenort_status wenort_program_assemble(const char* source, size_t length, wenort_program** out) {
    if (source == nullptr || out == nullptr) return invalid("null argument");
    return guarded([&] {
        auto p = wenort::assemble(std::string_view(source, length));
        if (!p) return fail(p.error());
        *out = new wenort_program{std::move(p.value())};
        return WENORT_OK;
    });
}

void wenort_program_free(wenort_program* program) { delete program; }

size_t wenort_program_call_sites(const wenort_program* program) {
    return program ? program->program.call_site_count() : 0;
}

wenort_value* wenort_value_new_int(int64_t v) { return new (std::nothrow) wenort_value{wenort::make_int(v)}; }

wenort_value* wenort_value_new_str(const char* data, size_t length) {
    if (data == nullptr && length != 0) return nullptr;
    try {
        return new wenort_value{wenort::HostValue::string(std::string(data ? data : "", length))};
    } catch (...) {
        return nullptr;
    }
}

wenort_value* wenort_value_new_none(void) { return new (std::nothrow) wenort_value{}; }

void wenort_value_free(wenort_value* value) { delete value; }

wenort_value_kind wenort_value_get_kind(const wenort_value* value) {
    return static_cast<wenort_value_kind>(value->value.tag());
}

int64_t wenort_value_get_int(const wenort_value* value) {
    return value && value->value.is_int() ? value->value.as_int() : 0;
}

const char* wenort_value_get_str(const wenort_value* value, size_t* length) {
    if (value == nullptr || !value->value.is_str()) return nullptr;
    if (length) *length = value->value.as_str().size();
    return value->value.as_str().c_str();
}

int wenort_value_equal(const wenort_value* a, const wenort_value* b) {
    if (a == nullptr || b == nullptr) return a == b;
    return a->value == b->value ? 1 : 0;
}

size_t wenort_value_repr(const wenort_value* value, char* buf, size_t cap) {
    const std::string r = value ? value->value.repr() : std::string("<null>");
    if (buf != nullptr && cap > 0) {
        const size_t n = std::min(cap - 1, r.size());
        std::memcpy(buf, r.data(), n);
        buf[n] = '\0';
    }
    return r.size();
}

wenort_status wenort_check_mode(const wenort_program* program, const wenort_module* module, wenort_mode mode) {
    if (program == nullptr || module == nullptr) return invalid("null argument");
    return guarded([&] {
        for (const auto& name : program->program.native_names) {
            const auto* f = module->module->find(name);
            if (f == nullptr)
                return fail(wenort::GuestError(wenort::ErrorKind::VmError, "unbound native function '" + name + "'"));
            if (auto err = wenort::check_mode(*f, to_mode(mode))) return fail(*err);
        }
        return WENORT_OK;
    });
}

wenort_status wenort_call(wenort_context* ctx, const wenort_module* module, const char* name,
                          const wenort_value* const* args, size_t nargs, wenort_mode mode, wenort_value** out,
                          wenort_call_stats* stats) {
    if (ctx == nullptr || module == nullptr || name == nullptr || out == nullptr) return invalid("null argument");
    return guarded([&] {
        const auto* f = module->module->find(name);
        if (f == nullptr) return invalid("no such function");
        std::vector<wenort::HostValue> values;
        if (!collect(args, nargs, values)) return invalid("null argument value");

        wenort::CallStats s;
        wenort::ContextScope bound(ctx->ctx);
        auto r = wenort::call_function(ctx->ctx, *f, values, to_mode(mode), s);
        add_stats(stats, s);
        if (!r) return fail(r.error());
        *out = new wenort_value{std::move(r.value())};
        return WENORT_OK;
    });
}

wenort_status wenort_execute(wenort_context* ctx, const wenort_program* program, const wenort_module* module,
                             wenort_mode mode, const wenort_value* const* inputs, size_t ninputs, wenort_value** out,
                             wenort_call_stats* stats) {
    if (ctx == nullptr || program == nullptr || module == nullptr || out == nullptr)
        return invalid("null argument");
    return guarded([&] {
        std::vector<wenort::HostValue> values;
        if (!collect(inputs, ninputs, values)) return invalid("null input value");

        wenort::CallStats s;
        auto r = wenort::execute(ctx->ctx, program->program, module->bindings, to_mode(mode), s, values);
        add_stats(stats, s);
        if (!r) return fail(r.error());
        *out = new wenort_value{std::move(r.value())};
        return WENORT_OK;
    });
}

} // extern "C"
