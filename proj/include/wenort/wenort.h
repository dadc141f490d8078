/*
 * wenort embedding API.
 *
 * Opaque handles and status codes over the C++ runtime. Every function that
 * can fail returns a wenort_status; on failure wenort_last_error() describes
 * the problem until the next failing call on the same thread.
 */
#ifndef WENORT_H
#define WENORT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define WENORT_API __declspec(dllexport)
#else
#define WENORT_API __attribute__((visibility("default")))
#endif

typedef enum wenort_status {
    WENORT_OK = 0,
    WENORT_TYPE_ERROR = 1,
    WENORT_ARITY_ERROR = 2,
    WENORT_NATIVE_ERROR = 3,
    WENORT_LOAD_ERROR = 4,
    WENORT_VM_ERROR = 5,
    WENORT_INVALID_ARGUMENT = 6,
} wenort_status;

typedef enum wenort_mode {
    WENORT_MODE_AUTO = 0,
    WENORT_MODE_GENERIC = 1, /* always the boxed, convention-following path */
    WENORT_MODE_TYPED = 2,   /* always the typed path; untyped callees are an error */
} wenort_mode;

typedef enum wenort_value_kind {
    WENORT_VALUE_INT = 0,
    WENORT_VALUE_STR = 1,
    WENORT_VALUE_NONE = 2,
    WENORT_VALUE_FUNCTION = 3,
} wenort_value_kind;

typedef struct wenort_call_stats {
    uint64_t calls;
    uint64_t boxes_allocated;
    uint64_t arg_arrays_allocated;
    uint64_t error_checks;
    uint64_t sentinel_checks;
    uint64_t fast_path_taken;
    uint64_t generic_path_taken;
} wenort_call_stats;

typedef struct wenort_context wenort_context;
typedef struct wenort_module wenort_module;
typedef struct wenort_program wenort_program;
typedef struct wenort_value wenort_value;

WENORT_API const char* wenort_last_error(void);
WENORT_API const char* wenort_status_name(wenort_status status);

/* Execution contexts: one per thread of guest execution. */
WENORT_API wenort_context* wenort_context_new(void);
WENORT_API void wenort_context_free(wenort_context* ctx);

/* Extension modules. The shared library itself stays loaded for the life of
 * the process; freeing the handle only drops the module object. */
WENORT_API wenort_status wenort_module_load(const char* path, wenort_module** out);
WENORT_API void wenort_module_free(wenort_module* module);
WENORT_API const char* wenort_module_name(const wenort_module* module);
WENORT_API size_t wenort_module_function_count(const wenort_module* module);
/* Function names in sorted order; NULL when index is out of range. */
WENORT_API const char* wenort_module_function_name(const wenort_module* module, size_t index);
/* 1 if typed, 0 if untyped, -1 if the module has no such function. */
WENORT_API int wenort_module_function_is_typed(const wenort_module* module, const char* name);
/* The row's ml_flags as the loader saw them, or -1. */
WENORT_API int wenort_module_function_flags(const wenort_module* module, const char* name);

/* Guest programs in the textual assembly format. */
WENORT_API wenort_status wenort_program_assemble(const char* source, size_t length, wenort_program** out);
WENORT_API void wenort_program_free(wenort_program* program);
WENORT_API size_t wenort_program_call_sites(const wenort_program* program);

/* Values. */
WENORT_API wenort_value* wenort_value_new_int(int64_t v);
WENORT_API wenort_value* wenort_value_new_str(const char* data, size_t length);
WENORT_API wenort_value* wenort_value_new_none(void);
WENORT_API void wenort_value_free(wenort_value* value);
WENORT_API wenort_value_kind wenort_value_get_kind(const wenort_value* value);
WENORT_API int64_t wenort_value_get_int(const wenort_value* value);
WENORT_API const char* wenort_value_get_str(const wenort_value* value, size_t* length);
WENORT_API int wenort_value_equal(const wenort_value* a, const wenort_value* b);
/* Writes a printable form into buf (always NUL-terminated when cap > 0) and
 * returns the full length. */
WENORT_API size_t wenort_value_repr(const wenort_value* value, char* buf, size_t cap);

/* Fails with WENORT_VM_ERROR if mode is WENORT_MODE_TYPED and any function
 * the program calls has no typed signature. */
WENORT_API wenort_status wenort_check_mode(const wenort_program* program, const wenort_module* module,
                                           wenort_mode mode);

/* Calls one function. Stats are added to *stats when it is non-NULL. */
WENORT_API wenort_status wenort_call(wenort_context* ctx, const wenort_module* module, const char* name,
                                     const wenort_value* const* args, size_t nargs, wenort_mode mode,
                                     wenort_value** out, wenort_call_stats* stats);

/* Runs a program whose CallNative sites resolve against module. inputs seed
 * the first locals. Stats are added to *stats when it is non-NULL. */
WENORT_API wenort_status wenort_execute(wenort_context* ctx, const wenort_program* program,
                                        const wenort_module* module, wenort_mode mode,
                                        const wenort_value* const* inputs, size_t ninputs,
                                        wenort_value** out, wenort_call_stats* stats);

#ifdef __cplusplus
}
#endif

#endif /* WENORT_H */
