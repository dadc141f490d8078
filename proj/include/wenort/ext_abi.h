/*
 * Binary contract between the wenort runtime and native extension modules.
 *
 * Everything in this header is frozen: struct layouts, flag bits and type
 * codes may never change size, order or value. Extensions built against one
 * runtime version must keep loading on every later one.
 *
 * The header is valid C99 and C++.
 */
#ifndef WENORT_EXT_ABI_H
#define WENORT_EXT_ABI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ABI_EXPORT __declspec(dllexport)
#else
#define ABI_EXPORT __attribute__((visibility("default")))
#endif

/* Calling conventions (values match CPython so sources read naturally). */
#define METH_O 0x0008
#define METH_FASTCALL 0x0080
/* Row carries typed metadata reachable through ml_name. */
#define METH_TYPED 0x0400

/* Argument / return type codes. -1 terminates an argument list; a negative
 * return code means "may raise". */
#define T_C_LONG 1
#define T_OBJECT 2
#define T_END_OF_ARGS (-1)

/* ob_type values of the boxes handed to extensions. */
#define ABI_TYPE_NONE 1
#define ABI_TYPE_INT 2
#define ABI_TYPE_STR 3
#define ABI_TYPE_FUNCTION 4
#define ABI_TYPE_MODULE 5

typedef int64_t abi_long;

/* Header shared by every box. Payload storage is private to the runtime. */
typedef struct abi_object {
    intptr_t ob_refcnt;
    int32_t ob_type;
} abi_object;

typedef abi_object* (*abi_meth_o_func)(abi_object* self, abi_object* arg);
typedef abi_object* (*abi_fastcall_func)(abi_object* self, abi_object* const* args,
                                         intptr_t nargs);

typedef struct abi_method_def {
    const char* ml_name;
    void* ml_meth;
    int ml_flags;
    const char* ml_doc;
} abi_method_def;

typedef struct abi_module_def {
    const char* m_name;
    const char* m_doc;
    abi_method_def* m_methods; /* terminated by an all-zero row */
} abi_module_def;

#define ABI_TYPED_NAME_SIZE 100

/* Side struct for a METH_TYPED row. The row's ml_name points at this
 * struct's ml_name buffer; the runtime subtracts offsetof(..., ml_name) to
 * find the rest. ml_name must stay the last field. */
typedef struct abi_typed_method_metadata {
    int* arg_types;        /* terminated by T_END_OF_ARGS */
    int ret_type;          /* negative => can raise */
    void* underlying_func; /* unwrapped implementation */
    const char ml_name[ABI_TYPED_NAME_SIZE];
} abi_typed_method_metadata;

/* Host services exported to extensions. All of them act on the execution
 * context bound to the calling thread. */
ABI_EXPORT abi_long abi_long_as_long(abi_object* obj);
ABI_EXPORT abi_object* abi_long_from_long(abi_long value);
ABI_EXPORT void abi_err_set(const char* message);
ABI_EXPORT int abi_err_occurred(void);
ABI_EXPORT void abi_err_clear(void);
ABI_EXPORT void abi_adjust_refcount(abi_object* obj, int delta);

#define ABI_INCREF(o) abi_adjust_refcount((o), +1)
#define ABI_DECREF(o) abi_adjust_refcount((o), -1)

/* Module init entry point: RTEXT_MODINIT(foo) defines rtext_init_foo. */
#define RTEXT_MODINIT(name) ABI_EXPORT const abi_module_def* rtext_init_##name(void)

/* Typed-signature helpers.
 *
 *   SIG(inc, LIST(T_C_LONG), T_C_LONG)
 *   static abi_method_def methods[] = {
 *       TYPED_SIG(inc, inc, METH_O, "doc"),
 *       {NULL, NULL, 0, NULL},
 *   };
 *
 * SIG(name, ...) expects the unwrapped implementation to be called
 * name##_impl. Without RT_HAS_METH_TYPED both macros degrade to a plain
 * method row, so one source builds for runtimes with and without support.
 */
#define LIST(...) __VA_ARGS__

#ifdef RT_HAS_METH_TYPED
#define SIG(name, arglist, ret)                                          \
    static int name##_arg_types[] = {arglist, T_END_OF_ARGS};            \
    static abi_typed_method_metadata name##_sig = {                      \
        name##_arg_types, (ret), (void*)name##_impl, #name};
#define TYPED_SIG(pyname, cname, flags, doc) \
    {pyname##_sig.ml_name, (void*)(cname), (flags) | METH_TYPED, (doc)}
#else
#define SIG(name, arglist, ret)
#define TYPED_SIG(pyname, cname, flags, doc) {#pyname, (void*)(cname), (flags), (doc)}
#endif

#ifdef __cplusplus
}
#endif

#endif /* WENORT_EXT_ABI_H */
